#include "dosefind/simkit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace dosefind {

void Scenario::validate(std::size_t num_doses, double target) const {
    if (true_tox.size() != num_doses) {
        throw std::invalid_argument("scenario '" + name + "' has " +
                                    std::to_string(true_tox.size()) + " doses, design has " +
                                    std::to_string(num_doses));
    }
    for (double p : true_tox) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("scenario '" + name + "': probabilities must lie in [0,1]");
        }
    }
    if (mtd_index) {
        const int m = *mtd_index;
        if (m < 1 || static_cast<std::size_t>(m) > num_doses) {
            throw std::invalid_argument("scenario '" + name + "': mtd index out of range");
        }
        const double gap = std::abs(true_tox[m - 1] - target);
        for (double p : true_tox) {
            if (std::abs(p - target) < gap - 1e-12) {
                throw std::invalid_argument("scenario '" + name +
                                            "': mtd index is not the dose closest to target");
            }
        }
    }
}

std::vector<Scenario> builtin_scenarios() {
    return {
        {"Scenario 1", {0.30, 0.38, 0.48, 0.58, 0.69, 0.78}, 1},
        {"Scenario 2", {0.20, 0.30, 0.45, 0.55, 0.60, 0.70}, 2},
        {"Scenario 3", {0.05, 0.10, 0.30, 0.50, 0.65, 0.75}, 3},
        {"Scenario 4", {0.07, 0.12, 0.17, 0.30, 0.45, 0.60}, 4},
        {"Scenario 5", {0.04, 0.08, 0.12, 0.15, 0.30, 0.50}, 5},
        {"Scenario 6", {0.05, 0.14, 0.18, 0.20, 0.23, 0.30}, 6},
    };
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t replication) {
    std::uint64_t z = master_seed + (replication + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

TrialResult run_trial(const Design& design, const Scenario& scenario,
                      const CohortSchedule& schedule, std::uint64_t seed) {
    const std::size_t J = design.num_doses();
    if (scenario.true_tox.size() != J) {
        throw std::invalid_argument("scenario and design disagree on the number of doses");
    }
    std::mt19937_64 gen(seed);
    TrialState state = TrialState::empty(J);
    TrialResult result;

    for (std::size_t c = 0; c < schedule.sizes.size(); ++c) {
        const int size = schedule.sizes[c];
        const int dose = state.current_dose;
        const double p = scenario.true_tox[dose - 1];
        int dlts = 0;
        for (int i = 0; i < size; ++i) {
            dlts += unit_uniform(gen) < p ? 1 : 0;
        }
        state.record(dose, size, dlts);
        state.cohort_index += 1;
        result.dose_path.push_back({size, dose, dlts});

        if (c + 1 == schedule.sizes.size()) {
            break;
        }
        const NextStep step = design.next_step(state);
        apply_step(state, step);
        if (step.stop) {
            result.stopped_early = true;
            break;
        }
    }
    result.patients = state.n;
    result.dlts = state.y;
    result.selected_dose = result.stopped_early ? std::nullopt : design.select_mtd(state);
    return result;
}

SimSummary summarize(std::span<const TrialResult> trials, const Scenario& scenario,
                     std::uint64_t master_seed) {
    const std::size_t J = scenario.true_tox.size();
    SimSummary s;
    s.replications = trials.size();
    s.master_seed = master_seed;
    s.selection_counts.assign(J, 0);
    s.patient_totals.assign(J, 0);
    std::uint64_t none = 0;
    for (const TrialResult& t : trials) {
        if (t.selected_dose) {
            s.selection_counts[*t.selected_dose - 1] += 1;
        } else {
            none += 1;
        }
        for (std::size_t j = 0; j < J; ++j) {
            s.patient_totals[j] += static_cast<std::uint64_t>(t.patients[j]);
        }
    }
    const double reps = static_cast<double>(std::max<std::uint64_t>(s.replications, 1));
    s.selection_pct.resize(J);
    s.mean_patients.resize(J);
    for (std::size_t j = 0; j < J; ++j) {
        s.selection_pct[j] = 100.0 * static_cast<double>(s.selection_counts[j]) / reps;
        s.mean_patients[j] = static_cast<double>(s.patient_totals[j]) / reps;
    }
    s.no_selection_pct = 100.0 * static_cast<double>(none) / reps;
    if (scenario.mtd_index) {
        const OverdoseMetrics od = overdose_metrics(s, scenario.mtd_index);
        s.overdose_selection_pct = od.selection_pct;
        s.overdose_patient_mean = od.patient_mean;
    }
    return s;
}

OverdoseMetrics overdose_metrics(const SimSummary& summary, std::optional<int> mtd_index) {
    if (!mtd_index) {
        throw std::invalid_argument("overdose metrics need a scenario MTD");
    }
    OverdoseMetrics m{0.0, 0.0};
    for (std::size_t j = static_cast<std::size_t>(*mtd_index); j < summary.selection_pct.size(); ++j) {
        m.selection_pct += summary.selection_pct[j];
        m.patient_mean += summary.mean_patients[j];
    }
    return m;
}

SimSummary run_batch(const Design& design, const Scenario& scenario,
                     const CohortSchedule& schedule, std::uint64_t replications,
                     std::uint64_t master_seed, unsigned workers) {
    if (replications < 1) {
        throw std::invalid_argument("need at least one replication");
    }
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, replications));

    std::vector<TrialResult> results(replications);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto work = [&] {
        try {
            for (std::uint64_t r = next++; r < replications; r = next++) {
                results[r] = run_trial(design, scenario, schedule, replication_seed(master_seed, r));
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = replications;
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(work);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return summarize(results, scenario, master_seed);
}

}  // namespace dosefind
