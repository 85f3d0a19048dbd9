// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed below and never adjusted at run time.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dosefind/crm.hpp"
#include "dosefind/design.hpp"
#include "dosefind/keyboard.hpp"
#include "dosefind/pava.hpp"
#include "dosefind/schedule.hpp"
#include "dosefind/simkit.hpp"
#include "dosefind/trialsvc.hpp"
#include "oracles.hpp"

using namespace dosefind;

namespace {

constexpr double kQuadratureTol = 1e-6;
constexpr double kKeyMassTol = 1e-10;
constexpr double kPavaTol = 2e-3;
constexpr double kCellTolPp = 3.0;
constexpr double kDirectionalGapPp = 3.0;
constexpr double kSelectionSumTol = 0.01;
constexpr double kPatientSumTol = 1e-9;
constexpr double kScheduleSeconds = 1.0;
constexpr double kQuadratureSeconds = 120.0;
constexpr double kSweepSeconds = 300.0;
constexpr std::uint64_t kReplications = 10000;
constexpr std::uint64_t kMasterSeed = 20240601;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
    std::printf("%s  %-34s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// --- schedules -------------------------------------------------------------

void schedule_goldens() {
    const auto t0 = std::chrono::steady_clock::now();
    struct Row {
        int n;
        std::vector<int> unequal;
        std::size_t fixed_cohorts;
    };
    const std::vector<Row> rows{
        {24, {1, 1, 2, 2, 3, 3, 4, 4, 4}, 8},
        {30, {1, 1, 2, 2, 3, 3, 4, 4, 5, 5}, 10},
        {36, {1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6}, 12},
        {42, {1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6}, 14},
    };
    bool ok = true;
    for (const Row& r : rows) {
        const auto u = build_unequal_schedule(r.n);
        const auto f = build_fixed_schedule(r.n, 3);
        ok = ok && u.sizes == r.unequal && u.cohorts() == r.unequal.size();
        ok = ok && f.sizes == std::vector<int>(r.fixed_cohorts, 3) && f.cohorts() == r.fixed_cohorts;
    }
    ok = ok && build_unequal_schedule(26).sizes == std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4, 6};
    const double secs = seconds_since(t0);
    report(ok && secs < kScheduleSeconds, "schedule goldens",
           "N=24,26,30,36,42 exact; " + fmt("%.4f s", secs));
}

void cohort_halving() {
    const auto fixed = build_fixed_schedule(132, 3).cohorts();
    const auto unequal = build_unequal_schedule(132).cohorts();
    report(fixed == 44 && unequal <= 22, "cohort halving N=132",
           std::to_string(unequal) + " unequal vs " + std::to_string(fixed) + " fixed cohorts");
}

// --- CRM quadrature --------------------------------------------------------

// Trapezoid oracle on [-10, 10] with step 1e-4, with log p_j^exp(a) and
// log(1 - p_j^exp(a)) tabulated once per node.
struct TrapezoidOracle {
    std::vector<double> skeleton;
    double prior_variance;
    std::vector<double> alpha, log_prior, log_tox, log_safe, tox;
    std::vector<double> scratch;

    TrapezoidOracle(std::vector<double> s, double v) : skeleton(std::move(s)), prior_variance(v) {
        const long points = 200000;
        const std::size_t J = skeleton.size();
        for (long k = 0; k <= points; ++k) {
            const double a = -10.0 + 20.0 * static_cast<double>(k) / points;
            const double e = std::exp(a);
            alpha.push_back(a);
            log_prior.push_back(-a * a / (2.0 * prior_variance));
            for (std::size_t j = 0; j < J; ++j) {
                const double lp = e * std::log(skeleton[j]);
                log_tox.push_back(lp);
                log_safe.push_back(std::log(-std::expm1(lp)));
                tox.push_back(std::exp(lp));
            }
        }
        scratch.resize(alpha.size());
    }

    oracle::CrmMoments operator()(const std::vector<int>& n, const std::vector<int>& y) {
        const std::size_t J = skeleton.size();
        const std::size_t m = alpha.size();
        double top = -INFINITY;
        for (std::size_t k = 0; k < m; ++k) {
            double l = log_prior[k];
            for (std::size_t j = 0; j < J; ++j) {
                if (y[j]) l += y[j] * log_tox[k * J + j];
                if (n[j] > y[j]) l += (n[j] - y[j]) * log_safe[k * J + j];
            }
            scratch[k] = l;
            top = std::max(top, l);
        }
        double z = 0.0, m1 = 0.0;
        std::vector<double> pm(J, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            const double d = scratch[k] - top;
            if (d < -750.0) continue;  // exp underflows to zero
            const double w = (k == 0 || k + 1 == m ? 0.5 : 1.0) * std::exp(d);
            z += w;
            m1 += w * alpha[k];
            for (std::size_t j = 0; j < J; ++j) pm[j] += w * tox[k * J + j];
        }
        oracle::CrmMoments out;
        out.alpha_mean = m1 / z;
        for (std::size_t j = 0; j < J; ++j) {
            out.plug_in.push_back(std::pow(skeleton[j], std::exp(out.alpha_mean)));
            out.posterior_mean.push_back(pm[j] / z);
        }
        return out;
    }
};

void crm_quadrature_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    CrmConfig plug;
    plug.skeleton = {0.1, 0.2, 0.3};
    CrmConfig mean = plug;
    mean.estimator = CrmEstimator::PosteriorMean;
    const CrmEngine plug_engine(plug);
    const CrmEngine mean_engine(mean);
    TrapezoidOracle oracle(plug.skeleton, plug.prior_variance);

    std::size_t states = 0;
    double worst = 0.0;
    for (int n1 = 0; n1 <= 12; ++n1) {
        for (int n2 = 0; n1 + n2 <= 12; ++n2) {
            for (int n3 = 0; n1 + n2 + n3 <= 12; ++n3) {
                for (int y1 = 0; y1 <= n1; ++y1) {
                    for (int y2 = 0; y2 <= n2; ++y2) {
                        for (int y3 = 0; y3 <= n3; ++y3) {
                            TrialState s;
                            s.n = {n1, n2, n3};
                            s.y = {y1, y2, y3};
                            const auto ref = oracle(s.n, s.y);
                            const auto a = plug_engine.posterior(s);
                            const auto b = mean_engine.posterior(s);
                            worst = std::max(worst, std::abs(a.alpha_mean - ref.alpha_mean));
                            worst = std::max(worst, std::abs(b.alpha_mean - ref.alpha_mean));
                            for (int j = 0; j < 3; ++j) {
                                worst = std::max(worst, std::abs(a.tox_estimates[j] - ref.plug_in[j]));
                                worst = std::max(worst,
                                                 std::abs(b.tox_estimates[j] - ref.posterior_mean[j]));
                            }
                            ++states;
                        }
                    }
                }
            }
        }
    }
    const double secs = seconds_since(t0);
    report(worst < kQuadratureTol && secs < kQuadratureSeconds, "CRM quadrature oracle",
           std::to_string(states) + " states, max abs err " + fmt("%.2e", worst) + ", " +
               fmt("%.1f s", secs));
}

// --- Keyboard ----------------------------------------------------------------

void keyboard_closed_form() {
    const auto cfg = KeyboardConfig::with_interval(0.3, 0.25, 0.35);
    const std::vector<std::function<double(double)>> cdfs{
        [](double x) { return 1 - std::pow(1 - x, 4); },                          // Beta(1,4)
        [](double x) { return 6 * x * x - 8 * x * x * x + 3 * x * x * x * x; },   // Beta(2,3)
        [](double x) { return 4 * x * x * x - 3 * x * x * x * x; },               // Beta(3,2)
    };
    const std::vector<Decision> expected{Decision::Escalate, Decision::Stay, Decision::DeEscalate};
    double worst = 0.0;
    bool decisions = true;
    for (int y = 0; y <= 2; ++y) {
        const auto masses = key_masses(3, y, cfg);
        for (std::size_t i = 0; i < cfg.keyset.keys.size(); ++i) {
            const Key& k = cfg.keyset.keys[i];
            worst = std::max(worst, std::abs(masses[i] - (cdfs[y](k.upper) - cdfs[y](k.lower))));
        }
        decisions = decisions && decide(3, y, cfg) == expected[y];
    }
    report(worst < kKeyMassTol && decisions, "Keyboard closed form",
           "max mass err " + fmt("%.2e", worst) + (decisions ? ", decisions E/S/D" : ", decision mismatch"));
}

void pava_oracle() {
    std::size_t inputs = 0;
    double worst = 0.0;
    for (std::size_t m = 1; m <= 4; ++m) {
        std::vector<int> idx(m, 0);
        while (true) {
            std::vector<double> v(m);
            for (std::size_t i = 0; i < m; ++i) v[i] = idx[i] / 10.0;
            const std::vector<double> w(m, 1.0);
            const auto fit = pava(v, w);
            const auto ref = oracle::monotone_fit(v, w);
            for (std::size_t i = 0; i < m; ++i) worst = std::max(worst, std::abs(fit[i] - ref[i]));
            ++inputs;
            std::size_t k = 0;
            while (k < m && idx[k] == 10) idx[k++] = 0;
            if (k == m) break;
            ++idx[k];
        }
    }
    report(worst < kPavaTol, "PAVA oracle",
           std::to_string(inputs) + " inputs, max abs err " + fmt("%.2e", worst));
}

// --- Monte Carlo -------------------------------------------------------------

struct Batch {
    std::string label;
    Scenario scenario;
    int total;
    SimSummary summary;
};

std::unique_ptr<Design> crm_design() { return std::make_unique<CrmDesign>(CrmConfig::six_dose_default()); }

std::unique_ptr<Design> keyboard_design(int table_n) {
    return std::make_unique<KeyboardDesign>(KeyboardConfig::with_interval(0.3, 0.25, 0.35), 6, table_n);
}

bool invariants_hold(const Batch& b, std::string& why) {
    const auto& s = b.summary;
    const double sel = std::accumulate(s.selection_pct.begin(), s.selection_pct.end(), s.no_selection_pct);
    const double pts = std::accumulate(s.mean_patients.begin(), s.mean_patients.end(), 0.0);
    if (std::abs(sel - 100.0) > kSelectionSumTol) {
        why = b.label + ": selection sums to " + fmt("%.6f", sel);
        return false;
    }
    if (std::abs(pts - b.total) > kPatientSumTol) {
        why = b.label + ": patients sum to " + fmt("%.12f", pts);
        return false;
    }
    if (b.scenario.mtd_index) {
        const auto od = overdose_metrics(s, b.scenario.mtd_index);
        if (od.selection_pct != *s.overdose_selection_pct || od.patient_mean != *s.overdose_patient_mean) {
            why = b.label + ": overdose metrics differ from partial sums";
            return false;
        }
    }
    return true;
}

void published_cells() {
    const auto scenarios = builtin_scenarios();
    std::vector<Batch> batches;

    // Full N = 30 sweep: 6 scenarios x 2 designs x 2 schedules.
    const auto t0 = std::chrono::steady_clock::now();
    const auto crm = crm_design();
    const auto kb = keyboard_design(30);
    for (const auto* d : {crm.get(), kb.get()}) {
        for (bool unequal : {false, true}) {
            const auto sched = unequal ? build_unequal_schedule(30) : build_fixed_schedule(30, 3);
            for (const auto& s : scenarios) {
                batches.push_back({d->family() + (unequal ? " unequal " : " fixed ") + s.name + " N=30", s, 30,
                                   run_batch(*d, s, sched, kReplications, kMasterSeed)});
            }
        }
    }
    const double sweep_secs = seconds_since(t0);
    report(sweep_secs < kSweepSeconds, "N=30 sweep runtime",
           "24 batches x 10000 reps in " + fmt("%.1f s", sweep_secs));

    auto cell = [&](const std::string& label, int dose) {
        for (const Batch& b : batches) {
            if (b.label == label) return b.summary.selection_pct[dose - 1];
        }
        return std::nan("");
    };
    auto check_cell = [](const std::string& name, double got, double expected) {
        report(std::abs(got - expected) <= kCellTolPp, name,
               fmt("%.2f", got) + " vs " + fmt("%.2f", expected) + " (tol 3 pp)");
    };

    check_cell("CRM N=30 S3 fixed", cell("crm fixed Scenario 3 N=30", 3), 67.16);
    check_cell("CRM N=30 S3 unequal", cell("crm unequal Scenario 3 N=30", 3), 68.64);
    check_cell("Keyboard N=30 S3 fixed", cell("keyboard fixed Scenario 3 N=30", 3), 71.17);
    check_cell("Keyboard N=30 S3 unequal", cell("keyboard unequal Scenario 3 N=30", 3), 74.27);

    const auto s1 = run_batch(*crm, scenarios[0], build_fixed_schedule(24, 3), kReplications, kMasterSeed);
    batches.push_back({"crm fixed Scenario 1 N=24", scenarios[0], 24, s1});
    check_cell("CRM N=24 S1 fixed", s1.selection_pct[0], 65.71);
    check_cell("CRM N=24 S1 fixed overdose", *s1.overdose_selection_pct, 34.29);

    const auto f6 = run_batch(*crm, scenarios[5], build_fixed_schedule(42, 3), kReplications, kMasterSeed);
    const auto u6 = run_batch(*crm, scenarios[5], build_unequal_schedule(42), kReplications, kMasterSeed);
    batches.push_back({"crm fixed Scenario 6 N=42", scenarios[5], 42, f6});
    batches.push_back({"crm unequal Scenario 6 N=42", scenarios[5], 42, u6});
    check_cell("CRM N=42 S6 fixed", f6.selection_pct[5], 34.44);
    check_cell("CRM N=42 S6 unequal", u6.selection_pct[5], 41.24);
    const double gap = u6.selection_pct[5] - f6.selection_pct[5];
    report(gap >= kDirectionalGapPp, "CRM N=42 S6 unequal beats fixed", "gap " + fmt("%+.2f pp", gap));

    // Structural invariants on every batch above.
    std::string why;
    bool ok = true;
    for (const Batch& b : batches) {
        if (!invariants_hold(b, why)) {
            ok = false;
            break;
        }
    }
    report(ok, "MC structural invariants",
           ok ? std::to_string(batches.size()) + " batches: sums and overdose partial sums exact" : why);

    // Same seed, different worker count.
    bool same = true;
    std::size_t idx = 0;
    for (const auto* d : {crm.get(), kb.get()}) {
        for (bool unequal : {false, true}) {
            const auto sched = unequal ? build_unequal_schedule(30) : build_fixed_schedule(30, 3);
            for (const auto& s : scenarios) {
                same = same && run_batch(*d, s, sched, kReplications, kMasterSeed, 3) == batches[idx++].summary;
            }
        }
    }
    report(same, "MC worker-count invariance", "24 batches rerun with 3 workers, bit-identical");
}

// --- trial service -----------------------------------------------------------

json crm_session(bool unequal, int n) {
    json sched{{"mode", unequal ? "unequal" : "fixed"}, {"n", n}};
    if (!unequal) sched["cohort"] = 3;
    return {{"design", {{"family", "crm"}, {"target", 0.3}, {"skeleton", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}}}},
            {"schedule", sched}};
}

json keyboard_session(bool unequal, int n, bool eliminate) {
    json sched{{"mode", unequal ? "unequal" : "fixed"}, {"n", n}};
    if (!unequal) sched["cohort"] = 3;
    return {{"design",
             {{"family", "keyboard"},
              {"target", 0.3},
              {"interval", {0.25, 0.35}},
              {"doses", 6},
              {"elimination", {{"enabled", eliminate}}}}},
            {"schedule", sched}};
}

void service_contract() {
    using namespace trialsvc;
    std::mt19937_64 gen(kMasterSeed);
    auto store = std::make_shared<MemoryEventStore>();
    TrialService svc(store);

    // Replay equals state.
    int replay_bad = 0;
    int whatif_bad = 0;
    for (int h = 0; h < 1000; ++h) {
        const bool crm = gen() % 2;
        const bool unequal = gen() % 2;
        const int n = 6 + static_cast<int>(gen() % 30);
        const json body = crm ? crm_session(unequal, n) : keyboard_session(unequal, n, gen() % 2);
        auto s = svc.create_session(body);
        const int steps = static_cast<int>(gen() % (s->schedule.cohorts() + 1));
        for (int k = 0; k < steps && s->status == SessionStatus::AwaitingCohort; ++k) {
            const int size = s->current_cohort_size();
            const int dlt = static_cast<int>(gen() % (size + 1));
            if (k % 3 == 0) {
                const auto before = store->digest();
                const auto preview = svc.whatif(s->id, dlt);
                if (store->digest() != before) ++whatif_bad;
                s = svc.record_cohort(s->id, dlt);
                const auto rec = s->recommendation();
                if (preview.next.has_value() != rec.has_value() ||
                    (rec && (preview.next->dose != rec->dose || preview.next->cohort_size != rec->cohort_size))) {
                    ++whatif_bad;
                }
            } else {
                s = svc.record_cohort(s->id, dlt);
            }
        }
        const Session r = replay(store->load(s->id));
        if (!(r.state == s->state && r.history == s->history && r.status == s->status &&
              r.selected_mtd == s->selected_mtd && r.last_seq == s->last_seq)) {
            ++replay_bad;
        }
    }
    report(replay_bad == 0, "service replay equals state",
           "1000 randomized histories, " + std::to_string(replay_bad) + " mismatches");
    report(whatif_bad == 0, "service whatif purity",
           "storage digest unchanged and preview matches record; " + std::to_string(whatif_bad) + " violations");

    // Recommendation from the service vs a direct engine call on the same data.
    const auto crm_cfg = CrmConfig::six_dose_default();
    const auto kb_cfg = KeyboardConfig::with_interval(0.3, 0.25, 0.35);
    int checked_crm = 0, checked_kb = 0, mismatches = 0;
    while (checked_crm < 500 || checked_kb < 500) {
        const bool crm = checked_crm < 500 && (checked_kb >= 500 || gen() % 2);
        const json body = crm ? crm_session(gen() % 2, 30) : keyboard_session(gen() % 2, 30, false);
        auto s = svc.create_session(body);
        const int steps = 1 + static_cast<int>(gen() % (s->schedule.cohorts() - 1));
        for (int k = 0; k < steps; ++k) {
            s = svc.record_cohort(s->id, static_cast<int>(gen() % (s->current_cohort_size() + 1)));
        }
        const CohortRecord& last = s->history.back();
        TrialState direct = TrialState::empty(6);
        for (const CohortRecord& c : s->history) direct.record(c.dose, c.size, c.dlts);
        direct.current_dose = last.dose;
        int expected;
        if (crm) {
            expected = recommend_next_dose(direct, crm_cfg);
            ++checked_crm;
        } else {
            const Decision d = decide(direct.n[last.dose - 1], direct.y[last.dose - 1], kb_cfg);
            const int step = d == Decision::Escalate ? 1 : d == Decision::DeEscalate ? -1 : 0;
            expected = std::clamp(last.dose + step, 1, 6);
            ++checked_kb;
        }
        if (!s->recommendation() || s->recommendation()->dose != expected) ++mismatches;
    }
    report(mismatches == 0, "service matches direct engine",
           "500 CRM + 500 Keyboard states, " + std::to_string(mismatches) + " mismatches");
}

}  // namespace

int main() {
    schedule_goldens();
    cohort_halving();
    keyboard_closed_form();
    pava_oracle();
    service_contract();
    crm_quadrature_oracle();
    published_cells();
    std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
