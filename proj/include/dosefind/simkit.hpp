#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dosefind/design.hpp"
#include "dosefind/schedule.hpp"

namespace dosefind {

/// True toxicity curve to simulate under.
struct Scenario {
    std::string name;
    std::vector<double> true_tox;
    std::optional<int> mtd_index;  // 1-based; unset when no dose sits at target

    /// Throws std::invalid_argument on bad probabilities, a length mismatch,
    /// or an mtd_index that is not the dose closest to target.
    void validate(std::size_t num_doses, double target) const;
};

/// The six curves of the reference study (target 0.3, six doses).
std::vector<Scenario> builtin_scenarios();

struct CohortRecord {
    int size;
    int dose;
    int dlts;

    bool operator==(const CohortRecord&) const = default;
};

struct TrialResult {
    std::optional<int> selected_dose;
    std::vector<int> patients;
    std::vector<int> dlts;
    std::vector<CohortRecord> dose_path;
    bool stopped_early = false;

    bool operator==(const TrialResult&) const = default;
};

/// SplitMix64 finalizer applied to master_seed + (r + 1) * golden gamma.
std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t replication);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
inline double unit_uniform(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// One simulated trial: first cohort at dose 1, Bernoulli(true_tox) DLTs,
/// the design picks the next dose after each cohort.
TrialResult run_trial(const Design& design, const Scenario& scenario,
                      const CohortSchedule& schedule, std::uint64_t seed);

struct SimSummary {
    std::vector<double> selection_pct;
    double no_selection_pct = 0.0;
    std::vector<double> mean_patients;
    std::optional<double> overdose_selection_pct;
    std::optional<double> overdose_patient_mean;
    std::uint64_t replications = 0;
    std::uint64_t master_seed = 0;

    // Exact tallies behind the percentages and means.
    std::vector<std::uint64_t> selection_counts;
    std::vector<std::uint64_t> patient_totals;

    bool operator==(const SimSummary&) const = default;
};

/// Aggregates finished trials. Selection and patient tallies are integer
/// sums, so the order of `trials` does not affect the result.
SimSummary summarize(std::span<const TrialResult> trials, const Scenario& scenario,
                     std::uint64_t master_seed);

/// Sums of selection_pct and mean_patients over doses above mtd_index.
struct OverdoseMetrics {
    double selection_pct;
    double patient_mean;
};
OverdoseMetrics overdose_metrics(const SimSummary& summary, std::optional<int> mtd_index);

/// Runs `replications` trials; replication r uses replication_seed(master_seed, r).
/// workers == 0 picks std::thread::hardware_concurrency(). The summary does
/// not depend on the worker count.
SimSummary run_batch(const Design& design, const Scenario& scenario,
                     const CohortSchedule& schedule, std::uint64_t replications,
                     std::uint64_t master_seed, unsigned workers = 0);

}  // namespace dosefind
