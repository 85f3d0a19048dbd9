#pragma once

#include <string>
#include <vector>

#include "dosefind/config.hpp"
#include "dosefind/simkit.hpp"

namespace dosefind {

struct ScenarioResult {
    Scenario scenario;
    SimSummary summary;
};

/// Runs every scenario of the config through run_batch.
std::vector<ScenarioResult> simulate(const SimConfig& cfg);

/// One block per scenario: true toxicity, Selection (%), Patients (mean),
/// overdose column. Percentages to two decimals.
std::string format_markdown(const SimConfig& cfg, const std::vector<ScenarioResult>& results);

/// Columns: scenario,dose,true_tox,selection_pct,mean_patients,
/// overdose_selection_pct,overdose_patient_mean. One row per dose; the
/// summary columns repeat on each row and are empty when the scenario has no
/// MTD. Values are written with 17 significant digits so parsing restores them exactly.
std::string format_csv(const std::vector<ScenarioResult>& results);

std::string format_json(const SimConfig& cfg, const std::vector<ScenarioResult>& results);

std::string format_results(const SimConfig& cfg, const std::vector<ScenarioResult>& results);

/// Inverse of format_csv for the fields it carries (scenario name, true
/// toxicity, selection_pct, mean_patients, overdose values). Throws
/// std::runtime_error on malformed input.
std::vector<ScenarioResult> parse_csv(const std::string& text);

struct CompareRow {
    std::string scenario;
    std::optional<int> mtd_index;
    double mtd_selection_a = 0.0;
    double mtd_selection_b = 0.0;
    std::optional<double> overdose_a;
    std::optional<double> overdose_b;

    double selection_delta() const { return mtd_selection_b - mtd_selection_a; }
    std::optional<double> overdose_delta() const;
    bool b_more_accurate() const { return selection_delta() > 0.0; }
    bool b_safer() const;
};

/// Throws ConfigError when the two configs differ in design family, sample
/// size, or scenario set.
void check_comparable(const SimConfig& a, const SimConfig& b);

std::vector<CompareRow> compare_results(const std::vector<ScenarioResult>& a,
                                        const std::vector<ScenarioResult>& b);

std::string format_comparison(const SimConfig& a, const SimConfig& b,
                              const std::vector<CompareRow>& rows);

}  // namespace dosefind
