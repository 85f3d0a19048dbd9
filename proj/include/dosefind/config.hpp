#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dosefind/design.hpp"
#include "dosefind/schedule.hpp"
#include "dosefind/simkit.hpp"

namespace dosefind {

using json = nlohmann::json;

/// Bad configuration. `field` is a dotted path such as "design.skeleton[2]".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class DesignFamily { Crm, Keyboard };

/// The "design" section shared by simulation configs and trial sessions.
///
///   {"family": "crm", "target": 0.3, "skeleton": [...],
///    "prior_variance": 1.34, "estimator": "plug-in" | "posterior-mean"}
///   {"family": "keyboard", "target": 0.3, "interval": [0.25, 0.35], "doses": 6,
///    "prior": [1, 1], "selection_prior": [0.05, 0.05],
///    "elimination": {"enabled": false, "threshold": 0.95}}
struct DesignSpec {
    DesignFamily family = DesignFamily::Crm;
    CrmConfig crm;
    KeyboardConfig keyboard;
    double interval_lower = 0.25;
    double interval_upper = 0.35;
    std::size_t doses = 0;

    double target() const;
    std::size_t num_doses() const { return doses; }
    std::string family_name() const;

    /// table_max_n > 0 precomputes Keyboard decisions up to that sample size.
    std::unique_ptr<Design> make_design(int table_max_n = 0) const;

    static DesignSpec from_json(const json& j, const std::string& path = "design");
    json to_json() const;
};

/// {"mode": "unequal", "n": 30} or {"mode": "fixed", "n": 30, "cohort": 3}
struct ScheduleSpec {
    bool unequal = true;
    int total = 0;
    int cohort_size = 3;

    CohortSchedule build() const;
    std::string label() const;

    static ScheduleSpec from_json(const json& j, const std::string& path = "schedule");
    json to_json() const;
};

enum class OutputFormat { Markdown, Csv, Json };

/// Top-level simulation config file.
///
///   {"design": {...}, "schedule": {...}, "scenarios": "paper6" | [...],
///    "replications": 10000, "master_seed": 20240601, "output": "markdown",
///    "workers": 0}
///
/// Custom scenarios are {"name": "...", "true_tox": [...], "mtd": 3 | null}.
struct SimConfig {
    DesignSpec design;
    ScheduleSpec schedule;
    std::vector<Scenario> scenarios;
    bool builtin_scenarios = false;
    std::uint64_t replications = 10000;
    std::uint64_t master_seed = 0;
    OutputFormat output = OutputFormat::Markdown;
    unsigned workers = 0;

    static SimConfig from_json(const json& j);
    json to_json() const;
};

/// Parses JSON text, rethrowing syntax errors as ConfigError with the
/// parser's line/column diagnostics.
json parse_json_text(const std::string& text);

SimConfig parse_sim_config(const std::string& text);
SimConfig load_sim_config(const std::string& path);

std::string format_name(OutputFormat f);

}  // namespace dosefind
