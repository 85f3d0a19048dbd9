#pragma once

#include <memory>
#include <optional>
#include <string>

#include "dosefind/crm.hpp"
#include "dosefind/keyboard.hpp"
#include "dosefind/trial_state.hpp"

namespace dosefind {

/// What to do after a cohort's outcomes are in.
struct NextStep {
    int dose = 1;
    std::optional<int> eliminate_from;  // close this dose and everything above
    bool stop = false;                  // no admissible dose remains

    bool operator==(const NextStep&) const = default;
};

/// A dose-finding rule as seen by the trial driver: per-cohort movement with
/// the no-skip clamp applied, and the end-of-trial MTD choice.
class Design {
public:
    virtual ~Design() = default;

    virtual std::string family() const = 0;
    virtual std::size_t num_doses() const = 0;
    virtual double target() const = 0;
    virtual NextStep next_step(const TrialState& state) const = 0;
    virtual std::optional<int> select_mtd(const TrialState& state) const = 0;
};

class CrmDesign final : public Design {
public:
    explicit CrmDesign(CrmConfig cfg, QuadratureSettings quad = {});

    std::string family() const override { return "crm"; }
    std::size_t num_doses() const override { return engine_.num_doses(); }
    double target() const override { return engine_.config().target; }
    NextStep next_step(const TrialState& state) const override;
    std::optional<int> select_mtd(const TrialState& state) const override;

    const CrmEngine& engine() const { return engine_; }

private:
    CrmEngine engine_;
};

class KeyboardDesign final : public Design {
public:
    /// With table_max_n > 0, decisions for n <= table_max_n come from a
    /// precomputed DecisionTable; larger n are computed directly.
    KeyboardDesign(KeyboardConfig cfg, std::size_t num_doses, int table_max_n = 0);

    std::string family() const override { return "keyboard"; }
    std::size_t num_doses() const override { return num_doses_; }
    double target() const override { return cfg_.target; }
    NextStep next_step(const TrialState& state) const override;
    std::optional<int> select_mtd(const TrialState& state) const override;

    TableAction action(int n, int y) const;
    const KeyboardConfig& config() const { return cfg_; }

private:
    KeyboardConfig cfg_;
    std::size_t num_doses_;
    std::optional<DecisionTable> table_;
};

/// Applies a NextStep to the state: moves the current dose and records any
/// elimination.
void apply_step(TrialState& state, const NextStep& step);

}  // namespace dosefind
