#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dosefind/trial_state.hpp"

namespace dosefind {

struct Key {
    double lower;
    double upper;
};

/// Equal-width probability intervals around the target key. Boundary strips
/// narrower than one key are not keys.
struct KeySet {
    std::vector<Key> keys;
    std::size_t target_index = 0;

    const Key& target_key() const { return keys[target_index]; }
    double width() const { return target_key().upper - target_key().lower; }
};

/// Tiles outward from (lower, upper) with keys of the same width until the
/// next key would leave [0, 1].
KeySet build_keys(double lower, double upper);

struct KeyboardConfig {
    double target = 0.3;
    KeySet keyset;
    double prior_alpha = 1.0;
    double prior_beta = 1.0;
    bool elimination_enabled = false;
    double elimination_threshold = 0.95;
    double selection_prior_alpha = 0.05;
    double selection_prior_beta = 0.05;

    /// Target 0.3 with the (0.25, 0.35) target key.
    static KeyboardConfig with_interval(double target, double lower, double upper);

    void validate() const;
};

enum class Decision { Escalate, Stay, DeEscalate };

/// One-letter codes used in decision-table exports. DeEscalateEliminate is
/// only produced when elimination is enabled.
enum class TableAction { Escalate, Stay, DeEscalate, DeEscalateEliminate };

const char* action_code(TableAction a);
const char* decision_name(Decision d);

/// Posterior mass of each key under Beta(prior_alpha + y, prior_beta + n - y).
std::vector<double> key_masses(int n, int y, const KeyboardConfig& cfg);

/// Moves toward the strongest key. Mass ties go to the key nearer the target
/// key, and an exact two-sided tie stays. Throws on n == 0.
Decision decide(int n, int y, const KeyboardConfig& cfg);

/// True when elimination is enabled, n >= 3, and Pr(p > target) exceeds the threshold.
bool eliminate_overdose(int n, int y, const KeyboardConfig& cfg);

/// Combined per-(n, y) action as used during a trial.
TableAction table_action(int n, int y, const KeyboardConfig& cfg);

/// Immutable (n, y) -> action lookup for 1 <= n <= max_n.
class DecisionTable {
public:
    DecisionTable(const KeyboardConfig& cfg, int max_n);

    int max_n() const { return max_n_; }
    TableAction at(int n, int y) const;

    /// CSV with header `n,y,action`, one row per (n, y), n ascending then y.
    std::string to_csv() const;

private:
    int max_n_;
    std::vector<TableAction> actions_;  // row n starts at n(n+1)/2 - 1
};

/// Isotonic-regression MTD choice among tried doses below `eliminated_from`
/// (all doses when unset). Returns nullopt when no admissible dose was tried.
std::optional<int> keyboard_select_mtd(const TrialState& state, const KeyboardConfig& cfg,
                                       std::optional<int> eliminated_from = std::nullopt);

/// Picks among isotonized estimates: closest to target; ties prefer the
/// higher dose when all tied values sit below target, else the lower.
/// `candidates` are 1-based dose indices parallel to `values`.
int closest_isotonic(const std::vector<int>& candidates, const std::vector<double>& values,
                     double target);

}  // namespace dosefind
