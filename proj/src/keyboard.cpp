#include "dosefind/keyboard.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dosefind/beta.hpp"
#include "dosefind/pava.hpp"

namespace dosefind {

namespace {

constexpr double kMassTie = 1e-12;
constexpr double kGridSlack = 1e-9;

}  // namespace

KeySet build_keys(double lower, double upper) {
    if (!(lower > 0.0 && lower < upper && upper < 1.0)) {
        throw std::invalid_argument("target key must satisfy 0 < lower < upper < 1");
    }
    const double width = upper - lower;
    const int left = static_cast<int>(std::floor(lower / width + kGridSlack));
    const int right = static_cast<int>(std::floor((1.0 - upper) / width + kGridSlack));

    KeySet ks;
    ks.target_index = static_cast<std::size_t>(left);
    auto edge = [&](int i) {
        if (i == 0) return lower;
        if (i == 1) return upper;
        return std::clamp(lower + i * width, 0.0, 1.0);
    };
    for (int i = -left; i <= right; ++i) {
        ks.keys.push_back({edge(i), edge(i + 1)});
    }
    return ks;
}

KeyboardConfig KeyboardConfig::with_interval(double target, double lower, double upper) {
    KeyboardConfig cfg;
    cfg.target = target;
    cfg.keyset = build_keys(lower, upper);
    cfg.validate();
    return cfg;
}

void KeyboardConfig::validate() const {
    if (keyset.keys.empty() || keyset.target_index >= keyset.keys.size()) {
        throw std::invalid_argument("keyboard config has no target key");
    }
    const Key& t = keyset.target_key();
    if (!(target > t.lower && target < t.upper)) {
        throw std::invalid_argument("target must lie inside the target key");
    }
    if (!(prior_alpha > 0.0 && prior_beta > 0.0 && selection_prior_alpha > 0.0 &&
          selection_prior_beta > 0.0)) {
        throw std::invalid_argument("beta prior parameters must be positive");
    }
    if (!(elimination_threshold > 0.0 && elimination_threshold < 1.0)) {
        throw std::invalid_argument("elimination threshold must lie in (0,1)");
    }
}

const char* action_code(TableAction a) {
    switch (a) {
        case TableAction::Escalate: return "E";
        case TableAction::Stay: return "S";
        case TableAction::DeEscalate: return "D";
        case TableAction::DeEscalateEliminate: return "DU";
    }
    return "?";
}

const char* decision_name(Decision d) {
    switch (d) {
        case Decision::Escalate: return "escalate";
        case Decision::Stay: return "stay";
        case Decision::DeEscalate: return "de-escalate";
    }
    return "?";
}

std::vector<double> key_masses(int n, int y, const KeyboardConfig& cfg) {
    if (n < 0 || y < 0 || y > n) {
        throw std::invalid_argument("key_masses: need 0 <= y <= n");
    }
    const double a = cfg.prior_alpha + y;
    const double b = cfg.prior_beta + (n - y);
    std::vector<double> masses;
    masses.reserve(cfg.keyset.keys.size());
    for (const Key& k : cfg.keyset.keys) {
        masses.push_back(beta_interval_mass(k.lower, k.upper, a, b));
    }
    return masses;
}

Decision decide(int n, int y, const KeyboardConfig& cfg) {
    if (n < 1) {
        throw std::invalid_argument("decide: no patients at this dose");
    }
    const std::vector<double> masses = key_masses(n, y, cfg);
    const double top = *std::max_element(masses.begin(), masses.end());
    const auto t = static_cast<long>(cfg.keyset.target_index);

    long best_distance = -1;
    bool left = false;
    bool right = false;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (masses[i] < top - kMassTie) {
            continue;
        }
        const long offset = static_cast<long>(i) - t;
        const long distance = std::abs(offset);
        if (best_distance < 0 || distance < best_distance) {
            best_distance = distance;
            left = offset < 0;
            right = offset > 0;
        } else if (distance == best_distance) {
            left = left || offset < 0;
            right = right || offset > 0;
        }
    }
    if (best_distance == 0 || (left && right)) {
        return Decision::Stay;
    }
    return left ? Decision::Escalate : Decision::DeEscalate;
}

bool eliminate_overdose(int n, int y, const KeyboardConfig& cfg) {
    if (n < 0 || y < 0 || y > n) {
        throw std::invalid_argument("eliminate_overdose: need 0 <= y <= n");
    }
    if (!cfg.elimination_enabled || n < 3) {
        return false;
    }
    const double above = 1.0 - incomplete_beta(cfg.target, cfg.prior_alpha + y,
                                               cfg.prior_beta + (n - y));
    return above > cfg.elimination_threshold;
}

TableAction table_action(int n, int y, const KeyboardConfig& cfg) {
    if (eliminate_overdose(n, y, cfg)) {
        return TableAction::DeEscalateEliminate;
    }
    switch (decide(n, y, cfg)) {
        case Decision::Escalate: return TableAction::Escalate;
        case Decision::Stay: return TableAction::Stay;
        case Decision::DeEscalate: return TableAction::DeEscalate;
    }
    return TableAction::Stay;
}

DecisionTable::DecisionTable(const KeyboardConfig& cfg, int max_n) : max_n_(max_n) {
    if (max_n < 1) {
        throw std::invalid_argument("decision table needs max_n >= 1");
    }
    for (int n = 1; n <= max_n; ++n) {
        for (int y = 0; y <= n; ++y) {
            actions_.push_back(table_action(n, y, cfg));
        }
    }
}

TableAction DecisionTable::at(int n, int y) const {
    if (n < 1 || n > max_n_ || y < 0 || y > n) {
        throw std::out_of_range("decision table lookup outside 1 <= n <= max_n, 0 <= y <= n");
    }
    const std::size_t row = static_cast<std::size_t>(n) * (n + 1) / 2 - 1;
    return actions_[row + static_cast<std::size_t>(y)];
}

std::string DecisionTable::to_csv() const {
    std::ostringstream out;
    out << "n,y,action\n";
    for (int n = 1; n <= max_n_; ++n) {
        for (int y = 0; y <= n; ++y) {
            out << n << ',' << y << ',' << action_code(at(n, y)) << '\n';
        }
    }
    return out.str();
}

int closest_isotonic(const std::vector<int>& candidates, const std::vector<double>& values,
                     double target) {
    if (candidates.empty() || candidates.size() != values.size()) {
        throw std::invalid_argument("closest_isotonic: bad candidate list");
    }
    double best_gap = std::abs(values[0] - target);
    for (double v : values) {
        best_gap = std::min(best_gap, std::abs(v - target));
    }
    std::vector<std::size_t> tied;
    bool all_below = true;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::abs(values[i] - target) <= best_gap + kMassTie) {
            tied.push_back(i);
            all_below = all_below && values[i] < target;
        }
    }
    return all_below ? candidates[tied.back()] : candidates[tied.front()];
}

std::optional<int> keyboard_select_mtd(const TrialState& state, const KeyboardConfig& cfg,
                                       std::optional<int> eliminated_from) {
    const int limit = eliminated_from.value_or(static_cast<int>(state.num_doses()) + 1);
    std::vector<int> doses;
    std::vector<double> means;
    std::vector<double> weights;
    for (int d = 1; d < limit && d <= static_cast<int>(state.num_doses()); ++d) {
        const int n = state.n[d - 1];
        if (n == 0) {
            continue;
        }
        const int y = state.y[d - 1];
        doses.push_back(d);
        means.push_back((cfg.selection_prior_alpha + y) /
                        (cfg.selection_prior_alpha + cfg.selection_prior_beta + n));
        weights.push_back(static_cast<double>(n));
    }
    if (doses.empty()) {
        return std::nullopt;
    }
    return closest_isotonic(doses, pava(means, weights), cfg.target);
}

}  // namespace dosefind
