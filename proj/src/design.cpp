#include "dosefind/design.hpp"

#include <algorithm>
#include <stdexcept>

namespace dosefind {

CrmDesign::CrmDesign(CrmConfig cfg, QuadratureSettings quad) : engine_(std::move(cfg), quad) {}

NextStep CrmDesign::next_step(const TrialState& state) const {
    return NextStep{engine_.recommend_next_dose(state), std::nullopt, false};
}

std::optional<int> CrmDesign::select_mtd(const TrialState& state) const {
    return engine_.select_mtd(state);
}

KeyboardDesign::KeyboardDesign(KeyboardConfig cfg, std::size_t num_doses, int table_max_n)
    : cfg_(std::move(cfg)), num_doses_(num_doses) {
    cfg_.validate();
    if (num_doses_ == 0) {
        throw std::invalid_argument("keyboard design needs at least one dose");
    }
    if (table_max_n > 0) {
        table_.emplace(cfg_, table_max_n);
    }
}

TableAction KeyboardDesign::action(int n, int y) const {
    if (table_ && n <= table_->max_n()) {
        return table_->at(n, y);
    }
    return table_action(n, y, cfg_);
}

NextStep KeyboardDesign::next_step(const TrialState& state) const {
    state.validate(num_doses_);
    const int cur = state.current_dose;
    const int J = static_cast<int>(num_doses_);
    const int ceiling = std::min(J, state.eliminated_from.value_or(J + 1) - 1);

    NextStep step{cur, std::nullopt, false};
    switch (action(state.n[cur - 1], state.y[cur - 1])) {
        case TableAction::Escalate:
            step.dose = std::min(cur + 1, ceiling);
            break;
        case TableAction::Stay:
            break;
        case TableAction::DeEscalate:
            step.dose = std::max(cur - 1, 1);
            break;
        case TableAction::DeEscalateEliminate:
            step.eliminate_from = cur;
            if (cur == 1) {
                step.stop = true;
            } else {
                step.dose = cur - 1;
            }
            break;
    }
    return step;
}

std::optional<int> KeyboardDesign::select_mtd(const TrialState& state) const {
    return keyboard_select_mtd(state, cfg_, state.eliminated_from);
}

void apply_step(TrialState& state, const NextStep& step) {
    if (step.eliminate_from) {
        state.eliminated_from = std::min(*step.eliminate_from,
                                         state.eliminated_from.value_or(*step.eliminate_from));
    }
    if (!step.stop) {
        state.current_dose = step.dose;
    }
}

}  // namespace dosefind
