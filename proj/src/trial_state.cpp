#include "dosefind/trial_state.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace dosefind {

TrialState TrialState::empty(std::size_t num_doses) {
    return TrialState{std::vector<int>(num_doses, 0), std::vector<int>(num_doses, 0), 1, 1, std::nullopt};
}

int TrialState::total_patients() const {
    return std::accumulate(n.begin(), n.end(), 0);
}

void TrialState::record(int dose, int size, int dlts) {
    if (dose < 1 || static_cast<std::size_t>(dose) > n.size()) {
        throw std::invalid_argument("dose " + std::to_string(dose) + " out of range");
    }
    if (size < 0 || dlts < 0 || dlts > size) {
        throw std::invalid_argument("DLT count must lie in [0, cohort size]");
    }
    n[dose - 1] += size;
    y[dose - 1] += dlts;
}

void TrialState::validate(std::size_t num_doses) const {
    if (n.size() != num_doses || y.size() != num_doses) {
        throw std::invalid_argument("trial state has " + std::to_string(n.size()) +
                                    " doses, expected " + std::to_string(num_doses));
    }
    for (std::size_t j = 0; j < num_doses; ++j) {
        if (n[j] < 0 || y[j] < 0 || y[j] > n[j]) {
            throw std::invalid_argument("dose " + std::to_string(j + 1) +
                                        ": need 0 <= y <= n");
        }
    }
    if (current_dose < 1 || static_cast<std::size_t>(current_dose) > num_doses) {
        throw std::invalid_argument("current dose out of range");
    }
}

}  // namespace dosefind
