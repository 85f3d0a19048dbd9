#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace dosefind {

/// Cumulative per-dose data of a running trial. Dose indices are 1-based in
/// every public API; the vectors are indexed from 0.
struct TrialState {
    std::vector<int> n;   // patients treated per dose
    std::vector<int> y;   // DLTs observed per dose
    int current_dose = 1;
    int cohort_index = 1; // next cohort ordinal
    std::optional<int> eliminated_from;  // this dose and all above are closed

    static TrialState empty(std::size_t num_doses);

    std::size_t num_doses() const { return n.size(); }
    int total_patients() const;

    /// Adds `size` patients with `dlts` toxicities at `dose` (1-based).
    void record(int dose, int size, int dlts);

    /// Throws std::invalid_argument unless 0 <= y <= n elementwise, the
    /// vectors have `num_doses` entries, and current_dose is in range.
    void validate(std::size_t num_doses) const;

    bool operator==(const TrialState&) const = default;
};

}  // namespace dosefind
