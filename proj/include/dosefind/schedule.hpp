#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace dosefind {

/// Round half away from zero, the "[x]" used for cohort sizing.
long round_half_away(double x);

/// Ordered cohort sizes for a trial of `total` patients.
struct CohortSchedule {
    int total = 0;
    std::vector<int> sizes;

    std::size_t cohorts() const { return sizes.size(); }
    bool operator==(const CohortSchedule&) const = default;
};

/// Size of the i-th cohort (1-based) under the growing rule: 1,1,2,2,3,3,...
int base_cohort_size(int i);

/// Size to give cohort i when `remaining` patients are still unscheduled.
/// Returning `remaining` closes the schedule.
using RemainderPolicy = std::function<int(int remaining, int cohort_index)>;

/// Default. Cohort i takes its base size unless the patients left after it
/// would be fewer than half of the next base size, in which case they are
/// folded into cohort i. Reproduces 24 -> ...,4,4,4 and 26 -> ...,4,4,6.
int absorb_short_remainder(int remaining, int cohort_index);

/// Closes the schedule as soon as the remainder cannot cover the next two
/// base cohorts. Gives 24 -> ...,4,8, so it is not the default.
int absorb_when_short_of_two(int remaining, int cohort_index);

CohortSchedule build_unequal_schedule(int total,
                                      const RemainderPolicy& policy = absorb_short_remainder);

CohortSchedule build_fixed_schedule(int total, int cohort_size);

/// Sum over doses of n_j / (p_j (1 - p_j)).
struct Allocation {
    std::vector<int> counts;
    std::vector<double> probs;
};

double fisher_information(const Allocation& a);

struct SqrtRow {
    int n;
    double root;          // sqrt(n)
    long rounded_root;    // [sqrt(n)], so the table column is 1/rounded_root
};

std::vector<SqrtRow> sqrt_table(int n_max);

}  // namespace dosefind
