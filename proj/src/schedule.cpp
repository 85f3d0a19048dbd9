#include "dosefind/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dosefind {

long round_half_away(double x) {
    return std::lround(x);
}

int base_cohort_size(int i) {
    if (i < 1) {
        throw std::invalid_argument("cohort index must be >= 1, got " + std::to_string(i));
    }
    return (i + 1) / 2;
}

int absorb_short_remainder(int remaining, int cohort_index) {
    const int base = base_cohort_size(cohort_index);
    if (remaining <= base) {
        return remaining;
    }
    const int left_after = remaining - base;
    return 2 * left_after < base_cohort_size(cohort_index + 1) ? remaining : base;
}

int absorb_when_short_of_two(int remaining, int cohort_index) {
    const int base = base_cohort_size(cohort_index);
    if (remaining < base + base_cohort_size(cohort_index + 1)) {
        return remaining;
    }
    return base;
}

CohortSchedule build_unequal_schedule(int total, const RemainderPolicy& policy) {
    if (total < 1) {
        throw std::invalid_argument("total sample size must be >= 1, got " + std::to_string(total));
    }
    CohortSchedule s{total, {}};
    int scheduled = 0;
    for (int i = 1; scheduled < total; ++i) {
        const int remaining = total - scheduled;
        const int size = policy(remaining, i);
        if (size < 1 || size > remaining) {
            throw std::logic_error("remainder policy produced an invalid cohort size");
        }
        s.sizes.push_back(size);
        scheduled += size;
    }
    return s;
}

CohortSchedule build_fixed_schedule(int total, int cohort_size) {
    if (total < 1 || cohort_size < 1) {
        throw std::invalid_argument("total and cohort size must both be positive");
    }
    CohortSchedule s{total, std::vector<int>(static_cast<std::size_t>(total / cohort_size), cohort_size)};
    if (total % cohort_size != 0) {
        s.sizes.push_back(total % cohort_size);
    }
    return s;
}

double fisher_information(const Allocation& a) {
    if (a.counts.size() != a.probs.size()) {
        throw std::invalid_argument("allocation counts and probs differ in length");
    }
    double info = 0.0;
    for (std::size_t j = 0; j < a.counts.size(); ++j) {
        const double p = a.probs[j];
        if (!(p > 0.0 && p < 1.0)) {
            throw std::domain_error("toxicity probability must lie strictly inside (0,1)");
        }
        if (a.counts[j] < 0) {
            throw std::invalid_argument("negative patient count");
        }
        info += a.counts[j] / (p * (1.0 - p));
    }
    return info;
}

std::vector<SqrtRow> sqrt_table(int n_max) {
    std::vector<SqrtRow> rows;
    for (int n = 1; n <= n_max; ++n) {
        const double r = std::sqrt(static_cast<double>(n));
        rows.push_back({n, r, round_half_away(r)});
    }
    return rows;
}

}  // namespace dosefind
