#pragma once

#include <span>
#include <vector>

namespace dosefind {

/// Weighted least-squares non-decreasing fit by pool-adjacent-violators.
/// Throws std::invalid_argument on a length mismatch or a non-positive weight.
std::vector<double> pava(std::span<const double> values, std::span<const double> weights);

}  // namespace dosefind
