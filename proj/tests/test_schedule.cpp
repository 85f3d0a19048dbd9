#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dosefind/schedule.hpp"

using namespace dosefind;

namespace {

std::vector<int> sizes(int n) { return build_unequal_schedule(n).sizes; }

}  // namespace

TEST_CASE("base cohort size follows 1,1,2,2,3,3") {
    CHECK(base_cohort_size(1) == 1);
    CHECK(base_cohort_size(2) == 1);
    CHECK(base_cohort_size(5) == 3);
    CHECK(base_cohort_size(12) == 6);
    CHECK_THROWS_AS(base_cohort_size(0), std::invalid_argument);
    CHECK_THROWS_AS(base_cohort_size(-3), std::invalid_argument);
}

TEST_CASE("round half away matches the bracket rounding") {
    CHECK(round_half_away(0.5) == 1);
    CHECK(round_half_away(1.5) == 2);
    CHECK(round_half_away(2.5) == 3);
    CHECK(round_half_away(2.49) == 2);
}

TEST_CASE("unequal schedules for the study sample sizes") {
    CHECK(sizes(24) == std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4, 4});
    CHECK(sizes(26) == std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4, 6});
    CHECK(sizes(30) == std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4, 5, 5});
    CHECK(sizes(36) == std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6});
    CHECK(sizes(42) == std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6});
    CHECK(sizes(1) == std::vector<int>{1});
    CHECK_THROWS_AS(build_unequal_schedule(0), std::invalid_argument);
}

TEST_CASE("the two-cohort lookahead rule is kept as an option") {
    const auto s = build_unequal_schedule(24, absorb_when_short_of_two);
    CHECK(s.sizes == std::vector<int>{1, 1, 2, 2, 3, 3, 4, 8});
    CHECK(std::accumulate(s.sizes.begin(), s.sizes.end(), 0) == 24);
}

TEST_CASE("fixed schedules") {
    CHECK(build_fixed_schedule(24, 3).sizes == std::vector<int>(8, 3));
    CHECK(build_fixed_schedule(30, 3).sizes == std::vector<int>(10, 3));
    CHECK(build_fixed_schedule(42, 3).cohorts() == 14);
    CHECK(build_fixed_schedule(7, 3).sizes == std::vector<int>{3, 3, 1});
    CHECK_THROWS_AS(build_fixed_schedule(0, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_fixed_schedule(10, 0), std::invalid_argument);
}

TEST_CASE("unequal schedule invariants hold for every N up to 500") {
    for (int n = 1; n <= 500; ++n) {
        CAPTURE(n);
        const auto s = build_unequal_schedule(n);
        REQUIRE(s.total == n);
        REQUIRE(std::accumulate(s.sizes.begin(), s.sizes.end(), 0) == n);
        for (int v : s.sizes) REQUIRE(v >= 1);
        if (n >= 2) {
            REQUIRE(s.sizes.size() >= 2);
            REQUIRE(s.sizes[0] == 1);
            REQUIRE(s.sizes[1] == 1);
        }
        for (std::size_t i = 0; i + 1 < s.sizes.size(); ++i) {
            REQUIRE(s.sizes[i] == (static_cast<int>(i) + 2) / 2);
        }
    }
}

TEST_CASE("cohort count grows like the square root of N") {
    for (int n = 4; n <= 500; ++n) {
        const double c = static_cast<double>(build_unequal_schedule(n).cohorts());
        CHECK(c <= 2.0 * std::sqrt(static_cast<double>(n)) + 1.0);
        CHECK(c >= 2.0 * std::sqrt(static_cast<double>(n)) - 3.0);
    }
}

TEST_CASE("fisher information") {
    CHECK(fisher_information({{30}, {0.3}}) == doctest::Approx(30.0 / 0.21).epsilon(1e-12));
    CHECK(fisher_information({{3, 3}, {0.3, 0.5}}) == doctest::Approx(26.285714285714).epsilon(1e-10));
    CHECK(fisher_information({{0, 0}, {0.2, 0.4}}) == 0.0);
    CHECK_THROWS_AS(fisher_information({{1}, {0.0}}), std::domain_error);
    CHECK_THROWS_AS(fisher_information({{1}, {1.0}}), std::domain_error);
    CHECK_THROWS_AS(fisher_information({{1, 2}, {0.3}}), std::invalid_argument);
}

TEST_CASE("per-patient information is smallest at p = 0.5") {
    double best = 1e300;
    double arg = 0.0;
    for (int k = 1; k < 1000; ++k) {
        const double p = k / 1000.0;
        const double v = fisher_information({{1}, {p}});
        if (v < best) {
            best = v;
            arg = p;
        }
    }
    CHECK(arg == doctest::Approx(0.5));
    CHECK(best == doctest::Approx(4.0));
}

TEST_CASE("square-root table") {
    const auto t = sqrt_table(25);
    REQUIRE(t.size() == 25);
    CHECK(t[1].n == 2);
    CHECK(t[1].root == doctest::Approx(1.41).epsilon(5e-3));
    CHECK(t[1].rounded_root == 1);
    CHECK(t[12].root == doctest::Approx(3.61).epsilon(5e-3));
    CHECK(t[12].rounded_root == 4);
    CHECK(t[24].root == 5.0);
    CHECK(t[24].rounded_root == 5);
}
