#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ucmoa/errors.hpp"
#include "ucmoa/reward_stats.hpp"
#include "ucmoa/rng.hpp"

using namespace ucmoa;

namespace {

// Brute-force rank oracle over the unsorted reference set.
double brute_percentile(const std::vector<double>& refs, double score) {
    std::size_t count = 0;
    for (double r : refs) {
        if (r <= score) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(refs.size());
}

} // namespace

TEST_CASE("update_bounds merges componentwise") {
    RunningBounds b;
    b.update({0.0, 0.0});
    b.update({1.0, 1.0});
    b.update({2.0, -1.0});
    CHECK(b.z_min == RewardVector{0.0, -1.0});
    CHECK(b.z_max == RewardVector{2.0, 1.0});

    // Inside the bounds: unchanged.
    const auto before_min = b.z_min;
    const auto before_max = b.z_max;
    b.update({0.5, 0.5});
    CHECK(b.z_min == before_min);
    CHECK(b.z_max == before_max);
}

TEST_CASE("update_bounds base case and errors") {
    RunningBounds b;
    b.update({3.0, -2.0});
    CHECK(b.z_min == RewardVector{3.0, -2.0});
    CHECK(b.z_max == RewardVector{3.0, -2.0});

    CHECK_THROWS_AS(b.update({std::numeric_limits<double>::quiet_NaN(), 0.0}), DataError);
    CHECK_THROWS_AS(b.update({1.0}), ShapeError);
}

TEST_CASE("update_bounds is fold-order independent") {
    Rng rng(41);
    std::vector<RewardVector> samples;
    for (int i = 0; i < 60; ++i) {
        samples.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
    }
    RunningBounds fwd;
    for (const auto& z : samples) fwd.update(z);
    RunningBounds rev;
    for (auto it = samples.rbegin(); it != samples.rend(); ++it) rev.update(*it);
    // A shuffled order as well.
    std::vector<RewardVector> shuffled = samples;
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
    }
    RunningBounds shf;
    for (const auto& z : shuffled) shf.update(z);

    CHECK(fwd.z_min == rev.z_min);
    CHECK(fwd.z_max == rev.z_max);
    CHECK(fwd.z_min == shf.z_min);
    CHECK(fwd.z_max == shf.z_max);
}

TEST_CASE("normalize: hand-evaluated values") {
    RunningBounds b;
    b.update({0.0, 0.0});
    b.update({2.0, 1.0});
    const auto params = NormalizationParams::from_bounds(b);
    CHECK(params.d == 2.0);

    const auto mid = params.normalize(params.z_mid);
    CHECK(mid[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mid[1] == doctest::Approx(0.5).epsilon(1e-15));

    const auto top = params.normalize({2.0, 1.0});
    CHECK(top[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(top[1] == doctest::Approx(0.75).epsilon(1e-15));

    const auto bottom = params.normalize({0.0, 0.0});
    CHECK(bottom[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(bottom[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("normalize: degenerate range is an explicit error") {
    RunningBounds b;
    b.update({1.0, 1.0});
    b.update({1.0, 1.0});
    CHECK_THROWS_AS(NormalizationParams::from_bounds(b), DataError);
}

TEST_CASE("normalize preserves componentwise order") {
    Rng rng(43);
    RunningBounds b;
    std::vector<RewardVector> tracked;
    for (int i = 0; i < 100; ++i) {
        RewardVector z{rng.uniform(-3, 7), rng.uniform(0, 2)};
        b.update(z);
        tracked.push_back(z);
    }
    const auto params = NormalizationParams::from_bounds(b);
    for (int t = 0; t < 500; ++t) {
        const auto& a = tracked[rng.uniform_index(tracked.size())];
        const auto& c = tracked[rng.uniform_index(tracked.size())];
        const auto na = params.normalize(a);
        const auto nc = params.normalize(c);
        for (std::size_t k = 0; k < 2; ++k) {
            CHECK(((a[k] <= c[k]) == (na[k] <= nc[k])));
            CHECK(na[k] >= 0.0);
            CHECK(na[k] <= 1.0);
        }
    }
}

TEST_CASE("percentile_rank: worked examples") {
    PercentileTable table({{0.1, 0.2, 0.3}});
    CHECK(table.percentile_rank(0, 0.3) == doctest::Approx(1.0));
    CHECK(table.percentile_rank(0, 0.15) == doctest::Approx(1.0 / 3.0));
    CHECK(table.percentile_rank(0, 0.05) == 0.0); // below every reference

    PercentileTable single(std::vector<std::vector<double>>{{0.7}});
    CHECK(single.percentile_rank(0, 0.7) == 1.0);
    CHECK(single.percentile_rank(0, 2.0) == 1.0);
}

TEST_CASE("percentile_rank agrees with a brute-force count") {
    Rng rng(47);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.uniform_index(40);
        std::vector<double> refs(n);
        for (auto& r : refs) r = rng.uniform(-2, 2);
        PercentileTable table({refs});
        for (int q = 0; q < 50; ++q) {
            // Mix fresh queries with exact members to exercise ties.
            const double score = (q % 3 == 0) ? refs[rng.uniform_index(n)]
                                              : rng.uniform(-2.5, 2.5);
            CHECK(table.percentile_rank(0, score) ==
                  doctest::Approx(brute_percentile(refs, score)).epsilon(1e-15));
        }
    }
}

TEST_CASE("percentiles are invariant under a strictly increasing transform") {
    Rng rng(53);
    std::vector<double> refs(25);
    for (auto& r : refs) r = rng.uniform(-1, 1);
    PercentileTable plain({refs});

    auto transform = [](double x) { return std::exp(2.0 * x) + 3.0; };
    std::vector<double> warped(refs.size());
    std::transform(refs.begin(), refs.end(), warped.begin(), transform);
    PercentileTable warped_table({warped});

    for (int q = 0; q < 200; ++q) {
        const double score = rng.uniform(-1.2, 1.2);
        CHECK(plain.percentile_rank(0, score) ==
              doctest::Approx(warped_table.percentile_rank(0, transform(score))));
    }
}

TEST_CASE("select_max_index: argmax with tie-break to the lowest index") {
    CHECK(select_max_index({0.31, 0.44, 0.6767, 0.12}) == 2);
    CHECK(select_max_index({0.5, 0.5, 0.5}) == 0);
    CHECK(select_max_index({0.9}) == 0);
    CHECK_THROWS_AS(select_max_index({}), StateError);
    CHECK_THROWS_AS(select_max_index({0.1, std::numeric_limits<double>::infinity()}),
                    NumericError);
}

TEST_CASE("percentile table JSON snapshot round-trips") {
    PercentileTable table({{0.3, 0.1, 0.2}, {1.0, -1.0, 0.0}});
    const auto text = percentile_table_to_json(table);
    const auto back = percentile_table_from_json(text);
    CHECK(back.n_samples() == 3);
    CHECK(back.sorted_scores() == table.sorted_scores());

    CHECK_THROWS_AS(percentile_table_from_json("{\"n\": 3"), ParseError);
    CHECK_THROWS_AS(percentile_table_from_json("{\"n\": 2, \"scores\": [[1,2],[3]]}"),
                    ShapeError);
}
