#ifndef UCMOA_REWARD_STATS_HPP
#define UCMOA_REWARD_STATS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "ucmoa/types.hpp"

namespace ucmoa {

/// Per-dimension extrema over all returns seen so far. z_min never
/// increases, z_max never decreases.
struct RunningBounds {
    RewardVector z_min;
    RewardVector z_max;

    bool empty() const { return z_min.empty(); }
    std::size_t k() const { return z_min.size(); }

    /// Componentwise min/max merge; the first observation initializes both
    /// extrema to z. Throws DataError on a non-finite component.
    void update(const RewardVector& z);
};

RunningBounds update_bounds(RunningBounds bounds, const RewardVector& z);

/// Affine map into [0,1]^K with a shared scale 1/d, d = max_k range_k.
/// Preserves componentwise order and the relative scale of the dimensions.
struct NormalizationParams {
    RewardVector z_mid;
    double d = 0.0;

    /// Throws DataError if the bounds are empty or degenerate (d = 0).
    static NormalizationParams from_bounds(const RunningBounds& bounds);

    RewardVector normalize(const RewardVector& z) const;
};

/// Sorted reference scores per utility; percentile = (count of reference
/// scores <= query) / N.
class PercentileTable {
public:
    PercentileTable() = default;

    /// scores_per_utility[i] holds the N reference scores of utility i
    /// (unsorted); all M sequences must share the same length N >= 1.
    explicit PercentileTable(std::vector<std::vector<double>> scores_per_utility);

    std::size_t n_samples() const { return n_; }
    std::size_t n_utilities() const { return sorted_.size(); }
    const std::vector<std::vector<double>>& sorted_scores() const { return sorted_; }

    /// Rank of `score` among utility i's references, divided by N.
    double percentile_rank(std::size_t i, double score) const;

private:
    std::size_t n_ = 0;
    std::vector<std::vector<double>> sorted_;
};

/// Argmax with ties broken toward the lowest index. Throws StateError on
/// empty input, NumericError on non-finite entries.
std::size_t select_max_index(const std::vector<double>& percentiles);

std::string percentile_table_to_json(const PercentileTable& table);
PercentileTable percentile_table_from_json(const std::string& text);

} // namespace ucmoa

#endif
