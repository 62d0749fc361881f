#ifndef UCMOA_TYPES_HPP
#define UCMOA_TYPES_HPP

#include <vector>

namespace ucmoa {

/// K-dimensional multi-objective return for one response.
using RewardVector = std::vector<double>;

/// a >= b in every coordinate.
inline bool weakly_dominates(const RewardVector& a, const RewardVector& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < b[k]) return false;
    }
    return true;
}

/// a >= b everywhere and a > b somewhere (Pareto dominance, maximization).
inline bool dominates(const RewardVector& a, const RewardVector& b) {
    if (a.size() != b.size()) return false;
    bool strict = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < b[k]) return false;
        if (a[k] > b[k]) strict = true;
    }
    return strict;
}

} // namespace ucmoa

#endif
