#ifndef UCMOA_PREFERENCE_HPP
#define UCMOA_PREFERENCE_HPP

#include <string>
#include <vector>

#include "ucmoa/ensemble.hpp"
#include "ucmoa/labeler.hpp"
#include "ucmoa/reward_stats.hpp"
#include "ucmoa/types.hpp"

namespace ucmoa {

/// User weights, one per reward dimension, each in [0,1]. No sum-to-one
/// constraint; dimensions are mapped independently.
struct PreferenceVector {
    std::vector<double> w;

    /// Throws ConfigError when any component leaves [0,1] or is non-finite.
    void validate() const;
};

/// Per-dimension reward extrema observed in the training data (raw units).
struct RewardBounds {
    RewardVector r_min;
    RewardVector r_max;

    static RewardBounds from_running(const RunningBounds& bounds);
};

/// f_i(w_i) = w_i * (r_max_i - r_min_i) + r_min_i.
RewardVector preference_to_reward(const PreferenceVector& w, const RewardBounds& bounds);

/// argmax_i of the strict utilities at the normalized target, ties to the
/// lowest index. Components falling outside [0,1] after normalization are
/// clamped; `clamped`, when given, reports whether that happened.
std::size_t select_inference_index(const RewardVector& z_target,
                                   const UtilityEnsemble& ensemble,
                                   const NormalizationParams& params,
                                   bool* clamped = nullptr);

struct InferenceResult {
    std::size_t index = 0;
    char letter = 'a';
    std::string prompt;
    RewardVector z_target;      // raw scale
    std::vector<double> utilities;
    bool clamped = false;
};

/// preference_to_reward -> select_inference_index -> augment_prompt.
InferenceResult run_inference(const std::string& x, const PreferenceVector& w,
                              const RewardBounds& bounds, const UtilityEnsemble& ensemble,
                              const NormalizationParams& params,
                              const std::string& token = kDefaultToken);

std::string build_inference_prompt(const std::string& x, const PreferenceVector& w,
                                   const RewardBounds& bounds,
                                   const UtilityEnsemble& ensemble,
                                   const NormalizationParams& params,
                                   const std::string& token = kDefaultToken);

} // namespace ucmoa

#endif
