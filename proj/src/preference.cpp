#include "ucmoa/preference.hpp"

#include <algorithm>
#include <cmath>

#include "ucmoa/errors.hpp"

namespace ucmoa {

void PreferenceVector::validate() const {
    if (w.empty()) throw ConfigError("preference vector: empty");
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i]) || w[i] < 0.0 || w[i] > 1.0) {
            throw ConfigError("preference vector: component " + std::to_string(i) +
                              " = " + std::to_string(w[i]) + " outside [0,1]");
        }
    }
}

RewardBounds RewardBounds::from_running(const RunningBounds& bounds) {
    if (bounds.empty()) throw DataError("reward bounds: no returns tracked");
    return RewardBounds{bounds.z_min, bounds.z_max};
}

RewardVector preference_to_reward(const PreferenceVector& w, const RewardBounds& bounds) {
    w.validate();
    if (w.w.size() != bounds.r_min.size() || bounds.r_min.size() != bounds.r_max.size()) {
        throw ShapeError("preference_to_reward: preference has " +
                         std::to_string(w.w.size()) + " components, bounds track " +
                         std::to_string(bounds.r_min.size()));
    }
    RewardVector z(w.w.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = w.w[i] * (bounds.r_max[i] - bounds.r_min[i]) + bounds.r_min[i];
    }
    return z;
}

std::size_t select_inference_index(const RewardVector& z_target,
                                   const UtilityEnsemble& ensemble,
                                   const NormalizationParams& params, bool* clamped) {
    if (ensemble.size() == 0) throw ConfigError("select_inference_index: empty ensemble");

    RewardVector z = params.normalize(z_target);
    bool any_clamped = false;
    for (auto& zk : z) {
        const double c = std::clamp(zk, 0.0, 1.0);
        any_clamped = any_clamped || (c != zk);
        zk = c;
    }
    if (clamped) *clamped = any_clamped;

    const auto utilities = ensemble.evaluate(z);
    return static_cast<std::size_t>(
        std::max_element(utilities.begin(), utilities.end()) - utilities.begin());
}

InferenceResult run_inference(const std::string& x, const PreferenceVector& w,
                              const RewardBounds& bounds, const UtilityEnsemble& ensemble,
                              const NormalizationParams& params, const std::string& token) {
    InferenceResult res;
    res.z_target = preference_to_reward(w, bounds);

    RewardVector z = params.normalize(res.z_target);
    for (auto& zk : z) {
        const double c = std::clamp(zk, 0.0, 1.0);
        res.clamped = res.clamped || (c != zk);
        zk = c;
    }
    res.utilities = ensemble.evaluate(z);
    res.index = static_cast<std::size_t>(
        std::max_element(res.utilities.begin(), res.utilities.end()) - res.utilities.begin());
    res.letter = index_to_letter(res.index);
    res.prompt = augment_prompt(x, res.index, token);
    return res;
}

std::string build_inference_prompt(const std::string& x, const PreferenceVector& w,
                                   const RewardBounds& bounds,
                                   const UtilityEnsemble& ensemble,
                                   const NormalizationParams& params,
                                   const std::string& token) {
    return run_inference(x, w, bounds, ensemble, params, token).prompt;
}

} // namespace ucmoa
