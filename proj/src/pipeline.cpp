#include "ucmoa/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ucmoa/errors.hpp"
#include "ucmoa/metrics.hpp"

namespace ucmoa {

void SimulatorConfig::validate() const {
    if (n_offline < 1) throw ConfigError("simulator config: n_offline must be >= 1");
    if (n_generate < 1) throw ConfigError("simulator config: n_generate must be >= 1");
    if (!(tau >= 0.0)) throw ConfigError("simulator config: tau must be >= 0");
    if (online_iters < 0) throw ConfigError("simulator config: online_iters must be >= 0");
    if (offline_epochs < 0 || online_epochs < 0) {
        throw ConfigError("simulator config: epochs must be >= 0");
    }
    if (!(policy_lr > 0.0)) throw ConfigError("simulator config: policy_lr must be > 0");
    if (buffer_capacity < 1) throw ConfigError("simulator config: buffer capacity must be >= 1");
    if (eval_samples < 1) throw ConfigError("simulator config: eval_samples must be >= 1");
    if (!(temperature > 0.0)) throw ConfigError("simulator config: temperature must be > 0");
}

TrainedPipeline run_training_pipeline(const SynthEnv& env, const UtilityEnsemble& ensemble,
                                      const SimulatorConfig& config, std::uint64_t seed,
                                      const std::string& token) {
    config.validate();
    env.validate();
    if (env.k != ensemble.k) {
        throw ShapeError("pipeline: env has k = " + std::to_string(env.k) +
                         ", ensemble has k = " + std::to_string(ensemble.k));
    }

    TrainedPipeline out;
    out.env = env;
    out.buffer = OnlineBuffer(config.buffer_capacity);

    Rng rng(seed);

    // Offline stage: collect, bound, label, fit.
    const auto raw = generate_offline_dataset(env, config.n_offline, rng);
    for (const auto& s : raw) out.bounds.update(s.rewards);

    auto labeled = label_dataset(raw, ensemble, out.bounds, token);
    out.offline_labeled = std::move(labeled.samples);
    out.offline_table = std::move(labeled.table);

    auto policy = ConditionedPolicy::uniform(ensemble.size(), env.n_styles(),
                                             config.temperature);
    auto offline = offline_train(policy, out.offline_labeled, config.offline_epochs,
                                 config.policy_lr);
    out.offline_losses = std::move(offline.epoch_losses);
    out.arms.push_back(offline.policy);

    // Pseudo-stats row for the offline stage: everything admitted.
    {
        IterationStats row;
        row.generated = out.offline_labeled.size();
        row.accepted = out.offline_labeled.size();
        row.accept_rate = 1.0;
        row.mean_utility_per_token.assign(ensemble.size(),
                                          std::numeric_limits<double>::quiet_NaN());
        std::vector<double> sums(ensemble.size(), 0.0);
        std::vector<std::size_t> counts(ensemble.size(), 0);
        for (const auto& s : out.offline_labeled) {
            sums[s.chosen_index] += s.utilities[s.chosen_index];
            counts[s.chosen_index] += 1;
        }
        for (std::size_t i = 0; i < sums.size(); ++i) {
            if (counts[i] > 0) {
                row.mean_utility_per_token[i] = sums[i] / static_cast<double>(counts[i]);
            }
        }
        out.stats.push_back(std::move(row));
    }

    OnlineConfig online;
    online.n_generate = config.n_generate;
    online.tau = config.tau;
    online.epochs = config.online_epochs;
    online.lr = config.policy_lr;
    online.token = token;

    ConditionedPolicy current = out.arms[0];
    for (int it = 1; it <= config.online_iters; ++it) {
        out.stats.push_back(online_iteration(current, env, ensemble, out.bounds,
                                             out.buffer, online, rng));
        out.arms.push_back(current);
    }
    return out;
}

std::vector<PreferenceVector> make_preference_grid(int k, std::size_t n, std::uint64_t seed) {
    if (k < 1) throw ConfigError("preference grid: k must be >= 1");
    if (n < 1) throw ConfigError("preference grid: n must be >= 1");

    std::vector<PreferenceVector> out;
    out.reserve(n);
    if (k == 2) {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = n == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(n - 1);
            out.push_back(PreferenceVector{{t, 1.0 - t}});
        }
    } else {
        Rng rng(seed);
        for (std::size_t i = 0; i < n; ++i) {
            PreferenceVector w;
            w.w.resize(static_cast<std::size_t>(k));
            for (auto& v : w.w) v = rng.uniform01();
            out.push_back(std::move(w));
        }
    }
    return out;
}

std::vector<double> shared_ref_hypervolumes(
    const std::vector<std::vector<RewardVector>>& arms_points) {
    if (arms_points.empty()) throw DataError("hypervolumes: no arms");

    RewardVector lo(2, std::numeric_limits<double>::infinity());
    RewardVector hi(2, -std::numeric_limits<double>::infinity());
    for (const auto& arm : arms_points) {
        for (const auto& p : arm) {
            if (p.size() != 2) throw ShapeError("hypervolumes: points must be 2-D");
            for (std::size_t i = 0; i < 2; ++i) {
                lo[i] = std::min(lo[i], p[i]);
                hi[i] = std::max(hi[i], p[i]);
            }
        }
    }
    RewardVector ref(2);
    for (std::size_t i = 0; i < 2; ++i) {
        const double range = hi[i] - lo[i];
        ref[i] = lo[i] - (range > 0.0 ? 0.05 * range : 1.0);
    }

    std::vector<double> hv;
    hv.reserve(arms_points.size());
    for (const auto& arm : arms_points) hv.push_back(hypervolume_2d(arm, ref));
    return hv;
}

std::vector<std::size_t> favorite_styles(const SynthEnv& env, const UtilityEnsemble& ensemble,
                                         const RunningBounds& bounds) {
    const auto params = NormalizationParams::from_bounds(bounds);
    std::vector<std::size_t> favorites(ensemble.size(), 0);
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < env.styles.size(); ++s) {
            RewardVector z = params.normalize(env.styles[s].mean);
            for (auto& zk : z) zk = std::clamp(zk, 0.0, 1.0);
            const double u = strict_forward(ensemble.utilities[i], z);
            if (u > best) {
                best = u;
                favorites[i] = s;
            }
        }
    }
    return favorites;
}

std::vector<std::size_t> uniquely_targeted_tokens(const std::vector<std::size_t>& favorites) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < favorites.size(); ++i) {
        bool unique = true;
        for (std::size_t j = 0; j < favorites.size(); ++j) {
            if (j != i && favorites[j] == favorites[i]) {
                unique = false;
                break;
            }
        }
        if (unique) out.push_back(i);
    }
    return out;
}

} // namespace ucmoa
