#ifndef UCMOA_PIPELINE_HPP
#define UCMOA_PIPELINE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ucmoa/ensemble.hpp"
#include "ucmoa/labeler.hpp"
#include "ucmoa/policy_sim.hpp"
#include "ucmoa/preference.hpp"
#include "ucmoa/reward_stats.hpp"
#include "ucmoa/types.hpp"

namespace ucmoa {

/// Knobs for the offline + online conditioned-training run.
struct SimulatorConfig {
    std::size_t n_offline = 3000;
    int n_generate = 1000;
    double tau = 0.7;
    int online_iters = 2;
    int offline_epochs = 500;
    int online_epochs = 300;
    double policy_lr = 0.5;
    std::size_t buffer_capacity = 10000;
    std::size_t eval_samples = 500;
    double temperature = 1.0;

    void validate() const;
};

/// Everything the offline stage and the online iterations produced.
/// arms[0] is the offline-only policy, arms[i] the policy after online
/// iteration i, so the Experiment III style ablation falls out directly.
struct TrainedPipeline {
    SynthEnv env;
    RunningBounds bounds; // offline data extended by every online batch
    std::vector<LabeledSample> offline_labeled;
    PercentileTable offline_table;
    std::vector<ConditionedPolicy> arms;
    std::vector<IterationStats> stats; // row 0 summarizes the offline stage
    std::vector<double> offline_losses;
    OnlineBuffer buffer{10000};
};

/// Offline data generation -> labeling -> cross-entropy stage -> online
/// iterations. Deterministic given (env, ensemble, config, seed, token).
TrainedPipeline run_training_pipeline(const SynthEnv& env, const UtilityEnsemble& ensemble,
                                      const SimulatorConfig& config,
                                      std::uint64_t seed,
                                      const std::string& token = kDefaultToken);

/// n preferences: the (t, 1-t) grid for K = 2, seeded uniform box samples
/// otherwise.
std::vector<PreferenceVector> make_preference_grid(int k, std::size_t n,
                                                   std::uint64_t seed = 0);

/// 2-D hypervolumes of several point sets against one shared reference
/// (componentwise minimum over all sets, pushed out by a 5% margin), so the
/// values are comparable across arms.
std::vector<double> shared_ref_hypervolumes(
    const std::vector<std::vector<RewardVector>>& arms_points);

/// Per-utility favorite style: argmax over styles of the strict utility at
/// the style's normalized mean reward.
std::vector<std::size_t> favorite_styles(const SynthEnv& env, const UtilityEnsemble& ensemble,
                                         const RunningBounds& bounds);

/// Tokens whose favorite style no other token shares; the identifiable
/// conditioning targets for the consistency check.
std::vector<std::size_t> uniquely_targeted_tokens(const std::vector<std::size_t>& favorites);

} // namespace ucmoa

#endif
