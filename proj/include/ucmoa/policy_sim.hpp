#ifndef UCMOA_POLICY_SIM_HPP
#define UCMOA_POLICY_SIM_HPP

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "ucmoa/ensemble.hpp"
#include "ucmoa/labeler.hpp"
#include "ucmoa/preference.hpp"
#include "ucmoa/reward_stats.hpp"
#include "ucmoa/rng.hpp"
#include "ucmoa/types.hpp"

namespace ucmoa {

/// A discrete response category with a fixed multivariate reward
/// distribution; the desk-scale stand-in for an LLM response.
struct Style {
    int id = 0;
    RewardVector mean;
    RewardVector stdev; // > 0 componentwise
};

struct SynthEnv {
    int k = 0;
    std::vector<Style> styles;
    std::uint64_t seed = 0;

    std::size_t n_styles() const { return styles.size(); }

    /// S >= 2, matching dimensions, positive stdev, and at least two
    /// distinct style means (the environment must present trade-offs).
    void validate() const;

    /// Bundled 2-objective environment: twelve styles on a concave arc
    /// (every one Pareto-optimal) plus four dominated interior styles.
    static SynthEnv default_two_objective();
};

std::string env_to_json(const SynthEnv& env);
SynthEnv env_from_json(const std::string& text);

/// mean + stdev (.) standard-normal draw, per dimension.
RewardVector sample_response(const SynthEnv& env, int style_id, Rng& rng);

/// Token-conditioned categorical policy over styles. Row i < m_tokens is
/// the distribution conditioned on token i; row m_tokens is the
/// unconditioned base row.
struct ConditionedPolicy {
    std::size_t m_tokens = 0;
    std::size_t n_styles = 0;
    double temperature = 1.0;
    std::vector<std::vector<double>> logits; // (m_tokens + 1) x n_styles

    static ConditionedPolicy uniform(std::size_t m_tokens, std::size_t n_styles,
                                     double temperature = 1.0);

    void validate() const;

    /// softmax(logits[row] / temperature).
    std::vector<double> row_probs(std::size_t row) const;

    /// Categorical draw from the token's row; pass token == m_tokens for
    /// the unconditioned row.
    std::size_t sample_style(std::size_t token, Rng& rng) const;
};

std::string policy_to_json(const ConditionedPolicy& policy);
ConditionedPolicy policy_from_json(const std::string& text);

/// Labeled samples retained across online iterations, FIFO eviction.
class OnlineBuffer {
public:
    explicit OnlineBuffer(std::size_t capacity = 10000);

    void push(LabeledSample sample);
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::vector<LabeledSample> snapshot() const;

private:
    std::deque<LabeledSample> items_;
    std::size_t capacity_;
};

/// n raw samples drawn from uniformly random styles; the offline data
/// collection stand-in.
std::vector<RawSample> generate_offline_dataset(const SynthEnv& env, std::size_t n,
                                                Rng& rng);

struct OfflineResult {
    ConditionedPolicy policy;
    std::vector<double> epoch_losses; // loss before each epoch, plus final
};

/// Full-batch gradient descent on the cross-entropy of each sample's style
/// under its chosen token's row. Samples must carry a style. Zero epochs
/// returns the policy unchanged.
OfflineResult offline_train(const ConditionedPolicy& policy,
                            const std::vector<LabeledSample>& labeled, int epochs,
                            double lr);

struct OnlineConfig {
    int n_generate = 1000;
    double tau = 0.7;     // percentile threshold on the chosen index
    int epochs = 300;
    double lr = 0.5;
    std::string token = kDefaultToken;
};

struct IterationStats {
    std::size_t generated = 0;
    std::size_t accepted = 0;
    double accept_rate = 0.0;
    /// Mean chosen-index utility per token over the accepted batch; NaN for
    /// tokens with no accepted samples.
    std::vector<double> mean_utility_per_token;
};

/// One online iteration: generate with uniformly sampled tokens, relabel by
/// percentile over buffer-plus-batch, reject below tau, append survivors,
/// retrain on the buffer. Zero survivors leave the policy unchanged.
/// `bounds` is running state and is extended by the fresh batch.
IterationStats online_iteration(ConditionedPolicy& policy, const SynthEnv& env,
                                const UtilityEnsemble& ensemble, RunningBounds& bounds,
                                OnlineBuffer& buffer, const OnlineConfig& config,
                                Rng& rng);

/// Generates n responses conditioned on token_index, scores all M
/// utilities, min-max normalizes per utility over the evaluation set and
/// returns the M means.
std::vector<double> evaluate_consistency(const ConditionedPolicy& policy,
                                         const SynthEnv& env,
                                         const UtilityEnsemble& ensemble,
                                         const RunningBounds& bounds,
                                         std::size_t token_index, std::size_t n, Rng& rng);

/// For each preference: map to a target reward, pick the conditioning index,
/// generate n responses from that token's row, return the mean raw reward.
std::vector<RewardVector> sweep_pareto(const ConditionedPolicy& policy,
                                       const SynthEnv& env,
                                       const UtilityEnsemble& ensemble,
                                       const RunningBounds& bounds,
                                       const std::vector<PreferenceVector>& preferences,
                                       std::size_t n_per_preference, Rng& rng);

} // namespace ucmoa

#endif
