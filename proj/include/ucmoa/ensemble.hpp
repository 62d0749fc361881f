#ifndef UCMOA_ENSEMBLE_HPP
#define UCMOA_ENSEMBLE_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ucmoa/monotone_net.hpp"
#include "ucmoa/rng.hpp"
#include "ucmoa/types.hpp"

namespace ucmoa {

struct EnsembleConfig {
    int k = 2;
    int m_utilities = 10;        // M >= 2
    double mu = 0.5;             // value-vs-gradient balance in [0,1]
    double epsilon = 0.01;       // strictness correction
    int steps = 2000;            // round-robin sweeps
    int batch = 64;              // Monte-Carlo samples per value-loss estimate
    int pair_batch = 32;         // sample pairs per gradient-loss estimate
    double learning_rate = 1e-2;
    double max_grad_norm = 1.0;  // per-member-step cap; uncapped ascent on the
                                 // unbounded squared discrepancy blows up
    std::uint64_t seed = 0;
    int hidden_width = 16;       // pre-activation width of the two hidden layers
    bool maximize_diversity = true;

    void validate() const;
};

/// M strictly increasing utilities over the same normalized domain [0,1]^K.
struct UtilityEnsemble {
    std::vector<StrictUtility> utilities;
    int k = 0;
    EnsembleConfig config;

    std::size_t size() const { return utilities.size(); }

    /// All M strict utility values at z.
    std::vector<double> evaluate(const RewardVector& z) const;
    /// All M base (pre-epsilon) values at z.
    std::vector<double> evaluate_base(const RewardVector& z) const;
};

/// n i.i.d. uniform draws from [0,1]^k. Throws ConfigError when n = 0.
std::vector<RewardVector> sample_unit_cube(std::size_t n, int k, Rng& rng);

/// A pair (z, z') with z != z', used by the gradient discrepancy loss.
struct SamplePair {
    RewardVector a;
    RewardVector b;
};

/// pair_batch independent pairs, resampled on the (probability-zero)
/// collision z = z'.
std::vector<SamplePair> sample_pairs(std::size_t n, int k, Rng& rng);

/// Eq.-1 style value discrepancy: min over j != i of the batch mean of
/// (g_i(z) - g_j(z))^2, on the base networks.
double value_discrepancy(std::size_t i, const std::vector<MonotoneNet>& nets,
                         const std::vector<RewardVector>& batch);

/// Eq.-2 style gradient discrepancy over difference quotients.
double grad_discrepancy(std::size_t i, const std::vector<MonotoneNet>& nets,
                        const std::vector<SamplePair>& pairs);

/// mu * value + (1 - mu) * gradient discrepancy.
double diversity_objective(std::size_t i, const std::vector<MonotoneNet>& nets,
                           const std::vector<RewardVector>& batch,
                           const std::vector<SamplePair>& pairs, double mu);

struct TrainLogRow {
    int step = 0;
    int member = 0;
    double l_val = 0.0;
    double l_grad = 0.0;
    double objective = 0.0;
};

using TrainLogSink = std::function<void(const TrainLogRow&)>;

/// Trains M monotone nets by projected gradient steps on the diversity
/// objective (ascent by default; see EnsembleConfig::maximize_diversity)
/// and wraps them as strict utilities. Deterministic given config.seed.
/// Throws NumericError naming the step if a loss turns non-finite.
UtilityEnsemble train_ensemble(const EnsembleConfig& config,
                               const TrainLogSink& log = nullptr);

/// M unit-norm linear utilities, directions sampled uniformly over the
/// non-negative part of the unit sphere; the linear-variant baseline.
UtilityEnsemble make_linear_ensemble(int m, int k, double epsilon, std::uint64_t seed);

void save_ensemble(const UtilityEnsemble& ensemble, std::ostream& sink);
std::string ensemble_to_json(const UtilityEnsemble& ensemble);

/// expected_k < 0 skips the dimension check. Throws ParseError / ShapeError.
UtilityEnsemble load_ensemble(std::istream& source, int expected_k = -1);
UtilityEnsemble ensemble_from_json(const std::string& text, int expected_k = -1);

} // namespace ucmoa

#endif
