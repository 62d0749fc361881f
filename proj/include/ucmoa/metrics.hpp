#ifndef UCMOA_METRICS_HPP
#define UCMOA_METRICS_HPP

#include <string>
#include <vector>

#include "ucmoa/rng.hpp"
#include "ucmoa/types.hpp"

namespace ucmoa {

/// Empirical return samples Z(pi) of one policy.
struct PolicySampleSet {
    std::string policy_id;
    std::vector<RewardVector> samples;

    std::size_t k() const { return samples.empty() ? 0 : samples[0].size(); }
    void validate() const;
};

/// The non-dominated subset under maximization, in stable input order.
/// A point is dominated when some other point is >= everywhere and >
/// somewhere; duplicates of a non-dominated point are all retained.
std::vector<RewardVector> pareto_front(const std::vector<RewardVector>& points);

/// Area dominated between a 2-D front and `ref` (rectangle sweep).
/// Dominated or duplicate front points are tolerated; every point must
/// weakly dominate ref. Empty front gives 0.
double hypervolume_2d(const std::vector<RewardVector>& front, const RewardVector& ref);

/// Uniform draw from the simplex {w >= 0, sum w = 1} (flat Dirichlet via
/// normalized exponentials).
std::vector<double> sample_simplex(std::size_t k, Rng& rng);

/// Conjunction of linear rows: {z | for all i, w_i . z >= c_i}.
struct Constraint {
    struct Row {
        std::vector<double> w; // on the simplex
        double c = 0.0;
    };
    std::vector<Row> rows;
};

/// m random constraints of n_rows rows each; every c is uniform on the
/// projected range [min_z w.z, max_z w.z] over the pooled samples.
std::vector<Constraint> gen_constraints(std::size_t m, std::size_t n_rows,
                                        const std::vector<RewardVector>& sample_pool,
                                        Rng& rng);

/// Fraction of the policy's samples satisfying every row of p.
double constraint_satisfaction_u(const Constraint& p, const PolicySampleSet& policy);

/// Mean over constraints of the best per-policy satisfaction probability.
double constraint_satisfaction(const std::vector<PolicySampleSet>& policies,
                               const std::vector<Constraint>& constraints);

/// Weights for the variance objective: u = w1 . mean + sign * w2 . stdev,
/// with (w1, w2) jointly on the simplex and stdev the per-dimension
/// population standard deviation.
struct VarianceWeights {
    std::vector<double> w1;
    std::vector<double> w2;
    int sign = +1;
};

std::vector<VarianceWeights> gen_variance_weights(std::size_t m, std::size_t k, int sign,
                                                  Rng& rng);

double variance_objective_u(const VarianceWeights& p, const PolicySampleSet& policy);

/// Mean over weight draws of the best per-policy score.
double variance_objective(const std::vector<PolicySampleSet>& policies,
                          const std::vector<VarianceWeights>& weight_draws);

} // namespace ucmoa

#endif
