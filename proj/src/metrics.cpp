#include "ucmoa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ucmoa/errors.hpp"

namespace ucmoa {

void PolicySampleSet::validate() const {
    if (samples.empty()) throw DataError("policy sample set \"" + policy_id + "\" is empty");
    const std::size_t dim = samples[0].size();
    for (const auto& z : samples) {
        if (z.size() != dim) {
            throw ShapeError("policy sample set \"" + policy_id +
                             "\" has samples of unequal dimension");
        }
    }
}

std::vector<RewardVector> pareto_front(const std::vector<RewardVector>& points) {
    if (points.empty()) throw DataError("pareto_front: empty input");
    const std::size_t dim = points[0].size();
    for (const auto& p : points) {
        if (p.size() != dim) throw ShapeError("pareto_front: points of unequal dimension");
    }

    // Incremental archive: a candidate enters unless some archived point
    // dominates it, and evicts archived points it dominates.
    std::vector<std::size_t> archive;
    for (std::size_t c = 0; c < points.size(); ++c) {
        bool beaten = false;
        for (std::size_t a : archive) {
            if (dominates(points[a], points[c])) {
                beaten = true;
                break;
            }
        }
        if (beaten) continue;
        std::erase_if(archive, [&](std::size_t a) { return dominates(points[c], points[a]); });
        archive.push_back(c);
    }

    std::sort(archive.begin(), archive.end());
    std::vector<RewardVector> front;
    front.reserve(archive.size());
    for (std::size_t a : archive) front.push_back(points[a]);
    return front;
}

double hypervolume_2d(const std::vector<RewardVector>& front, const RewardVector& ref) {
    if (ref.size() != 2) throw ShapeError("hypervolume_2d: reference point must be 2-D");
    if (front.empty()) return 0.0;

    std::vector<RewardVector> pts;
    pts.reserve(front.size());
    for (const auto& p : front) {
        if (p.size() != 2) throw ShapeError("hypervolume_2d: front point must be 2-D");
        if (!(p[0] >= ref[0] && p[1] >= ref[1])) {
            throw DataError("hypervolume_2d: front point does not dominate the reference");
        }
        pts.push_back(p);
    }

    // Sweep right-to-left; each point contributes the rectangle above the
    // best y seen so far.
    std::sort(pts.begin(), pts.end(), [](const RewardVector& a, const RewardVector& b) {
        if (a[0] != b[0]) return a[0] > b[0];
        return a[1] > b[1];
    });
    double hv = 0.0;
    double best_y = ref[1];
    for (const auto& p : pts) {
        if (p[1] > best_y) {
            hv += (p[0] - ref[0]) * (p[1] - best_y);
            best_y = p[1];
        }
    }
    return hv;
}

std::vector<double> sample_simplex(std::size_t k, Rng& rng) {
    std::vector<double> w(k);
    double total = 0.0;
    do {
        total = 0.0;
        for (auto& wi : w) {
            double u = rng.uniform01();
            while (u <= 0.0) u = rng.uniform01();
            wi = -std::log(u);
            total += wi;
        }
    } while (!(total > 0.0));
    for (auto& wi : w) wi /= total;
    return w;
}

std::vector<Constraint> gen_constraints(std::size_t m, std::size_t n_rows,
                                        const std::vector<RewardVector>& sample_pool,
                                        Rng& rng) {
    if (sample_pool.empty()) throw DataError("gen_constraints: empty sample pool");
    const std::size_t k = sample_pool[0].size();

    std::vector<Constraint> out(m);
    for (auto& constraint : out) {
        constraint.rows.resize(n_rows);
        for (auto& row : constraint.rows) {
            row.w = sample_simplex(k, rng);
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            for (const auto& z : sample_pool) {
                const double proj = std::inner_product(row.w.begin(), row.w.end(),
                                                       z.begin(), 0.0);
                lo = std::min(lo, proj);
                hi = std::max(hi, proj);
            }
            row.c = rng.uniform(lo, hi);
        }
    }
    return out;
}

double constraint_satisfaction_u(const Constraint& p, const PolicySampleSet& policy) {
    policy.validate();
    std::size_t satisfied = 0;
    for (const auto& z : policy.samples) {
        bool ok = true;
        for (const auto& row : p.rows) {
            const double proj = std::inner_product(row.w.begin(), row.w.end(), z.begin(), 0.0);
            if (proj < row.c) {
                ok = false;
                break;
            }
        }
        if (ok) ++satisfied;
    }
    return static_cast<double>(satisfied) / static_cast<double>(policy.samples.size());
}

double constraint_satisfaction(const std::vector<PolicySampleSet>& policies,
                               const std::vector<Constraint>& constraints) {
    if (policies.empty()) throw DataError("constraint_satisfaction: no policies");
    if (constraints.empty()) throw DataError("constraint_satisfaction: no constraints");

    double total = 0.0;
    for (const auto& p : constraints) {
        double best = 0.0;
        for (const auto& policy : policies) {
            best = std::max(best, constraint_satisfaction_u(p, policy));
        }
        total += best;
    }
    return total / static_cast<double>(constraints.size());
}

std::vector<VarianceWeights> gen_variance_weights(std::size_t m, std::size_t k, int sign,
                                                  Rng& rng) {
    if (sign != 1 && sign != -1) throw ConfigError("variance weights: sign must be +1 or -1");
    std::vector<VarianceWeights> out(m);
    for (auto& vw : out) {
        const auto joint = sample_simplex(2 * k, rng);
        vw.w1.assign(joint.begin(), joint.begin() + static_cast<std::ptrdiff_t>(k));
        vw.w2.assign(joint.begin() + static_cast<std::ptrdiff_t>(k), joint.end());
        vw.sign = sign;
    }
    return out;
}

double variance_objective_u(const VarianceWeights& p, const PolicySampleSet& policy) {
    policy.validate();
    const std::size_t k = policy.k();
    if (p.w1.size() != k || p.w2.size() != k) {
        throw ShapeError("variance_objective: weight dimension mismatch");
    }

    const bool needs_spread =
        std::any_of(p.w2.begin(), p.w2.end(), [](double w) { return w != 0.0; });
    if (needs_spread && policy.samples.size() < 2) {
        throw DataError("variance_objective: policy \"" + policy.policy_id +
                        "\" has fewer than 2 samples but the stdev term is weighted");
    }

    const double n = static_cast<double>(policy.samples.size());
    RewardVector mean(k, 0.0);
    for (const auto& z : policy.samples) {
        for (std::size_t i = 0; i < k; ++i) mean[i] += z[i];
    }
    for (auto& mi : mean) mi /= n;

    RewardVector var(k, 0.0);
    for (const auto& z : policy.samples) {
        for (std::size_t i = 0; i < k; ++i) {
            const double d = z[i] - mean[i];
            var[i] += d * d;
        }
    }

    double u = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        u += p.w1[i] * mean[i];
        u += static_cast<double>(p.sign) * p.w2[i] * std::sqrt(var[i] / n);
    }
    return u;
}

double variance_objective(const std::vector<PolicySampleSet>& policies,
                          const std::vector<VarianceWeights>& weight_draws) {
    if (policies.empty()) throw DataError("variance_objective: no policies");
    if (weight_draws.empty()) throw DataError("variance_objective: no weight draws");

    double total = 0.0;
    for (const auto& p : weight_draws) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& policy : policies) {
            best = std::max(best, variance_objective_u(p, policy));
        }
        total += best;
    }
    return total / static_cast<double>(weight_draws.size());
}

} // namespace ucmoa
