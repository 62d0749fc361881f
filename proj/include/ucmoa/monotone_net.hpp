#ifndef UCMOA_MONOTONE_NET_HPP
#define UCMOA_MONOTONE_NET_HPP

#include <array>
#include <vector>

#include "ucmoa/rng.hpp"
#include "ucmoa/types.hpp"

namespace ucmoa {

/// Non-decreasing hidden activation: x -> (max(x,-0.5), min(x,0.5),
/// clip(x,-0.5,0.5)). Each component is non-decreasing and 1-Lipschitz,
/// so a hidden width of h expands to an activation vector of 3h.
std::array<double, 3> nondecreasing_activation(double x);

/// Fully connected layer. Non-negativity of `weights` is what makes the
/// network non-decreasing; biases are unconstrained.
struct MonotoneLayer {
    std::vector<std::vector<double>> weights; // out x in
    std::vector<double> bias;                 // out

    std::size_t out_dim() const { return weights.size(); }
    std::size_t in_dim() const { return weights.empty() ? 0 : weights[0].size(); }
};

/// Feedforward net with the tripling activation between layers and a scalar
/// affine head (no activation after the last layer).
struct MonotoneNet {
    int input_dim = 0;
    std::vector<MonotoneLayer> layers;

    /// Throws ShapeError unless dimensions chain: first layer input = K,
    /// hidden layer l input = 3 * (layer l-1 output), last output = 1.
    void validate() const;
};

/// Scalar utility value; non-decreasing in every coordinate once the
/// weights are non-negative. Throws ShapeError on dimension mismatch.
double forward(const MonotoneNet& net, const RewardVector& z);

/// Gradient record, same shape as the parameters.
using ParamGradients = std::vector<MonotoneLayer>;

ParamGradients zero_gradients(const MonotoneNet& net);

/// Adds the analytic gradients of (upstream * forward(net, z)) with respect
/// to every weight and bias into `acc`. Right-hand subgradients at the
/// activation kinks x in {-0.5, 0.5}.
void accumulate_param_gradients(const MonotoneNet& net, const RewardVector& z,
                                double upstream, ParamGradients& acc);

ParamGradients param_gradients(const MonotoneNet& net, const RewardVector& z,
                               double upstream);

/// Clips every weight entry to max(w, 0); biases untouched. Idempotent.
void project_nonnegative_inplace(MonotoneNet& net);
MonotoneNet project_nonnegative(MonotoneNet net);

/// Random net with the given hidden widths (pre-activation sizes). Weights
/// uniform on [0, 1/fan_in], biases zero, so the initial net is already
/// feasible for the non-negativity constraint. `input_scales`, when given
/// (length K, non-negative), rescales the first layer's columns so members
/// of an ensemble can start with distinct sensitivity directions.
MonotoneNet make_random_net(int k, const std::vector<int>& hidden_widths, Rng& rng,
                            const std::vector<double>& input_scales = {});

/// Strictly increasing utility: base net plus the (epsilon/K) * sum(z)
/// linear correction.
struct StrictUtility {
    MonotoneNet base;
    double epsilon = 0.01;
};

double strict_forward(const StrictUtility& u, const RewardVector& z);

} // namespace ucmoa

#endif
