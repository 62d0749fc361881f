#include "ucmoa/monotone_net.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ucmoa/errors.hpp"

namespace ucmoa {

std::array<double, 3> nondecreasing_activation(double x) {
    return {std::max(x, -0.5), std::min(x, 0.5), std::clamp(x, -0.5, 0.5)};
}

namespace {

// Right-hand derivatives of the three activation branches.
inline double d_max(double x) { return x >= -0.5 ? 1.0 : 0.0; }
inline double d_min(double x) { return x < 0.5 ? 1.0 : 0.0; }
inline double d_clip(double x) { return (x >= -0.5 && x < 0.5) ? 1.0 : 0.0; }

struct ForwardTrace {
    // inputs[l] is the activation vector fed into layer l.
    std::vector<std::vector<double>> inputs;
    // pre[l] is layer l's pre-activation output.
    std::vector<std::vector<double>> pre;
    double output = 0.0;
};

void affine(const MonotoneLayer& layer, const std::vector<double>& in,
            std::vector<double>& out) {
    out.assign(layer.out_dim(), 0.0);
    for (std::size_t r = 0; r < layer.out_dim(); ++r) {
        double acc = layer.bias[r];
        const auto& row = layer.weights[r];
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * in[c];
        out[r] = acc;
    }
}

ForwardTrace forward_trace(const MonotoneNet& net, const RewardVector& z) {
    if (static_cast<int>(z.size()) != net.input_dim) {
        throw ShapeError("forward: input has " + std::to_string(z.size()) +
                         " components, net expects " + std::to_string(net.input_dim));
    }
    net.validate();

    ForwardTrace t;
    t.inputs.resize(net.layers.size());
    t.pre.resize(net.layers.size());

    std::vector<double> act(z.begin(), z.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        t.inputs[l] = act;
        affine(net.layers[l], act, t.pre[l]);
        if (l + 1 < net.layers.size()) {
            const auto& p = t.pre[l];
            act.resize(3 * p.size());
            for (std::size_t m = 0; m < p.size(); ++m) {
                const auto a = nondecreasing_activation(p[m]);
                act[m] = a[0];
                act[p.size() + m] = a[1];
                act[2 * p.size() + m] = a[2];
            }
        }
    }
    t.output = t.pre.back()[0];
    return t;
}

} // namespace

void MonotoneNet::validate() const {
    if (layers.empty()) throw ShapeError("net has no layers");
    if (input_dim < 1) throw ShapeError("net input_dim must be >= 1");

    std::size_t expect_in = static_cast<std::size_t>(input_dim);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        if (layer.out_dim() == 0) {
            throw ShapeError("layer " + std::to_string(l) + " is empty");
        }
        if (layer.bias.size() != layer.out_dim()) {
            throw ShapeError("layer " + std::to_string(l) + " bias size " +
                             std::to_string(layer.bias.size()) + " != out dim " +
                             std::to_string(layer.out_dim()));
        }
        for (const auto& row : layer.weights) {
            if (row.size() != expect_in) {
                throw ShapeError("layer " + std::to_string(l) + " expects input " +
                                 std::to_string(expect_in) + ", row has " +
                                 std::to_string(row.size()));
            }
        }
        expect_in = 3 * layer.out_dim();
    }
    if (layers.back().out_dim() != 1) {
        throw ShapeError("last layer must output a scalar");
    }
}

double forward(const MonotoneNet& net, const RewardVector& z) {
    return forward_trace(net, z).output;
}

ParamGradients zero_gradients(const MonotoneNet& net) {
    ParamGradients g;
    g.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
        MonotoneLayer zl;
        zl.weights.assign(layer.out_dim(), std::vector<double>(layer.in_dim(), 0.0));
        zl.bias.assign(layer.out_dim(), 0.0);
        g.push_back(std::move(zl));
    }
    return g;
}

void accumulate_param_gradients(const MonotoneNet& net, const RewardVector& z,
                                double upstream, ParamGradients& acc) {
    const ForwardTrace t = forward_trace(net, z);

    // delta[r] = d(upstream * output) / d pre_l[r], walking backwards.
    std::vector<double> delta{upstream};
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const auto& layer = net.layers[li];
        auto& g = acc[li];
        const auto& in = t.inputs[li];
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            g.bias[r] += delta[r];
            auto& grow = g.weights[r];
            for (std::size_t c = 0; c < in.size(); ++c) grow[c] += delta[r] * in[c];
        }
        if (li == 0) break;

        // d pre_l / d input_l = W, then through the tripling activation of
        // the previous layer's pre-activations.
        std::vector<double> d_in(in.size(), 0.0);
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            const auto& row = layer.weights[r];
            for (std::size_t c = 0; c < row.size(); ++c) d_in[c] += delta[r] * row[c];
        }
        const auto& prev_pre = t.pre[li - 1];
        const std::size_t h = prev_pre.size();
        std::vector<double> next_delta(h, 0.0);
        for (std::size_t m = 0; m < h; ++m) {
            next_delta[m] = d_in[m] * d_max(prev_pre[m]) +
                            d_in[h + m] * d_min(prev_pre[m]) +
                            d_in[2 * h + m] * d_clip(prev_pre[m]);
        }
        delta = std::move(next_delta);
    }
}

ParamGradients param_gradients(const MonotoneNet& net, const RewardVector& z,
                               double upstream) {
    ParamGradients g = zero_gradients(net);
    accumulate_param_gradients(net, z, upstream, g);
    return g;
}

void project_nonnegative_inplace(MonotoneNet& net) {
    for (auto& layer : net.layers) {
        for (auto& row : layer.weights) {
            for (auto& w : row) w = std::max(w, 0.0);
        }
    }
}

MonotoneNet project_nonnegative(MonotoneNet net) {
    project_nonnegative_inplace(net);
    return net;
}

MonotoneNet make_random_net(int k, const std::vector<int>& hidden_widths, Rng& rng,
                            const std::vector<double>& input_scales) {
    if (k < 1) throw ShapeError("make_random_net: k must be >= 1");
    if (!input_scales.empty() && input_scales.size() != static_cast<std::size_t>(k)) {
        throw ShapeError("make_random_net: input_scales must have length k");
    }
    MonotoneNet net;
    net.input_dim = k;

    std::size_t in_dim = static_cast<std::size_t>(k);
    auto add_layer = [&](std::size_t out_dim, bool head) {
        MonotoneLayer layer;
        layer.weights.assign(out_dim, std::vector<double>(in_dim));
        // Hidden biases spread across the activation's kink range so the
        // units start in varied regimes (saturated, clipped, linear); with
        // zero biases every pre-activation sits inside the linear region
        // and the whole net degenerates to an affine map. The scalar head
        // stays at zero.
        layer.bias.assign(out_dim, 0.0);
        if (!head) {
            for (auto& b : layer.bias) b = rng.uniform(-0.5, 0.5);
        }
        const double scale = 1.0 / static_cast<double>(in_dim);
        const bool first = net.layers.empty();
        for (auto& row : layer.weights) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                const double col = (first && !input_scales.empty()) ? input_scales[c] : 1.0;
                row[c] = rng.uniform(0.0, scale * col);
            }
        }
        net.layers.push_back(std::move(layer));
        in_dim = 3 * out_dim;
    };

    for (int h : hidden_widths) {
        if (h < 1) throw ShapeError("make_random_net: hidden width must be >= 1");
        add_layer(static_cast<std::size_t>(h), false);
    }
    add_layer(1, true);
    net.validate();
    return net;
}

double strict_forward(const StrictUtility& u, const RewardVector& z) {
    const double base = forward(u.base, z);
    double sum = 0.0;
    for (double zk : z) sum += zk;
    return base + u.epsilon / static_cast<double>(u.base.input_dim) * sum;
}

} // namespace ucmoa
