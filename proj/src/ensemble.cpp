#include "ucmoa/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ucmoa/errors.hpp"

namespace ucmoa {

void EnsembleConfig::validate() const {
    if (k < 1) throw ConfigError("ensemble config: k must be >= 1");
    if (m_utilities < 2) {
        throw ConfigError("ensemble config: m_utilities must be >= 2 (the pairwise "
                          "min over j != i needs at least one other member)");
    }
    if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("ensemble config: mu must lie in [0,1]");
    if (!(epsilon > 0.0)) throw ConfigError("ensemble config: epsilon must be > 0");
    if (steps < 0) throw ConfigError("ensemble config: steps must be >= 0");
    if (batch < 1) throw ConfigError("ensemble config: batch must be >= 1");
    if (pair_batch < 1) throw ConfigError("ensemble config: pair_batch must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("ensemble config: learning_rate must be > 0");
    if (!(max_grad_norm > 0.0)) throw ConfigError("ensemble config: max_grad_norm must be > 0");
    if (hidden_width < 1) throw ConfigError("ensemble config: hidden_width must be >= 1");
}

std::vector<double> UtilityEnsemble::evaluate(const RewardVector& z) const {
    std::vector<double> out(utilities.size());
    for (std::size_t i = 0; i < utilities.size(); ++i) out[i] = strict_forward(utilities[i], z);
    return out;
}

std::vector<double> UtilityEnsemble::evaluate_base(const RewardVector& z) const {
    std::vector<double> out(utilities.size());
    for (std::size_t i = 0; i < utilities.size(); ++i) out[i] = forward(utilities[i].base, z);
    return out;
}

std::vector<RewardVector> sample_unit_cube(std::size_t n, int k, Rng& rng) {
    if (n == 0) throw ConfigError("sample_unit_cube: empty batch requested");
    std::vector<RewardVector> out(n, RewardVector(static_cast<std::size_t>(k)));
    for (auto& z : out) {
        for (auto& zk : z) zk = rng.uniform01();
    }
    return out;
}

std::vector<SamplePair> sample_pairs(std::size_t n, int k, Rng& rng) {
    if (n == 0) throw ConfigError("sample_pairs: empty batch requested");
    std::vector<SamplePair> out(n);
    for (auto& p : out) {
        p.a.resize(static_cast<std::size_t>(k));
        p.b.resize(static_cast<std::size_t>(k));
        do {
            for (auto& v : p.a) v = rng.uniform01();
            for (auto& v : p.b) v = rng.uniform01();
        } while (p.a == p.b);
    }
    return out;
}

namespace {

double pair_norm(const SamplePair& p) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.a.size(); ++k) {
        const double d = p.b[k] - p.a[k];
        s += d * d;
    }
    return std::sqrt(s);
}

void require_members(std::size_t i, std::size_t m) {
    if (m < 2) throw ConfigError("discrepancy: ensemble must have at least 2 members");
    if (i >= m) throw ConfigError("discrepancy: member index out of range");
}

} // namespace

double value_discrepancy(std::size_t i, const std::vector<MonotoneNet>& nets,
                         const std::vector<RewardVector>& batch) {
    require_members(i, nets.size());
    if (batch.empty()) throw ConfigError("value_discrepancy: empty batch");

    std::vector<double> gi(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) gi[b] = forward(nets[i], batch[b]);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nets.size(); ++j) {
        if (j == i) continue;
        double mean = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
            const double diff = gi[b] - forward(nets[j], batch[b]);
            mean += diff * diff;
        }
        mean /= static_cast<double>(batch.size());
        best = std::min(best, mean);
    }
    return best;
}

double grad_discrepancy(std::size_t i, const std::vector<MonotoneNet>& nets,
                        const std::vector<SamplePair>& pairs) {
    require_members(i, nets.size());
    if (pairs.empty()) throw ConfigError("grad_discrepancy: empty pair batch");

    std::vector<double> qi(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const double norm = pair_norm(pairs[p]);
        if (!(norm > 0.0)) throw DataError("grad_discrepancy: degenerate pair with z = z'");
        qi[p] = (forward(nets[i], pairs[p].b) - forward(nets[i], pairs[p].a)) / norm;
    }

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nets.size(); ++j) {
        if (j == i) continue;
        double mean = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const double norm = pair_norm(pairs[p]);
            const double qj = (forward(nets[j], pairs[p].b) - forward(nets[j], pairs[p].a)) / norm;
            const double diff = qi[p] - qj;
            mean += diff * diff;
        }
        mean /= static_cast<double>(pairs.size());
        best = std::min(best, mean);
    }
    return best;
}

double diversity_objective(std::size_t i, const std::vector<MonotoneNet>& nets,
                           const std::vector<RewardVector>& batch,
                           const std::vector<SamplePair>& pairs, double mu) {
    return mu * value_discrepancy(i, nets, batch) +
           (1.0 - mu) * grad_discrepancy(i, nets, pairs);
}

namespace {

struct MemberLosses {
    double l_val = 0.0;
    double l_grad = 0.0;
    double objective = 0.0;
};

// One projected gradient step for member i, other members frozen. The min
// over j is non-smooth; only the achieving j contributes to the gradient.
MemberLosses member_step(std::vector<MonotoneNet>& nets, std::size_t i,
                         const std::vector<RewardVector>& batch,
                         const std::vector<SamplePair>& pairs,
                         const EnsembleConfig& cfg) {
    const std::size_t m = nets.size();
    const std::size_t nb = batch.size();
    const std::size_t np = pairs.size();

    std::vector<double> gi(nb);
    for (std::size_t b = 0; b < nb; ++b) gi[b] = forward(nets[i], batch[b]);

    // Value discrepancy and the values of its achieving j.
    double l_val = std::numeric_limits<double>::infinity();
    std::vector<double> gj_val(nb);
    for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        double mean = 0.0;
        std::vector<double> gj(nb);
        for (std::size_t b = 0; b < nb; ++b) {
            gj[b] = forward(nets[j], batch[b]);
            const double diff = gi[b] - gj[b];
            mean += diff * diff;
        }
        mean /= static_cast<double>(nb);
        if (mean < l_val) {
            l_val = mean;
            gj_val = std::move(gj);
        }
    }

    // Difference quotients and the achieving j for the gradient term.
    std::vector<double> norms(np), qi(np);
    for (std::size_t p = 0; p < np; ++p) {
        norms[p] = pair_norm(pairs[p]);
        qi[p] = (forward(nets[i], pairs[p].b) - forward(nets[i], pairs[p].a)) / norms[p];
    }
    double l_grad = std::numeric_limits<double>::infinity();
    std::vector<double> qj_grad(np);
    for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        double mean = 0.0;
        std::vector<double> qj(np);
        for (std::size_t p = 0; p < np; ++p) {
            qj[p] = (forward(nets[j], pairs[p].b) - forward(nets[j], pairs[p].a)) / norms[p];
            const double diff = qi[p] - qj[p];
            mean += diff * diff;
        }
        mean /= static_cast<double>(np);
        if (mean < l_grad) {
            l_grad = mean;
            qj_grad = std::move(qj);
        }
    }

    ParamGradients grads = zero_gradients(nets[i]);
    for (std::size_t b = 0; b < nb; ++b) {
        const double up = cfg.mu * 2.0 * (gi[b] - gj_val[b]) / static_cast<double>(nb);
        if (up != 0.0) accumulate_param_gradients(nets[i], batch[b], up, grads);
    }
    for (std::size_t p = 0; p < np; ++p) {
        const double c =
            (1.0 - cfg.mu) * 2.0 * (qi[p] - qj_grad[p]) / static_cast<double>(np) / norms[p];
        if (c != 0.0) {
            accumulate_param_gradients(nets[i], pairs[p].b, c, grads);
            accumulate_param_gradients(nets[i], pairs[p].a, -c, grads);
        }
    }

    // Cap the global gradient norm. Without it the ascent feeds on itself
    // (the gradient scale grows with the discrepancy it creates) and the
    // run goes non-finite within a few thousand steps.
    double norm_sq = 0.0;
    for (const auto& g : grads) {
        for (const auto& row : g.weights) {
            for (double v : row) norm_sq += v * v;
        }
        for (double v : g.bias) norm_sq += v * v;
    }
    const double norm = std::sqrt(norm_sq);
    const double clip = norm > cfg.max_grad_norm ? cfg.max_grad_norm / norm : 1.0;

    const double direction = cfg.maximize_diversity ? 1.0 : -1.0;
    for (std::size_t l = 0; l < nets[i].layers.size(); ++l) {
        auto& layer = nets[i].layers[l];
        const auto& g = grads[l];
        for (std::size_t r = 0; r < layer.out_dim(); ++r) {
            layer.bias[r] += direction * cfg.learning_rate * clip * g.bias[r];
            for (std::size_t c = 0; c < layer.weights[r].size(); ++c) {
                layer.weights[r][c] += direction * cfg.learning_rate * clip * g.weights[r][c];
            }
        }
    }
    project_nonnegative_inplace(nets[i]);

    return {l_val, l_grad, cfg.mu * l_val + (1.0 - cfg.mu) * l_grad};
}

} // namespace

UtilityEnsemble train_ensemble(const EnsembleConfig& config, const TrainLogSink& log) {
    config.validate();
    Rng rng(config.seed);

    std::vector<MonotoneNet> nets;
    nets.reserve(static_cast<std::size_t>(config.m_utilities));
    const std::vector<int> widths{config.hidden_width, config.hidden_width};
    for (int i = 0; i < config.m_utilities; ++i) {
        // Per-member sensitivity direction, uniform on the simplex and
        // scaled to mean 1. Members start with distinct monotone profiles
        // (from near-lexicographic to balanced) and the diversity objective
        // refines them; without this every member initializes with the same
        // balanced direction and the argmax structure over the ensemble
        // degenerates.
        std::vector<double> profile(static_cast<std::size_t>(config.k));
        double total = 0.0;
        do {
            total = 0.0;
            for (auto& p : profile) {
                double u = rng.uniform01();
                while (u <= 0.0) u = rng.uniform01();
                p = -std::log(u);
                total += p;
            }
        } while (!(total > 0.0));
        for (auto& p : profile) p *= static_cast<double>(config.k) / total;
        nets.push_back(make_random_net(config.k, widths, rng, profile));
    }

    for (int step = 1; step <= config.steps; ++step) {
        for (std::size_t i = 0; i < nets.size(); ++i) {
            const auto batch = sample_unit_cube(static_cast<std::size_t>(config.batch),
                                                config.k, rng);
            const auto pairs = sample_pairs(static_cast<std::size_t>(config.pair_batch),
                                            config.k, rng);
            const MemberLosses losses = member_step(nets, i, batch, pairs, config);
            if (!std::isfinite(losses.objective)) {
                throw NumericError("train_ensemble: non-finite loss at step " +
                                   std::to_string(step) + " for member " +
                                   std::to_string(i));
            }
            if (log) {
                log(TrainLogRow{step, static_cast<int>(i), losses.l_val, losses.l_grad,
                                losses.objective});
            }
        }
    }

    // Package: calibrate each member so the 5% / 95% quantiles of its
    // values over the uniform cube map to 0 / 1. A positive affine rescale
    // folds into the scalar head, so monotonicity, non-negativity and all
    // percentile ranks are untouched; what changes is that the raw
    // cross-member argmax at inference compares like with like instead of
    // being owned by whichever member trained to the largest scale.
    {
        Rng cal_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
        const auto cal_batch = sample_unit_cube(512, config.k, cal_rng);
        for (auto& net : nets) {
            std::vector<double> values(cal_batch.size());
            for (std::size_t b = 0; b < cal_batch.size(); ++b) {
                values[b] = forward(net, cal_batch[b]);
            }
            std::sort(values.begin(), values.end());
            const double lo = values[values.size() / 20];
            const double hi = values[values.size() - 1 - values.size() / 20];
            if (hi - lo > 1e-12) {
                const double scale = 1.0 / (hi - lo);
                auto& head = net.layers.back();
                for (auto& w : head.weights[0]) w *= scale;
                head.bias[0] = head.bias[0] * scale - lo * scale;
            }
        }
    }

    UtilityEnsemble ensemble;
    ensemble.k = config.k;
    ensemble.config = config;
    ensemble.utilities.reserve(nets.size());
    for (auto& net : nets) {
        ensemble.utilities.push_back(StrictUtility{std::move(net), config.epsilon});
    }
    return ensemble;
}

UtilityEnsemble make_linear_ensemble(int m, int k, double epsilon, std::uint64_t seed) {
    if (m < 1) throw ConfigError("make_linear_ensemble: m must be >= 1");
    if (k < 1) throw ConfigError("make_linear_ensemble: k must be >= 1");
    if (!(epsilon > 0.0)) throw ConfigError("make_linear_ensemble: epsilon must be > 0");

    Rng rng(seed);
    UtilityEnsemble ensemble;
    ensemble.k = k;
    ensemble.config.k = k;
    ensemble.config.m_utilities = m;
    ensemble.config.epsilon = epsilon;

    for (int i = 0; i < m; ++i) {
        // Unit-norm non-negative direction: absolute value of a standard
        // normal draw, normalized (uniform over the non-negative sphere).
        RewardVector w(static_cast<std::size_t>(k));
        double norm = 0.0;
        do {
            norm = 0.0;
            for (auto& wk : w) {
                wk = std::fabs(rng.normal());
                norm += wk * wk;
            }
            norm = std::sqrt(norm);
        } while (!(norm > 0.0));
        for (auto& wk : w) wk /= norm;

        MonotoneNet net;
        net.input_dim = k;
        MonotoneLayer layer;
        layer.weights.push_back(w);
        layer.bias.assign(1, 0.0);
        net.layers.push_back(std::move(layer));
        net.validate();
        ensemble.utilities.push_back(StrictUtility{std::move(net), epsilon});
    }
    return ensemble;
}

namespace {

nlohmann::ordered_json net_to_json(const MonotoneNet& net) {
    nlohmann::ordered_json doc;
    doc["layers"] = nlohmann::ordered_json::array();
    for (const auto& layer : net.layers) {
        nlohmann::ordered_json jl;
        jl["weights"] = layer.weights;
        jl["bias"] = layer.bias;
        doc["layers"].push_back(std::move(jl));
    }
    return doc;
}

MonotoneNet net_from_json(const nlohmann::json& doc, int k) {
    MonotoneNet net;
    net.input_dim = k;
    if (!doc.contains("layers") || !doc.at("layers").is_array() || doc.at("layers").empty()) {
        throw ParseError("ensemble document: net without \"layers\"");
    }
    for (const auto& jl : doc.at("layers")) {
        MonotoneLayer layer;
        layer.weights = jl.at("weights").get<std::vector<std::vector<double>>>();
        layer.bias = jl.at("bias").get<std::vector<double>>();
        net.layers.push_back(std::move(layer));
    }
    try {
        net.validate();
    } catch (const ShapeError& e) {
        throw ShapeError(std::string("ensemble document: ") + e.what());
    }
    return net;
}

} // namespace

std::string ensemble_to_json(const UtilityEnsemble& ensemble) {
    nlohmann::ordered_json doc;
    doc["k"] = ensemble.k;
    doc["epsilon"] = ensemble.utilities.empty() ? ensemble.config.epsilon
                                                : ensemble.utilities[0].epsilon;
    doc["nets"] = nlohmann::ordered_json::array();
    for (const auto& u : ensemble.utilities) doc["nets"].push_back(net_to_json(u.base));
    return doc.dump(2) + "\n";
}

void save_ensemble(const UtilityEnsemble& ensemble, std::ostream& sink) {
    sink << ensemble_to_json(ensemble);
}

UtilityEnsemble ensemble_from_json(const std::string& text, int expected_k) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("ensemble document: ") + e.what());
    }
    if (!doc.contains("k") || !doc.contains("epsilon") || !doc.contains("nets")) {
        throw ParseError("ensemble document: missing \"k\", \"epsilon\" or \"nets\"");
    }

    UtilityEnsemble ensemble;
    ensemble.k = doc.at("k").get<int>();
    if (ensemble.k < 1) throw ParseError("ensemble document: k must be >= 1");
    if (expected_k >= 0 && ensemble.k != expected_k) {
        throw ShapeError("ensemble document: k = " + std::to_string(ensemble.k) +
                         " but caller expects " + std::to_string(expected_k));
    }
    const double epsilon = doc.at("epsilon").get<double>();
    if (!(epsilon > 0.0)) throw ParseError("ensemble document: epsilon must be > 0");

    if (!doc.at("nets").is_array() || doc.at("nets").empty()) {
        throw ParseError("ensemble document: \"nets\" must be a non-empty array");
    }
    for (const auto& jn : doc.at("nets")) {
        ensemble.utilities.push_back(StrictUtility{net_from_json(jn, ensemble.k), epsilon});
    }
    ensemble.config.k = ensemble.k;
    ensemble.config.m_utilities = static_cast<int>(ensemble.utilities.size());
    ensemble.config.epsilon = epsilon;
    return ensemble;
}

UtilityEnsemble load_ensemble(std::istream& source, int expected_k) {
    std::ostringstream buf;
    buf << source.rdbuf();
    return ensemble_from_json(buf.str(), expected_k);
}

} // namespace ucmoa
