#include "ucmoa/policy_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "ucmoa/errors.hpp"

namespace ucmoa {

void SynthEnv::validate() const {
    if (k < 1) throw ConfigError("env: k must be >= 1");
    if (styles.size() < 2) throw ConfigError("env: at least 2 styles required");
    for (const auto& s : styles) {
        if (static_cast<int>(s.mean.size()) != k || static_cast<int>(s.stdev.size()) != k) {
            throw ShapeError("env: style " + std::to_string(s.id) +
                             " has mismatched dimensions");
        }
        for (double sd : s.stdev) {
            if (!(sd > 0.0)) {
                throw ConfigError("env: style " + std::to_string(s.id) +
                                  " has non-positive stdev");
            }
        }
    }
    const auto& first = styles[0].mean;
    const bool all_same = std::all_of(styles.begin(), styles.end(),
                                      [&](const Style& s) { return s.mean == first; });
    if (all_same) throw ConfigError("env: all style means identical, no trade-offs");
}

SynthEnv SynthEnv::default_two_objective() {
    SynthEnv env;
    env.k = 2;
    constexpr double pi = 3.14159265358979323846;
    int id = 0;
    // Concave arc: every style non-dominated.
    for (int s = 0; s < 12; ++s) {
        const double theta = pi / 2.0 * static_cast<double>(s) / 11.0;
        env.styles.push_back(Style{id++,
                                   {10.0 * std::cos(theta), 10.0 * std::sin(theta)},
                                   {0.4, 0.4}});
    }
    // Dominated interior styles; gives rejection sampling something to drop.
    for (double deg : {10.0, 35.0, 55.0, 80.0}) {
        const double theta = deg * pi / 180.0;
        env.styles.push_back(Style{id++,
                                   {5.5 * std::cos(theta), 5.5 * std::sin(theta)},
                                   {0.4, 0.4}});
    }
    env.validate();
    return env;
}

std::string env_to_json(const SynthEnv& env) {
    nlohmann::ordered_json doc;
    doc["k"] = env.k;
    doc["styles"] = nlohmann::ordered_json::array();
    for (const auto& s : env.styles) {
        nlohmann::ordered_json js;
        js["mean"] = s.mean;
        js["stdev"] = s.stdev;
        doc["styles"].push_back(std::move(js));
    }
    return doc.dump(2) + "\n";
}

SynthEnv env_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("env document: ") + e.what());
    }
    SynthEnv env;
    try {
        env.k = doc.at("k").get<int>();
        int id = 0;
        for (const auto& js : doc.at("styles")) {
            Style s;
            s.id = id++;
            s.mean = js.at("mean").get<RewardVector>();
            s.stdev = js.at("stdev").get<RewardVector>();
            env.styles.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("env document: ") + e.what());
    }
    env.validate();
    return env;
}

RewardVector sample_response(const SynthEnv& env, int style_id, Rng& rng) {
    if (style_id < 0 || static_cast<std::size_t>(style_id) >= env.styles.size()) {
        throw ConfigError("sample_response: invalid style " + std::to_string(style_id));
    }
    const Style& s = env.styles[static_cast<std::size_t>(style_id)];
    RewardVector z(s.mean.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = s.mean[i] + s.stdev[i] * rng.normal();
    }
    return z;
}

ConditionedPolicy ConditionedPolicy::uniform(std::size_t m_tokens, std::size_t n_styles,
                                             double temperature) {
    if (m_tokens == 0 || n_styles == 0) {
        throw ConfigError("policy: m_tokens and n_styles must be >= 1");
    }
    if (!(temperature > 0.0)) throw ConfigError("policy: temperature must be > 0");
    ConditionedPolicy p;
    p.m_tokens = m_tokens;
    p.n_styles = n_styles;
    p.temperature = temperature;
    p.logits.assign(m_tokens + 1, std::vector<double>(n_styles, 0.0));
    return p;
}

void ConditionedPolicy::validate() const {
    if (logits.size() != m_tokens + 1) {
        throw ShapeError("policy: expected " + std::to_string(m_tokens + 1) + " rows");
    }
    for (const auto& row : logits) {
        if (row.size() != n_styles) throw ShapeError("policy: row width mismatch");
        for (double v : row) {
            if (!std::isfinite(v)) throw NumericError("policy: non-finite logit");
        }
    }
    if (!(temperature > 0.0)) throw ConfigError("policy: temperature must be > 0");
}

std::vector<double> ConditionedPolicy::row_probs(std::size_t row) const {
    if (row >= logits.size()) throw ConfigError("policy: row out of range");
    const auto& l = logits[row];
    std::vector<double> p(l.size());
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : l) hi = std::max(hi, v / temperature);
    double total = 0.0;
    for (std::size_t s = 0; s < l.size(); ++s) {
        p[s] = std::exp(l[s] / temperature - hi);
        total += p[s];
    }
    for (auto& v : p) v /= total;
    return p;
}

std::size_t ConditionedPolicy::sample_style(std::size_t token, Rng& rng) const {
    const auto p = row_probs(token);
    const double u = rng.uniform01();
    double cdf = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) {
        cdf += p[s];
        if (u < cdf) return s;
    }
    return p.size() - 1; // guard against rounding in the cdf
}

std::string policy_to_json(const ConditionedPolicy& policy) {
    nlohmann::ordered_json doc;
    doc["m_tokens"] = policy.m_tokens;
    doc["n_styles"] = policy.n_styles;
    doc["temperature"] = policy.temperature;
    doc["logits"] = policy.logits;
    return doc.dump(2) + "\n";
}

ConditionedPolicy policy_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("policy document: ") + e.what());
    }
    ConditionedPolicy p;
    try {
        p.m_tokens = doc.at("m_tokens").get<std::size_t>();
        p.n_styles = doc.at("n_styles").get<std::size_t>();
        p.temperature = doc.at("temperature").get<double>();
        p.logits = doc.at("logits").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("policy document: ") + e.what());
    }
    p.validate();
    return p;
}

OnlineBuffer::OnlineBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("online buffer: capacity must be >= 1");
}

void OnlineBuffer::push(LabeledSample sample) {
    items_.push_back(std::move(sample));
    while (items_.size() > capacity_) items_.pop_front();
}

std::vector<LabeledSample> OnlineBuffer::snapshot() const {
    return {items_.begin(), items_.end()};
}

std::vector<RawSample> generate_offline_dataset(const SynthEnv& env, std::size_t n,
                                                Rng& rng) {
    env.validate();
    if (n == 0) throw ConfigError("generate_offline_dataset: n must be >= 1");
    std::vector<RawSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int style = static_cast<int>(rng.uniform_index(env.styles.size()));
        RawSample s;
        s.prompt_id = "offline-" + std::to_string(i);
        s.prompt = "";
        s.response = "style-" + std::to_string(style);
        s.rewards = sample_response(env, style, rng);
        s.style = style;
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

double cross_entropy_loss(const ConditionedPolicy& policy,
                          const std::vector<LabeledSample>& labeled) {
    double loss = 0.0;
    // Row probabilities are recomputed per distinct token row via caching.
    std::vector<std::vector<double>> probs(policy.m_tokens + 1);
    for (const auto& s : labeled) {
        const std::size_t t = s.chosen_index;
        if (probs[t].empty()) probs[t] = policy.row_probs(t);
        const double p = probs[t][static_cast<std::size_t>(*s.style)];
        loss -= std::log(std::max(p, 1e-300));
    }
    return loss / static_cast<double>(labeled.size());
}

} // namespace

OfflineResult offline_train(const ConditionedPolicy& policy,
                            const std::vector<LabeledSample>& labeled, int epochs,
                            double lr) {
    if (labeled.empty()) throw DataError("offline_train: empty dataset");
    if (epochs < 0) throw ConfigError("offline_train: epochs must be >= 0");
    if (!(lr > 0.0)) throw ConfigError("offline_train: lr must be > 0");
    policy.validate();
    for (const auto& s : labeled) {
        if (!s.style) {
            throw DataError("offline_train: sample \"" + s.prompt_id +
                            "\" carries no style");
        }
        if (s.chosen_index >= policy.m_tokens) {
            throw DataError("offline_train: sample \"" + s.prompt_id +
                            "\" has token index " + std::to_string(s.chosen_index) +
                            " beyond the policy's " + std::to_string(policy.m_tokens));
        }
        if (*s.style < 0 || static_cast<std::size_t>(*s.style) >= policy.n_styles) {
            throw DataError("offline_train: sample \"" + s.prompt_id +
                            "\" has style outside the policy's range");
        }
    }

    OfflineResult res{policy, {}};
    res.epoch_losses.reserve(static_cast<std::size_t>(epochs) + 1);
    const double n = static_cast<double>(labeled.size());

    for (int e = 0; e < epochs; ++e) {
        res.epoch_losses.push_back(cross_entropy_loss(res.policy, labeled));

        std::vector<std::vector<double>> grad(res.policy.m_tokens + 1,
                                              std::vector<double>(res.policy.n_styles, 0.0));
        std::vector<std::vector<double>> probs(res.policy.m_tokens + 1);
        for (const auto& s : labeled) {
            const std::size_t t = s.chosen_index;
            if (probs[t].empty()) probs[t] = res.policy.row_probs(t);
            for (std::size_t c = 0; c < res.policy.n_styles; ++c) grad[t][c] += probs[t][c];
            grad[t][static_cast<std::size_t>(*s.style)] -= 1.0;
        }
        for (std::size_t t = 0; t <= res.policy.m_tokens; ++t) {
            for (std::size_t c = 0; c < res.policy.n_styles; ++c) {
                res.policy.logits[t][c] -= lr / (n * res.policy.temperature) * grad[t][c];
            }
        }

        if (!std::isfinite(res.epoch_losses.back())) {
            throw NumericError("offline_train: non-finite loss at epoch " +
                               std::to_string(e));
        }
    }
    res.epoch_losses.push_back(cross_entropy_loss(res.policy, labeled));
    return res;
}

IterationStats online_iteration(ConditionedPolicy& policy, const SynthEnv& env,
                                const UtilityEnsemble& ensemble, RunningBounds& bounds,
                                OnlineBuffer& buffer, const OnlineConfig& config,
                                Rng& rng) {
    env.validate();
    policy.validate();
    if (config.n_generate < 1) throw ConfigError("online_iteration: n_generate must be >= 1");
    if (policy.m_tokens != ensemble.size()) {
        throw ShapeError("online_iteration: policy has " + std::to_string(policy.m_tokens) +
                         " token rows, ensemble has " + std::to_string(ensemble.size()));
    }

    const std::size_t m = ensemble.size();

    // (a) Generate: uniform token, style from the token's row, reward draw.
    struct Generated {
        std::size_t token;
        int style;
        RewardVector rewards;
    };
    std::vector<Generated> batch;
    batch.reserve(static_cast<std::size_t>(config.n_generate));
    for (int g = 0; g < config.n_generate; ++g) {
        const std::size_t token = rng.uniform_index(m);
        const int style = static_cast<int>(policy.sample_style(token, rng));
        batch.push_back(Generated{token, style, sample_response(env, style, rng)});
    }
    for (const auto& g : batch) bounds.update(g.rewards);

    const auto params = NormalizationParams::from_bounds(bounds);
    const auto buffered = buffer.snapshot();

    // (b) Reference scores over buffer + batch under the refreshed
    // normalization; buffered samples keep raw rewards so this stays exact.
    std::vector<std::vector<double>> reference(m);
    for (auto& seq : reference) seq.reserve(buffered.size() + batch.size());
    for (const auto& s : buffered) {
        const auto u = ensemble.evaluate(params.normalize(s.rewards));
        for (std::size_t i = 0; i < m; ++i) reference[i].push_back(u[i]);
    }
    std::vector<std::vector<double>> batch_utilities(batch.size());
    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        batch_utilities[bi] = ensemble.evaluate(params.normalize(batch[bi].rewards));
        for (std::size_t i = 0; i < m; ++i) reference[i].push_back(batch_utilities[bi][i]);
    }
    const PercentileTable table(reference);

    // (c)/(d) Relabel and reject below the threshold.
    IterationStats stats;
    stats.generated = batch.size();
    stats.mean_utility_per_token.assign(m, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> token_sums(m, 0.0);
    std::vector<std::size_t> token_counts(m, 0);

    std::size_t admitted = 0;
    for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        std::vector<double> percentiles(m);
        for (std::size_t i = 0; i < m; ++i) {
            percentiles[i] = table.percentile_rank(i, batch_utilities[bi][i]);
        }
        const std::size_t chosen = select_max_index(percentiles);
        if (percentiles[chosen] < config.tau) continue;

        LabeledSample ls;
        ls.prompt_id = "online-" + std::to_string(bi);
        ls.prompt = "";
        ls.response = "style-" + std::to_string(batch[bi].style);
        ls.rewards = batch[bi].rewards;
        ls.style = batch[bi].style;
        ls.normalized_rewards = params.normalize(batch[bi].rewards);
        ls.utilities = batch_utilities[bi];
        ls.percentiles = std::move(percentiles);
        ls.chosen_index = chosen;
        ls.augmented_prompt = augment_prompt(ls.prompt, chosen, config.token);

        token_sums[chosen] += ls.utilities[chosen];
        token_counts[chosen] += 1;
        buffer.push(std::move(ls));
        ++admitted;
    }
    stats.accepted = admitted;
    stats.accept_rate = static_cast<double>(admitted) / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < m; ++i) {
        if (token_counts[i] > 0) {
            stats.mean_utility_per_token[i] =
                token_sums[i] / static_cast<double>(token_counts[i]);
        }
    }

    // (e) Supervised update on the buffer; an empty iteration leaves the
    // policy untouched.
    if (admitted > 0) {
        policy = offline_train(policy, buffer.snapshot(), config.epochs, config.lr).policy;
    }
    return stats;
}

std::vector<double> evaluate_consistency(const ConditionedPolicy& policy,
                                         const SynthEnv& env,
                                         const UtilityEnsemble& ensemble,
                                         const RunningBounds& bounds,
                                         std::size_t token_index, std::size_t n, Rng& rng) {
    if (n == 0) throw ConfigError("evaluate_consistency: n must be >= 1");
    if (token_index >= policy.m_tokens) {
        throw ConfigError("evaluate_consistency: token index out of range");
    }
    const auto params = NormalizationParams::from_bounds(bounds);
    const std::size_t m = ensemble.size();

    std::vector<std::vector<double>> values(m, std::vector<double>(n));
    for (std::size_t r = 0; r < n; ++r) {
        const int style = static_cast<int>(policy.sample_style(token_index, rng));
        const auto z = sample_response(env, style, rng);
        const auto u = ensemble.evaluate(params.normalize(z));
        for (std::size_t i = 0; i < m; ++i) values[i][r] = u[i];
    }

    std::vector<double> means(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto [lo_it, hi_it] = std::minmax_element(values[i].begin(), values[i].end());
        const double lo = *lo_it, hi = *hi_it;
        double mean = 0.0;
        if (hi > lo) {
            for (double v : values[i]) mean += (v - lo) / (hi - lo);
            mean /= static_cast<double>(n);
        } else {
            mean = 0.5; // all values identical; center of the unit scale
        }
        means[i] = mean;
    }
    return means;
}

std::vector<RewardVector> sweep_pareto(const ConditionedPolicy& policy,
                                       const SynthEnv& env,
                                       const UtilityEnsemble& ensemble,
                                       const RunningBounds& bounds,
                                       const std::vector<PreferenceVector>& preferences,
                                       std::size_t n_per_preference, Rng& rng) {
    if (n_per_preference == 0) throw ConfigError("sweep_pareto: n_per_preference must be >= 1");
    const auto params = NormalizationParams::from_bounds(bounds);
    const auto reward_bounds = RewardBounds::from_running(bounds);

    std::vector<RewardVector> means;
    means.reserve(preferences.size());
    for (const auto& w : preferences) {
        const auto target = preference_to_reward(w, reward_bounds);
        const std::size_t token = select_inference_index(target, ensemble, params);

        RewardVector mean(static_cast<std::size_t>(env.k), 0.0);
        for (std::size_t r = 0; r < n_per_preference; ++r) {
            const int style = static_cast<int>(policy.sample_style(token, rng));
            const auto z = sample_response(env, style, rng);
            for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += z[i];
        }
        for (auto& v : mean) v /= static_cast<double>(n_per_preference);
        means.push_back(std::move(mean));
    }
    return means;
}

} // namespace ucmoa
