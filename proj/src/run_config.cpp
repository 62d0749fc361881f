#include "ucmoa/run_config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ucmoa/errors.hpp"

namespace ucmoa {

EnsembleConfig RunConfig::ensemble_config() const {
    EnsembleConfig cfg;
    cfg.k = k;
    cfg.m_utilities = m_utilities;
    cfg.mu = mu;
    cfg.epsilon = epsilon;
    cfg.steps = steps;
    cfg.batch = batch;
    cfg.pair_batch = pair_batch;
    cfg.learning_rate = learning_rate;
    cfg.seed = seed;
    cfg.hidden_width = hidden_width;
    cfg.maximize_diversity = maximize_diversity;
    return cfg;
}

namespace {

template <typename T>
void take(const nlohmann::json& doc, const char* key, T& field) {
    if (doc.contains(key)) field = doc.at(key).get<T>();
}

} // namespace

RunConfig RunConfig::from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    RunConfig cfg;
    try {
        take(doc, "k", cfg.k);
        take(doc, "m_utilities", cfg.m_utilities);
        take(doc, "mu", cfg.mu);
        take(doc, "epsilon", cfg.epsilon);
        take(doc, "seed", cfg.seed);
        take(doc, "token", cfg.token);

        if (doc.contains("ensemble")) {
            const auto& e = doc.at("ensemble");
            take(e, "steps", cfg.steps);
            take(e, "batch", cfg.batch);
            take(e, "pair_batch", cfg.pair_batch);
            take(e, "learning_rate", cfg.learning_rate);
            take(e, "hidden_width", cfg.hidden_width);
            take(e, "maximize_diversity", cfg.maximize_diversity);
        }
        if (doc.contains("simulator")) {
            const auto& s = doc.at("simulator");
            take(s, "env_spec", cfg.env_spec);
            take(s, "n_offline", cfg.sim.n_offline);
            take(s, "n_generate", cfg.sim.n_generate);
            take(s, "tau", cfg.sim.tau);
            take(s, "online_iters", cfg.sim.online_iters);
            take(s, "offline_epochs", cfg.sim.offline_epochs);
            take(s, "online_epochs", cfg.sim.online_epochs);
            take(s, "policy_lr", cfg.sim.policy_lr);
            take(s, "buffer_capacity", cfg.sim.buffer_capacity);
            take(s, "eval_samples", cfg.sim.eval_samples);
            take(s, "temperature", cfg.sim.temperature);
            take(s, "consistency_token", cfg.consistency_token);
            take(s, "n_preferences", cfg.n_preferences);
        }
        if (doc.contains("metrics")) {
            const auto& m = doc.at("metrics");
            take(m, "m_constraints", cfg.m_constraints);
            take(m, "n_rows", cfg.n_rows);
            take(m, "variance_sign", cfg.variance_sign);
        }
        if (doc.contains("paths")) {
            const auto& p = doc.at("paths");
            take(p, "input", cfg.input);
            take(p, "out_dir", cfg.out_dir);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

} // namespace ucmoa
