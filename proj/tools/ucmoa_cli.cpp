// Command-line front end: train-utilities, label, train-policy, infer, eval.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ucmoa/errors.hpp"
#include "ucmoa/metrics.hpp"
#include "ucmoa/pipeline.hpp"
#include "ucmoa/run_config.hpp"
#include "ucmoa/svg.hpp"

namespace fs = std::filesystem;
using namespace ucmoa;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) {
        throw ConfigError(what + " not found: \"" + path + "\"");
    }
}

std::string read_file(const std::string& path, const std::string& what) {
    require_file(path, what);
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + what + ": \"" + path + "\"");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write \"" + path + "\"");
    out << content;
}

struct OutPaths {
    fs::path dir;

    explicit OutPaths(const std::string& out_dir) : dir(out_dir) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw ConfigError("cannot create output directory \"" + out_dir + "\"");
    }

    std::string ensemble() const { return (dir / "ensemble.json").string(); }
    std::string train_log() const { return (dir / "train_log.csv").string(); }
    std::string labeled() const { return (dir / "labeled.jsonl").string(); }
    std::string percentiles() const { return (dir / "percentiles.json").string(); }
    std::string bounds() const { return (dir / "bounds.json").string(); }
    std::string offline_labeled() const { return (dir / "offline_labeled.jsonl").string(); }
    std::string policy() const { return (dir / "policy.json").string(); }
    std::string policy_arm(std::size_t i) const {
        return (dir / ("policy_arm" + std::to_string(i) + ".json")).string();
    }
    std::string policy_stats() const { return (dir / "policy_stats.csv").string(); }
    std::string report(const std::string& metric) const {
        return (dir / ("report_" + metric + ".json")).string();
    }
    std::string points(const std::string& metric) const {
        return (dir / (metric + "_points.csv")).string();
    }
    std::string svg(const std::string& metric) const {
        return (dir / (metric + ".svg")).string();
    }
};

std::string bounds_to_json(const RunningBounds& b) {
    nlohmann::ordered_json doc;
    doc["z_min"] = b.z_min;
    doc["z_max"] = b.z_max;
    return doc.dump(2) + "\n";
}

RunningBounds bounds_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("bounds document: ") + e.what());
    }
    RunningBounds b;
    try {
        b.z_min = doc.at("z_min").get<RewardVector>();
        b.z_max = doc.at("z_max").get<RewardVector>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bounds document: ") + e.what());
    }
    if (b.z_min.size() != b.z_max.size() || b.z_min.empty()) {
        throw ParseError("bounds document: mismatched z_min / z_max");
    }
    return b;
}

SynthEnv resolve_env(const RunConfig& cfg) {
    if (cfg.env_spec.empty()) return SynthEnv::default_two_objective();
    return env_from_json(read_file(cfg.env_spec, "environment spec"));
}

UtilityEnsemble load_ensemble_file(const OutPaths& out, const RunConfig& cfg) {
    return ensemble_from_json(read_file(out.ensemble(), "ensemble"), cfg.k);
}

std::string stats_csv(const std::vector<IterationStats>& stats, std::size_t m) {
    std::string csv = "iter,accept_rate";
    for (std::size_t i = 0; i < m; ++i) csv += ",mean_utility_token_" + std::to_string(i);
    csv += "\n";
    for (std::size_t it = 0; it < stats.size(); ++it) {
        csv += std::to_string(it) + "," + fmt(stats[it].accept_rate);
        for (std::size_t i = 0; i < m; ++i) {
            csv += "," + fmt(stats[it].mean_utility_per_token[i]);
        }
        csv += "\n";
    }
    return csv;
}

// --- subcommands -----------------------------------------------------------

int cmd_train_utilities(const RunConfig& cfg) {
    const OutPaths out(cfg.out_dir);
    std::string log = "step,member,l_val,l_grad,objective\n";
    const auto ensemble = train_ensemble(cfg.ensemble_config(), [&](const TrainLogRow& r) {
        log += std::to_string(r.step) + "," + std::to_string(r.member) + "," +
               fmt(r.l_val) + "," + fmt(r.l_grad) + "," + fmt(r.objective) + "\n";
    });
    write_file(out.ensemble(), ensemble_to_json(ensemble));
    write_file(out.train_log(), log);
    std::cout << "trained " << ensemble.size() << " utilities (k=" << cfg.k
              << ", steps=" << cfg.steps << ") -> " << out.ensemble() << "\n";
    return 0;
}

int cmd_label(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ConfigError("label: paths.input is required");
    const OutPaths out(cfg.out_dir);
    const auto ensemble = load_ensemble_file(out, cfg);

    require_file(cfg.input, "input dataset");
    std::ifstream in(cfg.input);
    if (!in) throw ConfigError("cannot open input \"" + cfg.input + "\"");
    const auto samples = read_raw_jsonl(in, cfg.k);
    if (samples.empty()) throw DataError("label: input has no records");

    RunningBounds bounds;
    for (const auto& s : samples) bounds.update(s.rewards);

    const auto result = label_dataset(samples, ensemble, bounds, cfg.token);

    std::ostringstream labeled;
    write_labeled_jsonl(result.samples, labeled);
    write_file(out.labeled(), labeled.str());
    write_file(out.percentiles(), percentile_table_to_json(result.table));
    write_file(out.bounds(), bounds_to_json(bounds));

    std::map<char, std::size_t> histogram;
    for (const auto& s : result.samples) histogram[index_to_letter(s.chosen_index)]++;
    std::cout << "labeled " << result.samples.size() << " records;";
    for (const auto& [letter, count] : histogram) {
        std::cout << " " << letter << ":" << count;
    }
    std::cout << "\n";
    return 0;
}

int cmd_train_policy(const RunConfig& cfg) {
    const OutPaths out(cfg.out_dir);
    const auto ensemble = load_ensemble_file(out, cfg);
    const auto env = resolve_env(cfg);

    const auto pipeline = run_training_pipeline(env, ensemble, cfg.sim, cfg.seed, cfg.token);

    for (std::size_t a = 0; a < pipeline.arms.size(); ++a) {
        write_file(out.policy_arm(a), policy_to_json(pipeline.arms[a]));
    }
    write_file(out.policy(), policy_to_json(pipeline.arms.back()));
    write_file(out.policy_stats(), stats_csv(pipeline.stats, ensemble.size()));
    write_file(out.bounds(), bounds_to_json(pipeline.bounds));

    std::ostringstream labeled;
    write_labeled_jsonl(pipeline.offline_labeled, labeled);
    write_file(out.offline_labeled(), labeled.str());

    std::cout << "offline stage + " << cfg.sim.online_iters << " online iteration(s); "
              << pipeline.arms.size() << " policy arm(s) -> " << out.policy() << "\n";
    return 0;
}

int cmd_infer(const RunConfig& cfg, const std::string& preference_csv,
              const std::string& prompt) {
    if (preference_csv.empty()) throw ConfigError("infer: --preference is required");
    const OutPaths out(cfg.out_dir);
    const auto ensemble = load_ensemble_file(out, cfg);
    const auto bounds = bounds_from_json(read_file(out.bounds(), "bounds"));

    PreferenceVector w;
    std::stringstream ss(preference_csv);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t pos = 0;
            w.w.push_back(std::stod(part, &pos));
            if (pos != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("infer: cannot parse preference component \"" + part + "\"");
        }
    }
    if (w.w.size() != static_cast<std::size_t>(cfg.k)) {
        throw ConfigError("infer: preference has " + std::to_string(w.w.size()) +
                          " components, k = " + std::to_string(cfg.k));
    }

    const auto params = NormalizationParams::from_bounds(bounds);
    const auto rb = RewardBounds::from_running(bounds);
    const auto res = run_inference(prompt, w, rb, ensemble, params, cfg.token);
    if (res.clamped) {
        std::cerr << "warning: normalized target left [0,1], clamped\n";
    }

    nlohmann::ordered_json doc;
    doc["index"] = res.index;
    doc["letter"] = std::string(1, res.letter);
    doc["prompt"] = res.prompt;
    doc["z_target"] = res.z_target;
    doc["clamped"] = res.clamped;
    std::cout << doc.dump() << "\n";
    return 0;
}

std::string arm_label(std::size_t arm) {
    return arm == 0 ? std::string("offline") : "iter" + std::to_string(arm);
}

int eval_pareto(const RunConfig& cfg, const OutPaths& out) {
    const auto ensemble = load_ensemble_file(out, cfg);
    const auto env = resolve_env(cfg);
    const auto bounds = bounds_from_json(read_file(out.bounds(), "bounds"));

    std::vector<ConditionedPolicy> arms;
    for (std::size_t a = 0;; ++a) {
        const auto path = out.policy_arm(a);
        if (!fs::exists(path)) break;
        arms.push_back(policy_from_json(read_file(path, "policy arm")));
    }
    if (arms.empty()) {
        arms.push_back(policy_from_json(read_file(out.policy(), "policy")));
    }

    const auto prefs = make_preference_grid(cfg.k, cfg.n_preferences, cfg.seed);
    std::vector<std::vector<RewardVector>> points_per_arm;
    for (const auto& arm : arms) {
        Rng rng(cfg.seed + 1000003); // common random numbers across arms
        points_per_arm.push_back(
            sweep_pareto(arm, env, ensemble, bounds, prefs, cfg.sim.eval_samples, rng));
    }

    std::string csv = "arm,preference_index";
    for (int i = 0; i < cfg.k; ++i) csv += ",w_" + std::to_string(i);
    for (int i = 0; i < cfg.k; ++i) csv += ",mean_reward_" + std::to_string(i);
    csv += "\n";
    for (std::size_t a = 0; a < arms.size(); ++a) {
        for (std::size_t p = 0; p < prefs.size(); ++p) {
            csv += arm_label(a) + "," + std::to_string(p);
            for (double v : prefs[p].w) csv += "," + fmt(v);
            for (double v : points_per_arm[a][p]) csv += "," + fmt(v);
            csv += "\n";
        }
    }
    write_file(out.points("pareto"), csv);

    nlohmann::ordered_json report;
    report["metric"] = "pareto";
    report["n_preferences"] = cfg.n_preferences;
    report["seed"] = cfg.seed;
    if (cfg.k == 2) {
        const auto hv = shared_ref_hypervolumes(points_per_arm);
        report["arms"] = nlohmann::ordered_json::array();
        for (std::size_t a = 0; a < arms.size(); ++a) {
            nlohmann::ordered_json ja;
            ja["arm"] = arm_label(a);
            ja["hypervolume"] = hv[a];
            report["arms"].push_back(std::move(ja));
        }

        std::vector<SvgSeries> series;
        for (std::size_t a = 0; a < arms.size(); ++a) {
            SvgSeries s;
            s.label = arm_label(a);
            for (const auto& p : pareto_front(points_per_arm[a])) {
                s.points.push_back({p[0], p[1]});
            }
            series.push_back(std::move(s));
        }
        write_file(out.svg("pareto"),
                   render_line_chart(series, "mean reward 0", "mean reward 1"));
    }
    report["generated_at"] = iso8601_utc_now();
    write_file(out.report("pareto"), report.dump(2) + "\n");
    std::cout << "pareto: " << arms.size() << " arm(s) x " << prefs.size()
              << " preferences -> " << out.points("pareto") << "\n";
    return 0;
}

int eval_consistency(const RunConfig& cfg, const OutPaths& out) {
    const auto ensemble = load_ensemble_file(out, cfg);
    const auto env = resolve_env(cfg);
    const auto bounds = bounds_from_json(read_file(out.bounds(), "bounds"));
    const auto policy = policy_from_json(read_file(out.policy(), "policy"));

    const std::size_t token = std::min(cfg.consistency_token, ensemble.size() - 1);
    Rng rng(cfg.seed + 2000003);
    const auto means =
        evaluate_consistency(policy, env, ensemble, bounds, token, cfg.sim.eval_samples, rng);

    std::string csv = "utility,mean_normalized_score\n";
    for (std::size_t i = 0; i < means.size(); ++i) {
        csv += std::to_string(i) + "," + fmt(means[i]) + "\n";
    }
    write_file(out.points("consistency"), csv);

    SvgSeries series{"token " + std::to_string(token), {}};
    for (std::size_t i = 0; i < means.size(); ++i) {
        series.points.push_back({static_cast<double>(i), means[i]});
    }
    write_file(out.svg("consistency"),
               render_line_chart({series}, "utility index", "mean normalized score"));

    nlohmann::ordered_json report;
    report["metric"] = "consistency";
    report["token_index"] = token;
    report["means"] = means;
    report["seed"] = cfg.seed;
    report["generated_at"] = iso8601_utc_now();
    write_file(out.report("consistency"), report.dump(2) + "\n");
    std::cout << "consistency: token " << token << ", " << means.size() << " means -> "
              << out.report("consistency") << "\n";
    return 0;
}

int eval_distributional(const RunConfig& cfg, const OutPaths& out,
                        const std::string& metric) {
    const auto ensemble = load_ensemble_file(out, cfg);
    const auto env = resolve_env(cfg);
    const auto policy = policy_from_json(read_file(out.policy(), "policy"));

    // One sample set per conditioning token: the policy family under test.
    Rng gen_rng(cfg.seed + 3000003);
    std::vector<PolicySampleSet> sets;
    for (std::size_t t = 0; t < policy.m_tokens; ++t) {
        PolicySampleSet set;
        set.policy_id = "token_" + std::to_string(t);
        for (std::size_t i = 0; i < cfg.sim.eval_samples; ++i) {
            const int style = static_cast<int>(policy.sample_style(t, gen_rng));
            set.samples.push_back(sample_response(env, style, gen_rng));
        }
        sets.push_back(std::move(set));
    }
    std::vector<RewardVector> pool;
    for (const auto& s : sets) pool.insert(pool.end(), s.samples.begin(), s.samples.end());

    Rng metric_rng(cfg.seed + 4000003);
    const auto constraints = gen_constraints(cfg.m_constraints, cfg.n_rows, pool, metric_rng);
    const auto weights =
        gen_variance_weights(cfg.m_constraints, static_cast<std::size_t>(cfg.k),
                             cfg.variance_sign, metric_rng);

    const double cs = constraint_satisfaction(sets, constraints);
    const double vo = variance_objective(sets, weights);

    // Table-5 style rows: each policy set scored on its own.
    std::string csv = "policy_id,constraint_satisfaction,variance_objective\n";
    for (const auto& set : sets) {
        double cs_own = 0.0;
        for (const auto& c : constraints) cs_own += constraint_satisfaction_u(c, set);
        cs_own /= static_cast<double>(constraints.size());
        double vo_own = 0.0;
        for (const auto& w : weights) vo_own += variance_objective_u(w, set);
        vo_own /= static_cast<double>(weights.size());
        csv += set.policy_id + "," + fmt(cs_own) + "," + fmt(vo_own) + "\n";
    }
    write_file(out.points(metric), csv);

    nlohmann::ordered_json report;
    report["constraint_satisfaction"] = cs;
    report["variance_objective"] = vo;
    report["m"] = cfg.m_constraints;
    report["seed"] = cfg.seed;
    report["generated_at"] = iso8601_utc_now();
    write_file(out.report(metric), report.dump(2) + "\n");
    std::cout << metric << ": constraint_satisfaction=" << fmt(cs)
              << " variance_objective=" << fmt(vo) << " -> " << out.report(metric) << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& metric) {
    const OutPaths out(cfg.out_dir);
    if (metric == "pareto") return eval_pareto(cfg, out);
    if (metric == "consistency") return eval_consistency(cfg, out);
    if (metric == "constraints" || metric == "variance") {
        return eval_distributional(cfg, out, metric);
    }
    throw ConfigError("eval: unknown metric \"" + metric +
                      "\" (expected pareto|constraints|variance|consistency)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Utility-conditioned multi-objective alignment pipeline"};
    app.fallthrough();

    std::string config_path;
    std::string out_dir;
    std::string preference_csv;
    std::string prompt;
    std::string metric;
    std::uint64_t seed_flag = 0;
    int online_iters_flag = -1;

    app.add_option("--config", config_path, "JSON run configuration");
    auto* seed_opt = app.add_option("--seed", seed_flag, "override the run seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--online-iters", online_iters_flag, "override simulator online_iters");

    auto* train_utilities =
        app.add_subcommand("train-utilities", "train the diversity-promoting ensemble");
    auto* label = app.add_subcommand("label", "label a JSONL dataset with utility tokens");
    auto* train_policy =
        app.add_subcommand("train-policy", "offline + online conditioned training");
    auto* infer = app.add_subcommand("infer", "map a preference vector to a prompt");
    infer->add_option("--preference", preference_csv, "comma-separated weights in [0,1]");
    infer->add_option("--prompt", prompt, "prompt text to augment");
    auto* eval = app.add_subcommand("eval", "emit metric reports and plots");
    eval->add_option("--metric", metric, "pareto|constraints|variance|consistency");

    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = RunConfig::from_file(config_path);

        // Precedence: --seed flag, then UCMOA_SEED, then the config value.
        if (const char* env_seed = std::getenv("UCMOA_SEED")) {
            try {
                cfg.seed = std::stoull(env_seed);
            } catch (const std::exception&) {
                throw ConfigError("UCMOA_SEED is not an integer: \"" +
                                  std::string(env_seed) + "\"");
            }
        }
        if (seed_opt->count() > 0) cfg.seed = seed_flag;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (online_iters_flag >= 0) cfg.sim.online_iters = online_iters_flag;

        if (train_utilities->parsed()) return cmd_train_utilities(cfg);
        if (label->parsed()) return cmd_label(cfg);
        if (train_policy->parsed()) return cmd_train_policy(cfg);
        if (infer->parsed()) return cmd_infer(cfg, preference_csv, prompt);
        if (eval->parsed()) return cmd_eval(cfg, metric);
        throw ConfigError("no subcommand selected");
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
