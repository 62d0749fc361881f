#include "ucmoa/labeler.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "ucmoa/errors.hpp"

namespace ucmoa {

char index_to_letter(std::size_t i) {
    if (i > 25) {
        throw ConfigError("index_to_letter: index " + std::to_string(i) +
                          " not representable (letter encoding caps M at 26)");
    }
    return static_cast<char>('a' + i);
}

std::string augment_prompt(const std::string& x, std::size_t i, const std::string& token) {
    if (token.empty()) throw ConfigError("augment_prompt: token must be non-empty");
    std::string out = "### Prompt: ";
    out += x;
    out += ' ';
    out += token;
    out += ' ';
    out += index_to_letter(i);
    return out;
}

std::optional<std::size_t> parse_prompt_index(const std::string& augmented,
                                              const std::string& token) {
    // Expect "... {token} {letter}" at the very end.
    if (augmented.size() < token.size() + 3) return std::nullopt;
    const std::size_t letter_pos = augmented.size() - 1;
    const char letter = augmented[letter_pos];
    if (letter < 'a' || letter > 'z') return std::nullopt;
    if (augmented[letter_pos - 1] != ' ') return std::nullopt;
    const std::size_t tok_pos = letter_pos - 1 - token.size();
    if (augmented.compare(tok_pos, token.size(), token) != 0) return std::nullopt;
    if (tok_pos == 0 || augmented[tok_pos - 1] != ' ') return std::nullopt;
    return static_cast<std::size_t>(letter - 'a');
}

LabelResult label_dataset(const std::vector<RawSample>& samples,
                          const UtilityEnsemble& ensemble,
                          const RunningBounds& bounds,
                          const std::string& token) {
    if (samples.empty()) throw DataError("label_dataset: empty dataset");
    const std::size_t m = ensemble.size();
    if (m == 0) throw ConfigError("label_dataset: empty ensemble");

    const auto params = NormalizationParams::from_bounds(bounds);

    std::vector<LabeledSample> out;
    out.reserve(samples.size());
    std::vector<std::vector<double>> scores(m, std::vector<double>(samples.size()));

    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& raw = samples[s];
        if (static_cast<int>(raw.rewards.size()) != ensemble.k) {
            throw ShapeError("label_dataset: sample \"" + raw.prompt_id + "\" has " +
                             std::to_string(raw.rewards.size()) +
                             " rewards, ensemble expects " + std::to_string(ensemble.k));
        }
        LabeledSample ls;
        ls.prompt_id = raw.prompt_id;
        ls.prompt = raw.prompt;
        ls.response = raw.response;
        ls.rewards = raw.rewards;
        ls.style = raw.style;
        ls.normalized_rewards = params.normalize(raw.rewards);
        ls.utilities = ensemble.evaluate(ls.normalized_rewards);
        for (std::size_t i = 0; i < m; ++i) scores[i][s] = ls.utilities[i];
        out.push_back(std::move(ls));
    }

    PercentileTable table(scores);

    for (auto& ls : out) {
        ls.percentiles.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            ls.percentiles[i] = table.percentile_rank(i, ls.utilities[i]);
        }
        ls.chosen_index = select_max_index(ls.percentiles);
        ls.augmented_prompt = augment_prompt(ls.prompt, ls.chosen_index, token);
    }
    return LabelResult{std::move(out), std::move(table)};
}

namespace {

RewardVector finite_rewards(const nlohmann::json& doc, std::size_t line) {
    auto rewards = doc.at("rewards").get<RewardVector>();
    for (double r : rewards) {
        if (!std::isfinite(r)) {
            throw DataError("line " + std::to_string(line) + ": non-finite reward");
        }
    }
    return rewards;
}

} // namespace

std::vector<RawSample> read_raw_jsonl(std::istream& in, int expected_k) {
    std::vector<RawSample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        RawSample s;
        try {
            s.prompt_id = doc.at("prompt_id").get<std::string>();
            s.prompt = doc.at("prompt").get<std::string>();
            s.response = doc.at("response").get<std::string>();
            s.rewards = finite_rewards(doc, lineno);
            if (doc.contains("style")) s.style = doc.at("style").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (expected_k >= 0 && s.rewards.size() != static_cast<std::size_t>(expected_k)) {
            throw ShapeError("line " + std::to_string(lineno) + ": record has " +
                             std::to_string(s.rewards.size()) + " rewards, expected " +
                             std::to_string(expected_k));
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

namespace {

nlohmann::ordered_json labeled_to_json(const LabeledSample& s) {
    nlohmann::ordered_json doc;
    doc["prompt_id"] = s.prompt_id;
    doc["prompt"] = s.prompt;
    doc["response"] = s.response;
    doc["rewards"] = s.rewards;
    if (s.style) doc["style"] = *s.style;
    doc["normalized_rewards"] = s.normalized_rewards;
    doc["utilities"] = s.utilities;
    doc["percentiles"] = s.percentiles;
    doc["chosen_index"] = s.chosen_index;
    doc["augmented_prompt"] = s.augmented_prompt;
    return doc;
}

} // namespace

void write_labeled_jsonl(const std::vector<LabeledSample>& samples, std::ostream& out) {
    for (const auto& s : samples) out << labeled_to_json(s).dump() << '\n';
}

std::vector<LabeledSample> read_labeled_jsonl(std::istream& in) {
    std::vector<LabeledSample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        LabeledSample s;
        try {
            s.prompt_id = doc.at("prompt_id").get<std::string>();
            s.prompt = doc.at("prompt").get<std::string>();
            s.response = doc.at("response").get<std::string>();
            s.rewards = doc.at("rewards").get<RewardVector>();
            if (doc.contains("style")) s.style = doc.at("style").get<int>();
            s.normalized_rewards = doc.at("normalized_rewards").get<RewardVector>();
            s.utilities = doc.at("utilities").get<std::vector<double>>();
            s.percentiles = doc.at("percentiles").get<std::vector<double>>();
            s.chosen_index = doc.at("chosen_index").get<std::size_t>();
            s.augmented_prompt = doc.at("augmented_prompt").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

} // namespace ucmoa
