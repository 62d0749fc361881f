#include "ucmoa/reward_stats.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "ucmoa/errors.hpp"

namespace ucmoa {

void RunningBounds::update(const RewardVector& z) {
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!std::isfinite(z[i])) {
            throw DataError("update_bounds: non-finite reward component " +
                            std::to_string(i) + " = " + std::to_string(z[i]));
        }
    }
    if (empty()) {
        z_min = z;
        z_max = z;
        return;
    }
    if (z.size() != k()) {
        throw ShapeError("update_bounds: reward has " + std::to_string(z.size()) +
                         " components, bounds track " + std::to_string(k()));
    }
    for (std::size_t i = 0; i < z.size(); ++i) {
        z_min[i] = std::min(z_min[i], z[i]);
        z_max[i] = std::max(z_max[i], z[i]);
    }
}

RunningBounds update_bounds(RunningBounds bounds, const RewardVector& z) {
    bounds.update(z);
    return bounds;
}

NormalizationParams NormalizationParams::from_bounds(const RunningBounds& bounds) {
    if (bounds.empty()) throw DataError("normalization: no returns tracked");
    NormalizationParams p;
    p.z_mid.resize(bounds.k());
    p.d = 0.0;
    for (std::size_t i = 0; i < bounds.k(); ++i) {
        p.z_mid[i] = 0.5 * (bounds.z_min[i] + bounds.z_max[i]);
        p.d = std::max(p.d, bounds.z_max[i] - bounds.z_min[i]);
    }
    if (p.d <= 0.0) {
        throw DataError("normalization: degenerate range (all tracked returns "
                        "identical in every dimension)");
    }
    return p;
}

RewardVector NormalizationParams::normalize(const RewardVector& z) const {
    if (z.size() != z_mid.size()) {
        throw ShapeError("normalize: reward has " + std::to_string(z.size()) +
                         " components, params expect " + std::to_string(z_mid.size()));
    }
    RewardVector out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = (z[i] - z_mid[i]) / d + 0.5;
    }
    return out;
}

PercentileTable::PercentileTable(std::vector<std::vector<double>> scores_per_utility)
    : sorted_(std::move(scores_per_utility)) {
    if (sorted_.empty()) throw StateError("percentile table: no utilities");
    n_ = sorted_[0].size();
    if (n_ == 0) throw StateError("percentile table: empty reference set");
    for (auto& seq : sorted_) {
        if (seq.size() != n_) {
            throw ShapeError("percentile table: reference sequences of unequal length");
        }
        std::sort(seq.begin(), seq.end());
    }
}

double PercentileTable::percentile_rank(std::size_t i, double score) const {
    if (i >= sorted_.size()) throw StateError("percentile_rank: utility index out of range");
    if (n_ == 0) throw StateError("percentile_rank: empty table");
    const auto& seq = sorted_[i];
    const auto rank = std::upper_bound(seq.begin(), seq.end(), score) - seq.begin();
    return static_cast<double>(rank) / static_cast<double>(n_);
}

std::size_t select_max_index(const std::vector<double>& percentiles) {
    if (percentiles.empty()) throw StateError("select_max_index: empty input");
    for (double p : percentiles) {
        if (!std::isfinite(p)) throw NumericError("select_max_index: non-finite percentile");
    }
    return static_cast<std::size_t>(
        std::max_element(percentiles.begin(), percentiles.end()) - percentiles.begin());
}

std::string percentile_table_to_json(const PercentileTable& table) {
    nlohmann::ordered_json doc;
    doc["n"] = table.n_samples();
    doc["scores"] = table.sorted_scores();
    return doc.dump(2) + "\n";
}

PercentileTable percentile_table_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("percentile table: ") + e.what());
    }
    if (!doc.contains("n") || !doc.contains("scores")) {
        throw ParseError("percentile table: missing \"n\" or \"scores\"");
    }
    auto scores = doc.at("scores").get<std::vector<std::vector<double>>>();
    PercentileTable table(std::move(scores));
    if (table.n_samples() != doc.at("n").get<std::size_t>()) {
        throw ParseError("percentile table: \"n\" disagrees with score rows");
    }
    return table;
}

} // namespace ucmoa
