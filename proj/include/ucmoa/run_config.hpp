#ifndef UCMOA_RUN_CONFIG_HPP
#define UCMOA_RUN_CONFIG_HPP

#include <cstdint>
#include <string>

#include "ucmoa/ensemble.hpp"
#include "ucmoa/labeler.hpp"
#include "ucmoa/pipeline.hpp"

namespace ucmoa {

/// One reproducible run: a single JSON document plus flag overrides.
struct RunConfig {
    int k = 2;
    int m_utilities = 10;
    double mu = 0.5;
    double epsilon = 0.01;
    std::uint64_t seed = 0;
    std::string token = kDefaultToken;

    // ensemble block
    int steps = 2000;
    int batch = 64;
    int pair_batch = 32;
    double learning_rate = 1e-3;
    int hidden_width = 16;
    bool maximize_diversity = true;

    // simulator block
    std::string env_spec; // path; empty uses the bundled environment
    SimulatorConfig sim;
    std::size_t consistency_token = 8;
    std::size_t n_preferences = 11;

    // metrics block
    std::size_t m_constraints = 100;
    std::size_t n_rows = 2;
    int variance_sign = +1;

    // paths block
    std::string input;
    std::string out_dir = "out";

    EnsembleConfig ensemble_config() const;

    /// Parses the documented JSON layout over the defaults above.
    static RunConfig from_json(const std::string& text);
    static RunConfig from_file(const std::string& path);
};

} // namespace ucmoa

#endif
