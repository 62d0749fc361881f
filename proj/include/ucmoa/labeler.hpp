#ifndef UCMOA_LABELER_HPP
#define UCMOA_LABELER_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ucmoa/ensemble.hpp"
#include "ucmoa/reward_stats.hpp"
#include "ucmoa/types.hpp"

namespace ucmoa {

inline constexpr const char* kDefaultToken = "<max_utility_idx>";

/// One scored (prompt, response) record on the raw reward scale. The
/// response is carried opaquely; `style` is set when the sample came from
/// the synthetic environment.
struct RawSample {
    std::string prompt_id;
    std::string prompt;
    std::string response;
    RewardVector rewards;
    std::optional<int> style;
};

struct LabeledSample {
    std::string prompt_id;
    std::string prompt;
    std::string response;
    RewardVector rewards;
    std::optional<int> style;

    RewardVector normalized_rewards;
    std::vector<double> utilities;   // U_i for i = 0..M-1
    std::vector<double> percentiles; // same length
    std::size_t chosen_index = 0;    // argmax percentile
    std::string augmented_prompt;
};

/// 'a' + i. Throws ConfigError for i > 25 (the letter encoding caps M at 26).
char index_to_letter(std::size_t i);

/// "### Prompt: {x} {token} {letter}" with exactly the spaces shown.
std::string augment_prompt(const std::string& x, std::size_t i, const std::string& token);

/// Parses the " {token} {letter}" suffix back into the index; empty when the
/// prompt does not carry the token.
std::optional<std::size_t> parse_prompt_index(const std::string& augmented,
                                              const std::string& token);

struct LabelResult {
    std::vector<LabeledSample> samples; // input order
    PercentileTable table;              // N = sample count, query included
};

/// Normalizes every reward by `bounds`, scores all M utilities, ranks them
/// over the full set (Eq. 5 style), picks the argmax index per sample and
/// emits the token-augmented prompts.
LabelResult label_dataset(const std::vector<RawSample>& samples,
                          const UtilityEnsemble& ensemble,
                          const RunningBounds& bounds,
                          const std::string& token = kDefaultToken);

/// JSONL input: {"prompt_id","prompt","response","rewards"} per line, with
/// optional "style". Errors carry the 1-based line number. expected_k < 0
/// skips the dimension check.
std::vector<RawSample> read_raw_jsonl(std::istream& in, int expected_k = -1);

void write_labeled_jsonl(const std::vector<LabeledSample>& samples, std::ostream& out);
std::vector<LabeledSample> read_labeled_jsonl(std::istream& in);

} // namespace ucmoa

#endif
