#include <doctest.h>

#include <algorithm>
#include <sstream>
#include <vector>

#include "ucmoa/errors.hpp"
#include "ucmoa/labeler.hpp"

using namespace ucmoa;

namespace {

UtilityEnsemble tiny_ensemble(int m, int k, std::uint64_t seed) {
    EnsembleConfig cfg;
    cfg.k = k;
    cfg.m_utilities = m;
    cfg.steps = 60;
    cfg.batch = 16;
    cfg.pair_batch = 8;
    cfg.hidden_width = 6;
    cfg.seed = seed;
    return train_ensemble(cfg);
}

std::vector<RawSample> random_samples(std::size_t n, int k, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<RawSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        RawSample s;
        s.prompt_id = "p" + std::to_string(i);
        s.prompt = "prompt " + std::to_string(i);
        s.response = "response " + std::to_string(i);
        s.rewards.resize(static_cast<std::size_t>(k));
        for (auto& r : s.rewards) r = rng.uniform(-4.0, 9.0);
        out.push_back(std::move(s));
    }
    return out;
}

RunningBounds bounds_of(const std::vector<RawSample>& samples) {
    RunningBounds b;
    for (const auto& s : samples) b.update(s.rewards);
    return b;
}

} // namespace

TEST_CASE("index_to_letter: alphabet mapping with a cap at 26") {
    CHECK(index_to_letter(0) == 'a');
    CHECK(index_to_letter(2) == 'c');
    CHECK(index_to_letter(8) == 'i');
    CHECK(index_to_letter(25) == 'z');
    CHECK_THROWS_AS(index_to_letter(26), ConfigError);
}

TEST_CASE("augment_prompt: exact byte layout") {
    CHECK(augment_prompt("hi", 2, "<max_utility_idx>") ==
          "### Prompt: hi <max_utility_idx> c");
    CHECK(augment_prompt("", 0, "<max_utility_idx>") ==
          "### Prompt:  <max_utility_idx> a");
    CHECK_THROWS_AS(augment_prompt("hi", 0, ""), ConfigError);
}

TEST_CASE("augment_prompt round-trips through the suffix parser") {
    const std::string token = "<max_utility_idx>";
    for (std::size_t i : {std::size_t{0}, std::size_t{2}, std::size_t{8}, std::size_t{25}}) {
        const auto prompt = augment_prompt("what is up", i, token);
        const auto parsed = parse_prompt_index(prompt, token);
        REQUIRE(parsed.has_value());
        CHECK(*parsed == i);
    }
    CHECK(!parse_prompt_index("no token here", token).has_value());
}

TEST_CASE("label_dataset: N=1 degenerate case") {
    const auto ensemble = tiny_ensemble(4, 2, 21);
    std::vector<RawSample> one = random_samples(1, 2, 22);
    RunningBounds b;
    b.update(one[0].rewards);
    b.update({one[0].rewards[0] + 1.0, one[0].rewards[1] + 1.0}); // avoid d = 0

    const auto res = label_dataset(one, ensemble, b);
    REQUIRE(res.samples.size() == 1);
    for (double p : res.samples[0].percentiles) CHECK(p == 1.0);
    CHECK(res.samples[0].chosen_index == 0); // tie-break to the lowest index
    CHECK(res.samples[0].augmented_prompt ==
          augment_prompt(one[0].prompt, 0, kDefaultToken));
}

TEST_CASE("label_dataset matches a brute-force recomputation") {
    const auto ensemble = tiny_ensemble(5, 2, 31);
    const auto samples = random_samples(40, 2, 32);
    const auto bounds = bounds_of(samples);
    const auto res = label_dataset(samples, ensemble, bounds);
    REQUIRE(res.samples.size() == samples.size());

    const auto params = NormalizationParams::from_bounds(bounds);
    // Brute force: recompute utilities and count-based percentiles per sample.
    std::vector<std::vector<double>> all_utils(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        all_utils[s] = ensemble.evaluate(params.normalize(samples[s].rewards));
    }
    for (std::size_t s = 0; s < samples.size(); ++s) {
        std::size_t best_i = 0;
        double best_p = -1.0;
        for (std::size_t i = 0; i < ensemble.size(); ++i) {
            std::size_t count = 0;
            for (std::size_t t = 0; t < samples.size(); ++t) {
                if (all_utils[t][i] <= all_utils[s][i]) ++count;
            }
            const double perc = static_cast<double>(count) /
                                static_cast<double>(samples.size());
            CHECK(res.samples[s].percentiles[i] == doctest::Approx(perc).epsilon(1e-15));
            if (perc > best_p) {
                best_p = perc;
                best_i = i;
            }
        }
        CHECK(res.samples[s].chosen_index == best_i);
        CHECK(res.samples[s].augmented_prompt.back() == index_to_letter(best_i));
    }
}

TEST_CASE("label_dataset is deterministic and permutation-equivariant") {
    const auto ensemble = tiny_ensemble(4, 2, 41);
    const auto samples = random_samples(30, 2, 42);
    const auto bounds = bounds_of(samples);

    const auto r1 = label_dataset(samples, ensemble, bounds);
    const auto r2 = label_dataset(samples, ensemble, bounds);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        CHECK(r1.samples[s].chosen_index == r2.samples[s].chosen_index);
        CHECK(r1.samples[s].utilities == r2.samples[s].utilities);
    }

    // Reversed inputs give identically reversed outputs.
    std::vector<RawSample> reversed(samples.rbegin(), samples.rend());
    const auto r3 = label_dataset(reversed, ensemble, bounds);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& a = r1.samples[s];
        const auto& b = r3.samples[samples.size() - 1 - s];
        CHECK(a.prompt_id == b.prompt_id);
        CHECK(a.chosen_index == b.chosen_index);
        CHECK(a.percentiles == b.percentiles);
    }
}

TEST_CASE("label_dataset: at least two distinct labels on a diverse ensemble") {
    const auto ensemble = tiny_ensemble(6, 2, 51);
    const auto samples = random_samples(200, 2, 52);
    const auto res = label_dataset(samples, ensemble, bounds_of(samples));

    std::vector<bool> seen(ensemble.size(), false);
    for (const auto& s : res.samples) seen[s.chosen_index] = true;
    CHECK(std::count(seen.begin(), seen.end(), true) >= 2);
}

TEST_CASE("label_dataset input validation") {
    const auto ensemble = tiny_ensemble(3, 2, 61);
    CHECK_THROWS_AS(label_dataset({}, ensemble, RunningBounds{}), DataError);

    auto samples = random_samples(3, 2, 62);
    samples[1].rewards.pop_back(); // K mismatch
    RunningBounds b;
    b.update({0.0, 0.0});
    b.update({1.0, 1.0});
    CHECK_THROWS_AS(label_dataset(samples, ensemble, b), ShapeError);
}

TEST_CASE("JSONL round trip and line-numbered errors") {
    const auto ensemble = tiny_ensemble(3, 2, 71);
    const auto samples = random_samples(5, 2, 72);
    const auto res = label_dataset(samples, ensemble, bounds_of(samples));

    std::stringstream out;
    write_labeled_jsonl(res.samples, out);
    std::stringstream in(out.str());
    const auto back = read_labeled_jsonl(in);
    REQUIRE(back.size() == res.samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].prompt_id == res.samples[i].prompt_id);
        CHECK(back[i].rewards == res.samples[i].rewards);
        CHECK(back[i].utilities == res.samples[i].utilities);
        CHECK(back[i].chosen_index == res.samples[i].chosen_index);
        CHECK(back[i].augmented_prompt == res.samples[i].augmented_prompt);
    }

    std::stringstream raw_in(
        "{\"prompt_id\":\"a\",\"prompt\":\"x\",\"response\":\"y\",\"rewards\":[1,2]}\n"
        "{\"prompt_id\":\"b\",\"prompt\":\"x\",\"response\":\"y\",\"rewards\":[1]}\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(read_raw_jsonl(raw_in, 2)),
                         doctest::Contains("line 2"), ShapeError);

    std::stringstream broken("{\"prompt_id\":\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(read_raw_jsonl(broken, 2)),
                         doctest::Contains("line 1"), ParseError);
}
