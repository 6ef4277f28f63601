#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "serouter/core.hpp"

namespace serouter {

// Input prompt row: {"id","prompt"} plus optional "topic" and "reference_answer".
struct PromptRow {
  std::string id;
  std::string prompt;
  std::string topic;
  std::string reference_answer;
};

nlohmann::json to_json(const PromptRow& row);
PromptRow prompt_row_from_json(const nlohmann::json& j);

// Two-topic synthetic corpus: "geo" prompts with word answers and "math"
// prompts with numeric answers. Each topic shares a fixed vocabulary so the
// mock embedder separates the topics.
std::vector<PromptRow> make_synthetic_prompts(std::size_t per_topic, std::uint64_t seed, const std::string& id_prefix);

// Per-topic probability that a mock model emits (a surface variant of) the
// reference answer on a sampled generation.
struct MockTopicRates {
  double strong = 0.85;
  double weak = 0.5;
};
using MockTopicTable = std::map<std::string, MockTopicRates>;

MockTopicTable default_mock_topics();

// Deterministic temperature-sampling stand-in. Correct samples are case or
// punctuation variants of the reference; wrong ones come from a per-prompt
// pool of mutually non-entailing distractors.
class MockGenerator {
 public:
  MockGenerator(std::uint64_t seed, MockTopicTable topics) : seed_(seed), topics_(std::move(topics)) {}

  std::vector<GenerationSample> sample(const PromptRow& row, Tier tier, const std::string& model_id,
                                       std::size_t count, std::uint64_t salt = 0) const;

 private:
  std::uint64_t seed_;
  MockTopicTable topics_;
};

}  // namespace serouter
