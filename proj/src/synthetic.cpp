#include "serouter/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>

#include "serouter/errors.hpp"
#include "serouter/rng.hpp"
#include "serouter/text.hpp"

namespace serouter {
namespace {

constexpr std::array<std::string_view, 12> kSyllables = {"ka", "lo", "mi", "ra", "ten", "vos",
                                                         "dor", "bel", "qui", "zan", "sha", "um"};

constexpr std::array<std::string_view, 4> kGeoTemplates = {
    "Which river flows through the old capital city of the northern province of {}?",
    "Name the river that flows past the capital city of the mountain province of {}.",
    "What is the river crossing the old capital city in the province of {}?",
    "Through the capital city of the coastal province of {}, which river flows?",
};

constexpr std::array<std::string_view, 4> kMathTemplates = {
    "Compute the integer value of the polynomial sum for parameter {} after simplifying each term.",
    "Evaluate the polynomial expression with coefficient {} and report the integer value of the sum.",
    "Simplify and compute the integer sum of the polynomial terms when the parameter equals {}.",
    "For parameter {}, compute the polynomial sum and simplify it to an integer value.",
};

std::string pseudo_word(Rng& rng, int syllables) {
  std::string word;
  for (int i = 0; i < syllables; ++i) word += kSyllables[rng.below(kSyllables.size())];
  word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

std::string fill(std::string_view tmpl, const std::string& value) {
  std::string out(tmpl);
  out.replace(out.find("{}"), 2, value);
  return out;
}

bool is_numeric(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Six answers that never entail the reference or each other under token overlap.
std::vector<std::string> distractors(const PromptRow& row, std::uint64_t seed) {
  Rng rng(seed ^ fnv1a64(row.id) ^ 0xd15ULL);
  const bool numeric = is_numeric(row.reference_answer);
  std::set<std::string> seen{to_lower(row.reference_answer)};
  std::vector<std::string> out;
  while (out.size() < 6) {
    std::string candidate = numeric ? std::to_string(10 + rng.below(990)) : pseudo_word(rng, 3);
    if (seen.insert(to_lower(candidate)).second) out.push_back(candidate);
  }
  return out;
}

std::string surface_variant(const std::string& answer, Rng& rng) {
  const bool numeric = is_numeric(answer);
  switch (rng.below(3)) {
    case 0:
      return answer;
    case 1:
      return (numeric ? answer : to_lower(answer)) + ".";
    default: {
      std::string loud = answer;
      for (char& c : loud) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      return loud + "!";
    }
  }
}

}  // namespace

nlohmann::json to_json(const PromptRow& row) {
  nlohmann::json j{{"id", row.id}, {"prompt", row.prompt}};
  if (!row.topic.empty()) j["topic"] = row.topic;
  if (!row.reference_answer.empty()) j["reference_answer"] = row.reference_answer;
  return j;
}

PromptRow prompt_row_from_json(const nlohmann::json& j) {
  try {
    PromptRow row{j.at("id").get<std::string>(), j.at("prompt").get<std::string>(), j.value("topic", std::string{}),
                  j.value("reference_answer", std::string{})};
    Query::make(row.id, row.prompt);
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed prompt row: ") + e.what());
  }
}

std::vector<PromptRow> make_synthetic_prompts(std::size_t per_topic, std::uint64_t seed, const std::string& id_prefix) {
  Rng rng(splitmix64(seed) ^ fnv1a64(id_prefix));
  std::vector<PromptRow> rows;
  rows.reserve(per_topic * 2);
  for (std::size_t i = 0; i < per_topic; ++i) {
    for (int topic = 0; topic < 2; ++topic) {
      PromptRow row;
      row.id = id_prefix + "-" + std::to_string(rows.size());
      if (topic == 0) {
        row.topic = "geo";
        row.prompt = fill(kGeoTemplates[rng.below(kGeoTemplates.size())], pseudo_word(rng, 2 + rng.below(2)));
        row.reference_answer = pseudo_word(rng, 3);
      } else {
        row.topic = "math";
        row.prompt = fill(kMathTemplates[rng.below(kMathTemplates.size())], std::to_string(2 + rng.below(97)));
        row.reference_answer = std::to_string(10 + rng.below(990));
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

MockTopicTable default_mock_topics() {
  return {{"geo", {0.85, 0.95}}, {"math", {0.85, 0.35}}};
}

std::vector<GenerationSample> MockGenerator::sample(const PromptRow& row, Tier tier, const std::string& model_id,
                                                    std::size_t count, std::uint64_t salt) const {
  if (row.reference_answer.empty()) {
    throw Error(ErrorCode::InvalidArgument, "mock generation needs a reference_answer for prompt " + row.id);
  }
  auto topic = topics_.find(row.topic);
  const MockTopicRates rates = topic == topics_.end() ? MockTopicRates{} : topic->second;
  const double agreement = tier == Tier::Strong ? rates.strong : rates.weak;
  auto pool = distractors(row, seed_);
  Rng rng(splitmix64(seed_ ^ salt) ^ fnv1a64(row.id) ^ (fnv1a64(model_id) << 1));
  std::vector<GenerationSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string text = rng.bernoulli(agreement) ? surface_variant(row.reference_answer, rng) : pool[rng.below(pool.size())];
    const int tokens = 1 + static_cast<int>(rng.below(3));
    const double per_token = std::log(rng.uniform(0.5, 0.95));
    out.push_back(GenerationSample::make(std::move(text), per_token * tokens, tokens));
  }
  return out;
}

}  // namespace serouter
