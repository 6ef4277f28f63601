#include "serouter/text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

namespace serouter {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_ascii_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

std::optional<double> as_number(std::string_view text) {
  std::string cleaned;
  for (char c : trim(text)) {
    if (c != ',' && c != '$') cleaned.push_back(c);
  }
  while (!cleaned.empty() && cleaned.back() == '.') cleaned.pop_back();
  if (cleaned.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), value);
  if (ec != std::errc() || ptr != cleaned.data() + cleaned.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string_view trim(std::string_view text) {
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (is_space(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (!is_ascii_punct(c)) {
      auto u = static_cast<unsigned char>(c);
      current.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool answers_match(std::string_view response, std::string_view reference) {
  auto lhs = as_number(response);
  auto rhs = as_number(reference);
  if (lhs && rhs) return std::fabs(*lhs - *rhs) <= 1e-6;
  return normalized_tokens(response) == normalized_tokens(reference);
}

}  // namespace serouter
