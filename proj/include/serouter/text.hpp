#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace serouter {

std::string to_lower(std::string_view text);
std::string_view trim(std::string_view text);

// Case-folded, punctuation-stripped whitespace tokens. ASCII punctuation is
// removed; bytes >= 0x80 are kept so UTF-8 words survive intact.
std::vector<std::string> normalized_tokens(std::string_view text);

// 64-bit FNV-1a. Stable across platforms; used wherever a hash feeds output.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

// Exact-match scoring for recorded benchmark answers: normalized token
// sequences must agree, except that two purely numeric answers match when
// within 1e-6 of each other.
bool answers_match(std::string_view response, std::string_view reference);

}  // namespace serouter
