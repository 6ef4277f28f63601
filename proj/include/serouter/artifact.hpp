#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "serouter/routers.hpp"

namespace serouter {

inline constexpr int kArtifactFormatVersion = 1;

// Router artifact layout, two newline-terminated JSON lines:
//
//   {"checksum":"<crc32 hex>","embedding_dim":N,"format_version":1,"router_kind":"MF","seed":S}
//   {...router parameters...}
//
// The checksum is CRC-32 (zlib polynomial) over the exact bytes of the second
// line, excluding its trailing newline. Readers reject a newer format_version
// before checking anything else.
struct ArtifactHeader {
  int format_version = kArtifactFormatVersion;
  RouterKind router_kind = RouterKind::Random;
  std::size_t embedding_dim = 0;
  std::uint64_t seed = 0;
  std::string checksum;
};

std::string serialize_model(const Router& router);
std::unique_ptr<Router> deserialize_model(const std::string& bytes, ArtifactHeader* header = nullptr);

void save_model(const Router& router, const std::string& path);
// MissingInput, UnsupportedVersion or CorruptArtifact on failure.
std::unique_ptr<Router> load_model(const std::string& path, ArtifactHeader* header = nullptr);

std::string crc32_hex(const std::string& bytes);

}  // namespace serouter
