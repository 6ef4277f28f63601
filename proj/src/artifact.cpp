#include "serouter/artifact.hpp"

#include <cstdio>

#include <zlib.h>

#include "serouter/errors.hpp"
#include "serouter/jsonl.hpp"

namespace serouter {

std::string crc32_hex(const std::string& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

std::string serialize_model(const Router& router) {
  std::string payload = router.parameters().dump();
  nlohmann::json header = {{"format_version", kArtifactFormatVersion},
                           {"router_kind", to_string(router.kind())},
                           {"embedding_dim", router.embedding_dim()},
                           {"seed", router.seed()},
                           {"checksum", crc32_hex(payload)}};
  return header.dump() + "\n" + payload + "\n";
}

std::unique_ptr<Router> deserialize_model(const std::string& bytes, ArtifactHeader* header_out) {
  auto corrupt = [](const std::string& why) { return Error(ErrorCode::CorruptArtifact, why); };
  auto first_newline = bytes.find('\n');
  if (first_newline == std::string::npos) throw corrupt("missing header line");
  auto header_json = nlohmann::json::parse(bytes.substr(0, first_newline), nullptr, false);
  if (header_json.is_discarded() || !header_json.is_object()) throw corrupt("header is not a JSON object");

  ArtifactHeader header;
  try {
    header.format_version = header_json.at("format_version").get<int>();
    if (header.format_version > kArtifactFormatVersion || header.format_version < 1) {
      throw Error(ErrorCode::UnsupportedVersion,
                  "artifact format_version " + std::to_string(header.format_version) + " (supported: 1)");
    }
    header.router_kind = parse_router_kind(header_json.at("router_kind").get<std::string>());
    header.embedding_dim = header_json.at("embedding_dim").get<std::size_t>();
    header.seed = header_json.at("seed").get<std::uint64_t>();
    header.checksum = header_json.at("checksum").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("bad header: ") + e.what());
  }

  std::string payload = bytes.substr(first_newline + 1);
  if (payload.empty() || payload.back() != '\n') throw corrupt("payload is truncated");
  payload.pop_back();
  if (crc32_hex(payload) != header.checksum) throw corrupt("checksum mismatch");
  auto params = nlohmann::json::parse(payload, nullptr, false);
  if (params.is_discarded()) throw corrupt("payload is not JSON");

  std::unique_ptr<Router> router;
  try {
    switch (header.router_kind) {
      case RouterKind::SW: router = SwRouter::from_parameters(params); break;
      case RouterKind::MF: router = MfRouter::from_parameters(params, header.seed); break;
      case RouterKind::MLP: router = MlpRouter::from_parameters(params, header.seed); break;
      case RouterKind::KNN: router = KnnRouter::from_parameters(params); break;
      case RouterKind::Random: router = std::make_unique<RandomRouter>(header.seed); break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("bad parameters: ") + e.what());
  }
  if (router->embedding_dim() != header.embedding_dim) throw corrupt("embedding_dim does not match parameters");
  if (header_out) *header_out = header;
  return router;
}

void save_model(const Router& router, const std::string& path) { write_text_file(path, serialize_model(router)); }

std::unique_ptr<Router> load_model(const std::string& path, ArtifactHeader* header) {
  return deserialize_model(read_text_file(path), header);
}

}  // namespace serouter
