#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace serouter {

inline constexpr int kStageFormatVersion = 1;

// Stage files carry a first-line header {"stage": ..., "format_version": 1, ...}
// so a consumer can check which pipeline stage produced its input.
struct JsonlFile {
  nlohmann::json header;  // null when the file has no header line
  std::vector<nlohmann::json> rows;
};

nlohmann::json stage_header(std::string_view stage);

// Writes through a temporary file and renames, so readers never see a partial file.
void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);  // MissingInput naming the path

void write_jsonl(const std::string& path, const nlohmann::json& header, const std::vector<nlohmann::json>& rows);

// With expected_stage set, the header is mandatory and must match (StageMismatch).
// Without it, a header line is optional and recognized by its "stage" key.
JsonlFile read_jsonl(const std::string& path, std::optional<std::string_view> expected_stage = std::nullopt);

}  // namespace serouter
