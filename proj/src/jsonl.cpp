#include "serouter/jsonl.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "serouter/errors.hpp"

namespace serouter {

nlohmann::json stage_header(std::string_view stage) {
  return nlohmann::json{{"stage", stage}, {"format_version", kStageFormatVersion}};
}

void write_text_file(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingInput, path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_jsonl(const std::string& path, const nlohmann::json& header, const std::vector<nlohmann::json>& rows) {
  std::string out;
  if (!header.is_null()) out += header.dump() + "\n";
  for (const auto& row : rows) out += row.dump() + "\n";
  write_text_file(path, out);
}

JsonlFile read_jsonl(const std::string& path, std::optional<std::string_view> expected_stage) {
  std::istringstream in(read_text_file(path));
  JsonlFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto parsed = nlohmann::json::parse(line, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw Error(ErrorCode::InvalidArgument, path + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    if (file.rows.empty() && file.header.is_null() && parsed.contains("stage") &&
        parsed.contains("format_version")) {
      file.header = std::move(parsed);
      continue;
    }
    file.rows.push_back(std::move(parsed));
  }
  if (expected_stage) {
    if (file.header.is_null()) {
      throw Error(ErrorCode::StageMismatch, path + " has no stage header (expected '" + std::string(*expected_stage) + "')");
    }
    auto stage = file.header.value("stage", std::string{});
    if (stage != *expected_stage) {
      throw Error(ErrorCode::StageMismatch,
                  path + " was produced by stage '" + stage + "', expected '" + std::string(*expected_stage) + "'");
    }
  }
  if (!file.header.is_null() && file.header.value("format_version", 0) != kStageFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion, path + " has unsupported format_version");
  }
  return file;
}

}  // namespace serouter
