#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aqp/query.hpp"

namespace aqp {

/// Writes to a sibling temporary file and renames it into place, so a failed
/// command never leaves a partial artifact behind.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);
std::uint64_t file_hash(const std::filesystem::path& path);

/// Line-delimited JSON: a `{"header": {...}}` line, then one record per line.
struct JsonlFile {
  nlohmann::json header;
  std::vector<nlohmann::json> records;
};

std::string format_jsonl(const nlohmann::json& header, std::span<const nlohmann::json> records);
void write_jsonl(const std::filesystem::path& path, const nlohmann::json& header,
                 std::span<const nlohmann::json> records);
JsonlFile read_jsonl(const std::filesystem::path& path);

std::vector<nlohmann::json> to_records(std::span<const FlatQuery> queries);
std::vector<nlohmann::json> to_records(std::span<const LabeledQuery> queries);
std::vector<FlatQuery> queries_from_records(std::span<const nlohmann::json> records);
/// Throws ParseError on records without a label.
std::vector<LabeledQuery> labeled_from_records(std::span<const nlohmann::json> records);

/// Lower-case, non-alphanumerics replaced by '_' (file names per target).
std::string slug(std::string_view text);

}  // namespace aqp
