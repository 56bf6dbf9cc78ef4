#include "aqp/artifacts.hpp"

#include <fstream>
#include <sstream>

#include "aqp/hash.hpp"

namespace aqp {

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw Error(ErrorCode::Io, "short write to '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t file_hash(const std::filesystem::path& path) { return fnv1a64(read_text(path)); }

std::string format_jsonl(const nlohmann::json& header, std::span<const nlohmann::json> records) {
  std::string out = nlohmann::json{{"header", header}}.dump();
  out += '\n';
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const nlohmann::json& header,
                 std::span<const nlohmann::json> records) {
  atomic_write(path, format_jsonl(header, records));
}

JsonlFile read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  JsonlFile file;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (lineno == 1 && j.is_object() && j.contains("header"))
      file.header = j.at("header");
    else
      file.records.push_back(std::move(j));
  }
  return file;
}

std::vector<nlohmann::json> to_records(std::span<const FlatQuery> queries) {
  std::vector<nlohmann::json> out;
  out.reserve(queries.size());
  for (const auto& q : queries) {
    auto j = to_json(q);
    j["label"] = nullptr;
    j["support"] = nullptr;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<nlohmann::json> to_records(std::span<const LabeledQuery> queries) {
  std::vector<nlohmann::json> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(to_json(q));
  return out;
}

std::vector<FlatQuery> queries_from_records(std::span<const nlohmann::json> records) {
  std::vector<FlatQuery> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(flat_query_from_json(r));
  return out;
}

std::vector<LabeledQuery> labeled_from_records(std::span<const nlohmann::json> records) {
  std::vector<LabeledQuery> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto q = labeled_query_from_json(records[i]);
    if (!q) throw Error(ErrorCode::ParseError, "record " + std::to_string(i + 1) + " has no label");
    out.push_back(std::move(*q));
  }
  return out;
}

std::string slug(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

}  // namespace aqp
