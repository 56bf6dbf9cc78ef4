#include "aqp/store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace aqp {

std::string_view to_string(AttributeKind kind) noexcept {
  return kind == AttributeKind::Nominal ? "nominal" : "continuous";
}

AttributeKind parse_attribute_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "nominal" || lower == "categorical") return AttributeKind::Nominal;
  if (lower == "continuous" || lower == "numeric") return AttributeKind::Continuous;
  throw Error(ErrorCode::InvalidArgument, "unknown attribute kind '" + std::string(text) + "'");
}

// NominalColumn

NominalColumn NominalColumn::from_strings(std::span<const std::string> values) {
  NominalColumn col;
  col.ids.reserve(values.size());
  std::unordered_map<std::string, std::uint32_t> index;
  for (const auto& v : values) {
    auto [it, inserted] = index.try_emplace(v, static_cast<std::uint32_t>(col.dictionary.size()));
    if (inserted) col.dictionary.push_back(v);
    col.ids.push_back(it->second);
  }
  return col;
}

std::int64_t NominalColumn::find(std::string_view member) const {
  for (std::size_t i = 0; i < dictionary.size(); ++i)
    if (dictionary[i] == member) return static_cast<std::int64_t>(i);
  return -1;
}

// Dataset

Dataset::Dataset(std::vector<AttributeSchema> schema, std::vector<ColumnData> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  if (schema_.size() != columns_.size())
    throw Error(ErrorCode::ShapeMismatch, "schema has " + std::to_string(schema_.size()) +
                                              " attributes but " + std::to_string(columns_.size()) +
                                              " columns were supplied");
  for (std::size_t i = 0; i < schema_.size(); ++i) {
    schema_[i].index = i;
    if (!by_name_.emplace(schema_[i].name, i).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate attribute name '" + schema_[i].name + "'");
    std::size_t len = 0;
    if (schema_[i].kind == AttributeKind::Continuous) {
      auto* v = std::get_if<std::vector<double>>(&columns_[i]);
      if (!v) throw Error(ErrorCode::WrongKind, "column '" + schema_[i].name + "' is not continuous");
      len = v->size();
    } else {
      auto* v = std::get_if<NominalColumn>(&columns_[i]);
      if (!v) throw Error(ErrorCode::WrongKind, "column '" + schema_[i].name + "' is not nominal");
      for (auto id : v->ids)
        if (id >= v->dictionary.size())
          throw Error(ErrorCode::InvalidArgument,
                      "member id out of dictionary range in '" + schema_[i].name + "'");
      len = v->ids.size();
    }
    if (i == 0)
      row_count_ = len;
    else if (len != row_count_)
      throw Error(ErrorCode::ShapeMismatch, "column '" + schema_[i].name + "' has " +
                                                std::to_string(len) + " rows, expected " +
                                                std::to_string(row_count_));
  }
}

bool Dataset::has_attribute(std::string_view name) const {
  return by_name_.find(std::string(name)) != by_name_.end();
}

const AttributeSchema& Dataset::attribute(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end())
    throw Error(ErrorCode::UnknownAttribute, "no attribute named '" + std::string(name) + "'");
  return schema_[it->second];
}

std::span<const double> Dataset::continuous(std::string_view name) const {
  return continuous(attribute(name).index);
}

const NominalColumn& Dataset::nominal(std::string_view name) const {
  return nominal(attribute(name).index);
}

std::span<const double> Dataset::continuous(std::size_t index) const {
  if (schema_.at(index).kind != AttributeKind::Continuous)
    throw Error(ErrorCode::WrongKind, "attribute '" + schema_[index].name + "' is nominal");
  return std::get<std::vector<double>>(columns_[index]);
}

const NominalColumn& Dataset::nominal(std::size_t index) const {
  if (schema_.at(index).kind != AttributeKind::Nominal)
    throw Error(ErrorCode::WrongKind, "attribute '" + schema_[index].name + "' is continuous");
  return std::get<NominalColumn>(columns_[index]);
}

// Schema files

std::vector<AttributeSchema> parse_schema_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("schema: ") + e.what());
  }
  const nlohmann::json& cols = j.is_object() ? j.at("columns") : j;
  if (!cols.is_array()) throw Error(ErrorCode::ParseError, "schema: expected a column array");
  std::vector<AttributeSchema> schema;
  for (const auto& c : cols) {
    AttributeSchema a;
    a.name = c.at("name").get<std::string>();
    a.kind = parse_attribute_kind(c.at("kind").get<std::string>());
    a.index = schema.size();
    schema.push_back(std::move(a));
  }
  return schema;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

// Splits RFC-4180 text into records. Quoted fields may contain delimiters,
// doubled quotes and line breaks.
std::vector<CsvRecord> split_records(std::string_view text, char delim) {
  std::vector<CsvRecord> records;
  CsvRecord rec;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  std::size_t line = 1;
  rec.line = line;
  auto end_record = [&] {
    if (any || !field.empty() || !rec.fields.empty()) {
      rec.fields.push_back(std::move(field));
      records.push_back(std::move(rec));
    }
    rec = CsvRecord{};
    field.clear();
    any = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      any = true;
    } else if (c == delim) {
      rec.fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r') {
      // tolerated before \n
    } else if (c == '\n') {
      end_record();
      rec.line = ++line;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::MalformedRow, "unterminated quoted field");
  end_record();
  return records;
}

bool is_null(std::string_view field) { return field.empty() || field == "NULL"; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

std::vector<AttributeSchema> load_schema(const std::filesystem::path& path) {
  return parse_schema_json(read_file(path));
}

std::string schema_to_json(const std::vector<AttributeSchema>& schema) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& a : schema) cols.push_back({{"name", a.name}, {"kind", to_string(a.kind)}});
  return nlohmann::json{{"columns", cols}}.dump(2);
}

Dataset parse_csv(std::string_view text, std::vector<AttributeSchema> schema,
                  const CsvOptions& options, LoadReport* report) {
  auto records = split_records(text, options.delimiter);
  const std::size_t ncols = schema.size();
  std::size_t first = 0;
  if (options.header) {
    if (records.empty())
      throw Error(ErrorCode::MalformedRow, "missing header row");
    const auto& hdr = records.front().fields;
    if (hdr.size() != ncols)
      throw Error(ErrorCode::MalformedRow, "header has " + std::to_string(hdr.size()) +
                                               " columns, schema declares " + std::to_string(ncols));
    for (std::size_t i = 0; i < ncols; ++i)
      if (trim(hdr[i]) != schema[i].name)
        throw Error(ErrorCode::MalformedRow, "header column " + std::to_string(i + 1) + " is '" +
                                                 hdr[i] + "', schema declares '" + schema[i].name + "'");
    first = 1;
  }

  std::vector<std::vector<double>> cont(ncols);
  std::vector<std::vector<std::string>> nom(ncols);
  LoadReport local;
  for (std::size_t r = first; r < records.size(); ++r) {
    const auto& rec = records[r];
    ++local.rows_read;
    if (rec.fields.size() != ncols)
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(rec.line) + ": expected " +
                                               std::to_string(ncols) + " fields, found " +
                                               std::to_string(rec.fields.size()));
    bool has_null = std::any_of(rec.fields.begin(), rec.fields.end(),
                                [](const std::string& f) { return is_null(f); });
    if (has_null) {
      if (options.null_policy == NullPolicy::Reject)
        throw Error(ErrorCode::NullValue, "line " + std::to_string(rec.line) + " contains a null");
      ++local.rows_dropped;
      continue;
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      if (schema[c].kind == AttributeKind::Continuous) {
        double v = 0;
        if (!parse_double(rec.fields[c], v))
          throw Error(ErrorCode::ParseError, "line " + std::to_string(rec.line) + ", column '" +
                                                 schema[c].name + "': '" + rec.fields[c] +
                                                 "' is not a number");
        cont[c].push_back(v);
      } else {
        nom[c].push_back(rec.fields[c]);
      }
    }
  }
  if (local.rows_dropped > 0)
    std::clog << "load_csv: dropped " << local.rows_dropped << " row(s) containing nulls\n";
  if (report) *report = local;

  std::vector<ColumnData> columns;
  columns.reserve(ncols);
  for (std::size_t c = 0; c < ncols; ++c) {
    if (schema[c].kind == AttributeKind::Continuous)
      columns.emplace_back(std::move(cont[c]));
    else
      columns.emplace_back(NominalColumn::from_strings(nom[c]));
  }
  return Dataset(std::move(schema), std::move(columns));
}

Dataset load_csv(const std::filesystem::path& path, std::vector<AttributeSchema> schema,
                 const CsvOptions& options, LoadReport* report) {
  return parse_csv(read_file(path), std::move(schema), options, report);
}

// Statistics

namespace {

double interpolated_quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

ContinuousStats five_number_summary(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyDataset, "no values to summarize");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return {sorted.front(), interpolated_quantile(sorted, 0.25), interpolated_quantile(sorted, 0.5),
          interpolated_quantile(sorted, 0.75), sorted.back()};
}

ContinuousStats continuous_stats(const Dataset& ds, std::string_view attr) {
  auto values = ds.continuous(attr);
  if (values.empty())
    throw Error(ErrorCode::EmptyDataset, "attribute '" + std::string(attr) + "' has no rows");
  return five_number_summary(values);
}

std::vector<std::string> distinct_members(const Dataset& ds, std::string_view attr) {
  const auto& col = ds.nominal(attr);
  std::vector<bool> seen(col.dictionary.size(), false);
  for (auto id : col.ids) seen[id] = true;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (seen[i]) out.push_back(col.dictionary[i]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace aqp
