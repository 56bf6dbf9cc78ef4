#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "aqp/error.hpp"

namespace aqp {

enum class AttributeKind { Nominal, Continuous };

std::string_view to_string(AttributeKind kind) noexcept;
AttributeKind parse_attribute_kind(std::string_view text);

struct AttributeSchema {
  std::string name;
  AttributeKind kind = AttributeKind::Continuous;
  std::size_t index = 0;

  bool operator==(const AttributeSchema&) const = default;
};

/// Five-number summary. The four intervals between consecutive fields drive
/// BETWEEN-filter sampling.
struct ContinuousStats {
  double min = 0;
  double q1 = 0;
  double median = 0;
  double q3 = 0;
  double max = 0;

  bool operator==(const ContinuousStats&) const = default;
};

/// Dictionary-encoded nominal column. Member IDs follow first-occurrence order.
struct NominalColumn {
  std::vector<std::uint32_t> ids;
  std::vector<std::string> dictionary;

  static NominalColumn from_strings(std::span<const std::string> values);
  /// Returns the member ID or -1 when `member` never occurs.
  std::int64_t find(std::string_view member) const;
};

using ColumnData = std::variant<std::vector<double>, NominalColumn>;

/// Immutable in-memory columnar table. Safe to share between concurrent readers.
class Dataset {
 public:
  Dataset() = default;
  /// Schema entries get their `index` rewritten to their position. Throws on
  /// duplicate names, kind/column mismatches or ragged columns.
  Dataset(std::vector<AttributeSchema> schema, std::vector<ColumnData> columns);

  const std::vector<AttributeSchema>& schema() const noexcept { return schema_; }
  std::size_t row_count() const noexcept { return row_count_; }
  std::size_t attribute_count() const noexcept { return schema_.size(); }

  bool has_attribute(std::string_view name) const;
  /// Throws UnknownAttribute.
  const AttributeSchema& attribute(std::string_view name) const;

  /// Throws UnknownAttribute / WrongKind.
  std::span<const double> continuous(std::string_view name) const;
  const NominalColumn& nominal(std::string_view name) const;

  std::span<const double> continuous(std::size_t index) const;
  const NominalColumn& nominal(std::size_t index) const;

 private:
  std::vector<AttributeSchema> schema_;
  std::vector<ColumnData> columns_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::size_t row_count_ = 0;
};

enum class NullPolicy { Reject, DropRow };

struct CsvOptions {
  char delimiter = ',';
  bool header = true;
  NullPolicy null_policy = NullPolicy::DropRow;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

/// Parses a schema declaration: either `[{"name":..,"kind":..}, ...]` or
/// `{"columns": [...]}`.
std::vector<AttributeSchema> parse_schema_json(std::string_view text);
std::vector<AttributeSchema> load_schema(const std::filesystem::path& path);
std::string schema_to_json(const std::vector<AttributeSchema>& schema);

/// RFC-4180 style reader. Empty fields and the literal `NULL` are nulls.
Dataset load_csv(const std::filesystem::path& path, std::vector<AttributeSchema> schema,
                 const CsvOptions& options = {}, LoadReport* report = nullptr);
Dataset parse_csv(std::string_view text, std::vector<AttributeSchema> schema,
                  const CsvOptions& options = {}, LoadReport* report = nullptr);

/// Quartiles use linear interpolation between closest ranks.
ContinuousStats continuous_stats(const Dataset& ds, std::string_view attr);
ContinuousStats five_number_summary(std::span<const double> values);

/// Sorted, deduplicated member strings.
std::vector<std::string> distinct_members(const Dataset& ds, std::string_view attr);

}  // namespace aqp
