#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "aqp/error.hpp"
#include "aqp/store.hpp"

namespace aqp {

enum class AggregationFunction { Avg, Sum, Count, CountDistinct, Median, Min, Max };

/// Lower-case token spelling: avg, sum, count, count_distinct, median, min, max.
std::string_view to_string(AggregationFunction f) noexcept;
AggregationFunction parse_aggregation_function(std::string_view text);

/// Count and CountDistinct are the only functions defined on nominal attributes.
constexpr bool applicable(AggregationFunction f, AttributeKind kind) noexcept {
  return kind == AttributeKind::Continuous || f == AggregationFunction::Count ||
         f == AggregationFunction::CountDistinct;
}

/// Counting aggregates are well defined on an empty row set (value 0).
constexpr bool defined_on_empty(AggregationFunction f) noexcept {
  return f == AggregationFunction::Count || f == AggregationFunction::CountDistinct ||
         f == AggregationFunction::Sum;
}

struct AggregationTarget {
  AggregationFunction func = AggregationFunction::Avg;
  std::string attr;

  /// e.g. "avg(sales)"
  std::string token() const;
  std::string sql() const;

  auto operator<=>(const AggregationTarget&) const = default;
};

AggregationTarget parse_target_token(std::string_view token);

struct BetweenFilter {
  std::string attr;
  double lower = 0;
  double upper = 0;

  bool matches(double v) const noexcept { return lower <= v && v <= upper; }
  auto operator<=>(const BetweenFilter&) const = default;
};

struct InFilter {
  std::string attr;
  std::string member;

  auto operator<=>(const InFilter&) const = default;
};

struct FilterSet {
  std::vector<BetweenFilter> between;
  std::vector<InFilter> in;

  auto operator<=>(const FilterSet&) const = default;
};

/// Single aggregation, no GROUP BY: evaluates to one scalar.
struct FlatQuery {
  AggregationTarget target;
  std::vector<BetweenFilter> between;
  std::vector<InFilter> in;

  std::string sql(std::string_view table = "data") const;
  auto operator<=>(const FlatQuery&) const = default;
};

struct GroupByQuery {
  std::vector<AggregationTarget> targets;
  std::vector<BetweenFilter> between;
  std::vector<std::string> groupby;

  std::string sql(std::string_view table = "data") const;
};

struct LabeledQuery {
  FlatQuery query;
  double label = 0;
  std::uint64_t support = 0;

  bool operator==(const LabeledQuery&) const = default;
};

/// Domain-expert declaration from which query instances are sampled.
struct QueryTemplate {
  std::vector<AggregationTarget> targets;
  // Optional cross-product form of the SELECT clause.
  std::vector<AggregationFunction> functions;
  std::vector<std::string> target_attrs;

  std::vector<std::string> cont_filter_attrs;
  std::vector<std::string> nom_filter_attrs;
  std::size_t n_cont_samples = 200;
  std::uint64_t seed = 42;
  /// Decimal scale per continuous attribute; literals live on the grid 1/scale.
  std::map<std::string, double> numeric_scales;
  bool strict = true;

  double scale_of(const std::string& attr) const;
};

// Numeric literals are snapped to an integer grid shared by generation,
// execution and encoding so encoded and executed queries are identical.
inline std::int64_t quantize(double v, double scale) { return std::llround(v * scale); }
inline double dequantize(std::int64_t q, double scale) { return static_cast<double>(q) / scale; }

// JSON forms used by the template, workload and vocabulary files.
nlohmann::json to_json(const AggregationTarget& t);
nlohmann::json to_json(const FlatQuery& q);
nlohmann::json to_json(const LabeledQuery& q);
nlohmann::json to_json(const QueryTemplate& t);
AggregationTarget target_from_json(const nlohmann::json& j);
FlatQuery flat_query_from_json(const nlohmann::json& j);
/// Records without a label (unlabeled workloads) yield std::nullopt.
std::optional<LabeledQuery> labeled_query_from_json(const nlohmann::json& j);
QueryTemplate template_from_json(const nlohmann::json& j);

}  // namespace aqp
