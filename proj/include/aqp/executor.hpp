#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aqp/query.hpp"
#include "aqp/store.hpp"

namespace aqp {

struct FlatResult {
  double value = 0;
  std::uint64_t support = 0;

  bool operator==(const FlatResult&) const = default;
};

struct GroupByRow {
  std::vector<std::string> members;
  std::vector<double> values;  // one per GroupByQuery target
  std::uint64_t support = 0;
};

/// Only member tuples observed among the filtered rows appear; rows are sorted
/// lexicographically by member tuple.
struct GroupByResult {
  std::vector<std::string> groupby_attrs;
  std::vector<GroupByRow> rows;
};

/// Full-scan exact evaluation. BETWEEN bounds are inclusive; IN is member
/// equality. Counting aggregates and Sum return 0 on an empty match, the
/// others throw EmptyAggregate.
FlatResult execute_flat(const Dataset& ds, const FlatQuery& q);

GroupByResult execute_groupby(const Dataset& ds, const GroupByQuery& gq);

/// Distinct observed member tuples over `nominal_attrs`, sorted.
std::vector<std::vector<std::string>> extract_member_combinations(
    const Dataset& ds, std::span<const std::string> nominal_attrs);

struct LabelingOutcome {
  std::vector<LabeledQuery> labeled;
  /// Position of each labeled query in the input workload.
  std::vector<std::size_t> source_index;
  /// Non-counting queries dropped for matching no rows, keyed by target token.
  std::map<std::string, std::size_t> excluded;

  std::size_t excluded_total() const;
};

/// Reference labeler: execute_flat per query, one thread.
LabelingOutcome label_queries_serial(const Dataset& ds, std::span<const FlatQuery> queries);

/// Same result as label_queries_serial, queries fanned out over `threads`
/// OpenMP workers (0 = runtime default). Output keeps input order.
LabelingOutcome label_queries(const Dataset& ds, std::span<const FlatQuery> queries, int threads = 0);

/// Same result again, but queries sharing BETWEEN filters and IN attributes
/// are answered by one GROUP BY scan. This is the fast path for generated
/// workloads, where every continuous filter set is paired with every member
/// combination.
LabelingOutcome label_queries_grouped(const Dataset& ds, std::span<const FlatQuery> queries,
                                      int threads = 0);

}  // namespace aqp
