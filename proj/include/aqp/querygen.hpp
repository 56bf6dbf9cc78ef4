#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aqp/executor.hpp"
#include "aqp/query.hpp"
#include "aqp/store.hpp"

namespace aqp {

using Rng = std::mt19937_64;

/// Stream seed for template `template_id` under a global seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t template_id) noexcept;

/// Checks attribute existence, kinds and duplicates. Throws InvalidTemplate.
void validate_template(const QueryTemplate& t, const std::vector<AttributeSchema>& schema);

/// Explicit targets first, then functions x attributes (attribute-major).
/// Invalid nominal pairs throw InvalidTarget in strict mode and are skipped
/// otherwise. Duplicates are dropped.
std::vector<AggregationTarget> build_select_clause(const QueryTemplate& t,
                                                   const std::vector<AttributeSchema>& schema);

/// Draws `n` combinations holding one BETWEEN filter per attribute. Each bound
/// comes from one of the four quartile intervals, picked uniformly with
/// replacement, then snapped to the attribute's 1/scale grid.
std::vector<std::vector<BetweenFilter>> gen_between_filters(
    const std::map<std::string, ContinuousStats>& stats, std::span<const std::string> attrs,
    std::size_t n, Rng& rng, const std::map<std::string, double>& scales = {});

/// One IN filter set per observed member combination.
std::vector<std::vector<InFilter>> gen_in_filter_combinations(
    std::span<const std::string> attrs, std::span<const std::vector<std::string>> combos);

/// Cross product of continuous and nominal filter sets. An empty side throws
/// EmptyFilterSet in strict mode and yields no filter sets otherwise.
std::vector<FilterSet> pair_filters(std::span<const std::vector<BetweenFilter>> between_sets,
                                    std::span<const std::vector<InFilter>> in_sets, bool strict = true);

/// One labeled query per (row x target), the row's members becoming IN filters.
std::vector<LabeledQuery> flatten_groupby(const GroupByQuery& gq, const GroupByResult& result);

struct GeneratedWorkload {
  std::vector<AggregationTarget> targets;
  std::vector<FlatQuery> queries;
};

/// Pure function of (dataset, template): samples continuous filters, extracts
/// observed member combinations, pairs them, and attaches every target.
/// Filters are ordered by schema index.
GeneratedWorkload generate_workload(const Dataset& ds, const QueryTemplate& t,
                                    std::uint64_t template_id = 0);

struct WorkloadSplit {
  std::vector<LabeledQuery> train;
  std::vector<LabeledQuery> validation;
  std::vector<LabeledQuery> test;
};

struct SplitFractions {
  double train = 0.70;
  double validation = 0.15;
};

/// Seeded shuffle, then floor(train*n) / floor(validation*n) / remainder.
WorkloadSplit split(std::span<const LabeledQuery> workload, std::uint64_t seed,
                    SplitFractions fractions = {});

}  // namespace aqp
