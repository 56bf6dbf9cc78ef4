#pragma once

// Shared test data and the naive reference executor used as an oracle.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "aqp/query.hpp"
#include "aqp/store.hpp"

namespace aqp::testing {

inline std::vector<AttributeSchema> running_example_schema() {
  return {{"store_type", AttributeKind::Nominal, 0}, {"computer_type", AttributeKind::Nominal, 1},
          {"hour", AttributeKind::Continuous, 2},    {"harddisk_size", AttributeKind::Continuous, 3},
          {"sales", AttributeKind::Continuous, 4},   {"revenue", AttributeKind::Continuous, 5}};
}

// Rows passing hour 20..23 and harddisk_size 121..820 reproduce the group-by
// result table of the running example (AVG(sales), MEDIAN(revenue)):
//   online/MAC 102/85, online/IBM 80/82, physical/MAC 95/61, physical/IBM 94/50.
// The hour=9 and harddisk_size=900 rows must be filtered out.
inline const char* running_example_csv() {
  return "store_type,computer_type,hour,harddisk_size,sales,revenue\n"
         "online,MAC,20,500,100,80\n"
         "online,MAC,23,121,104,90\n"
         "online,MAC,9,500,1,1\n"
         "online,IBM,21,820,78,82\n"
         "online,IBM,22,300,82,82\n"
         "online,IBM,21,900,500,500\n"
         "physical,MAC,20,200,95,60\n"
         "physical,MAC,21,250,95,62\n"
         "physical,IBM,22,700,90,50\n"
         "physical,IBM,23,640,98,50\n"
         "physical,IBM,9,640,1000,1000\n";
}

inline Dataset running_example() { return parse_csv(running_example_csv(), running_example_schema()); }

inline GroupByQuery running_example_query() {
  GroupByQuery gq;
  gq.targets = {{AggregationFunction::Avg, "sales"}, {AggregationFunction::Median, "revenue"}};
  gq.between = {{"hour", 20, 23}, {"harddisk_size", 121, 820}};
  gq.groupby = {"store_type", "computer_type"};
  return gq;
}

/// Naive row-at-a-time evaluation over raw member strings. Returns nullopt
/// for non-counting aggregates over an empty match.
struct ReferenceResult {
  std::optional<double> value;
  std::uint64_t support = 0;
};

inline ReferenceResult reference_execute(const Dataset& ds, const FlatQuery& q) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    bool ok = true;
    for (const auto& b : q.between) {
      const double v = ds.continuous(b.attr)[r];
      ok = ok && v >= b.lower && v <= b.upper;
    }
    for (const auto& f : q.in) {
      const auto& col = ds.nominal(f.attr);
      ok = ok && col.dictionary[col.ids[r]] == f.member;
    }
    if (ok) rows.push_back(r);
  }
  ReferenceResult res;
  res.support = rows.size();
  const auto& attr = ds.attribute(q.target.attr);
  std::vector<double> vals;
  std::set<std::string> distinct_strings;
  std::set<double> distinct_values;
  for (auto r : rows) {
    if (attr.kind == AttributeKind::Continuous) {
      vals.push_back(ds.continuous(attr.index)[r]);
      distinct_values.insert(vals.back());
    } else {
      const auto& col = ds.nominal(attr.index);
      distinct_strings.insert(col.dictionary[col.ids[r]]);
    }
  }
  switch (q.target.func) {
    case AggregationFunction::Count: res.value = double(rows.size()); return res;
    case AggregationFunction::CountDistinct:
      res.value = double(attr.kind == AttributeKind::Continuous ? distinct_values.size() : distinct_strings.size());
      return res;
    case AggregationFunction::Sum: {
      double s = 0;
      for (double v : vals) s += v;
      res.value = s;
      return res;
    }
    default: break;
  }
  if (rows.empty()) return res;
  std::sort(vals.begin(), vals.end());
  switch (q.target.func) {
    case AggregationFunction::Avg: {
      double s = 0;
      for (double v : vals) s += v;
      res.value = s / double(vals.size());
      break;
    }
    case AggregationFunction::Min: res.value = vals.front(); break;
    case AggregationFunction::Max: res.value = vals.back(); break;
    case AggregationFunction::Median: {
      const auto n = vals.size();
      res.value = n % 2 ? vals[n / 2] : (vals[n / 2 - 1] + vals[n / 2]) / 2;
      break;
    }
    default: break;
  }
  return res;
}

/// Small random table: nominal a (3 members), b (4 members), continuous x, y
/// on an integer grid so boundary-valued filters are common.
inline Dataset random_table(std::size_t rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> a(rows), b(rows);
  std::vector<double> x(rows), y(rows);
  std::uniform_int_distribution<int> ma(0, 2), mb(0, 3), xi(0, 50), yi(-20, 80);
  for (std::size_t r = 0; r < rows; ++r) {
    a[r] = "a" + std::to_string(ma(rng));
    b[r] = "b" + std::to_string(mb(rng));
    x[r] = xi(rng);
    y[r] = yi(rng) * 0.5;
  }
  std::vector<AttributeSchema> schema = {{"a", AttributeKind::Nominal, 0},
                                         {"b", AttributeKind::Nominal, 1},
                                         {"x", AttributeKind::Continuous, 2},
                                         {"y", AttributeKind::Continuous, 3}};
  std::vector<ColumnData> cols;
  cols.emplace_back(NominalColumn::from_strings(a));
  cols.emplace_back(NominalColumn::from_strings(b));
  cols.emplace_back(std::move(x));
  cols.emplace_back(std::move(y));
  return Dataset(schema, std::move(cols));
}

inline FlatQuery random_flat_query(std::mt19937_64& rng) {
  static const AggregationFunction funcs[] = {AggregationFunction::Avg,    AggregationFunction::Sum,
                                              AggregationFunction::Count,  AggregationFunction::CountDistinct,
                                              AggregationFunction::Median, AggregationFunction::Min,
                                              AggregationFunction::Max};
  static const char* attrs[] = {"a", "b", "x", "y"};
  FlatQuery q;
  while (true) {
    auto f = funcs[rng() % 7];
    std::string attr = attrs[rng() % 4];
    const bool nominal = attr == "a" || attr == "b";
    if (!nominal || f == AggregationFunction::Count || f == AggregationFunction::CountDistinct) {
      q.target = {f, attr};
      break;
    }
  }
  if (rng() % 4 != 0) {
    double lo = double(rng() % 52), hi = double(rng() % 52);
    if (lo > hi) std::swap(lo, hi);
    q.between.push_back({"x", lo, hi});
  }
  if (rng() % 2) {
    double lo = double(int(rng() % 110) - 25) * 0.5, hi = double(int(rng() % 110) - 25) * 0.5;
    if (lo > hi) std::swap(lo, hi);
    q.between.push_back({"y", lo, hi});
  }
  if (rng() % 2) q.in.push_back({"a", "a" + std::to_string(rng() % 4)});  // a3 never occurs
  if (rng() % 2) q.in.push_back({"b", "b" + std::to_string(rng() % 4)});
  return q;
}

inline bool close_rel(double a, double b, double rel) {
  return a == b || std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace aqp::testing
