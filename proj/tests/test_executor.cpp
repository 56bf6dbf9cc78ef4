#include <doctest.h>

#include <random>
#include <set>
#include <tuple>

#include "aqp/executor.hpp"
#include "aqp/querygen.hpp"
#include "fixtures.hpp"

using namespace aqp;
using AF = AggregationFunction;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected aqp::Error");
  return ErrorCode::Io;
}

Dataset values_table(std::vector<double> v) {
  std::vector<ColumnData> cols;
  cols.emplace_back(std::move(v));
  return Dataset({{"v", AttributeKind::Continuous, 0}}, std::move(cols));
}

}  // namespace

TEST_CASE("execute_flat on the running example") {
  auto ds = testing::running_example();
  FlatQuery q{{AF::Avg, "sales"},
              {{"hour", 20, 23}, {"harddisk_size", 121, 820}},
              {{"store_type", "online"}, {"computer_type", "MAC"}}};
  auto r = execute_flat(ds, q);
  CHECK(r.value == 102);
  CHECK(r.support == 2);

  q.target = {AF::Median, "revenue"};
  q.in[1].member = "IBM";
  CHECK(execute_flat(ds, q).value == 82);
}

TEST_CASE("execute_flat empty matches") {
  auto ds = testing::running_example();
  FlatQuery q{{AF::Count, "sales"}, {{"hour", 100, 200}}, {}};
  CHECK(execute_flat(ds, q) == FlatResult{0, 0});
  q.target = {AF::Sum, "sales"};
  CHECK(execute_flat(ds, q) == FlatResult{0, 0});
  q.target = {AF::CountDistinct, "store_type"};
  CHECK(execute_flat(ds, q) == FlatResult{0, 0});
  for (auto f : {AF::Avg, AF::Median, AF::Min, AF::Max}) {
    q.target = {f, "sales"};
    CHECK(code_of([&] { execute_flat(ds, q); }) == ErrorCode::EmptyAggregate);
  }
  FlatQuery absent{{AF::Count, "sales"}, {}, {{"store_type", "warehouse"}}};
  CHECK(execute_flat(ds, absent).support == 0);
}

TEST_CASE("execute_flat median and errors") {
  // Oracle: sort, average the two middle order statistics.
  std::vector<double> v = {4, 1, 3, 2};
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const double expected = (sorted[1] + sorted[2]) / 2;
  auto ds = values_table(v);
  CHECK(execute_flat(ds, {{AF::Median, "v"}, {}, {}}).value == expected);
  CHECK(expected == 2.5);
  CHECK(execute_flat(ds, {{AF::Median, "v"}, {{"v", 1, 3}}, {}}).value == 2);

  auto ex = testing::running_example();
  CHECK(code_of([&] { execute_flat(ex, {{AF::Avg, "ghost"}, {}, {}}); }) == ErrorCode::UnknownAttribute);
  CHECK(code_of([&] { execute_flat(ex, {{AF::Avg, "store_type"}, {}, {}}); }) == ErrorCode::WrongKind);
  CHECK(code_of([&] { execute_flat(ex, {{AF::Count, "sales"}, {{"store_type", 0, 1}}, {}}); }) ==
        ErrorCode::WrongKind);
  CHECK(code_of([&] { execute_flat(ex, {{AF::Count, "sales"}, {}, {{"hour", "20"}}}); }) == ErrorCode::WrongKind);
}

TEST_CASE("BETWEEN is inclusive on both bounds") {
  auto ds = values_table({1, 2, 3, 4, 5});
  CHECK(execute_flat(ds, {{AF::Count, "v"}, {{"v", 2, 4}}, {}}).support == 3);
  CHECK(execute_flat(ds, {{AF::Count, "v"}, {{"v", 5, 5}}, {}}).support == 1);
  CHECK(execute_flat(ds, {{AF::Count, "v"}, {{"v", 2.0000001, 3.9999999}}, {}}).support == 1);
}

TEST_CASE("execute_groupby reproduces the group-by result table") {
  auto ds = testing::running_example();
  auto gq = testing::running_example_query();
  auto r = execute_groupby(ds, gq);
  REQUIRE(r.rows.size() == 4);
  using Row = std::tuple<std::string, std::string, double, double>;
  std::vector<Row> got;
  for (const auto& row : r.rows) got.emplace_back(row.members[0], row.members[1], row.values[0], row.values[1]);
  std::vector<Row> expected = {{"online", "IBM", 80, 82},
                               {"online", "MAC", 102, 85},
                               {"physical", "IBM", 94, 50},
                               {"physical", "MAC", 95, 61}};
  CHECK(got == expected);

  GroupByQuery single{{{AF::Count, "sales"}}, {{"hour", 20, 20}}, {"store_type"}};
  auto one = execute_groupby(ds, single);
  REQUIRE(one.rows.size() == 2);
  single.between = {{"hour", 0, 9}};
  CHECK(execute_groupby(ds, single).rows.size() == 2);
  single.groupby = {"computer_type"};
  single.between = {{"harddisk_size", 121, 121}};
  CHECK(execute_groupby(ds, single).rows.size() == 1);
}

TEST_CASE("group-by cells equal execute_flat per member tuple") {
  auto ds = testing::random_table(700, 17);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    GroupByQuery gq;
    gq.targets = {{AF::Avg, "x"}, {AF::Median, "y"}, {AF::CountDistinct, "b"}, {AF::Sum, "y"}, {AF::Max, "x"}};
    double lo = double(rng() % 30), hi = lo + double(rng() % 30);
    gq.between = {{"x", lo, hi}};
    gq.groupby = trial % 2 ? std::vector<std::string>{"a", "b"} : std::vector<std::string>{"b"};
    auto r = execute_groupby(ds, gq);
    std::uint64_t total = 0;
    for (const auto& row : r.rows) {
      total += row.support;
      std::vector<InFilter> in;
      for (std::size_t k = 0; k < gq.groupby.size(); ++k) in.push_back({gq.groupby[k], row.members[k]});
      for (std::size_t t = 0; t < gq.targets.size(); ++t) {
        auto flat = execute_flat(ds, {gq.targets[t], gq.between, in});
        CHECK(flat.value == row.values[t]);
        CHECK(flat.support == row.support);
      }
    }
    CHECK(total == execute_flat(ds, {{AF::Count, "x"}, gq.between, {}}).support);
    for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i - 1].members < r.rows[i].members);
  }
}

TEST_CASE("extract_member_combinations") {
  auto ds = testing::running_example();
  std::vector<std::string> two = {"store_type", "computer_type"};
  CHECK(extract_member_combinations(ds, two).size() == 4);
  std::vector<std::string> one = {"computer_type"};
  std::vector<std::vector<std::string>> expected;
  for (const auto& m : distinct_members(ds, "computer_type")) expected.push_back({m});
  CHECK(extract_member_combinations(ds, one) == expected);

  // 2 x 2 x 2 cube with one octant missing.
  std::vector<std::string> p, q, r;
  for (int i = 0; i < 8; ++i) {
    if (i == 5) continue;
    for (int rep = 0; rep < 3; ++rep) {
      p.push_back(i & 1 ? "p1" : "p0");
      q.push_back(i & 2 ? "q1" : "q0");
      r.push_back(i & 4 ? "r1" : "r0");
    }
  }
  std::set<std::vector<std::string>> oracle;
  for (std::size_t i = 0; i < p.size(); ++i) oracle.insert({p[i], q[i], r[i]});
  std::vector<ColumnData> cols;
  cols.emplace_back(NominalColumn::from_strings(p));
  cols.emplace_back(NominalColumn::from_strings(q));
  cols.emplace_back(NominalColumn::from_strings(r));
  Dataset cube({{"p", AttributeKind::Nominal, 0}, {"q", AttributeKind::Nominal, 1}, {"r", AttributeKind::Nominal, 2}},
               std::move(cols));
  std::vector<std::string> pqr = {"p", "q", "r"};
  auto combos = extract_member_combinations(cube, pqr);
  CHECK(combos.size() == 7);
  CHECK(std::vector<std::vector<std::string>>(oracle.begin(), oracle.end()) == combos);

  std::vector<std::string> wrong = {"sales"};
  CHECK(code_of([&] { extract_member_combinations(ds, wrong); }) == ErrorCode::WrongKind);
}

TEST_CASE("execute_flat matches the naive reference on random queries") {
  auto ds = testing::random_table(400, 23);
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    auto q = testing::random_flat_query(rng);
    auto ref = testing::reference_execute(ds, q);
    if (!ref.value) {
      CHECK(code_of([&] { execute_flat(ds, q); }) == ErrorCode::EmptyAggregate);
      continue;
    }
    auto got = execute_flat(ds, q);
    CHECK(got.support == ref.support);
    CHECK(testing::close_rel(got.value, *ref.value, 1e-9));
  }
}

TEST_CASE("widening a BETWEEN filter never decreases support") {
  auto ds = testing::random_table(500, 31);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    double lo = double(rng() % 50), hi = lo + double(rng() % 10);
    FlatQuery q{{AF::Count, "x"}, {{"x", lo, hi}}, {}};
    auto narrow = execute_flat(ds, q).support;
    q.between[0].lower -= double(rng() % 5);
    q.between[0].upper += double(rng() % 5);
    CHECK(execute_flat(ds, q).support >= narrow);
  }
}

TEST_CASE("batch labelers agree with the serial reference") {
  auto ds = testing::random_table(800, 41);
  QueryTemplate t;
  t.targets = {{AF::Avg, "y"}, {AF::Count, "b"}, {AF::Median, "x"}};
  t.cont_filter_attrs = {"x", "y"};
  t.nom_filter_attrs = {"a", "b"};
  t.n_cont_samples = 25;
  auto w = generate_workload(ds, t);
  auto serial = label_queries_serial(ds, w.queries);
  for (int threads : {1, 3}) {
    auto par = label_queries(ds, w.queries, threads);
    CHECK(par.labeled == serial.labeled);
    CHECK(par.source_index == serial.source_index);
    CHECK(par.excluded == serial.excluded);
    auto grouped = label_queries_grouped(ds, w.queries, threads);
    CHECK(grouped.labeled == serial.labeled);
    CHECK(grouped.excluded == serial.excluded);
  }
  CHECK(serial.labeled.size() + serial.excluded_total() == w.queries.size());
  CHECK(serial.excluded.count("count(b)") == 0);
  for (const auto& lq : serial.labeled) {
    CHECK(std::isfinite(lq.label));
    if (lq.query.target.func != AF::Count) CHECK(lq.support >= 1);
  }
}
