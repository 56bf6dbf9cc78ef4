#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <unordered_set>

#include "aqp/store.hpp"
#include "fixtures.hpp"

using namespace aqp;

namespace {

std::vector<AttributeSchema> sales_schema() {
  return {{"store_type", AttributeKind::Nominal, 0},
          {"computer_type", AttributeKind::Nominal, 1},
          {"sales", AttributeKind::Continuous, 2},
          {"revenue", AttributeKind::Continuous, 3}};
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected aqp::Error");
  return ErrorCode::Io;
}

Dataset single_continuous(std::vector<double> values) {
  std::vector<ColumnData> cols;
  cols.emplace_back(std::move(values));
  return Dataset({{"v", AttributeKind::Continuous, 0}}, std::move(cols));
}

}  // namespace

TEST_CASE("load_csv: four-row sales table") {
  const char* csv =
      "store_type,computer_type,sales,revenue\n"
      "online,MAC,102,85\n"
      "online,IBM,80,82\n"
      "physical,MAC,95,61\n"
      "physical,IBM,94,50\n";
  auto ds = parse_csv(csv, sales_schema());
  CHECK(ds.row_count() == 4);
  auto kinds = ds.schema();
  CHECK(std::count_if(kinds.begin(), kinds.end(), [](auto& a) { return a.kind == AttributeKind::Nominal; }) == 2);
  CHECK(ds.continuous("sales")[0] == 102);
  CHECK(ds.nominal("computer_type").dictionary == std::vector<std::string>{"MAC", "IBM"});
}

TEST_CASE("load_csv: header only gives an empty dataset") {
  auto ds = parse_csv("store_type,computer_type,sales,revenue\n", sales_schema());
  CHECK(ds.row_count() == 0);
  CHECK(code_of([&] { continuous_stats(ds, "sales"); }) == ErrorCode::EmptyDataset);
}

TEST_CASE("load_csv: non-numeric continuous value names row and column") {
  const char* csv = "store_type,computer_type,sales,revenue\nonline,MAC,abc,1\n";
  try {
    parse_csv(csv, sales_schema());
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    std::string what = e.what();
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("'sales'") != std::string::npos);
  }
}

TEST_CASE("load_csv: arity, header and null handling") {
  CHECK(code_of([] { parse_csv("store_type,computer_type,sales,revenue\nonline,MAC,1\n", sales_schema()); }) ==
        ErrorCode::MalformedRow);
  CHECK(code_of([] { parse_csv("store,computer_type,sales,revenue\n", sales_schema()); }) == ErrorCode::MalformedRow);

  const char* with_null = "store_type,computer_type,sales,revenue\nonline,MAC,,1\nonline,IBM,3,NULL\nonline,IBM,4,5\n";
  LoadReport report;
  auto ds = parse_csv(with_null, sales_schema(), {}, &report);
  CHECK(ds.row_count() == 1);
  CHECK(report.rows_dropped == 2);
  CsvOptions reject;
  reject.null_policy = NullPolicy::Reject;
  CHECK(code_of([&] { parse_csv(with_null, sales_schema(), reject); }) == ErrorCode::NullValue);
}

TEST_CASE("load_csv: quoting, delimiter and headerless input") {
  const char* csv = "\"on;line\";\"M\"\"AC\";1.5;2\r\nphysical;IBM;-3;4e2\n";
  CsvOptions opts;
  opts.delimiter = ';';
  opts.header = false;
  auto ds = parse_csv(csv, sales_schema(), opts);
  REQUIRE(ds.row_count() == 2);
  CHECK(ds.nominal("store_type").dictionary[0] == "on;line");
  CHECK(ds.nominal("computer_type").dictionary[0] == "M\"AC");
  CHECK(ds.continuous("revenue")[1] == 400.0);
}

TEST_CASE("load_csv reads files and schema JSON") {
  auto dir = std::filesystem::temp_directory_path() / "aqp_store_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "data.csv") << testing::running_example_csv();
    std::ofstream(dir / "schema.json") << schema_to_json(testing::running_example_schema());
  }
  auto schema = load_schema(dir / "schema.json");
  CHECK(schema == testing::running_example_schema());
  auto ds = load_csv(dir / "data.csv", schema);
  CHECK(ds.row_count() == 11);
  CHECK(code_of([&] { load_csv(dir / "missing.csv", schema); }) == ErrorCode::Io);
  CHECK(parse_schema_json(R"([{"name":"x","kind":"continuous"},{"name":"y","kind":"nominal"}])").size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("Dataset rejects duplicate names and ragged columns") {
  std::vector<ColumnData> cols;
  cols.emplace_back(std::vector<double>{1, 2});
  cols.emplace_back(std::vector<double>{1});
  CHECK(code_of([&] {
          Dataset({{"a", AttributeKind::Continuous, 0}, {"b", AttributeKind::Continuous, 1}}, cols);
        }) == ErrorCode::ShapeMismatch);
  std::vector<ColumnData> same;
  same.emplace_back(std::vector<double>{1});
  same.emplace_back(std::vector<double>{1});
  CHECK(code_of([&] {
          Dataset({{"a", AttributeKind::Continuous, 0}, {"a", AttributeKind::Continuous, 1}}, same);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("continuous_stats") {
  SUBCASE("1..1000 interpolates between ranks") {
    std::vector<double> v(1000);
    for (int i = 0; i < 1000; ++i) v[i] = i + 1;
    auto st = continuous_stats(single_continuous(v), "v");
    CHECK(st == ContinuousStats{1, 250.75, 500.5, 750.25, 1000});
  }
  SUBCASE("five points") {
    CHECK(continuous_stats(single_continuous({5, 3, 1, 4, 2}), "v") == ContinuousStats{1, 2, 3, 4, 5});
  }
  SUBCASE("constant column") {
    CHECK(continuous_stats(single_continuous({7, 7, 7}), "v") == ContinuousStats{7, 7, 7, 7, 7});
  }
  SUBCASE("nominal attribute") {
    auto ds = testing::running_example();
    CHECK(code_of([&] { continuous_stats(ds, "store_type"); }) == ErrorCode::WrongKind);
    CHECK(code_of([&] { continuous_stats(ds, "nope"); }) == ErrorCode::UnknownAttribute);
  }
}

TEST_CASE("continuous_stats is permutation invariant and bounds every value") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(1 + rng() % 200);
    for (auto& x : v) x = u(rng);
    auto a = continuous_stats(single_continuous(v), "v");
    std::shuffle(v.begin(), v.end(), rng);
    auto ds = single_continuous(v);
    auto b = continuous_stats(ds, "v");
    CHECK(a == b);
    CHECK(continuous_stats(ds, "v") == b);
    CHECK(b.min <= b.q1);
    CHECK(b.q1 <= b.median);
    CHECK(b.median <= b.q3);
    CHECK(b.q3 <= b.max);
    for (double x : v) CHECK((b.min <= x && x <= b.max));
  }
}

TEST_CASE("distinct_members") {
  auto ds = testing::running_example();
  CHECK(distinct_members(ds, "store_type") == std::vector<std::string>{"online", "physical"});
  CHECK(code_of([&] { distinct_members(ds, "sales"); }) == ErrorCode::WrongKind);

  std::vector<std::string> one(5, "same");
  std::vector<ColumnData> cols;
  cols.emplace_back(NominalColumn::from_strings(one));
  Dataset single({{"m", AttributeKind::Nominal, 0}}, std::move(cols));
  CHECK(distinct_members(single, "m") == std::vector<std::string>{"same"});
}

TEST_CASE("distinct_members matches a hash-set over the raw column") {
  std::mt19937_64 rng(11);
  std::vector<std::string> raw = {"pear", "apple", "fig", "pear", "apple", "fig"};
  std::shuffle(raw.begin(), raw.end(), rng);
  std::vector<ColumnData> cols;
  cols.emplace_back(NominalColumn::from_strings(raw));
  Dataset ds({{"fruit", AttributeKind::Nominal, 0}}, std::move(cols));

  std::unordered_set<std::string> oracle(raw.begin(), raw.end());
  std::vector<std::string> expected(oracle.begin(), oracle.end());
  std::sort(expected.begin(), expected.end());
  CHECK(distinct_members(ds, "fruit") == expected);
  CHECK(expected.size() == 3);
}
