#include <doctest.h>

#include <set>

#include "aqp/encoder.hpp"
#include "aqp/hash.hpp"
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

QueryTemplate running_template() {
  QueryTemplate t;
  t.targets = {{AF::Avg, "sales"}};
  t.cont_filter_attrs = {"harddisk_size", "hour"};
  t.nom_filter_attrs = {"computer_type", "store_type"};
  return t;
}

FlatQuery running_flat() {
  return {{AF::Avg, "sales"},
          {{"hour", 20, 23}, {"harddisk_size", 121, 820}},
          {{"store_type", "online"}, {"computer_type", "MAC"}}};
}

std::vector<std::uint8_t> row_of(bool literal, std::uint64_t v, unsigned width) {
  std::vector<std::uint8_t> r{static_cast<std::uint8_t>(literal)};
  for (int b = static_cast<int>(width) - 1; b >= 0; --b) r.push_back((v >> b) & 1u);
  return r;
}

std::vector<std::uint8_t> row_vec(const EncodedQuery& m, std::size_t r) {
  auto s = m.row(r);
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("first target token gets ID 1") {
  std::vector<FlatQuery> w = {{{AF::Avg, "sales"}, {}, {{"store_type", "online"}}},
                              {{AF::Avg, "sales"}, {}, {{"store_type", "physical"}}}};
  QueryTemplate t;
  t.targets = {{AF::Avg, "sales"}};
  t.nom_filter_attrs = {"store_type"};
  auto vocab = build_vocabulary(w, t, testing::running_example_schema());
  CHECK(vocab.id("avg(sales)") == 1);
  CHECK(vocab.size() == 4);
  // Rendered at B = 5.
  TokenVocabulary wide(vocab.entries(), 1, 5, {}, {"store_type"}, {}, {});
  auto m = encode(w[0], wide);
  CHECK(row_vec(m, 0) == std::vector<std::uint8_t>{0, 0, 0, 0, 0, 1});
  CHECK(debug_grid(m).substr(0, 7) == "000001\n");
}

TEST_CASE("bit width covers IDs and literals") {
  // 1 target + 2 attributes + 28 members = 31 tokens, max literal 1000.
  std::vector<AttributeSchema> schema = {{"x", AttributeKind::Continuous, 0},
                                         {"a", AttributeKind::Nominal, 1},
                                         {"sales", AttributeKind::Continuous, 2}};
  QueryTemplate t;
  t.targets = {{AF::Sum, "sales"}};
  t.cont_filter_attrs = {"x"};
  t.nom_filter_attrs = {"a"};
  std::vector<FlatQuery> w;
  for (int i = 0; i < 28; ++i)
    w.push_back({{AF::Sum, "sales"}, {{"x", 0.0, i == 5 ? 1000.0 : double(i)}}, {{"a", "m" + std::to_string(i)}}});
  auto vocab = build_vocabulary(w, t, schema);
  CHECK(vocab.size() == 31);
  CHECK(vocab.bit_width() == 10);
  w[5].between[0].upper = 30;
  CHECK(build_vocabulary(w, t, schema).bit_width() == 5);
  w[5].between[0].upper = 31;
  CHECK(build_vocabulary(w, t, schema).bit_width() == 5);
  w[5].between[0].upper = 32;
  CHECK(build_vocabulary(w, t, schema).bit_width() == 6);
}

TEST_CASE("encoding the running-example query token by token") {
  auto schema = testing::running_example_schema();
  std::vector<FlatQuery> w = {running_flat()};
  auto vocab = build_vocabulary(w, running_template(), schema);
  // Canonical order: target, attributes by schema index, sorted members.
  const std::vector<std::string> expected_entries = {"avg(sales)",          "store_type", "computer_type", "hour",
                                                     "harddisk_size",       "store_type=online",
                                                     "computer_type=MAC"};
  CHECK(vocab.entries() == expected_entries);
  const unsigned B = vocab.bit_width();
  CHECK(B == 10);
  auto m = encode(w[0], vocab);
  REQUIRE(m.rows == 11);
  CHECK(m.rows == 1 + 3 * 2 + 2 * 2);
  CHECK(m.cols == 1 + B);
  const std::vector<std::vector<std::uint8_t>> rows = {
      row_of(false, 1, B),   row_of(false, 4, B),   row_of(true, 20, B), row_of(true, 23, B),
      row_of(false, 5, B),   row_of(true, 121, B),  row_of(true, 820, B), row_of(false, 2, B),
      row_of(false, 6, B),   row_of(false, 3, B),   row_of(false, 7, B)};
  for (std::size_t r = 0; r < rows.size(); ++r) CHECK(row_vec(m, r) == rows[r]);
  CHECK(decode(m, vocab) == w[0]);
}

TEST_CASE("literal 23 at five bits") {
  std::vector<AttributeSchema> schema = {{"hour", AttributeKind::Continuous, 0}, {"v", AttributeKind::Continuous, 1}};
  QueryTemplate t;
  t.targets = {{AF::Avg, "v"}};
  t.cont_filter_attrs = {"hour"};
  std::vector<FlatQuery> w = {{{AF::Avg, "v"}, {{"hour", 20, 23}}, {}}};
  auto vocab = build_vocabulary(w, t, schema);
  CHECK(vocab.bit_width() == 5);
  auto m = encode(w[0], vocab);
  CHECK(row_vec(m, 3) == std::vector<std::uint8_t>{1, 1, 0, 1, 1, 1});
  CHECK(code_of([&] { encode({{AF::Avg, "v"}, {{"hour", 20, 32}}, {}}, vocab); }) == ErrorCode::NumericOverflow);
}

TEST_CASE("negative and sub-integer literals round trip") {
  std::vector<AttributeSchema> schema = {{"t", AttributeKind::Continuous, 0}, {"v", AttributeKind::Continuous, 1}};
  QueryTemplate t;
  t.targets = {{AF::Max, "v"}};
  t.cont_filter_attrs = {"t"};
  t.numeric_scales = {{"t", 10.0}};
  std::vector<FlatQuery> w = {{{AF::Max, "v"}, {{"t", -12.5, -0.3}}, {}}, {{AF::Max, "v"}, {{"t", 0.1, 40.7}}, {}}};
  auto vocab = build_vocabulary(w, t, schema);
  CHECK(vocab.offset("t") == -125);
  for (const auto& q : w) CHECK(decode(encode(q, vocab), vocab) == q);
}

TEST_CASE("encode errors") {
  auto schema = testing::running_example_schema();
  std::vector<FlatQuery> w = {running_flat()};
  auto vocab = build_vocabulary(w, running_template(), schema);
  auto q = running_flat();
  q.in[1].member = "Dell";
  CHECK(code_of([&] { encode(q, vocab); }) == ErrorCode::UnknownToken);
  q = running_flat();
  q.target = {AF::Sum, "sales"};
  CHECK(code_of([&] { encode(q, vocab); }) == ErrorCode::UnknownToken);
  q = running_flat();
  q.in.pop_back();
  CHECK(code_of([&] { encode(q, vocab); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("decode rejects malformed matrices") {
  auto schema = testing::running_example_schema();
  std::vector<FlatQuery> w = {running_flat()};
  auto vocab = build_vocabulary(w, running_template(), schema);
  EncodedQuery pad(vocab.sequence_length(), vocab.row_width());
  CHECK(std::all_of(pad.cells.begin(), pad.cells.end(), [](auto c) { return c == 0; }));
  CHECK(code_of([&] { decode(pad, vocab); }) == ErrorCode::MalformedMatrix);

  auto m = encode(w[0], vocab);
  auto bad = m;
  // Token row with payload past the vocabulary.
  for (std::size_t c = 1; c < bad.cols; ++c) bad.at(8, c) = 1;
  CHECK(code_of([&] { decode(bad, vocab); }) == ErrorCode::MalformedMatrix);
  bad = m;
  bad.at(2, 0) = 0;
  CHECK(code_of([&] { decode(bad, vocab); }) == ErrorCode::MalformedMatrix);
  bad = m;
  bad.at(0, 1) = 2;
  CHECK(code_of([&] { decode(bad, vocab); }) == ErrorCode::MalformedMatrix);
  EncodedQuery short_one(3, vocab.row_width());
  CHECK(code_of([&] { decode(short_one, vocab); }) == ErrorCode::MalformedMatrix);
  // Member token in the wrong slot.
  bad = m;
  std::swap_ranges(bad.cells.begin() + 8 * bad.cols, bad.cells.begin() + 9 * bad.cols, bad.cells.begin() + 10 * bad.cols);
  CHECK(code_of([&] { decode(bad, vocab); }) == ErrorCode::MalformedMatrix);
}

TEST_CASE("round trip and injectivity over a generated workload") {
  auto ds = testing::random_table(600, 3);
  QueryTemplate t;
  t.targets = {{AF::Avg, "y"}, {AF::Count, "x"}};
  t.cont_filter_attrs = {"y", "x"};
  t.nom_filter_attrs = {"b", "a"};
  t.numeric_scales = {{"y", 2.0}};
  t.n_cont_samples = 40;
  auto w = generate_workload(ds, t);
  auto vocab = build_vocabulary(w.queries, t, ds.schema());
  std::set<FlatQuery> distinct_q(w.queries.begin(), w.queries.end());
  std::set<std::vector<std::uint8_t>> distinct_m;
  for (const auto& q : w.queries) {
    auto m = encode(q, vocab);
    CHECK(m.rows == vocab.sequence_length());
    CHECK(m.cols == vocab.row_width());
    CHECK(decode(m, vocab) == q);
    distinct_m.insert(m.cells);
  }
  CHECK(distinct_m.size() == distinct_q.size());
  // IDs are contiguous and distinct tokens never share a payload.
  for (std::uint32_t id = 1; id <= vocab.size(); ++id) CHECK(vocab.id(vocab.token(id)) == id);
}

TEST_CASE("vocabulary is deterministic and serializes") {
  auto ds = testing::random_table(300, 4);
  QueryTemplate t;
  t.targets = {{AF::Sum, "y"}};
  t.cont_filter_attrs = {"x"};
  t.nom_filter_attrs = {"a", "b"};
  t.n_cont_samples = 10;
  auto w1 = generate_workload(ds, t);
  auto w2 = generate_workload(ds, t);
  auto v1 = build_vocabulary(w1.queries, t, ds.schema());
  auto v2 = build_vocabulary(w2.queries, t, ds.schema());
  CHECK(v1.to_json().dump() == v2.to_json().dump());
  CHECK(v1.content_hash() == v2.content_hash());
  CHECK(v1.content_hash() == fnv1a64(v1.to_json().dump()));
  auto back = TokenVocabulary::from_json(nlohmann::json::parse(v1.to_json().dump()));
  CHECK(back == v1);
  CHECK(back.content_hash() == v1.content_hash());
  CHECK(encode(w1.queries[0], back) == encode(w1.queries[0], v1));
  CHECK(code_of([] { build_vocabulary({}, QueryTemplate{}, {}); }) == ErrorCode::EmptyList);
}
