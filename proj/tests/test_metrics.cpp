#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include <omp.h>

#include "aqp/lstm.hpp"
#include "aqp/metrics.hpp"
#include "fixtures.hpp"

using namespace aqp;
using namespace aqp::metrics;
using namespace std::chrono_literals;

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

Dataset nominal_table(const std::vector<std::string>& values) {
  std::vector<ColumnData> cols;
  cols.emplace_back(NominalColumn::from_strings(values));
  return Dataset({{"n", AttributeKind::Nominal, 0}}, std::move(cols));
}

Dataset continuous_table(std::vector<double> values) {
  std::vector<ColumnData> cols;
  cols.emplace_back(std::move(values));
  return Dataset({{"c", AttributeKind::Continuous, 0}}, std::move(cols));
}

std::vector<EncodedQuery> stub_queries(std::size_t n) { return std::vector<EncodedQuery>(n, EncodedQuery(2, 3)); }

BatchPredictor sleeping_batch(int workers) {
  return [workers](std::span<const EncodedQuery> xs) {
    std::vector<double> out(xs.size());
#pragma omp parallel for num_threads(workers) schedule(static)
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(xs.size()); ++i) {
      std::this_thread::sleep_for(1ms);
      out[std::size_t(i)] = double(i);
    }
    return out;
  };
}

}  // namespace

TEST_CASE("accuracy examples") {
  std::vector<double> p = {2, 4}, z = {0, 0};
  CHECK(rmse(p, p) == 0);
  CHECK(rmse(p, z) == std::sqrt(10.0));
  std::vector<double> a = {5}, b = {2};
  CHECK(rmse(a, b) == 3);
  CHECK(rmse(p, z) == std::sqrt(nnet::loss(p, z)));

  std::vector<double> y = {0, 100, 50, 50};
  CHECK(nrmse(y, y) == 0);
  std::vector<double> off = {5, 95, 55, 45};
  CHECK(rmse(off, y) == 5);
  CHECK(nrmse(off, y) == doctest::Approx(5.0).epsilon(1e-12));
  std::vector<double> constant = {7, 7, 7};
  CHECK(code_of([&] { nrmse(constant, constant); }) == ErrorCode::DegenerateRange);
  CHECK(code_of([&] { rmse(constant, p); }) == ErrorCode::LengthMismatch);

  auto r = evaluate_accuracy(off, y);
  CHECK(r.n_test == 4);
  CHECK(r.y_min == 0);
  CHECK(r.y_max == 100);
  CHECK(r.rmse == 5);
  auto j = r.to_json();
  CHECK(j.at("nrmse_percent").get<double>() == r.nrmse_percent);
  CHECK(r.table().find("NRMSE") != std::string::npos);
}

TEST_CASE("NRMSE is invariant under joint affine maps") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0, 3);
  std::vector<double> y, p;
  for (int i = 0; i < 200; ++i) {
    y.push_back(double(i % 37) * 2.5);
    p.push_back(y.back() + noise(rng));
  }
  const double base = nrmse(p, y);
  for (auto [a, b] : {std::pair{2.0, 0.0}, {-3.0, 7.0}, {1e5, -4e6}, {0.001, 12.0}}) {
    std::vector<double> ya, pa;
    for (std::size_t i = 0; i < y.size(); ++i) {
      ya.push_back(a * y[i] + b);
      pa.push_back(a * p[i] + b);
    }
    CHECK(nrmse(pa, ya) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("entropy examples") {
  CHECK(column_entropy(nominal_table({"a", "b", "a", "b"}), "n") == 1.0);
  CHECK(column_entropy(nominal_table({"a", "a", "a", "a", "b", "b", "c", "d"}), "n") == 1.75);
  CHECK(column_entropy(nominal_table({"a", "a", "a"}), "n") == 0.0);
  CHECK(column_entropy(continuous_table({3, 3, 3}), "c") == 0.0);

  // 0..9 fall one per bin; 10 (the max) joins the last bin.
  std::vector<double> v;
  for (int i = 0; i <= 10; ++i) v.push_back(i);
  std::vector<std::uint64_t> counts = {1, 1, 1, 1, 1, 1, 1, 1, 1, 2};
  CHECK(column_entropy(continuous_table(v), "c") == doctest::Approx(entropy_of_counts(counts)).epsilon(1e-14));

  std::vector<std::uint64_t> with_zero = {4, 0, 4};
  CHECK(entropy_of_counts(with_zero) == 1.0);

  std::vector<double> w = {0, 0, 0, 0, 10, 10, 10, 10};
  std::vector<ColumnData> cols;
  cols.emplace_back(NominalColumn::from_strings(std::vector<std::string>{"a", "b", "c", "d", "e", "f", "g", "h"}));
  cols.emplace_back(w);
  Dataset two({{"n", AttributeKind::Nominal, 0}, {"c", AttributeKind::Continuous, 1}}, std::move(cols));
  std::vector<std::string> both = {"n", "c"}, one = {"c"};
  CHECK(mean_entropy(two, both) == 2.0);
  CHECK(mean_entropy(two, one) == column_entropy(two, "c"));
  CHECK(code_of([&] { mean_entropy(two, std::span<const std::string>{}); }) == ErrorCode::EmptyList);
}

TEST_CASE("entropy bounds and permutation invariance") {
  auto ds = testing::random_table(500, 77);
  for (const auto& a : ds.schema()) {
    const double h = column_entropy(ds, a.name);
    CHECK(h >= 0);
    if (a.kind == AttributeKind::Nominal)
      CHECK(h <= std::log2(double(distinct_members(ds, a.name).size())) + 1e-12);
    else
      CHECK(h <= std::log2(10.0) + 1e-12);
  }
  std::vector<double> v;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) v.push_back(double(rng() % 1000) / 7.0);
  const double h = column_entropy(continuous_table(v), "c");
  std::shuffle(v.begin(), v.end(), rng);
  CHECK(column_entropy(continuous_table(v), "c") == h);
}

TEST_CASE("input tensor variance") {
  std::vector<EncodedQuery> zeros(3, EncodedQuery(4, 5));
  CHECK(input_tensor_variance(zeros) == 0);
  std::vector<EncodedQuery> half(2, EncodedQuery(2, 2));
  half[0].cells = {1, 0, 1, 0};
  half[1].cells = {0, 1, 0, 1};
  CHECK(input_tensor_variance(half) == 0.25);

  std::mt19937_64 rng(6);
  std::vector<EncodedQuery> xs(50, EncodedQuery(7, 11));
  for (auto& x : xs)
    for (auto& c : x.cells) c = (rng() % 5 == 0);
  // Naive two-pass oracle.
  double n = 0, sum = 0;
  for (const auto& x : xs)
    for (auto c : x.cells) {
      sum += c;
      n += 1;
    }
  const double mean = sum / n;
  double ss = 0;
  for (const auto& x : xs)
    for (auto c : x.cells) ss += (c - mean) * (c - mean);
  CHECK(std::abs(input_tensor_variance(xs) - ss / n) <= 1e-12);
}

TEST_CASE("QL of a 1 ms stub") {
  auto qs = stub_queries(4);
  SinglePredictor stub = [](const EncodedQuery&) {
    std::this_thread::sleep_for(1ms);
    return 0.0;
  };
  const double ql = measure_ql(stub, qs, 3, 40);
  CHECK(ql >= 1.0);
  CHECK(ql <= 1.5);

  // Slow first call is excluded by warmup.
  int calls = 0;
  SinglePredictor slow_first = [&](const EncodedQuery&) {
    std::this_thread::sleep_for(++calls == 1 ? 200ms : 1ms);
    return 0.0;
  };
  CHECK(measure_ql(slow_first, qs, 1, 20) <= 1.5);
  CHECK(calls == 21);

  calls = 0;
  SinglePredictor once = [&](const EncodedQuery&) {
    ++calls;
    std::this_thread::sleep_for(5ms);
    return 0.0;
  };
  const double single = measure_ql(once, qs, 0, 1);
  CHECK(calls == 1);
  CHECK(single >= 5.0);
  CHECK(single <= 7.5);
}

TEST_CASE("QT of a sleeping stub") {
  auto qs = stub_queries(800);
  const double qt8 = measure_qt(sleeping_batch(8), qs);
  CHECK(qt8 >= 8000 * 0.75);
  CHECK(qt8 <= 8000 * 1.25);

  auto small = stub_queries(200), large = stub_queries(400);
  const double a = measure_qt(sleeping_batch(4), small);
  const double b = measure_qt(sleeping_batch(4), large);
  CHECK(std::abs(b - a) <= 0.2 * a);

  // Q / T orientation: 10 queries taking ~50 ms is ~200 q/s, not 0.005.
  BatchPredictor fixed = [](std::span<const EncodedQuery> xs) {
    std::this_thread::sleep_for(50ms);
    return std::vector<double>(xs.size());
  };
  const double qt = measure_qt(fixed, stub_queries(10));
  CHECK(qt > 150);
  CHECK(qt <= 200);
}
