#include "aqp/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace aqp::metrics {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(a.size()) + " predictions vs " +
                                               std::to_string(b.size()) + " labels");
  if (a.empty()) throw Error(ErrorCode::LengthMismatch, "no predictions");
}

using Clock = std::chrono::steady_clock;

}  // namespace

double mean_squared_error(std::span<const double> predictions, std::span<const double> labels) {
  check_lengths(predictions, labels);
  double s = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - labels[i];
    s += d * d;
  }
  return s / static_cast<double>(predictions.size());
}

double rmse(std::span<const double> predictions, std::span<const double> labels) {
  return std::sqrt(mean_squared_error(predictions, labels));
}

double nrmse(std::span<const double> predictions, std::span<const double> labels) {
  check_lengths(predictions, labels);
  auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  if (!(*hi > *lo)) throw Error(ErrorCode::DegenerateRange, "labels are constant");
  return 100.0 * rmse(predictions, labels) / (*hi - *lo);
}

double entropy_of_counts(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0;
  double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

double column_entropy(const Dataset& ds, const std::string& attr) {
  const auto& a = ds.attribute(attr);
  if (a.kind == AttributeKind::Nominal) {
    const auto& col = ds.nominal(a.index);
    std::vector<std::uint64_t> counts(col.dictionary.size(), 0);
    for (auto id : col.ids) ++counts[id];
    return entropy_of_counts(counts);
  }
  const auto values = ds.continuous(a.index);
  if (values.empty()) return 0;
  constexpr std::size_t kBins = 10;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, width = *hi - *lo;
  std::vector<std::uint64_t> counts(kBins, 0);
  for (double v : values) {
    std::size_t bin = 0;
    if (width > 0) bin = std::min(kBins - 1, static_cast<std::size_t>((v - min) / width * kBins));
    ++counts[bin];
  }
  return entropy_of_counts(counts);
}

double mean_entropy(const Dataset& ds, std::span<const std::string> where_attrs) {
  if (where_attrs.empty()) throw Error(ErrorCode::EmptyList, "no WHERE-clause attributes");
  double s = 0;
  for (const auto& a : where_attrs) s += column_entropy(ds, a);
  return s / static_cast<double>(where_attrs.size());
}

double input_tensor_variance(std::span<const EncodedQuery> encoded) {
  if (encoded.empty()) throw Error(ErrorCode::EmptyList, "no encoded queries");
  std::uint64_t n = 0;
  double sum = 0;
  for (const auto& m : encoded)
    for (auto c : m.cells) {
      sum += c;
      ++n;
    }
  if (n == 0) return 0;
  const double mean = sum / static_cast<double>(n);
  double ss = 0;
  for (const auto& m : encoded)
    for (auto c : m.cells) ss += (c - mean) * (c - mean);
  return ss / static_cast<double>(n);
}

double measure_ql(const SinglePredictor& predict, std::span<const EncodedQuery> queries, std::size_t warmup,
                  std::size_t reps) {
  if (queries.empty() || reps == 0) throw Error(ErrorCode::InvalidArgument, "QL needs queries and reps >= 1");
  volatile double sink = 0;
  for (std::size_t i = 0; i < warmup; ++i) sink = sink + predict(queries[i % queries.size()]);
  double total_ms = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto& q = queries[(warmup + r) % queries.size()];
    const auto start = Clock::now();
    sink = sink + predict(q);
    total_ms += std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  }
  return total_ms / static_cast<double>(reps);
}

double measure_qt(const BatchPredictor& predict, std::span<const EncodedQuery> queries) {
  if (queries.empty()) throw Error(ErrorCode::InvalidArgument, "QT needs a non-empty batch");
  const auto start = Clock::now();
  const auto out = predict(queries);
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (out.size() != queries.size())
    throw Error(ErrorCode::LengthMismatch, "batch predictor returned the wrong number of results");
  return static_cast<double>(queries.size()) / std::max(seconds, 1e-12);
}

EvalReport evaluate_accuracy(std::span<const double> predictions, std::span<const double> labels) {
  EvalReport r;
  r.nrmse_percent = nrmse(predictions, labels);
  r.rmse = rmse(predictions, labels);
  r.n_test = labels.size();
  auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
  r.y_min = *lo;
  r.y_max = *hi;
  return r;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = {{"rmse", rmse},   {"nrmse_percent", nrmse_percent}, {"n_test", n_test},
                      {"y_min", y_min}, {"y_max", y_max},                 {"workers", workers}};
  auto opt = [&](const char* key, const std::optional<double>& v) { j[key] = v ? nlohmann::json(*v) : nlohmann::json(); };
  opt("ql_ms", ql_ms);
  opt("qt_qps", qt_qps);
  opt("mean_entropy", mean_entropy);
  opt("input_tensor_variance", input_tensor_variance);
  return j;
}

std::string EvalReport::table() const {
  auto cell = [](const std::optional<double>& v, const char* fmt) {
    if (!v) return std::string("-");
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return std::string(buf);
  };
  char line[512];
  std::ostringstream os;
  std::snprintf(line, sizeof line, "%-8s %-12s %-10s %-10s %-10s %-10s %-8s\n", "n_test", "RMSE", "NRMSE(%)",
                "QT (q/s)", "QL (ms/q)", "ME (bits)", "workers");
  os << line;
  std::snprintf(line, sizeof line, "%-8zu %-12.6g %-10.4f %-10s %-10s %-10s %-8d\n", n_test, rmse, nrmse_percent,
                cell(qt_qps, "%.0f").c_str(), cell(ql_ms, "%.4f").c_str(), cell(mean_entropy, "%.4f").c_str(),
                workers);
  os << line;
  return os.str();
}

}  // namespace aqp::metrics
