#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aqp/encoder.hpp"
#include "aqp/store.hpp"

namespace aqp::metrics {

/// (1/n) * sum (pred - label)^2. Throws LengthMismatch.
double mean_squared_error(std::span<const double> predictions, std::span<const double> labels);

/// sqrt(mean_squared_error).
double rmse(std::span<const double> predictions, std::span<const double> labels);

/// 100 * RMSE / (max(labels) - min(labels)). Throws DegenerateRange.
double nrmse(std::span<const double> predictions, std::span<const double> labels);

/// Shannon entropy in bits of a frequency table; zero counts contribute 0.
double entropy_of_counts(std::span<const std::uint64_t> counts);

/// Nominal: entropy of member frequencies. Continuous: entropy over 10
/// equal-length bins spanning [min, max]; the maximum lands in the last bin.
double column_entropy(const Dataset& ds, const std::string& attr);

/// Mean column_entropy over the WHERE-clause attributes. Throws EmptyList.
double mean_entropy(const Dataset& ds, std::span<const std::string> where_attrs);

/// Population variance over every cell of every matrix.
double input_tensor_variance(std::span<const EncodedQuery> encoded);

using SinglePredictor = std::function<double(const EncodedQuery&)>;
using BatchPredictor = std::function<std::vector<double>(std::span<const EncodedQuery>)>;

/// Mean wall-clock milliseconds of one prediction, over `reps` timed calls
/// after `warmup` untimed ones. Queries are cycled. Monotonic clock.
double measure_ql(const SinglePredictor& predict, std::span<const EncodedQuery> queries, std::size_t warmup,
                  std::size_t reps);

/// Queries per second of one batch call: Q / T.
double measure_qt(const BatchPredictor& predict, std::span<const EncodedQuery> queries);

struct EvalReport {
  double rmse = 0;
  double nrmse_percent = 0;
  std::size_t n_test = 0;
  double y_min = 0;
  double y_max = 0;
  std::optional<double> ql_ms;
  std::optional<double> qt_qps;
  std::optional<double> mean_entropy;
  std::optional<double> input_tensor_variance;
  int workers = 1;

  nlohmann::json to_json() const;
  /// Aligned text table with the QT (q/s), QL (ms/q) and NRMSE columns.
  std::string table() const;
};

/// Accuracy fields of an EvalReport. Throws DegenerateRange / LengthMismatch.
EvalReport evaluate_accuracy(std::span<const double> predictions, std::span<const double> labels);

}  // namespace aqp::metrics
