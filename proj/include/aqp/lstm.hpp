#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "aqp/encoder.hpp"

namespace aqp::nnet {

enum class LabelNorm { ZScore, MinMax, None };

std::string_view to_string(LabelNorm n) noexcept;
LabelNorm parse_label_norm(std::string_view text);

struct ModelConfig {
  std::size_t lstm_units = 128;
  std::size_t dense_units = 200;
  std::size_t seq_len = 1;      // L
  std::size_t input_width = 1;  // 1 + B
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  std::uint64_t seed = 42;
  LabelNorm label_norm = LabelNorm::ZScore;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  /// Throws InvalidArgument.
  void validate() const;
};

/// Affine label transform fitted on the training split.
struct LabelScaler {
  LabelNorm kind = LabelNorm::None;
  double shift = 0;
  double scale = 1;

  static LabelScaler fit(LabelNorm kind, std::span<const double> labels);
  double normalize(double y) const noexcept { return (y - shift) / scale; }
  double denormalize(double z) const noexcept { return z * scale + shift; }
};

/// Encoded queries flattened to doubles: example i, step t, column c lives at
/// x[(i * seq_len + t) * width + c].
struct Examples {
  std::size_t seq_len = 0;
  std::size_t width = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const noexcept { return y.size(); }
  Examples subset(std::span<const std::size_t> indices) const;
};

/// Throws ShapeMismatch / LengthMismatch.
Examples make_examples(std::span<const EncodedQuery> queries, std::span<const double> labels);

struct ParameterGroup {
  std::string name;
  std::size_t offset;
  std::size_t rows;
  std::size_t cols;
  std::size_t size() const noexcept { return rows * cols; }
};

/// One LSTM layer (gate order: input, forget, cell, output), a rectified
/// linear dense layer and a linear scalar output. All parameters live in one
/// flat vector; matrices are column-major views into it.
class LstmModel {
 public:
  LstmModel() = default;
  explicit LstmModel(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }
  ModelConfig& mutable_config() noexcept { return config_; }

  std::span<const double> parameters() const noexcept { return {params_.data(), std::size_t(params_.size())}; }
  std::span<double> parameters() noexcept { return {params_.data(), std::size_t(params_.size())}; }
  const std::vector<ParameterGroup>& groups() const noexcept { return groups_; }
  const ParameterGroup& group(std::string_view name) const;
  std::span<double> group_values(std::string_view name);

  const LabelScaler& scaler() const noexcept { return scaler_; }
  void set_scaler(const LabelScaler& s) noexcept { scaler_ = s; }

  // Training state carried across checkpoints.
  struct TrainingState {
    Eigen::VectorXd adam_m;
    Eigen::VectorXd adam_v;
    std::uint64_t adam_step = 0;
    std::uint64_t epochs_trained = 0;
    double best_validation_mse = 0;
  };
  const TrainingState& training_state() const noexcept { return state_; }
  TrainingState& training_state() noexcept { return state_; }

  /// Content hash and JSON of the vocabulary the model was trained against.
  std::uint64_t vocabulary_hash = 0;
  nlohmann::json vocabulary;

  /// Raw network output in normalized label space, one query (steps x width, row-major).
  double forward_normalized(std::span<const double> input) const;
  double forward_normalized(const EncodedQuery& x) const;

  Eigen::Map<const Eigen::MatrixXd> matrix(std::string_view name) const;
  Eigen::Map<Eigen::MatrixXd> matrix(std::string_view name);

 private:
  ModelConfig config_;
  Eigen::VectorXd params_;
  std::vector<ParameterGroup> groups_;
  LabelScaler scaler_;
  TrainingState state_;
};

/// Xavier-uniform weights (per gate block), zero biases except the forget
/// gate bias, which starts at 1. Deterministic under config.seed.
LstmModel init(const ModelConfig& config);

/// Predicted label (denormalized). Throws ShapeMismatch.
double forward(const LstmModel& model, const EncodedQuery& x);

/// Serial reference: forward() applied element-wise.
std::vector<double> predict_batch_serial(const LstmModel& model, std::span<const EncodedQuery> xs);
/// Element-wise identical to predict_batch_serial for any worker count (0 = runtime default).
std::vector<double> predict_batch(const LstmModel& model, std::span<const EncodedQuery> xs, int workers = 0);

/// Mean squared error, (1/n) * sum (pred - label)^2.
double loss(std::span<const double> predictions, std::span<const double> labels);

/// Batch MSE in normalized label space and its gradient (flat, parameter layout).
struct LossAndGradient {
  double loss = 0;
  Eigen::VectorXd gradient;
};
LossAndGradient compute_gradient(const LstmModel& model, const Examples& batch);

/// Normalized-space predictions through the batched training path.
Eigen::VectorXd predict_normalized(const LstmModel& model, const Examples& examples);

struct GradientCheckResult {
  double max_relative_error = 0;
  std::vector<std::pair<std::string, double>> per_group;
  std::size_t checked = 0;
};

/// Central differences (step `h`) on `per_group` random coordinates of every
/// parameter group. Relative error |ga - gn| / max(|ga| + |gn|, 1e-12).
GradientCheckResult gradient_check(const LstmModel& model, const Examples& batch, std::size_t per_group = 20,
                                   std::uint64_t seed = 7, double h = 1e-5);

struct EpochStats {
  std::size_t epoch = 0;
  double train_mse = 0;
  double validation_mse = 0;
};

/// MSE values are in normalized label space.
struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  std::size_t stopping_epoch = 0;
  double best_validation_mse = 0;
  double initial_validation_mse = 0;
  bool early_stopped = false;
  double wall_seconds = 0;

  nlohmann::json to_json(bool include_timing = false) const;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam (0.9, 0.999, 1e-8) with full BPTT. Stops after max_epochs
/// or once validation MSE has not improved for `patience` epochs; the best
/// validation parameters are kept. Fits the label scaler on `train` unless
/// the model has already been trained. Throws DivergedLoss.
TrainReport fit(LstmModel& model, const Examples& train, const Examples& validation,
                const EpochCallback& on_epoch = {});

/// Continues training from the model's parameters and optimizer moments.
/// Architecture fields of `schedule` must match; its learning rate, batch
/// size, epoch budget and patience replace the stored ones. Throws
/// VocabularyMismatch when `vocabulary_hash` differs from the model's.
TrainReport resume_training(LstmModel& model, std::uint64_t vocabulary_hash, const Examples& train,
                            const Examples& validation, const ModelConfig& schedule,
                            const EpochCallback& on_epoch = {});

}  // namespace aqp::nnet
