#include "aqp/lstm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <omp.h>

#include "aqp/metrics.hpp"
#include "aqp/querygen.hpp"

namespace aqp::nnet {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(LabelNorm n) noexcept {
  switch (n) {
    case LabelNorm::ZScore: return "zscore";
    case LabelNorm::MinMax: return "minmax";
    case LabelNorm::None: return "none";
  }
  return "?";
}

LabelNorm parse_label_norm(std::string_view text) {
  if (text == "zscore") return LabelNorm::ZScore;
  if (text == "minmax") return LabelNorm::MinMax;
  if (text == "none") return LabelNorm::None;
  throw Error(ErrorCode::InvalidArgument, "unknown label normalization '" + std::string(text) + "'");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"lstm_units", lstm_units},       {"dense_units", dense_units}, {"seq_len", seq_len},
          {"input_width", input_width},     {"learning_rate", learning_rate}, {"batch_size", batch_size},
          {"max_epochs", max_epochs},       {"patience", patience},       {"seed", seed},
          {"label_norm", to_string(label_norm)}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.lstm_units = j.value("lstm_units", c.lstm_units);
  c.dense_units = j.value("dense_units", c.dense_units);
  c.seq_len = j.value("seq_len", c.seq_len);
  c.input_width = j.value("input_width", c.input_width);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  if (j.contains("label_norm")) c.label_norm = parse_label_norm(j.at("label_norm").get<std::string>());
  return c;
}

void ModelConfig::validate() const {
  if (lstm_units == 0 || dense_units == 0 || seq_len == 0 || input_width == 0 || batch_size == 0 ||
      max_epochs == 0)
    throw Error(ErrorCode::InvalidArgument, "model sizes, batch size and epoch budget must be positive");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate))
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
}

LabelScaler LabelScaler::fit(LabelNorm kind, std::span<const double> labels) {
  LabelScaler s;
  s.kind = kind;
  if (kind == LabelNorm::None || labels.empty()) return s;
  if (kind == LabelNorm::ZScore) {
    double mean = std::accumulate(labels.begin(), labels.end(), 0.0) / static_cast<double>(labels.size());
    double var = 0;
    for (double y : labels) var += (y - mean) * (y - mean);
    var /= static_cast<double>(labels.size());
    s.shift = mean;
    s.scale = var > 0 ? std::sqrt(var) : 1.0;
  } else {
    auto [lo, hi] = std::minmax_element(labels.begin(), labels.end());
    s.shift = *lo;
    s.scale = *hi > *lo ? *hi - *lo : 1.0;
  }
  return s;
}

Examples Examples::subset(std::span<const std::size_t> indices) const {
  Examples out;
  out.seq_len = seq_len;
  out.width = width;
  const std::size_t stride = seq_len * width;
  out.x.resize(indices.size() * stride);
  out.y.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(indices[k] * stride), stride,
                out.x.begin() + static_cast<std::ptrdiff_t>(k * stride));
    out.y[k] = y[indices[k]];
  }
  return out;
}

Examples make_examples(std::span<const EncodedQuery> queries, std::span<const double> labels) {
  if (queries.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(queries.size()) + " queries but " +
                                               std::to_string(labels.size()) + " labels");
  Examples ex;
  if (queries.empty()) return ex;
  ex.seq_len = queries.front().rows;
  ex.width = queries.front().cols;
  ex.x.reserve(queries.size() * ex.seq_len * ex.width);
  for (const auto& q : queries) {
    if (q.rows != ex.seq_len || q.cols != ex.width)
      throw Error(ErrorCode::ShapeMismatch, "encoded queries do not share one shape");
    for (auto cell : q.cells) ex.x.push_back(static_cast<double>(cell));
  }
  ex.y.assign(labels.begin(), labels.end());
  return ex;
}

// Model

LstmModel::LstmModel(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t H = config_.lstm_units, D = config_.input_width, Dn = config_.dense_units;
  std::size_t offset = 0;
  auto add = [&](const char* name, std::size_t rows, std::size_t cols) {
    groups_.push_back({name, offset, rows, cols});
    offset += rows * cols;
  };
  add("lstm.input_weights", 4 * H, D);
  add("lstm.recurrent_weights", 4 * H, H);
  add("lstm.bias", 4 * H, 1);
  add("dense.weights", Dn, H);
  add("dense.bias", Dn, 1);
  add("output.weights", 1, Dn);
  add("output.bias", 1, 1);
  params_ = VectorXd::Zero(static_cast<Eigen::Index>(offset));
  state_.adam_m = VectorXd::Zero(params_.size());
  state_.adam_v = VectorXd::Zero(params_.size());
}

const ParameterGroup& LstmModel::group(std::string_view name) const {
  for (const auto& g : groups_)
    if (g.name == name) return g;
  throw Error(ErrorCode::InvalidArgument, "no parameter group '" + std::string(name) + "'");
}

std::span<double> LstmModel::group_values(std::string_view name) {
  const auto& g = group(name);
  return {params_.data() + g.offset, g.size()};
}

Eigen::Map<const MatrixXd> LstmModel::matrix(std::string_view name) const {
  const auto& g = group(name);
  return {params_.data() + g.offset, Eigen::Index(g.rows), Eigen::Index(g.cols)};
}

Eigen::Map<MatrixXd> LstmModel::matrix(std::string_view name) {
  const auto& g = group(name);
  return {params_.data() + g.offset, Eigen::Index(g.rows), Eigen::Index(g.cols)};
}

LstmModel init(const ModelConfig& config) {
  LstmModel model(config);
  const std::size_t H = config.lstm_units, D = config.input_width, Dn = config.dense_units;
  Rng rng(config.seed);
  auto xavier = [&](Eigen::Block<Eigen::Map<MatrixXd>> block, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index c = 0; c < block.cols(); ++c)
      for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = u(rng);
  };
  auto wx = model.matrix("lstm.input_weights");
  auto wh = model.matrix("lstm.recurrent_weights");
  const auto h = Eigen::Index(H);
  for (Eigen::Index gate = 0; gate < 4; ++gate) {
    xavier(wx.block(gate * h, 0, h, wx.cols()), D, H);
    xavier(wh.block(gate * h, 0, h, h), H, H);
  }
  auto wd = model.matrix("dense.weights");
  xavier(wd.block(0, 0, wd.rows(), wd.cols()), H, Dn);
  auto wo = model.matrix("output.weights");
  xavier(wo.block(0, 0, 1, wo.cols()), Dn, 1);
  auto bias = model.matrix("lstm.bias");
  bias.middleRows(h, h).setOnes();  // forget gate
  return model;
}

namespace {

template <class Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& z) {
  return (1.0 + (-z.array()).exp()).inverse();
}

// tanh through the vectorized exp: 2 * logistic(2z) - 1.
template <class Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& z) {
  return 2.0 / (1.0 + (-2.0 * z).exp()) - 1.0;
}

}  // namespace

double LstmModel::forward_normalized(std::span<const double> input) const {
  const auto L = Eigen::Index(config_.seq_len), D = Eigen::Index(config_.input_width),
             H = Eigen::Index(config_.lstm_units);
  if (input.size() != static_cast<std::size_t>(L * D))
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(input.size()) + " cells, model expects " +
                                              std::to_string(L * D));
  const auto wx = matrix("lstm.input_weights");
  const auto wh = matrix("lstm.recurrent_weights");
  const auto b = matrix("lstm.bias");
  thread_local VectorXd h, c, z;
  h.setZero(H);
  c.setZero(H);
  z.resize(4 * H);
  for (Eigen::Index t = 0; t < L; ++t) {
    Eigen::Map<const VectorXd> x(input.data() + t * D, D);
    z.noalias() = wx * x;
    z += b;
    if (t > 0) z.noalias() += wh * h;
    z.head(2 * H).array() = (1.0 + (-z.head(2 * H).array()).exp()).inverse();
    z.tail(H).array() = (1.0 + (-z.tail(H).array()).exp()).inverse();
    z.segment(2 * H, H).array() = fast_tanh(z.segment(2 * H, H).array());
    c.array() = z.segment(H, H).array() * c.array() + z.head(H).array() * z.segment(2 * H, H).array();
    h.array() = z.tail(H).array() * fast_tanh(c.array());
  }
  thread_local VectorXd a;
  a.noalias() = matrix("dense.weights") * h;
  a += matrix("dense.bias");
  a = a.cwiseMax(0.0);
  return (matrix("output.weights") * a)(0, 0) + params_(params_.size() - 1);
}

double LstmModel::forward_normalized(const EncodedQuery& x) const {
  if (x.rows != config_.seq_len || x.cols != config_.input_width)
    throw Error(ErrorCode::ShapeMismatch, "query shape (" + std::to_string(x.rows) + "," + std::to_string(x.cols) +
                                              ") differs from model input shape (" +
                                              std::to_string(config_.seq_len) + "," +
                                              std::to_string(config_.input_width) + ")");
  thread_local std::vector<double> buf;
  buf.assign(x.cells.begin(), x.cells.end());
  return forward_normalized(std::span<const double>(buf));
}

double forward(const LstmModel& model, const EncodedQuery& x) {
  return model.scaler().denormalize(model.forward_normalized(x));
}

std::vector<double> predict_batch_serial(const LstmModel& model, std::span<const EncodedQuery> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(forward(model, x));
  return out;
}

std::vector<double> predict_batch(const LstmModel& model, std::span<const EncodedQuery> xs, int workers) {
  for (const auto& x : xs)
    if (x.rows != model.config().seq_len || x.cols != model.config().input_width)
      throw Error(ErrorCode::ShapeMismatch, "batch contains a query of the wrong shape");
  std::vector<double> out(xs.size());
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
  const int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = forward(model, xs[i]);
  return out;
}

double loss(std::span<const double> predictions, std::span<const double> labels) {
  return metrics::mean_squared_error(predictions, labels);
}

// Batched training path

namespace {

struct Activations {
  Eigen::Index n = 0;
  MatrixXd x;      // D x (L*n), column t*n + j
  MatrixXd gates;  // 4H x (L*n): i, f, g, o after their nonlinearity
  MatrixXd cells;  // H x (L*n)
  MatrixXd tanh_cells;
  MatrixXd hidden;
  MatrixXd dense_pre;  // Dn x n
  MatrixXd dense;      // Dn x n
  Eigen::RowVectorXd out;
};

void gather_inputs(const Examples& ex, std::size_t begin, std::size_t count, MatrixXd& x) {
  const auto L = Eigen::Index(ex.seq_len), D = Eigen::Index(ex.width), n = Eigen::Index(count);
  x.resize(D, L * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double* src = ex.x.data() + (begin + std::size_t(j)) * ex.seq_len * ex.width;
    for (Eigen::Index t = 0; t < L; ++t)
      for (Eigen::Index c = 0; c < D; ++c) x(c, t * n + j) = src[t * D + c];
  }
}

void forward_batch(const LstmModel& model, const Examples& ex, std::size_t begin, std::size_t count,
                   Activations& a) {
  const auto& cfg = model.config();
  const auto L = Eigen::Index(cfg.seq_len), H = Eigen::Index(cfg.lstm_units);
  const auto n = Eigen::Index(count);
  a.n = n;
  gather_inputs(ex, begin, count, a.x);
  const auto wh = model.matrix("lstm.recurrent_weights");

  a.gates.noalias() = model.matrix("lstm.input_weights") * a.x;
  a.gates.colwise() += model.matrix("lstm.bias").col(0);
  a.cells.resize(H, L * n);
  a.tanh_cells.resize(H, L * n);
  a.hidden.resize(H, L * n);
  for (Eigen::Index t = 0; t < L; ++t) {
    auto z = a.gates.middleCols(t * n, n);
    if (t > 0) z.noalias() += wh * a.hidden.middleCols((t - 1) * n, n);
    z.topRows(H) = sigmoid(z.topRows(H));
    z.middleRows(H, H) = sigmoid(z.middleRows(H, H));
    z.middleRows(2 * H, H) = fast_tanh(z.middleRows(2 * H, H).array()).matrix();
    z.bottomRows(H) = sigmoid(z.bottomRows(H));
    auto c = a.cells.middleCols(t * n, n);
    c = z.topRows(H).cwiseProduct(z.middleRows(2 * H, H));
    if (t > 0) c += z.middleRows(H, H).cwiseProduct(a.cells.middleCols((t - 1) * n, n));
    a.tanh_cells.middleCols(t * n, n) = fast_tanh(c.array()).matrix();
    a.hidden.middleCols(t * n, n) = z.bottomRows(H).cwiseProduct(a.tanh_cells.middleCols(t * n, n));
  }
  a.dense_pre.noalias() = model.matrix("dense.weights") * a.hidden.middleCols((L - 1) * n, n);
  a.dense_pre.colwise() += model.matrix("dense.bias").col(0);
  a.dense = a.dense_pre.cwiseMax(0.0);
  a.out.noalias() = model.matrix("output.weights") * a.dense;
  a.out.array() += model.parameters().back();
}

}  // namespace

VectorXd predict_normalized(const LstmModel& model, const Examples& examples) {
  VectorXd out(Eigen::Index(examples.size()));
  Activations a;
  const std::size_t chunk = 1024;
  for (std::size_t begin = 0; begin < examples.size(); begin += chunk) {
    const std::size_t count = std::min(chunk, examples.size() - begin);
    forward_batch(model, examples, begin, count, a);
    out.segment(Eigen::Index(begin), Eigen::Index(count)) = a.out.transpose();
  }
  return out;
}

LossAndGradient compute_gradient(const LstmModel& model, const Examples& batch) {
  const auto& cfg = model.config();
  if (batch.seq_len != cfg.seq_len || batch.width != cfg.input_width)
    throw Error(ErrorCode::ShapeMismatch, "batch shape differs from model input shape");
  if (batch.size() == 0) throw Error(ErrorCode::LengthMismatch, "empty batch");
  const auto L = Eigen::Index(cfg.seq_len), H = Eigen::Index(cfg.lstm_units);

  Activations a;
  forward_batch(model, batch, 0, batch.size(), a);
  const Eigen::Index n = a.n;
  Eigen::RowVectorXd target(n);
  for (Eigen::Index j = 0; j < n; ++j) target(j) = model.scaler().normalize(batch.y[std::size_t(j)]);

  LossAndGradient result;
  const Eigen::RowVectorXd diff = a.out - target;
  result.loss = diff.squaredNorm() / static_cast<double>(n);
  result.gradient = VectorXd::Zero(Eigen::Index(model.parameters().size()));

  auto grad = [&](std::string_view name) {
    const auto& g = model.group(name);
    return Eigen::Map<MatrixXd>(result.gradient.data() + g.offset, Eigen::Index(g.rows), Eigen::Index(g.cols));
  };

  // Output and dense layers.
  const Eigen::RowVectorXd d_out = (2.0 / static_cast<double>(n)) * diff;
  grad("output.weights").noalias() = d_out * a.dense.transpose();
  grad("output.bias")(0, 0) = d_out.sum();
  MatrixXd d_dense = model.matrix("output.weights").transpose() * d_out;
  d_dense = d_dense.cwiseProduct((a.dense_pre.array() > 0.0).cast<double>().matrix());
  const auto h_last = a.hidden.middleCols((L - 1) * n, n);
  grad("dense.weights").noalias() = d_dense * h_last.transpose();
  grad("dense.bias") = d_dense.rowwise().sum();

  // Back-propagation through time.
  const auto wh = model.matrix("lstm.recurrent_weights");
  MatrixXd dh = model.matrix("dense.weights").transpose() * d_dense;
  MatrixXd dc = MatrixXd::Zero(H, n);
  MatrixXd dz_all(4 * H, L * n);
  for (Eigen::Index t = L - 1; t >= 0; --t) {
    const auto z = a.gates.middleCols(t * n, n);
    const auto i = z.topRows(H).array();
    const auto f = z.middleRows(H, H).array();
    const auto g = z.middleRows(2 * H, H).array();
    const auto o = z.bottomRows(H).array();
    const auto tc = a.tanh_cells.middleCols(t * n, n).array();
    auto dz = dz_all.middleCols(t * n, n);

    dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.topRows(H) = (dc.array() * g * i * (1.0 - i)).matrix();
    dz.middleRows(2 * H, H) = (dc.array() * i * (1.0 - g.square())).matrix();
    if (t > 0) {
      dz.middleRows(H, H) = (dc.array() * a.cells.middleCols((t - 1) * n, n).array() * f * (1.0 - f)).matrix();
      dc.array() *= f;
      dh.noalias() = wh.transpose() * dz;
    } else {
      dz.middleRows(H, H).setZero();
    }
  }
  grad("lstm.input_weights").noalias() = dz_all * a.x.transpose();
  grad("lstm.bias") = dz_all.rowwise().sum();
  if (L > 1)
    grad("lstm.recurrent_weights").noalias() =
        dz_all.rightCols((L - 1) * n) * a.hidden.leftCols((L - 1) * n).transpose();
  return result;
}

GradientCheckResult gradient_check(const LstmModel& model, const Examples& batch, std::size_t per_group,
                                   std::uint64_t seed, double h) {
  const auto analytic = compute_gradient(model, batch);
  LstmModel probe = model;
  auto params = probe.parameters();
  auto batch_loss = [&] {
    const VectorXd pred = predict_normalized(probe, batch);
    double s = 0;
    for (Eigen::Index j = 0; j < pred.size(); ++j) {
      const double d = pred(j) - probe.scaler().normalize(batch.y[std::size_t(j)]);
      s += d * d;
    }
    return s / static_cast<double>(pred.size());
  };

  GradientCheckResult result;
  Rng rng(seed);
  for (const auto& g : model.groups()) {
    std::vector<std::size_t> coords(g.size());
    std::iota(coords.begin(), coords.end(), g.offset);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(std::min(per_group, coords.size()));
    double worst = 0;
    for (auto k : coords) {
      const double saved = params[k];
      params[k] = saved + h;
      const double up = batch_loss();
      params[k] = saved - h;
      const double down = batch_loss();
      params[k] = saved;
      const double numeric = (up - down) / (2 * h);
      const double exact = analytic.gradient(Eigen::Index(k));
      const double rel = std::abs(exact - numeric) / std::max(std::abs(exact) + std::abs(numeric), 1e-12);
      worst = std::max(worst, rel);
      ++result.checked;
    }
    result.per_group.emplace_back(g.name, worst);
    result.max_relative_error = std::max(result.max_relative_error, worst);
  }
  return result;
}

// Training

nlohmann::json TrainReport::to_json(bool include_timing) const {
  nlohmann::json epochs_json = nlohmann::json::array();
  for (const auto& e : epochs)
    epochs_json.push_back({{"epoch", e.epoch}, {"train_mse", e.train_mse}, {"validation_mse", e.validation_mse}});
  nlohmann::json j = {{"epochs", epochs_json},
                      {"best_epoch", best_epoch},
                      {"stopping_epoch", stopping_epoch},
                      {"best_validation_mse", best_validation_mse},
                      {"initial_validation_mse", initial_validation_mse},
                      {"early_stopped", early_stopped}};
  if (include_timing) j["wall_seconds"] = wall_seconds;
  return j;
}

namespace {

double validation_mse(const LstmModel& model, const Examples& val) {
  const VectorXd pred = predict_normalized(model, val);
  double s = 0;
  for (Eigen::Index j = 0; j < pred.size(); ++j) {
    const double d = pred(j) - model.scaler().normalize(val.y[std::size_t(j)]);
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

void check_shapes(const LstmModel& model, const Examples& ex, const char* what) {
  if (ex.size() == 0) throw Error(ErrorCode::LengthMismatch, std::string(what) + " set is empty");
  if (ex.seq_len != model.config().seq_len || ex.width != model.config().input_width)
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " examples have shape (" + std::to_string(ex.seq_len) +
                                              "," + std::to_string(ex.width) + "), model expects (" +
                                              std::to_string(model.config().seq_len) + "," +
                                              std::to_string(model.config().input_width) + ")");
}

TrainReport run_training(LstmModel& model, const Examples& train, const Examples& validation,
                         const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  check_shapes(model, train, "training");
  check_shapes(model, validation, "validation");
  const ModelConfig& cfg = model.config();
  auto& state = model.training_state();
  const bool fresh = state.epochs_trained == 0;
  if (fresh) model.set_scaler(LabelScaler::fit(cfg.label_norm, train.y));

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Eigen::Map<VectorXd> params(model.parameters().data(), Eigen::Index(model.parameters().size()));

  TrainReport report;
  report.initial_validation_mse = validation_mse(model, validation);
  double best = fresh ? std::numeric_limits<double>::infinity() : report.initial_validation_mse;
  VectorXd best_params = params;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, state.epochs_trained + 1));
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - begin);
      const auto batch = train.subset(std::span<const std::size_t>(order).subspan(begin, count));
      auto lg = compute_gradient(model, batch);
      if (!std::isfinite(lg.loss) || !lg.gradient.allFinite())
        throw Error(ErrorCode::DivergedLoss, "non-finite loss in epoch " + std::to_string(state.epochs_trained + 1));
      sum += lg.loss * static_cast<double>(count);

      ++state.adam_step;
      const double step = static_cast<double>(state.adam_step);
      const double c1 = 1.0 - std::pow(beta1, step);
      const double c2 = 1.0 - std::pow(beta2, step);
      state.adam_m = beta1 * state.adam_m + (1.0 - beta1) * lg.gradient;
      state.adam_v = beta2 * state.adam_v + (1.0 - beta2) * lg.gradient.cwiseAbs2();
      params.array() -= cfg.learning_rate * (state.adam_m.array() / c1) /
                        ((state.adam_v.array() / c2).sqrt() + eps);
    }
    ++state.epochs_trained;

    EpochStats stats{epoch, sum / static_cast<double>(train.size()), validation_mse(model, validation)};
    if (!std::isfinite(stats.train_mse) || !std::isfinite(stats.validation_mse))
      throw Error(ErrorCode::DivergedLoss, "non-finite loss in epoch " + std::to_string(state.epochs_trained));
    report.epochs.push_back(stats);
    report.stopping_epoch = epoch;
    if (on_epoch) on_epoch(stats);

    if (stats.validation_mse < best) {
      best = stats.validation_mse;
      best_params = params;
      report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > cfg.patience) {
      report.early_stopped = true;
      break;
    }
  }
  params = best_params;
  report.best_validation_mse = best;
  state.best_validation_mse = best;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace

TrainReport fit(LstmModel& model, const Examples& train, const Examples& validation, const EpochCallback& on_epoch) {
  return run_training(model, train, validation, on_epoch);
}

TrainReport resume_training(LstmModel& model, std::uint64_t vocabulary_hash, const Examples& train,
                            const Examples& validation, const ModelConfig& schedule, const EpochCallback& on_epoch) {
  if (vocabulary_hash != model.vocabulary_hash)
    throw Error(ErrorCode::VocabularyMismatch, "new data was encoded with a different vocabulary");
  auto& cfg = model.mutable_config();
  if (schedule.lstm_units != cfg.lstm_units || schedule.dense_units != cfg.dense_units ||
      schedule.seq_len != cfg.seq_len || schedule.input_width != cfg.input_width)
    throw Error(ErrorCode::ShapeMismatch, "resume schedule changes the network architecture");
  schedule.validate();
  cfg.learning_rate = schedule.learning_rate;
  cfg.batch_size = schedule.batch_size;
  cfg.max_epochs = schedule.max_epochs;
  cfg.patience = schedule.patience;
  return run_training(model, train, validation, on_epoch);
}

}  // namespace aqp::nnet
