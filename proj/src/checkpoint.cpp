#include "aqp/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "aqp/artifacts.hpp"
#include "aqp/hash.hpp"

namespace aqp::nnet {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'Q', 'P', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_doubles(std::string& out, const double* data, std::size_t n) {
  put<std::uint64_t>(out, n);
  out.append(reinterpret_cast<const char*>(data), n * sizeof(double));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void get_doubles(double* out, std::size_t expected) {
    const auto n = get<std::uint64_t>();
    if (n != expected)
      throw Error(ErrorCode::ParseError, "checkpoint array has " + std::to_string(n) + " values, expected " +
                                             std::to_string(expected));
    auto raw = take(n * sizeof(double));
    std::memcpy(out, raw.data(), raw.size());
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::ParseError, "truncated checkpoint");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize(const LstmModel& model) {
  const auto& st = model.training_state();
  nlohmann::json header = {
      {"config", model.config().to_json()},
      {"input_shape", {model.config().seq_len, model.config().input_width}},
      {"label_norm", to_string(model.scaler().kind)},
      {"vocabulary_hash", hex64(model.vocabulary_hash)},
      {"vocabulary", model.vocabulary},
      {"adam_step", st.adam_step},
      {"epochs_trained", st.epochs_trained},
  };
  const std::string h = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, h.size());
  out += h;
  const double scalars[3] = {model.scaler().shift, model.scaler().scale, st.best_validation_mse};
  put_doubles(out, scalars, 3);
  const auto p = model.parameters();
  put_doubles(out, p.data(), p.size());
  put_doubles(out, st.adam_m.data(), std::size_t(st.adam_m.size()));
  put_doubles(out, st.adam_v.data(), std::size_t(st.adam_v.size()));
  return out;
}

LstmModel deserialize(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic))
    throw Error(ErrorCode::ParseError, "not a model checkpoint");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw Error(ErrorCode::VersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                                std::to_string(kCheckpointVersion));
  const auto header_len = in.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.take(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint header: ") + e.what());
  }

  LstmModel model(ModelConfig::from_json(header.at("config")));
  double scalars[3];
  in.get_doubles(scalars, 3);
  LabelScaler scaler;
  scaler.kind = parse_label_norm(header.at("label_norm").get<std::string>());
  scaler.shift = scalars[0];
  scaler.scale = scalars[1];
  model.set_scaler(scaler);

  auto& st = model.training_state();
  st.best_validation_mse = scalars[2];
  st.adam_step = header.at("adam_step").get<std::uint64_t>();
  st.epochs_trained = header.at("epochs_trained").get<std::uint64_t>();
  auto p = model.parameters();
  in.get_doubles(p.data(), p.size());
  in.get_doubles(st.adam_m.data(), std::size_t(st.adam_m.size()));
  in.get_doubles(st.adam_v.data(), std::size_t(st.adam_v.size()));
  if (!in.done()) throw Error(ErrorCode::ParseError, "trailing bytes after checkpoint");

  model.vocabulary_hash = std::stoull(header.at("vocabulary_hash").get<std::string>(), nullptr, 16);
  model.vocabulary = header.at("vocabulary");
  return model;
}

void save(const LstmModel& model, const std::filesystem::path& path) { atomic_write(path, serialize(model)); }

LstmModel load(const std::filesystem::path& path) { return deserialize(read_text(path)); }

void check_vocabulary(const LstmModel& model, const TokenVocabulary& vocab) {
  if (vocab.content_hash() != model.vocabulary_hash)
    throw Error(ErrorCode::VocabularyMismatch, "vocabulary hash " + hex64(vocab.content_hash()) +
                                                   " differs from checkpoint hash " + hex64(model.vocabulary_hash));
  if (vocab.sequence_length() != model.config().seq_len || vocab.row_width() != model.config().input_width)
    throw Error(ErrorCode::ShapeMismatch, "vocabulary shape differs from model input shape");
}

}  // namespace aqp::nnet
