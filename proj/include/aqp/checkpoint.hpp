#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "aqp/lstm.hpp"

namespace aqp::nnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic, version, JSON header (config, input shape,
/// vocabulary and its hash, training counters), then raw little-endian
/// doubles for the label scaler, parameters and both Adam moment vectors.
std::string serialize(const LstmModel& model);
/// Throws VersionMismatch / ParseError.
LstmModel deserialize(std::string_view bytes);

void save(const LstmModel& model, const std::filesystem::path& path);
LstmModel load(const std::filesystem::path& path);

/// Throws VocabularyMismatch when the model was trained against another
/// vocabulary, ShapeMismatch when the encoded shape differs.
void check_vocabulary(const LstmModel& model, const TokenVocabulary& vocab);

}  // namespace aqp::nnet
