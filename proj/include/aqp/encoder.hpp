#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "aqp/query.hpp"
#include "aqp/store.hpp"

namespace aqp {

/// L x (1+B) binary matrix. Column 0 flags a numeric literal (1) versus a
/// vocabulary token (0); columns 1..B hold the big-endian payload. An
/// all-zero row is padding (token ID 0 is reserved).
struct EncodedQuery {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> cells;

  EncodedQuery() = default;
  EncodedQuery(std::size_t r, std::size_t c) : rows(r), cols(c), cells(r * c, 0) {}

  std::uint8_t at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  std::uint8_t& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
  std::span<const std::uint8_t> row(std::size_t r) const { return {cells.data() + r * cols, cols}; }

  bool operator==(const EncodedQuery&) const = default;
};

/// Sequential token IDs (from 1) plus the numeric grid of every filtered
/// continuous attribute. Immutable once built.
class TokenVocabulary {
 public:
  static constexpr int kLayoutVersion = 1;

  TokenVocabulary() = default;
  TokenVocabulary(std::vector<std::string> entries, std::size_t target_count, unsigned bit_width,
                  std::vector<std::string> cont_attrs, std::vector<std::string> nom_attrs,
                  std::map<std::string, double> scales, std::map<std::string, std::int64_t> offsets);

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<std::string>& entries() const noexcept { return entries_; }
  /// Throws UnknownToken.
  std::uint32_t id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::uint32_t id) const;
  /// IDs 1..target_count() are aggregation-target tokens.
  std::size_t target_count() const noexcept { return target_count_; }

  unsigned bit_width() const noexcept { return bit_width_; }
  /// Continuous then nominal filter attributes, each in schema order.
  const std::vector<std::string>& cont_attrs() const noexcept { return cont_attrs_; }
  const std::vector<std::string>& nom_attrs() const noexcept { return nom_attrs_; }
  double scale(const std::string& attr) const;
  std::int64_t offset(const std::string& attr) const;

  std::size_t sequence_length() const noexcept { return 1 + 3 * cont_attrs_.size() + 2 * nom_attrs_.size(); }
  std::size_t row_width() const noexcept { return 1 + bit_width_; }

  nlohmann::json to_json() const;
  static TokenVocabulary from_json(const nlohmann::json& j);
  /// FNV-1a over the canonical JSON form.
  std::uint64_t content_hash() const;

  bool operator==(const TokenVocabulary& other) const { return to_json() == other.to_json(); }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::size_t target_count_ = 0;
  unsigned bit_width_ = 1;
  std::vector<std::string> cont_attrs_;
  std::vector<std::string> nom_attrs_;
  std::map<std::string, double> scales_;
  std::map<std::string, std::int64_t> offsets_;
};

std::string member_token(std::string_view attr, std::string_view member);

/// Canonical token order: targets (SELECT order), filter attributes by schema
/// index, then each nominal attribute's observed members sorted.
TokenVocabulary build_vocabulary(std::span<const FlatQuery> workload, const QueryTemplate& t,
                                 const std::vector<AttributeSchema>& schema);

/// Row order: target; per continuous attribute (attr, lower, upper); per
/// nominal attribute (attr, member). Throws UnknownToken, NumericOverflow or
/// ShapeMismatch when the query does not fit the vocabulary's layout.
EncodedQuery encode(const FlatQuery& q, const TokenVocabulary& vocab);

/// Inverse of encode. Throws MalformedMatrix.
FlatQuery decode(const EncodedQuery& m, const TokenVocabulary& vocab);

/// 0/1 text grid, one line per row.
std::string debug_grid(const EncodedQuery& m);

}  // namespace aqp
