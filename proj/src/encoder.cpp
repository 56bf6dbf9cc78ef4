#include "aqp/encoder.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <sstream>

#include "aqp/hash.hpp"
#include "aqp/querygen.hpp"

namespace aqp {

namespace {

unsigned bits_needed(std::uint64_t v) { return v == 0 ? 1u : static_cast<unsigned>(std::bit_width(v)); }

void write_payload(EncodedQuery& m, std::size_t row, std::uint64_t value, unsigned width) {
  for (unsigned b = 0; b < width; ++b) m.at(row, 1 + b) = static_cast<std::uint8_t>((value >> (width - 1 - b)) & 1u);
}

}  // namespace

std::string member_token(std::string_view attr, std::string_view member) {
  return std::string(attr) + "=" + std::string(member);
}

TokenVocabulary::TokenVocabulary(std::vector<std::string> entries, std::size_t target_count,
                                 unsigned bit_width, std::vector<std::string> cont_attrs,
                                 std::vector<std::string> nom_attrs, std::map<std::string, double> scales,
                                 std::map<std::string, std::int64_t> offsets)
    : entries_(std::move(entries)),
      target_count_(target_count),
      bit_width_(bit_width),
      cont_attrs_(std::move(cont_attrs)),
      nom_attrs_(std::move(nom_attrs)),
      scales_(std::move(scales)),
      offsets_(std::move(offsets)) {
  if (bit_width_ == 0 || bit_width_ > 63)
    throw Error(ErrorCode::InvalidArgument, "bit width must be in 1..63");
  if (bits_needed(entries_.size()) > bit_width_)
    throw Error(ErrorCode::NumericOverflow, "bit width too small for the vocabulary");
  if (target_count_ > entries_.size()) throw Error(ErrorCode::InvalidArgument, "target count exceeds vocabulary");
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (!ids_.emplace(entries_[i], static_cast<std::uint32_t>(i + 1)).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate vocabulary token '" + entries_[i] + "'");
}

std::uint32_t TokenVocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) throw Error(ErrorCode::UnknownToken, "token '" + std::string(token) + "' not in vocabulary");
  return it->second;
}

bool TokenVocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

const std::string& TokenVocabulary::token(std::uint32_t id) const {
  if (id == 0 || id > entries_.size())
    throw Error(ErrorCode::UnknownToken, "token id " + std::to_string(id) + " out of range");
  return entries_[id - 1];
}

double TokenVocabulary::scale(const std::string& attr) const {
  auto it = scales_.find(attr);
  return it == scales_.end() ? 1.0 : it->second;
}

std::int64_t TokenVocabulary::offset(const std::string& attr) const {
  auto it = offsets_.find(attr);
  return it == offsets_.end() ? 0 : it->second;
}

nlohmann::json TokenVocabulary::to_json() const {
  return {{"layout_version", kLayoutVersion},
          {"entries", entries_},
          {"target_count", target_count_},
          {"bit_width", bit_width_},
          {"cont_attrs", cont_attrs_},
          {"nom_attrs", nom_attrs_},
          {"numeric_scales", scales_},
          {"numeric_offsets", offsets_}};
}

TokenVocabulary TokenVocabulary::from_json(const nlohmann::json& j) {
  try {
    if (j.at("layout_version").get<int>() != kLayoutVersion)
      throw Error(ErrorCode::VersionMismatch, "vocabulary layout version " +
                                                  std::to_string(j.at("layout_version").get<int>()));
    return TokenVocabulary(j.at("entries").get<std::vector<std::string>>(),
                           j.at("target_count").get<std::size_t>(), j.at("bit_width").get<unsigned>(),
                           j.at("cont_attrs").get<std::vector<std::string>>(),
                           j.at("nom_attrs").get<std::vector<std::string>>(),
                           j.at("numeric_scales").get<std::map<std::string, double>>(),
                           j.at("numeric_offsets").get<std::map<std::string, std::int64_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("vocabulary: ") + e.what());
  }
}

std::uint64_t TokenVocabulary::content_hash() const { return fnv1a64(to_json().dump()); }

TokenVocabulary build_vocabulary(std::span<const FlatQuery> workload, const QueryTemplate& t,
                                 const std::vector<AttributeSchema>& schema) {
  if (workload.empty()) throw Error(ErrorCode::EmptyList, "cannot build a vocabulary from an empty workload");
  auto schema_index = [&](const std::string& name) -> std::size_t {
    for (const auto& a : schema)
      if (a.name == name) return a.index;
    throw Error(ErrorCode::UnknownAttribute, "no attribute named '" + name + "'");
  };
  auto ordered = [&](std::vector<std::string> attrs) {
    std::sort(attrs.begin(), attrs.end(),
              [&](const auto& a, const auto& b) { return schema_index(a) < schema_index(b); });
    return attrs;
  };
  const auto cont = ordered(t.cont_filter_attrs);
  const auto nom = ordered(t.nom_filter_attrs);

  std::vector<std::string> entries;
  std::set<std::string> seen;
  auto push = [&](const std::string& tok) {
    if (seen.insert(tok).second) entries.push_back(tok);
  };
  for (const auto& target : build_select_clause(t, schema)) push(target.token());
  for (const auto& q : workload) push(q.target.token());
  const std::size_t target_count = entries.size();

  auto all_attrs = cont;
  all_attrs.insert(all_attrs.end(), nom.begin(), nom.end());
  for (const auto& a : ordered(all_attrs)) push(a);

  std::map<std::string, std::set<std::string>> members;
  std::map<std::string, double> scales;
  std::map<std::string, std::int64_t> lowest;
  for (const auto& a : cont) {
    scales[a] = t.scale_of(a);
    lowest[a] = 0;
  }
  for (const auto& q : workload) {
    for (const auto& f : q.in) members[f.attr].insert(f.member);
    for (const auto& b : q.between) {
      auto it = lowest.find(b.attr);
      if (it == lowest.end()) continue;
      it->second = std::min({it->second, quantize(b.lower, scales[b.attr]), quantize(b.upper, scales[b.attr])});
    }
  }
  for (const auto& a : nom)
    for (const auto& m : members[a]) push(member_token(a, m));

  // Literals are stored as quantize(v) - offset, offset <= 0 only for negative domains.
  std::uint64_t max_literal = 0;
  for (const auto& q : workload)
    for (const auto& b : q.between) {
      auto it = lowest.find(b.attr);
      if (it == lowest.end()) continue;
      const double s = scales[b.attr];
      max_literal = std::max<std::uint64_t>(
          max_literal, static_cast<std::uint64_t>(std::max(quantize(b.lower, s), quantize(b.upper, s)) - it->second));
    }
  const unsigned width = std::max(bits_needed(entries.size()), bits_needed(max_literal));
  return TokenVocabulary(std::move(entries), target_count, width, cont, nom, std::move(scales), std::move(lowest));
}

EncodedQuery encode(const FlatQuery& q, const TokenVocabulary& vocab) {
  const unsigned width = vocab.bit_width();
  EncodedQuery m(vocab.sequence_length(), vocab.row_width());
  if (q.between.size() != vocab.cont_attrs().size() || q.in.size() != vocab.nom_attrs().size())
    throw Error(ErrorCode::ShapeMismatch, "query filters do not match the encoder layout");

  std::size_t row = 0;
  auto put_token = [&](const std::string& tok) { write_payload(m, row++, vocab.id(tok), width); };
  auto put_literal = [&](const std::string& attr, double v) {
    const std::int64_t stored = quantize(v, vocab.scale(attr)) - vocab.offset(attr);
    if (stored < 0 || static_cast<std::uint64_t>(stored) >= (std::uint64_t{1} << width))
      throw Error(ErrorCode::NumericOverflow, "literal " + std::to_string(v) + " on '" + attr + "' does not fit " +
                                                  std::to_string(width) + " bits");
    m.at(row, 0) = 1;
    write_payload(m, row++, static_cast<std::uint64_t>(stored), width);
  };

  if (vocab.id(q.target.token()) > vocab.target_count())
    throw Error(ErrorCode::UnknownToken, "'" + q.target.token() + "' is not an aggregation target");
  put_token(q.target.token());
  for (const auto& attr : vocab.cont_attrs()) {
    auto it = std::find_if(q.between.begin(), q.between.end(), [&](const auto& b) { return b.attr == attr; });
    if (it == q.between.end()) throw Error(ErrorCode::ShapeMismatch, "missing BETWEEN filter on '" + attr + "'");
    put_token(attr);
    put_literal(attr, it->lower);
    put_literal(attr, it->upper);
  }
  for (const auto& attr : vocab.nom_attrs()) {
    auto it = std::find_if(q.in.begin(), q.in.end(), [&](const auto& f) { return f.attr == attr; });
    if (it == q.in.end()) throw Error(ErrorCode::ShapeMismatch, "missing IN filter on '" + attr + "'");
    put_token(attr);
    put_token(member_token(attr, it->member));
  }
  return m;
}

FlatQuery decode(const EncodedQuery& m, const TokenVocabulary& vocab) {
  if (m.rows != vocab.sequence_length() || m.cols != vocab.row_width())
    throw Error(ErrorCode::MalformedMatrix, "matrix shape differs from the vocabulary layout");
  const unsigned width = vocab.bit_width();
  auto payload = [&](std::size_t r) {
    std::uint64_t v = 0;
    for (unsigned b = 0; b < width; ++b) {
      const auto bit = m.at(r, 1 + b);
      if (bit > 1) throw Error(ErrorCode::MalformedMatrix, "non-binary cell in row " + std::to_string(r));
      v = (v << 1) | bit;
    }
    return v;
  };
  auto token_at = [&](std::size_t r) -> const std::string& {
    if (m.at(r, 0) != 0) throw Error(ErrorCode::MalformedMatrix, "row " + std::to_string(r) + " should hold a token");
    const auto id = payload(r);
    if (id == 0 || id > vocab.size())
      throw Error(ErrorCode::MalformedMatrix, "row " + std::to_string(r) + " has token id " + std::to_string(id) +
                                                  " outside 1.." + std::to_string(vocab.size()));
    return vocab.token(static_cast<std::uint32_t>(id));
  };
  auto literal_at = [&](std::size_t r, const std::string& attr) {
    if (m.at(r, 0) != 1) throw Error(ErrorCode::MalformedMatrix, "row " + std::to_string(r) + " should hold a literal");
    return dequantize(static_cast<std::int64_t>(payload(r)) + vocab.offset(attr), vocab.scale(attr));
  };
  auto expect = [&](std::size_t r, const std::string& tok) {
    if (token_at(r) != tok)
      throw Error(ErrorCode::MalformedMatrix, "row " + std::to_string(r) + " should hold '" + tok + "'");
  };

  FlatQuery q;
  std::size_t row = 0;
  const auto first = payload(0);
  if (m.at(0, 0) == 0 && (first == 0 || first > vocab.target_count()))
    throw Error(ErrorCode::MalformedMatrix, "first row is not an aggregation target");
  q.target = parse_target_token(token_at(row++));
  for (const auto& attr : vocab.cont_attrs()) {
    expect(row++, attr);
    const double lo = literal_at(row++, attr);
    const double hi = literal_at(row++, attr);
    q.between.push_back({attr, lo, hi});
  }
  for (const auto& attr : vocab.nom_attrs()) {
    expect(row++, attr);
    const auto& tok = token_at(row++);
    const auto prefix = attr + "=";
    if (tok.compare(0, prefix.size(), prefix) != 0)
      throw Error(ErrorCode::MalformedMatrix, "member token '" + tok + "' does not belong to '" + attr + "'");
    q.in.push_back({attr, tok.substr(prefix.size())});
  }
  return q;
}

std::string debug_grid(const EncodedQuery& m) {
  std::string out;
  out.reserve(m.rows * (m.cols + 1));
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out.push_back(m.at(r, c) ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

}  // namespace aqp
