#include "aqp/query.hpp"

#include <algorithm>
#include <sstream>

namespace aqp {

std::string_view to_string(AggregationFunction f) noexcept {
  switch (f) {
    case AggregationFunction::Avg: return "avg";
    case AggregationFunction::Sum: return "sum";
    case AggregationFunction::Count: return "count";
    case AggregationFunction::CountDistinct: return "count_distinct";
    case AggregationFunction::Median: return "median";
    case AggregationFunction::Min: return "min";
    case AggregationFunction::Max: return "max";
  }
  return "?";
}

AggregationFunction parse_aggregation_function(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "avg" || s == "mean") return AggregationFunction::Avg;
  if (s == "sum") return AggregationFunction::Sum;
  if (s == "count") return AggregationFunction::Count;
  if (s == "count_distinct" || s == "countdistinct") return AggregationFunction::CountDistinct;
  if (s == "median") return AggregationFunction::Median;
  if (s == "min") return AggregationFunction::Min;
  if (s == "max") return AggregationFunction::Max;
  throw Error(ErrorCode::InvalidTemplate, "unknown aggregation function '" + s + "'");
}

std::string AggregationTarget::token() const {
  return std::string(to_string(func)) + "(" + attr + ")";
}

std::string AggregationTarget::sql() const {
  switch (func) {
    case AggregationFunction::CountDistinct: return "COUNT(DISTINCT " + attr + ")";
    default: {
      std::string name(to_string(func));
      std::transform(name.begin(), name.end(), name.begin(),
                     [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
      return name + "(" + attr + ")";
    }
  }
}

AggregationTarget parse_target_token(std::string_view token) {
  auto open = token.find('(');
  if (open == std::string_view::npos || token.back() != ')')
    throw Error(ErrorCode::InvalidTemplate, "malformed target token '" + std::string(token) + "'");
  return {parse_aggregation_function(token.substr(0, open)),
          std::string(token.substr(open + 1, token.size() - open - 2))};
}

namespace {

std::string sql_literal(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "''";
    else out += c;
  }
  return out + "'";
}

std::string where_clause(const std::vector<BetweenFilter>& between, const std::vector<InFilter>& in) {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  auto sep = [&] {
    os << (first ? " WHERE " : " AND ");
    first = false;
  };
  for (const auto& b : between) {
    sep();
    os << b.attr << " BETWEEN " << b.lower << " AND " << b.upper;
  }
  for (const auto& f : in) {
    sep();
    os << f.attr << " IN (" << sql_literal(f.member) << ")";
  }
  return os.str();
}

}  // namespace

std::string FlatQuery::sql(std::string_view table) const {
  return "SELECT " + target.sql() + " FROM " + std::string(table) + where_clause(between, in);
}

std::string GroupByQuery::sql(std::string_view table) const {
  std::string cols;
  for (const auto& g : groupby) cols += g + ", ";
  for (std::size_t i = 0; i < targets.size(); ++i)
    cols += targets[i].sql() + (i + 1 < targets.size() ? ", " : "");
  std::string group;
  for (std::size_t i = 0; i < groupby.size(); ++i) group += (i ? ", " : "") + groupby[i];
  return "SELECT " + cols + " FROM " + std::string(table) + where_clause(between, {}) +
         (group.empty() ? "" : " GROUP BY " + group);
}

double QueryTemplate::scale_of(const std::string& attr) const {
  auto it = numeric_scales.find(attr);
  return it == numeric_scales.end() ? 1.0 : it->second;
}

// JSON

nlohmann::json to_json(const AggregationTarget& t) {
  return {{"func", to_string(t.func)}, {"attr", t.attr}};
}

AggregationTarget target_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_target_token(j.get<std::string>());
  return {parse_aggregation_function(j.at("func").get<std::string>()), j.at("attr").get<std::string>()};
}

nlohmann::json to_json(const FlatQuery& q) {
  nlohmann::json between = nlohmann::json::array();
  for (const auto& b : q.between) between.push_back({{"attr", b.attr}, {"lower", b.lower}, {"upper", b.upper}});
  nlohmann::json in = nlohmann::json::array();
  for (const auto& f : q.in) in.push_back({{"attr", f.attr}, {"member", f.member}});
  return {{"target", to_json(q.target)}, {"filters", {{"between", between}, {"in", in}}}};
}

nlohmann::json to_json(const LabeledQuery& q) {
  auto j = to_json(q.query);
  j["label"] = q.label;
  j["support"] = q.support;
  return j;
}

FlatQuery flat_query_from_json(const nlohmann::json& j) {
  try {
    FlatQuery q;
    q.target = target_from_json(j.at("target"));
    const auto& filters = j.at("filters");
    if (filters.contains("between"))
      for (const auto& b : filters.at("between"))
        q.between.push_back({b.at("attr").get<std::string>(), b.at("lower").get<double>(),
                             b.at("upper").get<double>()});
    if (filters.contains("in"))
      for (const auto& f : filters.at("in"))
        q.in.push_back({f.at("attr").get<std::string>(), f.at("member").get<std::string>()});
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("query record: ") + e.what());
  }
}

std::optional<LabeledQuery> labeled_query_from_json(const nlohmann::json& j) {
  auto q = flat_query_from_json(j);
  if (!j.contains("label") || j.at("label").is_null()) return std::nullopt;
  LabeledQuery lq{std::move(q), j.at("label").get<double>(), 0};
  if (j.contains("support") && !j.at("support").is_null()) lq.support = j.at("support").get<std::uint64_t>();
  return lq;
}

nlohmann::json to_json(const QueryTemplate& t) {
  nlohmann::json j;
  j["targets"] = nlohmann::json::array();
  for (const auto& target : t.targets) j["targets"].push_back(to_json(target));
  if (!t.functions.empty() || !t.target_attrs.empty()) {
    nlohmann::json funcs = nlohmann::json::array();
    for (auto f : t.functions) funcs.push_back(to_string(f));
    j["select"] = {{"functions", funcs}, {"attrs", t.target_attrs}};
  }
  j["cont_filter_attrs"] = t.cont_filter_attrs;
  j["nom_filter_attrs"] = t.nom_filter_attrs;
  j["n_cont_samples"] = t.n_cont_samples;
  j["seed"] = t.seed;
  j["numeric_scales"] = t.numeric_scales;
  j["strict"] = t.strict;
  return j;
}

QueryTemplate template_from_json(const nlohmann::json& j) {
  try {
    QueryTemplate t;
    if (j.contains("targets"))
      for (const auto& target : j.at("targets")) t.targets.push_back(target_from_json(target));
    if (j.contains("select")) {
      const auto& sel = j.at("select");
      for (const auto& f : sel.at("functions"))
        t.functions.push_back(parse_aggregation_function(f.get<std::string>()));
      t.target_attrs = sel.at("attrs").get<std::vector<std::string>>();
    }
    t.cont_filter_attrs = j.value("cont_filter_attrs", std::vector<std::string>{});
    t.nom_filter_attrs = j.value("nom_filter_attrs", std::vector<std::string>{});
    t.n_cont_samples = j.value("n_cont_samples", std::size_t{200});
    t.seed = j.value("seed", std::uint64_t{42});
    t.numeric_scales = j.value("numeric_scales", std::map<std::string, double>{});
    t.strict = j.value("strict", true);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidTemplate, e.what());
  }
}

}  // namespace aqp
