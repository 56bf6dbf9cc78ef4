#include "aqp/querygen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace aqp {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t template_id) noexcept {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(seed ^ mix(template_id));
}

namespace {

const AttributeSchema* find_attr(const std::vector<AttributeSchema>& schema, const std::string& name) {
  for (const auto& a : schema)
    if (a.name == name) return &a;
  return nullptr;
}

void check_list(const std::vector<AttributeSchema>& schema, const std::vector<std::string>& attrs,
                AttributeKind kind, const char* what) {
  std::set<std::string> seen;
  for (const auto& name : attrs) {
    const auto* a = find_attr(schema, name);
    if (!a) throw Error(ErrorCode::InvalidTemplate, std::string(what) + ": unknown attribute '" + name + "'");
    if (a->kind != kind)
      throw Error(ErrorCode::InvalidTemplate, std::string(what) + ": attribute '" + name + "' is " +
                                                  std::string(to_string(a->kind)));
    if (!seen.insert(name).second)
      throw Error(ErrorCode::InvalidTemplate, std::string(what) + ": duplicate attribute '" + name + "'");
  }
}

std::vector<std::string> by_schema_index(const std::vector<AttributeSchema>& schema,
                                         std::vector<std::string> attrs) {
  std::sort(attrs.begin(), attrs.end(), [&](const std::string& a, const std::string& b) {
    return find_attr(schema, a)->index < find_attr(schema, b)->index;
  });
  return attrs;
}

// Grid points within [lo, hi] on the 1/scale grid, tolerant to representation error.
std::int64_t grid_ceil(double v, double scale) {
  double x = v * scale;
  double r = std::round(x);
  if (std::abs(x - r) < 1e-9) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

std::int64_t grid_floor(double v, double scale) {
  double x = v * scale;
  double r = std::round(x);
  if (std::abs(x - r) < 1e-9) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(x));
}

}  // namespace

void validate_template(const QueryTemplate& t, const std::vector<AttributeSchema>& schema) {
  if (t.targets.empty() && (t.functions.empty() || t.target_attrs.empty()))
    throw Error(ErrorCode::InvalidTemplate, "template declares no aggregation targets");
  for (const auto& target : t.targets)
    if (!find_attr(schema, target.attr))
      throw Error(ErrorCode::InvalidTemplate, "target attribute '" + target.attr + "' does not exist");
  for (const auto& attr : t.target_attrs)
    if (!find_attr(schema, attr))
      throw Error(ErrorCode::InvalidTemplate, "target attribute '" + attr + "' does not exist");
  check_list(schema, t.cont_filter_attrs, AttributeKind::Continuous, "cont_filter_attrs");
  check_list(schema, t.nom_filter_attrs, AttributeKind::Nominal, "nom_filter_attrs");
  if (t.n_cont_samples == 0) throw Error(ErrorCode::InvalidTemplate, "n_cont_samples must be positive");
  for (const auto& [attr, scale] : t.numeric_scales)
    if (!(scale > 0) || !std::isfinite(scale))
      throw Error(ErrorCode::InvalidTemplate, "numeric scale for '" + attr + "' must be positive");
}

std::vector<AggregationTarget> build_select_clause(const QueryTemplate& t,
                                                   const std::vector<AttributeSchema>& schema) {
  std::vector<AggregationTarget> out;
  auto add = [&](AggregationTarget target) {
    const auto* a = find_attr(schema, target.attr);
    if (!a) throw Error(ErrorCode::InvalidTemplate, "target attribute '" + target.attr + "' does not exist");
    if (!applicable(target.func, a->kind)) {
      if (t.strict)
        throw Error(ErrorCode::InvalidTarget, target.token() + " is not defined on nominal attributes");
      return;
    }
    if (std::find(out.begin(), out.end(), target) == out.end()) out.push_back(std::move(target));
  };
  for (const auto& target : t.targets) add(target);
  for (const auto& attr : t.target_attrs)
    for (auto f : t.functions) add({f, attr});
  if (out.empty()) throw Error(ErrorCode::InvalidTarget, "SELECT clause is empty after filtering");
  return out;
}

std::vector<std::vector<BetweenFilter>> gen_between_filters(
    const std::map<std::string, ContinuousStats>& stats, std::span<const std::string> attrs,
    std::size_t n, Rng& rng, const std::map<std::string, double>& scales) {
  std::uniform_int_distribution<int> pick_interval(0, 3);
  std::vector<std::vector<BetweenFilter>> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<BetweenFilter> combo;
    combo.reserve(attrs.size());
    for (const auto& attr : attrs) {
      auto it = stats.find(attr);
      if (it == stats.end())
        throw Error(ErrorCode::UnknownAttribute, "no statistics for '" + attr + "'");
      const auto& st = it->second;
      const double bounds[5] = {st.min, st.q1, st.median, st.q3, st.max};
      auto draw = [&] {
        int k = pick_interval(rng);
        std::uniform_real_distribution<double> u(bounds[k], bounds[k + 1]);
        return std::clamp(u(rng), bounds[k], bounds[k + 1]);
      };
      double a = draw();
      double b = draw();
      if (b < a) std::swap(a, b);

      auto sit = scales.find(attr);
      const double scale = sit == scales.end() ? 1.0 : sit->second;
      std::int64_t lo = quantize(a, scale);
      std::int64_t hi = quantize(b, scale);
      const std::int64_t gmin = grid_ceil(st.min, scale);
      const std::int64_t gmax = grid_floor(st.max, scale);
      if (gmin <= gmax) {
        lo = std::clamp(lo, gmin, gmax);
        hi = std::clamp(hi, gmin, gmax);
      } else {
        // No grid point inside [min, max]: cover the whole range.
        lo = grid_floor(st.min, scale);
        hi = grid_ceil(st.max, scale);
      }
      combo.push_back({attr, dequantize(lo, scale), dequantize(hi, scale)});
    }
    out.push_back(std::move(combo));
  }
  return out;
}

std::vector<std::vector<InFilter>> gen_in_filter_combinations(
    std::span<const std::string> attrs, std::span<const std::vector<std::string>> combos) {
  if (combos.empty()) throw Error(ErrorCode::EmptyCombos, "group-by result set is empty");
  std::vector<std::vector<InFilter>> out;
  out.reserve(combos.size());
  for (const auto& combo : combos) {
    if (combo.size() != attrs.size())
      throw Error(ErrorCode::ShapeMismatch, "member tuple arity differs from attribute list");
    std::vector<InFilter> set;
    for (std::size_t i = 0; i < attrs.size(); ++i) set.push_back({attrs[i], combo[i]});
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<FilterSet> pair_filters(std::span<const std::vector<BetweenFilter>> between_sets,
                                    std::span<const std::vector<InFilter>> in_sets, bool strict) {
  if (between_sets.empty() || in_sets.empty()) {
    if (strict) throw Error(ErrorCode::EmptyFilterSet, "cannot pair an empty filter list");
    return {};
  }
  std::vector<FilterSet> out;
  out.reserve(between_sets.size() * in_sets.size());
  for (const auto& b : between_sets)
    for (const auto& in : in_sets) out.push_back({b, in});
  return out;
}

std::vector<LabeledQuery> flatten_groupby(const GroupByQuery& gq, const GroupByResult& result) {
  if (result.groupby_attrs != gq.groupby)
    throw Error(ErrorCode::ShapeMismatch, "result columns do not match the GROUP BY attributes");
  std::vector<LabeledQuery> out;
  out.reserve(result.rows.size() * gq.targets.size());
  for (const auto& row : result.rows) {
    if (row.members.size() != gq.groupby.size() || row.values.size() != gq.targets.size())
      throw Error(ErrorCode::ShapeMismatch, "result row does not align with the query");
    std::vector<InFilter> in;
    for (std::size_t i = 0; i < gq.groupby.size(); ++i) in.push_back({gq.groupby[i], row.members[i]});
    for (std::size_t t = 0; t < gq.targets.size(); ++t)
      out.push_back({FlatQuery{gq.targets[t], gq.between, in}, row.values[t], row.support});
  }
  return out;
}

GeneratedWorkload generate_workload(const Dataset& ds, const QueryTemplate& t, std::uint64_t template_id) {
  validate_template(t, ds.schema());
  GeneratedWorkload w;
  w.targets = build_select_clause(t, ds.schema());

  const auto cont = by_schema_index(ds.schema(), t.cont_filter_attrs);
  const auto nom = by_schema_index(ds.schema(), t.nom_filter_attrs);

  std::vector<std::vector<BetweenFilter>> between_sets;
  if (cont.empty()) {
    between_sets.emplace_back();
  } else {
    std::map<std::string, ContinuousStats> stats;
    for (const auto& a : cont) stats[a] = continuous_stats(ds, a);
    Rng rng(derive_seed(t.seed, template_id));
    auto drawn = gen_between_filters(stats, cont, t.n_cont_samples, rng, t.numeric_scales);
    // Integer grids make repeated draws likely; keep the first occurrence.
    std::set<std::vector<BetweenFilter>> seen;
    for (auto& b : drawn)
      if (seen.insert(b).second) between_sets.push_back(std::move(b));
  }

  std::vector<std::vector<InFilter>> in_sets;
  if (nom.empty()) {
    in_sets.emplace_back();
  } else {
    auto combos = extract_member_combinations(ds, nom);
    in_sets = gen_in_filter_combinations(nom, combos);
  }

  const auto filters = pair_filters(between_sets, in_sets, t.strict);
  w.queries.reserve(filters.size() * w.targets.size());
  for (const auto& target : w.targets)
    for (const auto& f : filters) w.queries.push_back({target, f.between, f.in});
  return w;
}

WorkloadSplit split(std::span<const LabeledQuery> workload, std::uint64_t seed, SplitFractions fractions) {
  const std::size_t n = workload.size();
  if (n < 3) throw Error(ErrorCode::TooFewQueries, "need at least 3 queries to split, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::floor(fractions.train * static_cast<double>(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(fractions.validation * static_cast<double>(n) + 1e-9));
  WorkloadSplit s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& q = workload[order[i]];
    if (i < n_train) s.train.push_back(q);
    else if (i < n_train + n_val) s.validation.push_back(q);
    else s.test.push_back(q);
  }
  return s;
}

}  // namespace aqp
