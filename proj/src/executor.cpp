#include "aqp/executor.hpp"

#include <algorithm>
#include <bit>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <omp.h>

namespace aqp {

namespace {

struct RangeCheck {
  const double* values;
  double lower;
  double upper;
};

struct MemberCheck {
  const std::uint32_t* ids;
  std::uint32_t id;
};

// Filters resolved to raw column pointers.
struct CompiledFilter {
  std::vector<RangeCheck> ranges;
  std::vector<MemberCheck> members;
  bool impossible = false;

  bool matches(std::size_t row) const {
    for (const auto& r : ranges) {
      const double v = r.values[row];
      if (!(r.lower <= v && v <= r.upper)) return false;
    }
    for (const auto& m : members)
      if (m.ids[row] != m.id) return false;
    return true;
  }
};

CompiledFilter compile(const Dataset& ds, const std::vector<BetweenFilter>& between,
                       const std::vector<InFilter>& in) {
  CompiledFilter f;
  for (const auto& b : between) {
    auto col = ds.continuous(b.attr);
    f.ranges.push_back({col.data(), b.lower, b.upper});
    if (b.lower > b.upper) f.impossible = true;
  }
  for (const auto& m : in) {
    const auto& col = ds.nominal(m.attr);
    auto id = col.find(m.member);
    if (id < 0) {
      f.impossible = true;
      continue;
    }
    f.members.push_back({col.ids.data(), static_cast<std::uint32_t>(id)});
  }
  return f;
}

// Column being aggregated; nominal columns aggregate member IDs.
struct TargetColumn {
  AggregationFunction func;
  const double* continuous = nullptr;
  const std::uint32_t* nominal = nullptr;
};

TargetColumn resolve_target(const Dataset& ds, const AggregationTarget& t) {
  const auto& attr = ds.attribute(t.attr);
  if (!applicable(t.func, attr.kind))
    throw Error(ErrorCode::WrongKind, t.token() + " applies a numeric aggregate to a nominal attribute");
  TargetColumn c{t.func};
  if (attr.kind == AttributeKind::Continuous)
    c.continuous = ds.continuous(attr.index).data();
  else
    c.nominal = ds.nominal(attr.index).ids.data();
  return c;
}

std::uint64_t distinct_key(const TargetColumn& c, std::size_t row) {
  if (c.nominal) return c.nominal[row];
  double v = c.continuous[row];
  if (v == 0.0) v = 0.0;  // fold -0 into +0
  return std::bit_cast<std::uint64_t>(v);
}

class Accumulator {
 public:
  explicit Accumulator(AggregationFunction func) : func_(func) {}

  void add(const TargetColumn& c, std::size_t row) {
    ++count_;
    switch (func_) {
      case AggregationFunction::Count:
        break;
      case AggregationFunction::CountDistinct:
        distinct_.insert(distinct_key(c, row));
        break;
      case AggregationFunction::Avg:
      case AggregationFunction::Sum:
        sum_ += c.continuous[row];
        break;
      case AggregationFunction::Min:
        min_ = std::min(min_, c.continuous[row]);
        break;
      case AggregationFunction::Max:
        max_ = std::max(max_, c.continuous[row]);
        break;
      case AggregationFunction::Median:
        values_.push_back(c.continuous[row]);
        break;
    }
  }

  std::uint64_t count() const { return count_; }

  /// std::nullopt for non-counting aggregates over an empty set.
  std::optional<double> finish() {
    switch (func_) {
      case AggregationFunction::Count: return static_cast<double>(count_);
      case AggregationFunction::CountDistinct: return static_cast<double>(distinct_.size());
      case AggregationFunction::Sum: return sum_;
      default: break;
    }
    if (count_ == 0) return std::nullopt;
    switch (func_) {
      case AggregationFunction::Avg: return sum_ / static_cast<double>(count_);
      case AggregationFunction::Min: return min_;
      case AggregationFunction::Max: return max_;
      case AggregationFunction::Median: {
        std::sort(values_.begin(), values_.end());
        const std::size_t n = values_.size();
        if (n % 2 == 1) return values_[n / 2];
        return (values_[n / 2 - 1] + values_[n / 2]) / 2.0;
      }
      default: return std::nullopt;
    }
  }

 private:
  AggregationFunction func_;
  std::uint64_t count_ = 0;
  double sum_ = 0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
  std::vector<double> values_;
  std::unordered_set<std::uint64_t> distinct_;
};

}  // namespace

FlatResult execute_flat(const Dataset& ds, const FlatQuery& q) {
  const auto target = resolve_target(ds, q.target);
  const auto filter = compile(ds, q.between, q.in);
  Accumulator acc(q.target.func);
  if (!filter.impossible) {
    const std::size_t n = ds.row_count();
    for (std::size_t row = 0; row < n; ++row)
      if (filter.matches(row)) acc.add(target, row);
  }
  auto value = acc.finish();
  if (!value)
    throw Error(ErrorCode::EmptyAggregate, q.target.token() + " over an empty row set");
  return {*value, acc.count()};
}

GroupByResult execute_groupby(const Dataset& ds, const GroupByQuery& gq) {
  std::vector<const NominalColumn*> keys;
  std::vector<std::uint64_t> radix;
  std::uint64_t space = 1;
  for (const auto& name : gq.groupby) {
    keys.push_back(&ds.nominal(name));
    const std::uint64_t card = std::max<std::size_t>(keys.back()->dictionary.size(), 1);
    if (space > std::numeric_limits<std::uint64_t>::max() / card)
      throw Error(ErrorCode::Unsupported, "GROUP BY key space exceeds 64 bits");
    radix.push_back(card);
    space *= card;
  }
  std::vector<TargetColumn> targets;
  for (const auto& t : gq.targets) targets.push_back(resolve_target(ds, t));
  const auto filter = compile(ds, gq.between, {});

  struct Group {
    std::uint64_t key;
    std::uint64_t support = 0;
    std::vector<Accumulator> acc;
  };
  std::vector<Group> groups;
  std::unordered_map<std::uint64_t, std::size_t> slot;

  if (!filter.impossible) {
    const std::size_t n = ds.row_count();
    for (std::size_t row = 0; row < n; ++row) {
      if (!filter.matches(row)) continue;
      std::uint64_t key = 0;
      for (std::size_t k = 0; k < keys.size(); ++k) key = key * radix[k] + keys[k]->ids[row];
      auto [it, inserted] = slot.try_emplace(key, groups.size());
      if (inserted) {
        Group g{key, 0, {}};
        for (const auto& t : gq.targets) g.acc.emplace_back(t.func);
        groups.push_back(std::move(g));
      }
      auto& g = groups[it->second];
      ++g.support;
      for (std::size_t t = 0; t < targets.size(); ++t) g.acc[t].add(targets[t], row);
    }
  }

  GroupByResult out;
  out.groupby_attrs = gq.groupby;
  out.rows.reserve(groups.size());
  for (auto& g : groups) {
    GroupByRow row;
    row.members.resize(keys.size());
    std::uint64_t key = g.key;
    for (std::size_t k = keys.size(); k-- > 0;) {
      row.members[k] = keys[k]->dictionary[key % radix[k]];
      key /= radix[k];
    }
    row.support = g.support;
    for (auto& a : g.acc) row.values.push_back(*a.finish());  // support >= 1
    out.rows.push_back(std::move(row));
  }
  std::sort(out.rows.begin(), out.rows.end(),
            [](const GroupByRow& a, const GroupByRow& b) { return a.members < b.members; });
  return out;
}

std::vector<std::vector<std::string>> extract_member_combinations(
    const Dataset& ds, std::span<const std::string> nominal_attrs) {
  if (nominal_attrs.empty())
    throw Error(ErrorCode::InvalidArgument, "member extraction needs at least one nominal attribute");
  GroupByQuery gq;
  gq.groupby.assign(nominal_attrs.begin(), nominal_attrs.end());
  auto result = execute_groupby(ds, gq);
  std::vector<std::vector<std::string>> combos;
  combos.reserve(result.rows.size());
  for (auto& row : result.rows) combos.push_back(std::move(row.members));
  return combos;
}

// Batch labeling

std::size_t LabelingOutcome::excluded_total() const {
  std::size_t n = 0;
  for (const auto& [_, count] : excluded) n += count;
  return n;
}

namespace {

LabelingOutcome assemble(std::span<const FlatQuery> queries, std::vector<std::optional<FlatResult>>& results) {
  LabelingOutcome out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (!results[i]) {
      ++out.excluded[queries[i].target.token()];
      continue;
    }
    out.labeled.push_back({queries[i], results[i]->value, results[i]->support});
    out.source_index.push_back(i);
  }
  return out;
}

std::optional<FlatResult> try_execute(const Dataset& ds, const FlatQuery& q) {
  try {
    return execute_flat(ds, q);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyAggregate) return std::nullopt;
    throw;
  }
}

// Exceptions must not cross an OpenMP region boundary; keep the first one.
class FirstError {
 public:
  template <class F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

}  // namespace

LabelingOutcome label_queries_serial(const Dataset& ds, std::span<const FlatQuery> queries) {
  std::vector<std::optional<FlatResult>> results(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) results[i] = try_execute(ds, queries[i]);
  return assemble(queries, results);
}

LabelingOutcome label_queries(const Dataset& ds, std::span<const FlatQuery> queries, int threads) {
  std::vector<std::optional<FlatResult>> results(queries.size());
  FirstError errors;
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t i = 0; i < n; ++i)
    errors.run([&] { results[i] = try_execute(ds, queries[i]); });
  errors.rethrow();
  return assemble(queries, results);
}

LabelingOutcome label_queries_grouped(const Dataset& ds, std::span<const FlatQuery> queries, int threads) {
  // Bucket by (BETWEEN filters, IN attribute list).
  using BucketKey = std::pair<std::vector<BetweenFilter>, std::vector<std::string>>;
  std::map<BucketKey, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    std::vector<std::string> attrs;
    for (const auto& f : queries[i].in) attrs.push_back(f.attr);
    buckets[{queries[i].between, std::move(attrs)}].push_back(i);
  }
  std::vector<const std::pair<const BucketKey, std::vector<std::size_t>>*> work;
  for (const auto& b : buckets) work.push_back(&b);

  std::vector<std::optional<FlatResult>> results(queries.size());
  FirstError errors;
  const auto nwork = static_cast<std::ptrdiff_t>(work.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
  for (std::ptrdiff_t w = 0; w < nwork; ++w) {
    errors.run([&] {
      const auto& [key, members] = *work[w];
      const auto& [between, attrs] = key;
      // A repeated attribute cannot be expressed as one GROUP BY column.
      if (std::set<std::string>(attrs.begin(), attrs.end()).size() != attrs.size()) {
        for (auto i : members) results[i] = try_execute(ds, queries[i]);
        return;
      }
      GroupByQuery gq;
      gq.between = between;
      gq.groupby = attrs;
      for (auto i : members)
        if (std::find(gq.targets.begin(), gq.targets.end(), queries[i].target) == gq.targets.end())
          gq.targets.push_back(queries[i].target);
      const auto result = execute_groupby(ds, gq);
      std::map<std::vector<std::string>, const GroupByRow*> rows;
      for (const auto& row : result.rows) rows.emplace(row.members, &row);
      for (auto i : members) {
        const auto& q = queries[i];
        std::vector<std::string> tuple;
        for (const auto& f : q.in) tuple.push_back(f.member);
        const auto t = static_cast<std::size_t>(
            std::find(gq.targets.begin(), gq.targets.end(), q.target) - gq.targets.begin());
        auto it = rows.find(tuple);
        if (it != rows.end())
          results[i] = FlatResult{it->second->values[t], it->second->support};
        else if (defined_on_empty(q.target.func))
          results[i] = FlatResult{0.0, 0};
      }
    });
  }
  errors.rethrow();
  return assemble(queries, results);
}

}  // namespace aqp
