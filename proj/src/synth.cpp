#include "aqp/synth.hpp"

#include <charconv>
#include <cmath>
#include <random>

namespace aqp {

namespace {

std::string nominal_name(std::size_t k) {
  static const char* names[] = {"region", "channel", "category"};
  return k < 3 ? names[k] : "attr_" + std::to_string(k);
}

}  // namespace

Dataset make_synthetic_sales(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const std::size_t k = spec.cardinalities.size();
  std::vector<NominalColumn> nominal(k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t m = 0; m < spec.cardinalities[a]; ++m)
      nominal[a].dictionary.push_back(nominal_name(a) + "_" + std::to_string(m));
    nominal[a].ids.resize(spec.rows);
  }
  std::vector<double> price(spec.rows), sales(spec.rows);
  std::uniform_real_distribution<double> price_dist(0.0, 1000.0);
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    double base = 200.0;
    double slope = 0.2;
    for (std::size_t a = 0; a < k; ++a) {
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(spec.cardinalities[a] - 1));
      const auto id = pick(rng);
      nominal[a].ids[r] = id;
      const double x = static_cast<double>(id) / static_cast<double>(std::max<std::size_t>(spec.cardinalities[a], 1));
      base += 120.0 / static_cast<double>(a + 1) * std::sin(1.3 * x + 0.4 * static_cast<double>(a));
      if (a == 1) slope += 0.15 * x;
    }
    price[r] = price_dist(rng);
    sales[r] = std::max(0.0, base + slope * price[r] + noise(rng));
  }
  std::vector<AttributeSchema> schema;
  std::vector<ColumnData> columns;
  for (std::size_t a = 0; a < k; ++a) {
    schema.push_back({nominal_name(a), AttributeKind::Nominal, a});
    columns.emplace_back(std::move(nominal[a]));
  }
  schema.push_back({"price", AttributeKind::Continuous, k});
  columns.emplace_back(std::move(price));
  schema.push_back({"sales", AttributeKind::Continuous, k + 1});
  columns.emplace_back(std::move(sales));
  return Dataset(std::move(schema), std::move(columns));
}

QueryTemplate synthetic_sales_template(const Dataset& ds, std::size_t n_cont_samples, std::uint64_t seed) {
  QueryTemplate t;
  t.targets = {{AggregationFunction::Avg, "sales"}};
  for (const auto& a : ds.schema()) {
    if (a.kind == AttributeKind::Nominal)
      t.nom_filter_attrs.push_back(a.name);
    else
      t.cont_filter_attrs.push_back(a.name);
  }
  t.n_cont_samples = n_cont_samples;
  t.seed = seed;
  return t;
}

std::string to_csv(const Dataset& ds) {
  std::string out;
  for (std::size_t c = 0; c < ds.attribute_count(); ++c) out += (c ? "," : "") + ds.schema()[c].name;
  out += '\n';
  char buf[32];
  for (std::size_t r = 0; r < ds.row_count(); ++r) {
    for (std::size_t c = 0; c < ds.attribute_count(); ++c) {
      if (c) out += ',';
      if (ds.schema()[c].kind == AttributeKind::Continuous) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, ds.continuous(c)[r]);
        out.append(buf, ptr);
      } else {
        const auto& col = ds.nominal(c);
        out += col.dictionary[col.ids[r]];
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace aqp
