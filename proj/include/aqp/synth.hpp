#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aqp/query.hpp"
#include "aqp/store.hpp"

namespace aqp {

/// Sales-like table: one nominal column per entry of `cardinalities`
/// (named region, channel, category, then attr_3, ...), a uniform `price` in
/// [0, 1000] and a `sales` column whose mean depends smoothly on the group
/// and on price, plus Gaussian noise.
struct SyntheticSpec {
  std::size_t rows = 100'000;
  std::vector<std::size_t> cardinalities = {4, 5, 10};
  double noise_sd = 20.0;
  std::uint64_t seed = 1;
};

Dataset make_synthetic_sales(const SyntheticSpec& spec);

/// avg(sales) filtered on both continuous columns and every nominal column.
QueryTemplate synthetic_sales_template(const Dataset& ds, std::size_t n_cont_samples, std::uint64_t seed);

/// CSV text with a header row. Continuous values use shortest round-trip form.
std::string to_csv(const Dataset& ds);

}  // namespace aqp
