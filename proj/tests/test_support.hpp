#pragma once

#include <random>
#include <vector>

#include "intinv/common.hpp"

namespace testsupport {

/// Deterministic uniform points in the box [lo, hi]^dim.
inline std::vector<intinv::Vec> random_points(int count, int dim, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<intinv::Vec> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    intinv::Vec x(dim);
    for (int j = 0; j < dim; ++j) x(j) = u(rng);
    out.push_back(x);
  }
  return out;
}

inline double max_abs(const intinv::Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

}  // namespace testsupport
