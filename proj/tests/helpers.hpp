#pragma once

#include <cmath>

#include "dynamo/dataset.hpp"
#include "dynamo/rng.hpp"

namespace test {

inline dynamo::Matrix random_matrix(dynamo::Rng& rng, int rows, int cols, double lo, double hi) {
  dynamo::Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

inline dynamo::Vector random_vector(dynamo::Rng& rng, int n, double lo, double hi) {
  dynamo::Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace test
