#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dynamo/dataset.hpp"

namespace dynamo {

// Gray-code Sobol sequence over the Joe-Kuo direction numbers, with an
// optional random digital shift (XOR scramble) per dimension.
class SobolSequence {
 public:
  static constexpr int kBits = 32;

  // Throws UnsupportedError when dimension exceeds the direction table.
  explicit SobolSequence(int dimension, std::optional<std::uint64_t> scramble_seed = std::nullopt);

  static int max_dimension();

  int dimension() const { return dimension_; }
  std::uint64_t index() const { return index_; }

  // Point at the current index in [0,1)^d, then advances.
  Vector next();
  Matrix take(int count);
  void skip(std::uint64_t count);

 private:
  int dimension_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> directions_;  // kBits x dimension, bit-major
  std::vector<std::uint32_t> state_;
  std::vector<std::uint32_t> shift_;
};

// First b scrambled Sobol points after skipping index 0, mapped affinely onto
// [lower, upper).
Matrix sobol_init(int d, int b, const Vector& lower, const Vector& upper, std::uint64_t seed);

}  // namespace dynamo
