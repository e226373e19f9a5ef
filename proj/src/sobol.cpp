#include "dynamo/sobol.hpp"

#include <bit>
#include <boost/random/detail/sobol_table.hpp>

#include "dynamo/error.hpp"
#include "dynamo/rng.hpp"

namespace dynamo {

namespace {
using JoeKuo = boost::random::detail::qrng_tables::sobol;
}

int SobolSequence::max_dimension() { return static_cast<int>(JoeKuo::max_dimension); }

SobolSequence::SobolSequence(int dimension, std::optional<std::uint64_t> scramble_seed)
    : dimension_(dimension) {
  if (dimension < 1) throw DomainError("Sobol dimension must be >= 1");
  if (dimension > max_dimension()) {
    throw UnsupportedError("Sobol dimension " + std::to_string(dimension) +
                           " exceeds the direction-number table (" +
                           std::to_string(max_dimension()) + ")");
  }
  const auto d = static_cast<std::size_t>(dimension);
  directions_.assign(kBits * d, 0);
  std::vector<std::uint32_t> m(kBits);
  for (std::size_t dim = 0; dim < d; ++dim) {
    if (dim == 0) {
      for (int k = 0; k < kBits; ++k) m[static_cast<std::size_t>(k)] = 1;
    } else {
      const unsigned poly = JoeKuo::polynomial(dim - 1);
      const int degree = std::bit_width(poly) - 1;
      for (int k = 0; k < degree; ++k) {
        m[static_cast<std::size_t>(k)] = JoeKuo::minit(dim - 1, static_cast<std::size_t>(k));
      }
      // m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}
      for (int k = degree; k < kBits; ++k) {
        std::uint32_t value = m[static_cast<std::size_t>(k - degree)] ^
                              (m[static_cast<std::size_t>(k - degree)] << degree);
        for (int i = 1; i < degree; ++i) {
          if ((poly >> (degree - i)) & 1u) {
            value ^= m[static_cast<std::size_t>(k - i)] << i;
          }
        }
        m[static_cast<std::size_t>(k)] = value;
      }
    }
    for (int k = 0; k < kBits; ++k) {
      directions_[static_cast<std::size_t>(k) * d + dim] = m[static_cast<std::size_t>(k)]
                                                           << (kBits - 1 - k);
    }
  }
  state_.assign(d, 0);
  shift_.assign(d, 0);
  if (scramble_seed) {
    Rng rng(*scramble_seed);
    for (auto& s : shift_) s = static_cast<std::uint32_t>(rng.next_u64() >> 32);
  }
}

Vector SobolSequence::next() {
  Vector x(dimension_);
  for (int j = 0; j < dimension_; ++j) {
    x[j] = static_cast<double>(state_[static_cast<std::size_t>(j)] ^
                               shift_[static_cast<std::size_t>(j)]) *
           0x1.0p-32;
  }
  // advance: flip the direction for the lowest zero bit of the index
  const int c = std::countr_one(index_);
  if (c >= kBits) throw UnsupportedError("Sobol sequence exhausted");
  const auto d = static_cast<std::size_t>(dimension_);
  for (std::size_t j = 0; j < d; ++j) state_[j] ^= directions_[static_cast<std::size_t>(c) * d + j];
  ++index_;
  return x;
}

Matrix SobolSequence::take(int count) {
  Matrix out(count, dimension_);
  for (int i = 0; i < count; ++i) out.row(i) = next().transpose();
  return out;
}

void SobolSequence::skip(std::uint64_t count) {
  for (std::uint64_t i = 0; i < count; ++i) next();
}

Matrix sobol_init(int d, int b, const Vector& lower, const Vector& upper, std::uint64_t seed) {
  if (b < 1) throw PreconditionError("sobol_init: b must be >= 1");
  if (lower.size() != d || upper.size() != d) throw DomainError("sobol_init: bounds dimension");
  for (int j = 0; j < d; ++j) {
    if (!(lower[j] < upper[j])) throw PreconditionError("sobol_init: lower must be < upper");
  }
  SobolSequence seq(d, seed);
  seq.skip(1);
  Matrix unit = seq.take(b);
  Matrix out(b, d);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < d; ++j) out(i, j) = lower[j] + unit(i, j) * (upper[j] - lower[j]);
  }
  return out;
}

}  // namespace dynamo
