#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace moecs {

/// Thrown when operand shapes do not agree.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown for out-of-range scalar parameters (bad ranges, budgets, counts).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

using RealVec = std::vector<double>;
using WeightVector = std::vector<double>;

/// Row-major dense matrix.
class RealMat {
public:
  RealMat() = default;
  RealMat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  RealMat(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const RealMat&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> u, std::span<const double> v);
RealVec matvec(const RealMat& m, std::span<const double> v);
/// a*x + y
RealVec axpy(double a, std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
bool all_finite(std::span<const double> v);

/// Deterministic random stream. xoshiro256** seeded through SplitMix64 from
/// (seed, stream_id), so distinct stream ids give independent sequences and
/// the output is bit-identical on every platform.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double next_unit();
  /// Uniform integer on [0, n). n must be > 0.
  std::size_t next_index(std::size_t n);
  /// A new stream keyed on this stream's seed and a derived id.
  RngStream split(std::uint64_t child_id) const;

private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t s_[4];
};

/// SplitMix64 finalizer; used to combine seeds and ids into stream keys.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

double draw_uniform(RngStream& rng, double lo, double hi);
/// Box-Muller without caching, so every draw consumes exactly two u64 values.
double draw_normal(RngStream& rng, double mean, double sd);

/// Fisher-Yates shuffle driven by RngStream (std::shuffle is not portable).
template <typename T>
void shuffle(std::vector<T>& items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.next_index(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace moecs
