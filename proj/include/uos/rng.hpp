#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace uos {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive decorrelated child seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for trial `index` of `stream` under the experiment seed. Each trial
/// owns its generator, so results do not depend on how trials are scheduled.
constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t index = 0) {
  return Rng(child_seed(seed, stream, index));
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> standard_normal(Eigen::Index rows,
                                                                      Eigen::Index cols, Rng& rng) {
  std::normal_distribution<Scalar> normal;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows, cols);
  // column-major fill so a vector draw equals the first column of a matrix draw
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

}  // namespace uos
