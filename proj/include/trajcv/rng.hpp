#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "trajcv/common.hpp"

namespace trajcv {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for (master, k1, k2, ...). Used to derive per-worker and
// per-episode generators so results never depend on scheduling.
inline Rng derive_stream(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

inline VectorXd standard_normal(int dim, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z(i) = n(rng);
  return z;
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// Categorical draw by inverse CDF.
inline int sample_categorical(const VectorXd& probs, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    acc += probs(i);
    if (u < acc) return i;
  }
  for (int i = static_cast<int>(probs.size()) - 1; i >= 0; --i)
    if (probs(i) > 0.0) return i;
  return 0;
}

}  // namespace trajcv
