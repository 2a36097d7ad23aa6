#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "nol/dataset.hpp"
#include "nol/loss.hpp"

namespace nol::test {

// Random sparse stream with per-feature magnitudes spread over [1e-2, 1e2]
// and labels suited to the loss.
inline Dataset random_stream(std::uint64_t seed, std::size_t dimension, std::size_t count,
                             Loss loss, double density = 0.6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> presence(0.0, 1.0);
  std::vector<double> magnitude(dimension), truth(dimension);
  for (std::size_t i = 0; i < dimension; ++i) {
    magnitude[i] = std::pow(10.0, 2.0 * u(rng));
    truth[i] = u(rng) / magnitude[i];
  }
  Dataset data;
  for (std::size_t t = 0; t < count; ++t) {
    std::vector<Feature> f;
    double score = 0.0;
    for (std::size_t i = 0; i < dimension; ++i) {
      if (presence(rng) > density) continue;
      const double v = magnitude[i] * u(rng);
      f.push_back({i, v});
      score += truth[i] * v;
    }
    score += 0.1 * u(rng);
    const double y = loss.requires_signed_label() ? (score >= 0.0 ? 1.0 : -1.0) : score;
    data.emplace_back(std::move(f), y);
  }
  return data;
}

inline std::vector<double> power_of_two_scaling(std::uint64_t seed, std::size_t dimension) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> e(-20, 20);
  std::vector<double> d(dimension);
  for (double& x : d) x = std::ldexp(1.0, e(rng));
  return d;
}

inline double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace nol::test
