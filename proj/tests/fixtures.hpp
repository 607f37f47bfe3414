#pragma once

#include <cmath>
#include <random>

#include "qclam/grid.hpp"

namespace qclam::testing {

/// Indicator of D(0, radius), each node holding the covered fraction of its
/// cell (sub-sampled s x s).
inline ComplexField disk_indicator(const GridSpec& spec, double radius = 1.0, int s = 8) {
  const double h = spec.spacing();
  return ComplexField::sample(spec, [&](cplx w) {
    int inside = 0;
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) {
        const cplx p = w + cplx(((a + 0.5) / s - 0.5) * h, ((b + 0.5) / s - 0.5) * h);
        inside += std::abs(p) < radius;
      }
    return static_cast<double>(inside) / (s * s);
  });
}

/// Pseudorandom complex values on nodes inside D(0, radius), zero outside.
inline ComplexField random_disk_field(const GridSpec& spec, std::uint64_t seed, double radius = 1.0,
                                      bool zero_mean = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::ArrayXXcd v = Eigen::ArrayXXcd::Zero(spec.resolution(), spec.resolution());
  cplx sum{};
  Index count = 0;
  for (Index c = 0; c < spec.resolution(); ++c)
    for (Index r = 0; r < spec.resolution(); ++r)
      if (std::abs(spec.node(r, c)) < radius) {
        v(r, c) = cplx(g(rng), g(rng));
        sum += v(r, c);
        ++count;
      }
  if (zero_mean && count > 0) {
    const cplx mean = sum / static_cast<double>(count);
    for (Index c = 0; c < spec.resolution(); ++c)
      for (Index r = 0; r < spec.resolution(); ++r)
        if (std::abs(spec.node(r, c)) < radius) v(r, c) -= mean;
  }
  return ComplexField(spec, std::move(v));
}

inline double relative_l2(const Eigen::ArrayXXcd& a, const Eigen::ArrayXXcd& ref) {
  return std::sqrt((a - ref).abs2().sum() / ref.abs2().sum());
}

}  // namespace qclam::testing
