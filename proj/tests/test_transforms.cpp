#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "qclam/transforms.hpp"

using namespace qclam;
using qclam::testing::relative_l2;

namespace {

cplx cauchy_of_disk(cplx w) { return std::abs(w) <= 1.0 ? std::conj(w) : 1.0 / w; }
cplx beurling_of_disk(cplx w) { return std::abs(w) < 1.0 ? cplx{} : -1.0 / (w * w); }

// (1/pi) int_D dA(zeta) / (w - zeta), independent of the closed form.
// Inside D the integral in polar coordinates about w collapses to
// -(1/pi) int e^{-i t} R(t) dt with R(t) the distance from w to the circle.
cplx cauchy_of_disk_quadrature(cplx w) {
  const int n = 4096;
  cplx acc{};
  if (std::abs(w) < 1.0) {
    for (int k = 0; k < n; ++k) {
      const double t = 2.0 * std::numbers::pi * k / n;
      const cplx e = std::polar(1.0, t);
      const double b = std::real(std::conj(w) * e);
      const double R = -b + std::sqrt(b * b + 1.0 - std::norm(w));
      acc += std::conj(e) * R;
    }
    return -acc * (2.0 * std::numbers::pi / n) / std::numbers::pi;
  }
  const int nr = 400, nt = 800;
  for (int i = 0; i < nr; ++i) {
    const double r = (i + 0.5) / nr;
    for (int k = 0; k < nt; ++k) {
      const cplx z = std::polar(r, 2.0 * std::numbers::pi * (k + 0.5) / nt);
      acc += r / (w - z);
    }
  }
  return acc * (1.0 / nr) * (2.0 * std::numbers::pi / nt) / std::numbers::pi;
}

Eigen::ArrayXXcd sample(const GridSpec& s, cplx (*fn)(cplx)) {
  return ComplexField::sample(s, [&](cplx w) { return w == cplx{} ? cplx{} : fn(w); }).values();
}

}  // namespace

TEST_CASE("closed forms of the disk transforms agree with direct quadrature") {
  for (cplx w : {cplx(0.2, 0.1), cplx(-0.5, 0.6), cplx(1.4, -0.3), cplx(-1.9, 1.9), cplx(0.0, -2.5)})
    CHECK(std::abs(cauchy_of_disk_quadrature(w) - cauchy_of_disk(w)) < 1e-3);
  // B = d/dw C: difference quotient of the quadrature oracle outside the disk.
  const cplx w(1.3, 0.8);
  const double d = 1e-3;
  const cplx dw = (cauchy_of_disk_quadrature(w + d) - cauchy_of_disk_quadrature(w - d)) / (2 * d) * 0.5 +
                  (cauchy_of_disk_quadrature(w + cplx(0, d)) - cauchy_of_disk_quadrature(w - cplx(0, d))) /
                      (2 * d) * cplx(0, -0.5);
  CHECK(std::abs(dw - beurling_of_disk(w)) < 1e-3);
}

TEST_CASE("zero field maps to zero") {
  GridSpec s(2.0, 64);
  const auto z = ComplexField::zeros(s);
  CHECK(sup_norm(cauchy_transform(z)) == 0.0);
  CHECK(sup_norm(beurling_transform(z)) == 0.0);
}

TEST_CASE("Cauchy transform of the disk indicator") {
  GridSpec s(2.0, 512);
  const auto f = testing::disk_indicator(s);
  const auto c = cauchy_transform(f);
  const double err = relative_l2(c.values(), sample(s, cauchy_of_disk));
  MESSAGE("relative L2 error " << err);
  CHECK(err <= 5e-3);
}

TEST_CASE("Beurling transform of the disk indicator away from the jump") {
  GridSpec s(2.0, 512);
  const auto f = testing::disk_indicator(s);
  const auto b = beurling_transform(f);
  const auto ref = sample(s, beurling_of_disk);
  const auto w = node_coordinates(s);
  const auto band = ((w.abs() - 1.0).abs() <= 8.0 * s.spacing()).cast<double>();
  const Eigen::ArrayXXcd keep = (1.0 - band).cast<cplx>();
  const double off_band = relative_l2(b.values() * keep, ref * keep);
  MESSAGE("relative L2 error off the |w|=1 band " << off_band << ", whole cell " << relative_l2(b.values(), ref));
  CHECK(off_band <= 5e-3);
}

TEST_CASE("transforms are linear") {
  GridSpec s(2.0, 128);
  const auto f = testing::random_disk_field(s, 1);
  const auto g = testing::random_disk_field(s, 2);
  const cplx a(0.3, -1.2), b(-2.0, 0.5);
  const ComplexField comb(s, a * f.values() + b * g.values());
  for (auto op : {&cauchy_transform, &beurling_transform}) {
    const Eigen::ArrayXXcd lhs = op(comb, 1.0).values();
    const Eigen::ArrayXXcd rhs = a * op(f, 1.0).values() + b * op(g, 1.0).values();
    CHECK(relative_l2(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("periodic Beurling multiplier is an isometry on mean-free fields") {
  GridSpec s(2.0, 128);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = testing::random_disk_field(s, 100 + seed, 1.0, true);
    const double nf = l2_norm(f);
    CHECK(std::abs(l2_norm(periodic_beurling(f)) - nf) <= 1e-10 * nf);
  }
}

TEST_CASE("dbar of the Cauchy transform recovers smooth data") {
  GridSpec s(2.0, 256);
  const auto f = ComplexField::sample(s, [](cplx w) {
    const double t = 1.0 - std::norm(w);
    return t > 0.0 ? t * t * t * t * (1.0 + w + std::conj(w) * std::conj(w)) : cplx{};
  });
  const auto back = central_d_dwbar(cauchy_transform(f));
  // The transform is not periodic, so the wrapped stencils on the outer ring
  // of nodes are excluded.
  const Index n = s.resolution();
  const double err = relative_l2(back.values().block(2, 2, n - 4, n - 4), f.values().block(2, 2, n - 4, n - 4));
  MESSAGE("relative L2 error " << err);
  CHECK(err <= 10.0 * s.spacing());
}

TEST_CASE("support precondition") {
  GridSpec s(2.0, 64);
  const auto f = ComplexField::sample(s, [](cplx w) { return std::abs(w) < 1.5 ? 1.0 : 0.0; });
  CHECK_THROWS_AS(cauchy_transform(f), ValidationError);
  CHECK_THROWS_AS(beurling_transform(f), ValidationError);
}

TEST_CASE("square-lattice Eisenstein values") {
  // Brute-force lattice sum for the period-4 lattice.
  auto brute = [](int n) {
    cplx acc{};
    const int R = 200;
    for (int a = -R; a <= R; ++a)
      for (int b = -R; b <= R; ++b)
        if (a || b) acc += std::pow(cplx(4.0 * a, 4.0 * b), -n);
    return acc.real();
  };
  const auto g = square_lattice_eisenstein(2.0, 10);
  CHECK(g[2] == doctest::Approx(brute(4)).epsilon(1e-4));
  CHECK(g[4] == doctest::Approx(brute(8)).epsilon(1e-10));
  CHECK(std::abs(g[3]) < 1e-20);
  CHECK(std::abs(brute(6)) < 1e-12);
}
