#include "qclam/transforms.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qclam {

namespace {

void fft_columns(Eigen::ArrayXXcd& a, bool inverse) {
  Eigen::FFT<double> fft;
  Eigen::VectorXcd in(a.rows()), out(a.rows());
  for (Index c = 0; c < a.cols(); ++c) {
    in = a.col(c).matrix();
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    a.col(c) = out.array();
  }
}

Eigen::ArrayXXcd fft2_impl(const Eigen::ArrayXXcd& a, bool inverse) {
  Eigen::ArrayXXcd t = a;
  fft_columns(t, inverse);
  Eigen::ArrayXXcd tt = t.transpose();
  fft_columns(tt, inverse);
  return tt.transpose();
}

double wavenumber(Index i, Index n, double half_width) {
  const Index m = i < n / 2 ? i : i - n;
  return std::numbers::pi * static_cast<double>(m) / half_width;
}

// Number of series terms for geometric ratio q to fall below 1e-17.
int series_degree(double q) {
  if (q <= 0.0) return 8;
  const double n = std::ceil(std::log(1e-17) / std::log(q)) + 4.0;
  return static_cast<int>(std::clamp(n, 8.0, 400.0));
}

}  // namespace

Eigen::ArrayXXcd fft2(const Eigen::ArrayXXcd& a) { return fft2_impl(a, false); }
Eigen::ArrayXXcd ifft2(const Eigen::ArrayXXcd& a) { return fft2_impl(a, true); }

std::vector<double> square_lattice_eisenstein(double half_width, int kmax) {
  // c_k = (2k-1) G_{2k} are the Laurent coefficients of the Weierstrass P
  // function; for Z[i], G_4 = varpi^4 / 15 (lemniscate constant varpi) and
  // g_3 = 0, and the classical recurrence generates the rest.
  std::vector<double> c(static_cast<std::size_t>(std::max(kmax, 3)) + 1, 0.0);
  const double varpi = std::tgamma(0.25) * std::tgamma(0.25) / (2.0 * std::sqrt(2.0 * std::numbers::pi));
  c[2] = 3.0 * std::pow(varpi, 4) / 15.0;
  c[3] = 0.0;
  for (int n = 4; n <= kmax; ++n) {
    double s = 0.0;
    for (int m = 2; m <= n - 2; ++m) s += c[m] * c[n - m];
    c[n] = 3.0 / ((2.0 * n + 1.0) * (n - 3.0)) * s;
  }
  std::vector<double> g(static_cast<std::size_t>(kmax) + 1, 0.0);
  const double period = 2.0 * half_width;
  for (int k = 2; k <= kmax; ++k) g[k] = c[k] / (2.0 * k - 1.0) * std::pow(period, -2.0 * k);
  return g;
}

FreeSpaceTransforms::FreeSpaceTransforms(GridSpec spec)
    : spec_(spec), w_(node_coordinates(spec)), eisenstein_(square_lattice_eisenstein(spec.half_width(), 201)) {
  const Index n = spec_.resolution();
  cauchy_multiplier_.resize(n, n);
  beurling_multiplier_.resize(n, n);
  for (Index c = 0; c < n; ++c) {
    const double kx = wavenumber(c, n, spec_.half_width());
    for (Index r = 0; r < n; ++r) {
      const cplx xi(kx, wavenumber(r, n, spec_.half_width()));
      if (r == 0 && c == 0) {
        cauchy_multiplier_(r, c) = 0.0;
        beurling_multiplier_(r, c) = 0.0;
      } else {
        cauchy_multiplier_(r, c) = cplx(0.0, -2.0) / xi;
        beurling_multiplier_(r, c) = std::conj(xi) / xi;
      }
    }
  }
}

void FreeSpaceTransforms::check_support(const Eigen::ArrayXXcd& f, double support_radius) const {
  if (f.rows() != spec_.resolution() || f.cols() != spec_.resolution())
    throw ValidationError("field shape does not match the transform grid");
  if (!f.allFinite()) throw ValidationError("transform input contains non-finite values");
  const double rho = support_radius + 2.0 * spec_.spacing();
  if (!(support_radius > 0.0) || rho > 0.8 * spec_.half_width())
    throw ValidationError("support radius must be positive and at most 0.8 L - 2h");
  for (Index c = 0; c < f.cols(); ++c)
    for (Index r = 0; r < f.rows(); ++r)
      if (std::abs(w_(r, c)) > rho && std::abs(f(r, c)) > 1e-12)
        throw ValidationError("transform input is not supported in D(0, " + std::to_string(support_radius) + ")");
}

Eigen::ArrayXXcd FreeSpaceTransforms::apply_periodic(const Eigen::ArrayXXcd& fhat,
                                                      const Eigen::ArrayXXcd& multiplier) const {
  return ifft2(fhat * multiplier);
}

void FreeSpaceTransforms::add_corrections(const Eigen::ArrayXXcd& f, double support_radius, double eval_radius,
                                          Eigen::ArrayXXcd* cauchy, Eigen::ArrayXXcd* beurling) const {
  const double L = spec_.half_width();
  const double da = spec_.cell_area();
  const double rho = support_radius + 2.0 * spec_.spacing();
  // Inner radius balancing the lattice-series ratio (r + rho)/2L against the
  // multipole ratio rho/r.
  const double r_in = 0.5 * (-rho + std::sqrt(rho * rho + 8.0 * L * rho));
  const int degree = series_degree(rho / r_in);

  std::vector<cplx> moments(static_cast<std::size_t>(degree) + 1, cplx{});
  cplx conj_moment{};
  for (Index c = 0; c < f.cols(); ++c)
    for (Index r = 0; r < f.rows(); ++r) {
      const cplx z = w_(r, c);
      if (std::abs(z) > rho) continue;
      const cplx fz = f(r, c) * da;
      conj_moment += fz * std::conj(z);
      cplx p = fz;
      for (int j = 0; j <= degree; ++j) {
        moments[j] += p;
        p *= z;
      }
    }

  // (1/pi) sum_k G_{2k} int f(zeta) (w - zeta)^{2k-1}, expanded in powers of w.
  std::vector<cplx> poly(static_cast<std::size_t>(degree) + 1, cplx{});
  const int kmax = std::min<int>((degree + 1) / 2, static_cast<int>(eisenstein_.size()) - 1);
  for (int k = 2; k <= kmax; ++k) {
    const double g = eisenstein_[k] / std::numbers::pi;
    if (g == 0.0) continue;
    const int n = 2 * k - 1;
    double binom = 1.0;
    for (int j = 0; j <= n; ++j) {
      poly[n - j] += g * binom * ((j % 2) ? -1.0 : 1.0) * moments[j];
      binom = binom * static_cast<double>(n - j) / static_cast<double>(j + 1);
    }
  }
  const double area = 4.0 * L * L;
  const cplx m0 = moments[0];

  for (Index c = 0; c < f.cols(); ++c)
    for (Index r = 0; r < f.rows(); ++r) {
      const cplx w = w_(r, c);
      const double aw = std::abs(w);
      if (aw > eval_radius) {
        if (cauchy) (*cauchy)(r, c) = 0.0;
        if (beurling) (*beurling)(r, c) = 0.0;
        continue;
      }
      if (aw <= r_in) {
        cplx p{}, dp{};
        for (int m = degree; m >= 1; --m) {
          p = p * w + poly[m];
          dp = dp * w + static_cast<double>(m) * poly[m];
        }
        p = p * w + poly[0];
        if (cauchy) (*cauchy)(r, c) += (std::conj(w) * m0 - conj_moment) / area + p;
        if (beurling) (*beurling)(r, c) += dp;
      } else {
        const cplx u = 1.0 / w;
        cplx s{}, ds{};
        for (int j = degree; j >= 0; --j) {
          s = s * u + moments[j];
          ds = ds * u + static_cast<double>(j + 1) * moments[j];
        }
        if (cauchy) (*cauchy)(r, c) = u * s / std::numbers::pi;
        if (beurling) (*beurling)(r, c) = -u * u * ds / std::numbers::pi;
      }
    }
}

FreeSpaceTransforms::Result FreeSpaceTransforms::apply(const Eigen::ArrayXXcd& f, double support_radius,
                                                       double eval_radius) const {
  check_support(f, support_radius);
  const Eigen::ArrayXXcd fhat = fft2(f);
  Result out{apply_periodic(fhat, cauchy_multiplier_), apply_periodic(fhat, beurling_multiplier_)};
  add_corrections(f, support_radius, eval_radius, &out.cauchy, &out.beurling);
  return out;
}

Eigen::ArrayXXcd FreeSpaceTransforms::beurling(const Eigen::ArrayXXcd& f, double support_radius,
                                               double eval_radius) const {
  check_support(f, support_radius);
  Eigen::ArrayXXcd b = apply_periodic(fft2(f), beurling_multiplier_);
  add_corrections(f, support_radius, eval_radius, nullptr, &b);
  return b;
}

ComplexField cauchy_transform(const ComplexField& f, double support_radius) {
  FreeSpaceTransforms t(f.spec());
  return ComplexField(f.spec(), t.apply(f.values(), support_radius).cauchy);
}

ComplexField beurling_transform(const ComplexField& f, double support_radius) {
  FreeSpaceTransforms t(f.spec());
  return ComplexField(f.spec(), t.beurling(f.values(), support_radius));
}

ComplexField periodic_beurling(const ComplexField& f) {
  Eigen::ArrayXXcd fhat = fft2(f.values());
  const Index n = f.spec().resolution();
  for (Index c = 0; c < n; ++c) {
    const double kx = wavenumber(c, n, f.spec().half_width());
    for (Index r = 0; r < n; ++r) {
      const cplx xi(kx, wavenumber(r, n, f.spec().half_width()));
      fhat(r, c) = (r == 0 && c == 0) ? cplx{} : fhat(r, c) * std::conj(xi) / xi;
    }
  }
  return ComplexField(f.spec(), ifft2(fhat));
}

}  // namespace qclam
