#include "qclam/lamination.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace qclam {

namespace {

double keys_weight(double t) {
  t = std::abs(t);
  if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

void require_same_layout(const LeafFunction& a, const LeafFunction& b) {
  if (a.grid().n != b.grid().n || a.grid().radius != b.grid().radius || a.tau() != b.tau())
    throw ValidationError("leaf functions live on different grids or leaves");
}

}  // namespace

StraighteningChart::StraighteningChart(const Lamination& lam) : motion_(lam.motion) {}

double StraighteningChart::round_trip_error(const std::vector<cplx>& zs, const std::vector<cplx>& alphas) const {
  double worst = 0.0;
  for (cplx z : zs)
    for (cplx a : alphas) worst = std::max(worst, std::abs(forward(z, inverse(z, a)) - a));
  return worst;
}

StraighteningChart straighten(const Lamination& lam) {
  if (!lam.motion.global()) throw DomainError("straightening needs a global motion");
  return StraighteningChart(lam);
}

DirectedForm directed_form(const Lamination& lam, cplx z, cplx alpha) {
  return DirectedForm{-lam.motion.leaf_derivative(alpha, z), 1.0};
}

LeafFunction::LeafFunction(ZGrid grid, std::vector<cplx> tau, std::vector<Eigen::ArrayXXd> values,
                           std::vector<Eigen::ArrayXXcd> gradients, Smoothness tag)
    : grid_(grid), tau_(std::move(tau)), values_(std::move(values)), gradients_(std::move(gradients)), tag_(tag) {
  if (grid_.n < 4 || !(grid_.radius > 0.0)) throw ValidationError("z grid needs n >= 4 and a positive radius");
  if (values_.size() != tau_.size() || gradients_.size() != tau_.size())
    throw ValidationError("leaf function needs one value and gradient table per leaf");
  for (std::size_t k = 0; k < tau_.size(); ++k) {
    if (values_[k].rows() != grid_.n || values_[k].cols() != grid_.n || gradients_[k].rows() != grid_.n ||
        gradients_[k].cols() != grid_.n)
      throw ValidationError("leaf table does not match the z grid");
    if (!values_[k].allFinite() || !gradients_[k].allFinite())
      throw ValidationError("leaf function has non-finite samples");
  }
}

LeafFunction LeafFunction::sample(const ZGrid& grid, std::vector<cplx> tau, const std::function<double(cplx, cplx)>& f,
                                  Smoothness tag) {
  const double d = 1e-6;
  std::vector<Eigen::ArrayXXd> vals;
  std::vector<Eigen::ArrayXXcd> grads;
  for (cplx a : tau) {
    Eigen::ArrayXXd v(grid.n, grid.n);
    Eigen::ArrayXXcd g(grid.n, grid.n);
    for (int r = 0; r < grid.n; ++r)
      for (int c = 0; c < grid.n; ++c) {
        const cplx z = grid.point(r, c);
        v(r, c) = f(z, a);
        g(r, c) = cplx((f(z + d, a) - f(z - d, a)) / (2 * d), (f(z + cplx(0, d), a) - f(z - cplx(0, d), a)) / (2 * d));
      }
    vals.push_back(std::move(v));
    grads.push_back(std::move(g));
  }
  return LeafFunction(grid, std::move(tau), std::move(vals), std::move(grads), tag);
}

double LeafFunction::value(std::size_t leaf, cplx z) const {
  const auto& v = values_.at(leaf);
  const double h = grid_.spacing();
  const double fr = (z.imag() + grid_.radius) / h, fc = (z.real() + grid_.radius) / h;
  if (fr < -1e-9 || fc < -1e-9 || fr > grid_.n - 1 + 1e-9 || fc > grid_.n - 1 + 1e-9)
    throw DomainError("z lies outside the leaf-function grid");
  const auto r0 = static_cast<int>(std::floor(fr)), c0 = static_cast<int>(std::floor(fc));
  auto clampi = [this](int i) { return std::clamp(i, 0, grid_.n - 1); };
  double acc = 0.0;
  for (int a = -1; a <= 2; ++a) {
    const double wr = keys_weight(fr - (r0 + a));
    if (wr == 0.0) continue;
    double row = 0.0;
    for (int b = -1; b <= 2; ++b) {
      const double wc = keys_weight(fc - (c0 + b));
      if (wc != 0.0) row += wc * v(clampi(r0 + a), clampi(c0 + b));
    }
    acc += wr * row;
  }
  return acc;
}

LeafFunction LeafFunction::scaled(double s) const {
  auto vals = values_;
  auto grads = gradients_;
  for (auto& v : vals) v *= s;
  for (auto& g : grads) g *= s;
  return LeafFunction(grid_, tau_, std::move(vals), std::move(grads), tag_);
}

LeafFunction operator+(const LeafFunction& a, const LeafFunction& b) {
  require_same_layout(a, b);
  auto vals = a.values_;
  auto grads = a.gradients_;
  for (std::size_t k = 0; k < vals.size(); ++k) {
    vals[k] += b.values_[k];
    grads[k] += b.gradients_[k];
  }
  const Smoothness tag = (a.tag_ == Smoothness::C1 && b.tag_ == Smoothness::C1) ? Smoothness::C1 : Smoothness::W1p;
  return LeafFunction(a.grid_, a.tau_, std::move(vals), std::move(grads), tag);
}

void write_csv(std::ostream& os, const LeafFunction& f) {
  os << "alpha_re,alpha_im,z_re,z_im,value,grad_x,grad_y\n" << std::setprecision(17);
  for (std::size_t k = 0; k < f.tau().size(); ++k)
    for (int r = 0; r < f.grid().n; ++r)
      for (int c = 0; c < f.grid().n; ++c) {
        const cplx z = f.grid().point(r, c);
        const cplx g = f.gradients(k)(r, c);
        os << f.tau()[k].real() << ',' << f.tau()[k].imag() << ',' << z.real() << ',' << z.imag() << ','
           << f.values(k)(r, c) << ',' << g.real() << ',' << g.imag() << '\n';
      }
}

double w1p_norm(const LeafFunction& f, double p, double delta) {
  if (!(p > 1.0)) throw ValidationError("W^{1,p} norm needs p > 1");
  if (!(delta >= 0.0 && delta < 1.0)) throw ValidationError("delta must lie in [0, 1)");
  const double rad = 1.0 - delta;
  const double area = f.grid().spacing() * f.grid().spacing();
  double sup = 0.0, grad_sup = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < f.tau().size(); ++k) {
    std::vector<double> terms;
    for (int r = 0; r < f.grid().n; ++r)
      for (int c = 0; c < f.grid().n; ++c) {
        if (!(std::abs(f.grid().point(r, c)) < rad)) continue;
        sup = std::max(sup, std::abs(f.values(k)(r, c)));
        terms.push_back(std::pow(std::abs(f.gradients(k)(r, c)), p));
      }
    count += terms.size();
    grad_sup = std::max(grad_sup, std::pow(pairwise_sum(terms) * area, 1.0 / p));
  }
  if (count == 0) throw ValidationError("no samples inside D(0, 1 - delta)");
  return sup + grad_sup;
}

LeafFunction extend_constant_along_leaves(const std::vector<double>& chi, const Lamination& lam, const ZGrid& grid) {
  const auto& tau = lam.motion.tau();
  if (chi.size() != tau.size()) throw ValidationError("chi must have one value per tau point");
  std::vector<Eigen::ArrayXXd> vals;
  std::vector<Eigen::ArrayXXcd> grads;
  for (double c : chi) {
    vals.push_back(Eigen::ArrayXXd::Constant(grid.n, grid.n, c));
    grads.push_back(Eigen::ArrayXXcd::Zero(grid.n, grid.n));
  }
  return LeafFunction(grid, tau, std::move(vals), std::move(grads), Smoothness::C1);
}

AmbientFunction blend_extend(const LeafFunction& f) {
  return [f](cplx z, cplx alpha) {
    const auto& tau = f.tau();
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < tau.size(); ++k) {
      const double d2 = std::norm(alpha - tau[k]);
      if (d2 == 0.0) return f.value(k, z);
      num += f.value(k, z) / d2;
      den += 1.0 / d2;
    }
    return num / den;
  };
}

AmbientFunction c1_extend(const LeafFunction& f, double smoothing) {
  if (!(smoothing > 0.0)) throw ValidationError("smoothing radius must be positive");
  // midpoint rule in polar coordinates for the bump, normalized to total weight 1
  constexpr int nr = 8, nt = 16;
  std::vector<std::pair<cplx, double>> rule;
  double total = 0.0;
  for (int i = 0; i < nr; ++i) {
    const double rho = (i + 0.5) / nr;
    const double wgt = (1.0 - rho * rho) * (1.0 - rho * rho) * rho;
    for (int j = 0; j < nt; ++j) {
      rule.emplace_back(std::polar(rho * smoothing, 2.0 * std::numbers::pi * (j + 0.5 * (i % 2)) / nt), wgt);
      total += wgt;
    }
  }
  for (auto& [b, w] : rule) w /= total;
  AmbientFunction blend = blend_extend(f);
  return [blend, rule](cplx z, cplx alpha) {
    double acc = 0.0;
    for (const auto& [b, w] : rule) acc += w * blend(z, alpha - b);
    return acc;
  };
}

}  // namespace qclam
