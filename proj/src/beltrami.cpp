#include "qclam/beltrami.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace qclam {

BeltramiField::BeltramiField(ComplexField mu, double kappa_bound, double support_radius)
    : mu_(std::move(mu)), kappa_bound_(kappa_bound), support_radius_(support_radius) {
  if (!(kappa_bound >= 0.0 && kappa_bound < 1.0))
    throw ValidationError("Beltrami bound must satisfy 0 <= kappa < 1");
  if (!(support_radius > 0.0)) throw ValidationError("Beltrami support radius must be positive");
  const double sup = sup_norm(mu_);
  if (sup > kappa_bound + 1e-12)
    throw ValidationError("sup|mu| = " + std::to_string(sup) + " exceeds declared bound " + std::to_string(kappa_bound));
  const GridSpec& s = mu_.spec();
  const double rho = support_radius + 2.0 * s.spacing();
  for (Index c = 0; c < s.resolution(); ++c)
    for (Index r = 0; r < s.resolution(); ++r)
      if (std::abs(mu_(r, c)) > 1e-12 && std::abs(s.node(r, c)) > rho)
        throw ValidationError("mu does not vanish outside D(0, " + std::to_string(support_radius) + ")");
}

BeltramiField BeltramiField::zero(const GridSpec& spec) { return {ComplexField::zeros(spec), 0.0}; }

BeltramiField BeltramiField::radial_stretch(const GridSpec& spec, double K) {
  if (!(K >= 1.0)) throw ValidationError("radial stretch needs K >= 1");
  const double k = (K - 1.0) / (K + 1.0);
  auto mu = ComplexField::sample(spec, [k](cplx w) {
    if (std::abs(w) >= 1.0 || w == cplx{}) return cplx{};
    return k * w / std::conj(w);
  });
  return {std::move(mu), k};
}

Eigen::ArrayXXd MollifierSpec::kernel(const GridSpec& spec) const {
  if (!(epsilon > 0.0)) throw ValidationError("mollifier radius must be positive");
  const Index n = spec.resolution();
  const double h = spec.spacing();
  Eigen::ArrayXXd k = Eigen::ArrayXXd::Zero(n, n);
  const auto reach = static_cast<Index>(std::ceil(epsilon / h));
  for (Index a = -reach; a <= reach; ++a)
    for (Index b = -reach; b <= reach; ++b) {
      const double t = (static_cast<double>(a * a + b * b) * h * h) / (epsilon * epsilon);
      if (t >= 1.0) continue;
      k((a + n) % n, (b + n) % n) += (1.0 - t) * (1.0 - t);
    }
  return k / (k.sum() * spec.cell_area());
}

int max_iterations(double kappa_bound, double tol) {
  if (kappa_bound <= 0.0) return 10;
  return static_cast<int>(std::ceil(std::log(tol) / std::log(kappa_bound))) + 10;
}

QCMap principal_solution(const BeltramiField& mu, double tol) {
  if (!(tol > 0.0)) throw ValidationError("solver tolerance must be positive");
  const GridSpec& s = mu.spec();
  const FreeSpaceTransforms ops(s);
  const Eigen::ArrayXXcd& m = mu.mu().values();
  const double support = mu.support_radius();
  const double eval = support + 2.0 * s.spacing();
  const int limit = max_iterations(mu.kappa_bound(), tol);

  Eigen::ArrayXXcd phi = Eigen::ArrayXXcd::Zero(s.resolution(), s.resolution());
  double diff = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < limit) {
    Eigen::ArrayXXcd next = m * (1.0 + ops.beurling(phi, support, eval));
    diff = l2_norm(s, next - phi);
    phi = std::move(next);
    ++it;
    if (diff <= tol) break;
  }
  if (diff > tol)
    throw NumericalError("Beltrami fixed point did not converge in " + std::to_string(limit) + " iterations", diff);

  auto t = ops.apply(phi, support);
  const double residual = l2_norm(s, phi - m * (1.0 + t.beurling));
  ComplexField h(s, node_coordinates(s) + t.cauchy);
  return QCMap{std::move(h), ComplexField(s, std::move(phi)), mu, it, residual};
}

BeltramiField mollify(const BeltramiField& mu, const MollifierSpec& spec) {
  const GridSpec& s = mu.spec();
  if (!(spec.epsilon > 0.0)) throw ValidationError("mollifier radius must be positive");
  if (!(spec.epsilon < s.half_width() - 1.0))
    throw ValidationError("mollifier radius must be below L - 1");
  const Eigen::ArrayXXd k = spec.kernel(s);
  Eigen::ArrayXXcd out = ifft2(fft2(mu.mu().values()) * fft2(k.cast<cplx>())) * s.cell_area();
  const double new_support = mu.support_radius() + spec.epsilon;
  const double cut = new_support + 2.0 * s.spacing();
  for (Index c = 0; c < s.resolution(); ++c)
    for (Index r = 0; r < s.resolution(); ++r)
      if (std::abs(s.node(r, c)) > cut) out(r, c) = 0.0;
  return {ComplexField(s, std::move(out)), mu.kappa_bound(), new_support};
}

double dilatation_at(const QCMap& map, cplx w) {
  const GridSpec& s = map.h.spec();
  const auto [fr, fc] = s.locate(w);
  const auto r = static_cast<Index>(std::lround(fr));
  const auto c = static_cast<Index>(std::lround(fc));
  if (r < 1 || c < 1 || r >= s.resolution() - 1 || c >= s.resolution() - 1)
    throw ValidationError("dilatation point must lie in the grid interior");
  const double inv2h = 0.5 / s.spacing();
  const cplx hx = (map.h(r, c + 1) - map.h(r, c - 1)) * inv2h;
  const cplx hy = (map.h(r + 1, c) - map.h(r - 1, c)) * inv2h;
  const cplx dw = 0.5 * (hx - cplx(0, 1) * hy);
  const cplx dwb = 0.5 * (hx + cplx(0, 1) * hy);
  if (std::abs(dw) < 1e-12) throw DegeneratePointError("dh/dw vanishes", s.node(r, c));
  return std::abs(dwb / dw);
}

double p_max(double kappa) {
  if (!(kappa >= 0.0 && kappa < 1.0)) throw ValidationError("p_max needs 0 <= kappa < 1");
  if (kappa == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 + 1.0 / kappa;
}

}  // namespace qclam
