#include "qclam/grid.hpp"

#include <array>
#include <charconv>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace qclam {

GridSpec::GridSpec(double half_width, Index resolution)
    : half_width_(half_width), resolution_(resolution) {
  if (!(half_width >= 2.0) || !std::isfinite(half_width))
    throw ValidationError("grid half-width must be >= 2");
  if (resolution < 64 || (resolution & (resolution - 1)) != 0)
    throw ValidationError("grid resolution must be a power of two >= 64");
}

Eigen::ArrayXXcd node_coordinates(const GridSpec& spec) {
  const Index n = spec.resolution();
  Eigen::ArrayXXcd w(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r) w(r, c) = spec.node(r, c);
  return w;
}

double lp_norm(const ComplexField& f, double p, const Disk& region) {
  if (!(p >= 1.0)) throw ValidationError("lp_norm requires p >= 1");
  const GridSpec& s = f.spec();
  const double L = s.half_width();
  if (region.radius < 0.0 || std::abs(region.center.real()) + region.radius > L ||
      std::abs(region.center.imag()) + region.radius > L)
    throw ValidationError("lp_norm region must lie inside the grid cell");
  std::vector<double> terms;
  const Index n = s.resolution();
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r)
      if (region.contains(s.node(r, c))) terms.push_back(std::pow(std::abs(f(r, c)), p));
  return std::pow(pairwise_sum(terms) * s.cell_area(), 1.0 / p);
}

double l2_norm(const GridSpec& spec, const Eigen::ArrayXXcd& values) {
  return std::sqrt(values.abs2().sum() * spec.cell_area());
}

double l2_norm(const ComplexField& f) { return l2_norm(f.spec(), f.values()); }

double sup_norm(const ComplexField& f) { return f.values().abs().maxCoeff(); }

double support_radius(const ComplexField& f, double threshold) {
  const GridSpec& s = f.spec();
  double r = 0.0;
  for (Index c = 0; c < s.resolution(); ++c)
    for (Index row = 0; row < s.resolution(); ++row)
      if (std::abs(f(row, c)) > threshold) r = std::max(r, std::abs(s.node(row, c)));
  return r;
}

namespace {

// d/dx along columns, d/dy along rows; returns (fx, fy).
std::pair<Eigen::ArrayXXcd, Eigen::ArrayXXcd> central_gradient(const ComplexField& f) {
  const Index n = f.spec().resolution();
  const double inv2h = 0.5 / f.spec().spacing();
  const auto& v = f.values();
  Eigen::ArrayXXcd fx(n, n), fy(n, n);
  for (Index c = 0; c < n; ++c) {
    const Index cp = (c + 1) % n, cm = (c + n - 1) % n;
    for (Index r = 0; r < n; ++r) {
      const Index rp = (r + 1) % n, rm = (r + n - 1) % n;
      fx(r, c) = (v(r, cp) - v(r, cm)) * inv2h;
      fy(r, c) = (v(rp, c) - v(rm, c)) * inv2h;
    }
  }
  return {std::move(fx), std::move(fy)};
}

double keys_weight(double t) {
  t = std::abs(t);
  if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

template <typename T>
T pairwise_sum_impl(std::span<const T> xs) {
  if (xs.size() <= 16) {
    T acc{};
    for (const T& x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum_impl(xs.first(half)) + pairwise_sum_impl(xs.subspan(half));
}

}  // namespace

ComplexField central_d_dw(const ComplexField& f) {
  auto [fx, fy] = central_gradient(f);
  return ComplexField(f.spec(), 0.5 * (fx - cplx(0, 1) * fy));
}

ComplexField central_d_dwbar(const ComplexField& f) {
  auto [fx, fy] = central_gradient(f);
  return ComplexField(f.spec(), 0.5 * (fx + cplx(0, 1) * fy));
}

cplx interpolate(const ComplexField& f, cplx w) {
  const Index n = f.spec().resolution();
  const auto [fr, fc] = f.spec().locate(w);
  const auto r0 = static_cast<Index>(std::floor(fr));
  const auto c0 = static_cast<Index>(std::floor(fc));
  std::array<double, 4> wr{}, wc{};
  for (int k = 0; k < 4; ++k) {
    wr[k] = keys_weight(fr - static_cast<double>(r0 - 1 + k));
    wc[k] = keys_weight(fc - static_cast<double>(c0 - 1 + k));
  }
  auto wrap = [n](Index i) { return ((i % n) + n) % n; };
  cplx acc{0.0, 0.0};
  for (int a = 0; a < 4; ++a) {
    const Index r = wrap(r0 - 1 + a);
    cplx row{0.0, 0.0};
    for (int b = 0; b < 4; ++b) row += wc[b] * f(r, wrap(c0 - 1 + b));
    acc += wr[a] * row;
  }
  return acc;
}

double pairwise_sum(std::span<const double> xs) { return pairwise_sum_impl(xs); }
cplx pairwise_sum(std::span<const cplx> xs) { return pairwise_sum_impl(xs); }

void write_csv(std::ostream& os, const ComplexField& f) {
  const Index n = f.spec().resolution();
  std::ostringstream line;
  line << std::setprecision(17);
  for (Index r = 0; r < n; ++r) {
    line.str("");
    for (Index c = 0; c < n; ++c) {
      if (c) line << ',';
      line << f(r, c).real() << ',' << f(r, c).imag();
    }
    os << line.str() << '\n';
  }
}

ComplexField read_csv(std::istream& is, const GridSpec& spec) {
  const Index n = spec.resolution();
  Eigen::ArrayXXcd v(n, n);
  std::string line;
  Index row = 0;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw ValidationError("CSV line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= n) fail("more rows than grid resolution " + std::to_string(n));
    std::vector<double> nums;
    nums.reserve(static_cast<std::size_t>(2 * n));
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      const std::string tok = line.substr(pos, end - pos);
      double x = 0.0;
      const char* b = tok.data();
      const char* e = b + tok.size();
      while (b < e && *b == ' ') ++b;
      auto [p, ec] = std::from_chars(b, e, x);
      if (ec != std::errc() || p != e || !std::isfinite(x)) fail("malformed number '" + tok + "'");
      nums.push_back(x);
      pos = end + 1;
    }
    if (nums.size() != static_cast<std::size_t>(2 * n))
      fail("expected " + std::to_string(2 * n) + " numbers, found " + std::to_string(nums.size()));
    for (Index c = 0; c < n; ++c) v(row, c) = cplx(nums[2 * c], nums[2 * c + 1]);
    ++row;
  }
  if (row != n) {
    lineno += 1;
    fail("expected " + std::to_string(n) + " rows, found " + std::to_string(row));
  }
  return ComplexField(spec, std::move(v));
}

}  // namespace qclam
