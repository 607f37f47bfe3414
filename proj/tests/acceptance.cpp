// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance                 exit 1 if any criterion fails
//   acceptance --known-red 2   exit 1 only if a criterion outside the list fails
//                              (the listed ones are still evaluated and printed)

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "qclam/approximation.hpp"
#include "qclam/currents.hpp"

using namespace qclam;
using qclam::testing::relative_l2;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<HolomorphicMotion> all_builtins() {
  std::vector<HolomorphicMotion> out;
  for (const auto& name : HolomorphicMotion::builtin_names()) {
    out.push_back(HolomorphicMotion::builtin(name, HolomorphicMotion::default_tau()));
    out.push_back(taper(out.back()));
  }
  return out;
}

std::vector<cplx> sweep_50x50(double radius) {
  std::vector<cplx> zs;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) {
      const cplx z(-radius + 2 * radius * i / 49.0, -radius + 2 * radius * j / 49.0);
      if (std::abs(z) <= radius) zs.push_back(z);
    }
  return zs;
}

Verdict beltrami_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const GridSpec s(2.0, 512);
  const QCMap m = principal_solution(BeltramiField::radial_stretch(s, 2.0));
  const double secs = seconds_since(t0);
  const auto exact = ComplexField::sample(s, [](cplx w) { return std::abs(w) < 1.0 ? w * std::abs(w) : w; }).values();
  const double err = relative_l2(m.h.values(), exact);
  return {err <= 1e-2 && secs <= 30.0, "relative L2 " + fmt(err) + " (<= 1e-2), " + fmt(secs) + " s (<= 30 s)"};
}

Verdict transform_oracles() {
  const GridSpec s(2.0, 512);
  const auto f = testing::disk_indicator(s);
  auto sample = [&](cplx (*fn)(cplx)) {
    return ComplexField::sample(s, [&](cplx w) { return w == cplx{} ? cplx{} : fn(w); }).values();
  };
  const double ce = relative_l2(cauchy_transform(f).values(),
                                sample([](cplx w) { return std::abs(w) <= 1.0 ? std::conj(w) : 1.0 / w; }));
  const double be = relative_l2(beurling_transform(f).values(),
                                sample([](cplx w) { return std::abs(w) < 1.0 ? cplx{} : -1.0 / (w * w); }));
  // Parseval for the periodic multiplier, mean-free compactly supported fields
  const GridSpec si(2.0, 256);
  double iso = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = testing::random_disk_field(si, 1000 + seed, 1.0, true);
    iso = std::max(iso, std::abs(l2_norm(periodic_beurling(g)) / l2_norm(g) - 1.0));
  }
  return {ce <= 5e-3 && be <= 5e-3 && iso <= 1e-10,
          "Cauchy " + fmt(ce) + ", Beurling " + fmt(be) + " (each <= 5e-3), isometry defect " + fmt(iso) + " (<= 1e-10)"};
}

Verdict schwarz() {
  const auto shear = HolomorphicMotion::builtin("shear", HolomorphicMotion::default_tau());
  double sharp = 0.0;
  for (const auto& row : check_schwarz(shear, {0.1, 0.3, 0.6}).rows) sharp = std::max(sharp, std::abs(row.sup_mu - std::abs(row.z)));
  double excess = 0.0;
  for (const auto& m : all_builtins())
    excess = std::max(excess, check_schwarz(m, {0.1, 0.3, 0.6, 0.9, cplx(0, -0.8), cplx(0.6, 0.6)}).worst_excess);
  return {sharp <= 1e-6 && excess <= 5e-2,
          "shear | sup|mu^z| - |z| | " + fmt(sharp) + " (<= 1e-6), worst excess " + fmt(excess) + " (<= 5e-2)"};
}

Verdict harnack() {
  const auto zs = sweep_50x50(0.9);
  int checks = 0, violations = 0, exponent_bad = 0, out_of_regime = 0;
  for (const auto& m : all_builtins()) {
    const auto& tau = m.tau();
    for (std::size_t i = 0; i < tau.size(); ++i)
      for (std::size_t j = i + 1; j < tau.size(); ++j)
        for (cplx z : zs) {
          const auto r = check_harnack_hoelder(m, tau[i], tau[j], z);
          ++checks;
          violations += std::min(r.margin_lower, r.margin_upper) < -1e-9;
          if (!r.in_regime) {
            ++out_of_regime;
            continue;
          }
          exponent_bad += !(r.exponent >= r.exponent_min - 1e-9 && r.exponent <= r.exponent_max + 1e-9);
        }
  }
  return {violations == 0 && exponent_bad == 0 && out_of_regime == 0,
          std::to_string(checks) + " checks, " + std::to_string(violations) + " violations beyond 1e-9, " +
              std::to_string(exponent_bad) + " exponents out of bounds, " + std::to_string(out_of_regime) + " out of regime"};
}

Verdict directed_closed() {
  double directed = 0.0, closed = 0.0;
  const auto forms = default_form_dictionary();
  for (const auto& m : all_builtins()) {
    const LaminarCurrent t(Lamination{m}, {1.0, 0.5, 2.0, 0.25});
    directed = std::max(directed, directedness_residual(t));
    closed = std::max(closed, closedness_residual(t, forms));
    // leafwise-constant density: still subordinate and closed
    const WeightedCurrent chi(t, [](cplx, cplx a) { return 1.0 + a.real(); });
    directed = std::max(directed, directedness_residual(chi));
    closed = std::max(closed, closedness_residual(chi, forms));
  }
  const GraphLeaf diag{"w = z", [](cplx z) { return z; }, [](cplx) { return cplx(1.0); }, 1.0};
  const LaminarCurrent rogue(Lamination{HolomorphicMotion::builtin("horizontal", {0.0, 0.1})}, {1.0, 1.0}, {diag});
  const double r = directedness_residual(rogue);
  return {directed == 0.0 && closed <= 1e-6 && r >= 0.5,
          "directedness " + fmt(directed) + " (== 0), closedness " + fmt(closed) + " (<= 1e-6), rogue directedness " +
              fmt(r) + " (>= 0.5)"};
}

Verdict domination() {
  std::mt19937_64 rng(2025);
  auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  int bad_range = 0, bad_recon = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(u() * 20);
    std::vector<cplx> tau;
    std::vector<double> tw, sw;
    for (int i = 0; i < n; ++i) {
      tau.emplace_back(0.8 * u() - 0.4, 0.8 * u() - 0.4);
      tw.push_back(u() < 0.1 ? 0.0 : 10.0 * u());
      sw.push_back(tw.back() * u());
    }
    const Lamination lam{HolomorphicMotion::builtin("affine", tau)};
    const LaminarCurrent t(lam, tw), s(lam, sw);
    const auto f = radon_nikodym(s, t);
    const auto back = reconstruct(f, t);
    for (int i = 0; i < n; ++i) {
      bad_range += !(f[i] >= 0.0 && f[i] <= 1.0);
      bad_recon += back.weights()[i] != sw[i];
    }
  }
  return {bad_range == 0 && bad_recon == 0,
          "50 pairs: " + std::to_string(bad_range) + " densities outside [0, 1], " + std::to_string(bad_recon) +
              " inexact reconstructions"};
}

Verdict refinement() {
  std::mt19937_64 rng(7);
  auto u = [&] { return 0.6 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 0.3; };
  std::vector<cplx> tau;
  for (int i = 0; i < 40; ++i) tau.emplace_back(u(), u());
  tau.emplace_back(tau[0] + cplx(3e-4, 0.0));
  tau.emplace_back(tau[0] + cplx(0.0, 2e-5));
  const WeightedCurrent s(LaminarCurrent(Lamination{HolomorphicMotion::builtin("affine", tau)}, std::vector<double>(tau.size(), 1.0)),
                          [](cplx, cplx a) { return 1.0 + a.real(); });
  const auto form = TestForm::two([](cplx z, cplx w) {
    return cplx(plateau(std::abs(z), 0.3, 0.6) * plateau(std::abs(w - cplx(0.1, 0.0)), 0.05, 0.3));
  });
  const auto steps = refine_subdivide(s, form, 4);
  double mass_err = 0.0, defect = 0.0;
  bool diam = steps.size() == 4;
  for (const auto& st : steps) {
    mass_err = std::max(mass_err, std::abs(st.mass - 1.0));
    defect = std::max(defect, st.pairing_defect);
    diam = diam && st.support_diameter <= std::pow(10.0, -st.k);
  }
  return {diam && mass_err <= 1e-10 && defect <= 1e-10,
          "depth 4: diameters " + std::string(diam ? "within" : "NOT within") + " 10^-k, |M - 1| " + fmt(mass_err) +
              ", partition pairing defect " + fmt(defect) + " (<= 1e-10)"};
}

// ---------------------------------------------------------------- pipeline

const std::vector<double> kEps{0.2, 0.1, 0.05};

struct Family {
  std::string name;
  double kappa;
  std::vector<MollifiedLamination> sweep;
  double seconds;
};

Family build_family(const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto loc = localize(HolomorphicMotion::builtin(name, HolomorphicMotion::default_tau()), 0.1);
  PipelineConfig cfg;
  cfg.grid = GridSpec(2.0, 256);
  cfg.kappa = loc.kappa;
  Family f{name, loc.kappa, {}, 0.0};
  for (double eps : kEps) f.sweep.push_back(mollified_lamination(Lamination{taper(loc.motion)}, eps, cfg));
  f.seconds = seconds_since(t0);
  return f;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " > ") + fmt(x);
  return s;
}

Verdict approximation(const Family& shear) {
  const auto t0 = std::chrono::steady_clock::now();
  const AmbientFunction chi = [](cplx, cplx a) { return a.real(); };
  std::vector<double> sup, w1p;
  bool regime = true;
  for (const auto& moll : shear.sweep) {
    const auto e = w1p_error(chi, moll, 4.0, 0.1);
    sup.push_back(e.sup_error);
    w1p.push_back(e.w1p_error);
    regime = regime && e.in_regime;
  }
  const double secs = shear.seconds + seconds_since(t0);
  return {strictly_decreasing(sup) && strictly_decreasing(w1p) && w1p.back() <= 0.1 && regime && secs <= 300.0,
          "kappa " + fmt(shear.kappa) + ", p_max " + fmt(p_max(shear.kappa)) + "; sup " + list(sup) + "; W1,4 " +
              list(w1p) + " (final <= 0.1); " + fmt(secs) + " s (<= 300 s)"};
}

Verdict transversal(const std::vector<const Family*>& families) {
  const auto alphas = default_transversal_alphas();
  const Transversal diag = Transversal::graph([](cplx z) { return z; }, [](cplx) { return cplx(1.0); }, "w = z");
  const Transversal curve = Transversal::graph([](cplx z) { return z + 0.1 * z * z; },
                                               [](cplx z) { return 1.0 + 0.2 * z; }, "w = z + 0.1 z^2");
  double worst_excess = -1.0;
  std::size_t samples = 0;
  for (const Family* f : families)
    for (const auto& moll : f->sweep)
      for (const auto& [d1, d2] : {std::pair{Transversal::vertical(0.0), diag}, std::pair{diag, Transversal::vertical(cplx(-0.2, 0.4))},
                                   std::pair{Transversal::vertical(cplx(0.3, -0.3)), curve}}) {
        const auto r = transversal_dilatation(moll, d1, d2, alphas);
        worst_excess = std::max(worst_excess, r.sup - moll.kappa());
        samples += r.samples;
      }
  return {worst_excess <= 5e-2, std::to_string(samples) + " samples, max(dilatation - kappa) " + fmt(worst_excess) +
                                    " (<= 5e-2)"};
}

Verdict projection(const std::vector<const Family*>& families) {
  bool ok = true;
  std::string detail;
  for (const Family* f : families) {
    std::vector<double> grad;
    double worst_fraction = 1.0, nu = 0.0;
    std::size_t flagged = 0;
    for (const auto& moll : f->sweep) {
      const auto tr = projection_trace(moll, moll.motion().tau()[0]);
      worst_fraction = std::min(worst_fraction, tr.fraction_within(moll.kappa() + 5e-2));
      nu = std::max(nu, tr.nu_sup);
      flagged += tr.flagged_count;
      grad.push_back(tr.gradient_lp(4.0));
    }
    ok = ok && worst_fraction >= 0.99 && strictly_decreasing(grad);
    detail += (detail.empty() ? "" : "; ") + f->name + ": fraction " + fmt(worst_fraction) + " (>= 0.99), nu_sup " +
              fmt(nu) + ", flagged " + std::to_string(flagged) + ", |grad pi|_L4 " + list(grad);
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> known_red;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--known-red" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) known_red.insert(std::stoi(tok));
    } else {
      std::cerr << "usage: acceptance [--known-red i,j,...]\n";
      return 2;
    }
  }

  std::map<std::string, Family> fam;
  auto family = [&](const std::string& name) -> const Family& {
    if (!fam.count(name)) fam.emplace(name, build_family(name));
    return fam.at(name);
  };

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"Beltrami oracle (radial stretch, N = 512)", beltrami_oracle},
      {"Transform oracles (C and B of the disk, N = 512; isometry)", transform_oracles},
      {"Schwarz bound", schwarz},
      {"Harnack-Hoelder estimate", harnack},
      {"Directedness and closedness", directed_closed},
      {"Domination decomposition", domination},
      {"Subdivision refinement", refinement},
      {"Approximation convergence (shear, r = 0.1, N = 256)", [&] { return approximation(family("shear")); }},
      {"Transversal dilatation", [&] { return transversal({&family("shear"), &family("affine")}); }},
      {"Projection trace", [&] { return projection(std::vector<const Family*>{&family("shear"), &family("affine")}); }},
  };

  int unexpected = 0, passed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    passed += v.pass;
    if (!v.pass && !known_red.count(id)) ++unexpected;
    std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[k].first << ": " << v.detail
              << (!v.pass && known_red.count(id) ? "  (known red)" : "") << std::endl;
  }
  std::cout << passed << "/" << criteria.size() << " criteria pass" << std::endl;
  return unexpected == 0 ? 0 : 1;
}
