#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qclam/approximation.hpp"
#include "qclam/expr.hpp"

namespace qclam::cli {

namespace {

double to_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw SchemaError(where, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw SchemaError(where, "expected a finite number");
  return x;
}

std::vector<cplx> to_cplx_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where, "expected an array of complex numbers");
  std::vector<cplx> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(to_cplx(j[i], where + "/" + std::to_string(i)));
  return out;
}

std::vector<double> to_number_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(to_number(j[i], where + "/" + std::to_string(i)));
  return out;
}

Expr to_expr(const json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where, "expected a formula string");
  try {
    return parse(j.get<std::string>());
  } catch (const ValidationError& e) {
    throw SchemaError(where, e.what());
  }
}

// 4th-order central difference along the real axis; exact enough for holomorphic graphs
cplx holomorphic_derivative(const Expr& e, cplx z) {
  const double h = 1e-3;
  auto f = [&](cplx t) { return eval(e, 0.0, t); };
  return (-f(z + 2 * h) + 8.0 * f(z + h) - 8.0 * f(z - h) + f(z - 2 * h)) / (12 * h);
}

}  // namespace

json load_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void require_keys(const json& j, const std::string& where, const std::vector<std::string>& allowed) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  for (const auto& [k, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) throw SchemaError(where, "unknown key '" + k + "'");
}

cplx to_cplx(const json& j, const std::string& where) {
  if (j.is_number()) return to_number(j, where);
  if (j.is_array() && j.size() == 2) return {to_number(j[0], where + "/0"), to_number(j[1], where + "/1")};
  throw SchemaError(where, "expected a number or a pair [re, im]");
}

json from_cplx(cplx c) { return json::array({c.real(), c.imag()}); }

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t end = std::min(s.find(',', pos), s.size());
    std::string tok = s.substr(pos, end - pos);
    tok.erase(0, tok.find_first_not_of(' '));
    tok.erase(tok.find_last_not_of(' ') + 1);
    double x = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(x))
      throw ValidationError("malformed number '" + tok + "' in '" + s + "'");
    out.push_back(x);
    pos = end + 1;
  }
  return out;
}

cplx parse_cplx(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() > 2) throw ValidationError("expected 're' or 're,im', got '" + s + "'");
  return v.size() == 1 ? cplx(v[0]) : cplx(v[0], v[1]);
}

MotionSpec parse_motion(const json& j, const std::string& where, const std::optional<std::vector<cplx>>& tau_given) {
  require_keys(j, where, {"formula", "leaves", "builtin", "tau", "epsilon_bound", "global", "localize", "taper"});
  const int kinds = static_cast<int>(j.contains("formula")) + j.contains("leaves") + j.contains("builtin");
  if (kinds != 1) throw SchemaError(where, "exactly one of 'formula', 'leaves', 'builtin' is required");

  std::vector<cplx> tau;
  if (tau_given) {
    if (j.contains("tau")) throw SchemaError(where + "/tau", "tau is given by the enclosing object");
    tau = *tau_given;
  } else {
    if (!j.contains("tau")) throw SchemaError(where, "missing 'tau'");
    tau = to_cplx_list(j["tau"], where + "/tau");
  }
  if (tau.empty()) throw SchemaError(where + "/tau", "tau must be nonempty");

  const double eps = j.contains("epsilon_bound") ? to_number(j["epsilon_bound"], where + "/epsilon_bound") : 0.1;
  if (!(eps >= 0.0 && eps < 1.0)) throw SchemaError(where + "/epsilon_bound", "must lie in [0, 1)");
  std::optional<bool> global;
  if (j.contains("global")) {
    if (!j["global"].is_boolean()) throw SchemaError(where + "/global", "expected a boolean");
    global = j["global"].get<bool>();
  }

  std::optional<HolomorphicMotion> m;
  if (j.contains("formula")) {
    (void)to_expr(j["formula"], where + "/formula");
    m = HolomorphicMotion::from_formula(j["formula"].get<std::string>(), tau, eps, global.value_or(true));
  } else if (j.contains("builtin")) {
    if (!j["builtin"].is_string()) throw SchemaError(where + "/builtin", "expected a name");
    const auto name = j["builtin"].get<std::string>();
    const auto names = HolomorphicMotion::builtin_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw SchemaError(where + "/builtin", "unknown family '" + name + "'");
    if (global == false) throw SchemaError(where + "/global", "built-in families are global");
    m = HolomorphicMotion::builtin(name, tau, eps);
  } else {
    if (global == true) throw SchemaError(where + "/global", "tabulated motions are never global");
    const json& L = j["leaves"];
    const std::string lw = where + "/leaves";
    if (!L.is_array() || L.size() != tau.size()) throw SchemaError(lw, "expected one sample list per tau point");
    std::vector<std::vector<std::pair<cplx, cplx>>> leaves;
    for (std::size_t i = 0; i < L.size(); ++i) {
      const std::string li = lw + "/" + std::to_string(i);
      if (!L[i].is_array() || L[i].empty()) throw SchemaError(li, "expected a nonempty list of [z, w] samples");
      auto& leaf = leaves.emplace_back();
      for (std::size_t k = 0; k < L[i].size(); ++k) {
        const std::string lk = li + "/" + std::to_string(k);
        if (!L[i][k].is_array() || L[i][k].size() != 2) throw SchemaError(lk, "expected a sample [z, w]");
        leaf.emplace_back(to_cplx(L[i][k][0], lk + "/0"), to_cplx(L[i][k][1], lk + "/1"));
      }
    }
    m = HolomorphicMotion::from_leaves(leaves, tau, eps);
  }

  MotionSpec out{*m, std::nullopt};
  if (j.contains("localize")) {
    const double r = to_number(j["localize"], where + "/localize");
    if (!out.motion.global()) throw SchemaError(where + "/localize", "only global motions can be localized");
    if (!(r > 0.0 && r < 1.0)) throw SchemaError(where + "/localize", "must lie in (0, 1)");
    auto loc = localize(out.motion, r);
    out = MotionSpec{std::move(loc.motion), loc.kappa};
  }
  if (j.contains("taper")) {
    const json& t = j["taper"];
    const std::string tw = where + "/taper";
    double r0 = 0.3, width = 0.1;
    bool on = true;
    if (t.is_boolean()) {
      on = t.get<bool>();
    } else {
      require_keys(t, tw, {"r0", "width"});
      if (t.contains("r0")) r0 = to_number(t["r0"], tw + "/r0");
      if (t.contains("width")) width = to_number(t["width"], tw + "/width");
    }
    if (on) {
      if (!out.motion.global()) throw SchemaError(tw, "only global motions can be tapered");
      if (!(width > 0.0 && r0 >= 0.5 * width)) throw SchemaError(tw, "needs width > 0 and r0 >= width/2");
      out.motion = taper(out.motion, r0, width);
    }
  }
  return out;
}

WeightedCurrent parse_current(const json& j, const std::string& where) {
  require_keys(j, where, {"motion", "tau", "weights", "density", "rogue", "p"});
  if (!j.contains("tau")) throw SchemaError(where, "missing 'tau'");
  if (!j.contains("weights")) throw SchemaError(where, "missing 'weights'");
  const auto tau = to_cplx_list(j["tau"], where + "/tau");
  auto weights = to_number_list(j["weights"], where + "/weights");
  if (weights.size() != tau.size()) throw SchemaError(where + "/weights", "expected one weight per tau point");
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (weights[i] < 0.0) throw SchemaError(where + "/weights/" + std::to_string(i), "weights must be nonnegative");

  const json motion = j.contains("motion") ? j["motion"] : json{{"builtin", "horizontal"}};
  if (tau.empty()) throw SchemaError(where + "/tau", "tau must be nonempty");
  Lamination lam{parse_motion(motion, where + "/motion", tau).motion};

  std::vector<GraphLeaf> rogue;
  if (j.contains("rogue")) {
    const json& R = j["rogue"];
    if (!R.is_array()) throw SchemaError(where + "/rogue", "expected an array");
    for (std::size_t i = 0; i < R.size(); ++i) {
      const std::string rw = where + "/rogue/" + std::to_string(i);
      require_keys(R[i], rw, {"label", "formula", "weight"});
      if (!R[i].contains("formula")) throw SchemaError(rw, "missing 'formula'");
      const Expr e = to_expr(R[i]["formula"], rw + "/formula");
      GraphLeaf g;
      g.label = R[i].value("label", print(e));
      g.phi = [e](cplx z) { return eval(e, 0.0, z); };
      g.dphi = [e](cplx z) { return holomorphic_derivative(e, z); };
      if (R[i].contains("weight")) g.weight = to_number(R[i]["weight"], rw + "/weight");
      if (g.weight < 0.0) throw SchemaError(rw + "/weight", "must be nonnegative");
      try {
        for (cplx z : default_z_samples()) (void)g.dphi(z);
      } catch (const EvaluationError& ex) {
        throw SchemaError(rw + "/formula", ex.what());
      }
      rogue.push_back(std::move(g));
    }
  }

  double p = 2.0;
  if (j.contains("p")) p = to_number(j["p"], where + "/p");
  if (!(p > 1.0)) throw SchemaError(where + "/p", "must exceed 1");

  AmbientFunction density;
  if (j.contains("density")) {
    const json& d = j["density"];
    const std::string dw = where + "/density";
    if (d.is_array()) {
      const auto table = to_number_list(d, dw);
      if (table.size() != tau.size()) throw SchemaError(dw, "expected one value per tau point");
      for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i] < 0.0) throw SchemaError(dw + "/" + std::to_string(i), "densities must be nonnegative");
        weights[i] *= table[i];
      }
    } else {
      const Expr e = to_expr(d, dw);
      // validated on every leaf before use
      for (cplx a : tau)
        for (cplx z : default_z_samples()) {
          double v = 0.0;
          try {
            v = eval(e, a, z).real();
          } catch (const EvaluationError& ex) {
            throw SchemaError(dw, ex.what());
          }
          if (!(v >= 0.0)) throw SchemaError(dw, "density is negative or undefined on a leaf");
        }
      density = [e](cplx z, cplx a) { return std::max(0.0, eval(e, a, z).real()); };
    }
  }
  return WeightedCurrent(LaminarCurrent(std::move(lam), std::move(weights), std::move(rogue)), density, p);
}

TestForm parse_form(const json& j, const std::string& where) {
  require_keys(j, where, {"bumps", "z_radius", "support"});
  const double support = j.contains("support") ? to_number(j["support"], where + "/support") : 0.9;
  if (!(support > 0.0 && support <= 1.0)) throw SchemaError(where + "/support", "must lie in (0, 1]");
  const double zr = j.contains("z_radius") ? to_number(j["z_radius"], where + "/z_radius") : 0.85;
  if (!(zr > 0.0 && zr <= support)) throw SchemaError(where + "/z_radius", "must lie in (0, support]");
  if (!j.contains("bumps") || !j["bumps"].is_array() || j["bumps"].empty())
    throw SchemaError(where + "/bumps", "expected a nonempty array");
  struct Bump {
    cplx c;
    double r, w;
  };
  std::vector<Bump> bumps;
  for (std::size_t i = 0; i < j["bumps"].size(); ++i) {
    const json& b = j["bumps"][i];
    const std::string bw = where + "/bumps/" + std::to_string(i);
    require_keys(b, bw, {"center", "radius", "weight"});
    Bump k{b.contains("center") ? to_cplx(b["center"], bw + "/center") : cplx{},
           b.contains("radius") ? to_number(b["radius"], bw + "/radius") : 0.85,
           b.contains("weight") ? to_number(b["weight"], bw + "/weight") : 1.0};
    if (!(k.r > 0.0)) throw SchemaError(bw + "/radius", "must be positive");
    if (std::abs(k.c) + k.r > support + 1e-12) throw SchemaError(bw, "bump reaches beyond the declared support");
    bumps.push_back(k);
  }
  auto psi = [bumps, zr](cplx z, cplx w) -> cplx {
    const double pz = plateau(std::abs(z), 0.5 * zr, zr);
    if (pz == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& b : bumps) acc += b.w * plateau(std::abs(w - b.c), 0.5 * b.r, b.r);
    return pz * acc;
  };
  return TestForm::two(psi, psi, support);
}

TestForm default_refine_form() { return parse_form(json{{"bumps", json::array({json::object()})}}); }

void write_pgm(const std::filesystem::path& path, const Eigen::ArrayXXd& values, json meta) {
  if (values.size() == 0 || !values.allFinite()) throw ValidationError("heatmap needs finite values");
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  std::string bytes = "P5\n" + std::to_string(values.cols()) + " " + std::to_string(values.rows()) + "\n255\n";
  for (Index r = 0; r < values.rows(); ++r)
    for (Index c = 0; c < values.cols(); ++c) {
      const double t = hi > lo ? (values(r, c) - lo) / (hi - lo) : 0.0;
      bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
  write_text(path, bytes);
  meta["image"] = path.filename().string();
  meta["width"] = values.cols();
  meta["height"] = values.rows();
  meta["maxval"] = 255;
  meta["scaling"] = "linear";
  meta["min"] = lo;  // pixel 0
  meta["max"] = hi;  // pixel 255
  auto side = path;
  write_text(side.replace_extension(".json"), dump(meta));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ValidationError("cannot write " + path.string());
  os << text;
  if (!os) throw ValidationError("failed writing " + path.string());
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace qclam::cli
