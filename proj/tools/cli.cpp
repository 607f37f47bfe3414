#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "io.hpp"
#include "qclam/approximation.hpp"
#include "qclam/expr.hpp"

namespace qclam::cli {

namespace fs = std::filesystem;

namespace {

// Flags as given; each command supplies its own defaults for the unset ones.
struct RunConfig {
  std::string command;
  std::vector<std::string> inputs;
  std::optional<int> grid_n, depth;
  std::optional<double> grid_l, tol, p, delta;
  std::optional<std::vector<double>> eps_list;
  std::optional<std::string> z, zp, region, form;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool heatmap = false;
};

// --config keys: command-line flags win over the file
void merge_config(RunConfig& c, const json& j, const std::vector<std::string>& given) {
  require_keys(j, "config", {"input", "grid_n", "grid_l", "tol", "p", "eps_list", "delta", "out", "seed", "z", "zp",
                             "region", "form", "depth", "heatmap"});
  auto set = [&](const char* key) { return j.contains(key) && std::find(given.begin(), given.end(), key) == given.end(); };
  auto num = [&](const char* key) {
    if (!j[key].is_number()) throw SchemaError(std::string("config/") + key, "expected a number");
    return j[key].get<double>();
  };
  auto str = [&](const char* key) {
    if (!j[key].is_string()) throw SchemaError(std::string("config/") + key, "expected a string");
    return j[key].get<std::string>();
  };
  auto integer = [&](const char* key) {
    if (!j[key].is_number_integer()) throw SchemaError(std::string("config/") + key, "expected an integer");
    return j[key].get<std::int64_t>();
  };
  if (set("input")) {
    if (j["input"].is_string()) {
      c.inputs = {j["input"].get<std::string>()};
    } else if (j["input"].is_array() && std::all_of(j["input"].begin(), j["input"].end(), [](const json& x) { return x.is_string(); })) {
      c.inputs = j["input"].get<std::vector<std::string>>();
    } else {
      throw SchemaError("config/input", "expected a path or a list of paths");
    }
  }
  if (set("grid_n")) c.grid_n = static_cast<int>(integer("grid_n"));
  if (set("depth")) c.depth = static_cast<int>(integer("depth"));
  if (set("grid_l")) c.grid_l = num("grid_l");
  if (set("tol")) c.tol = num("tol");
  if (set("p")) c.p = num("p");
  if (set("delta")) c.delta = num("delta");
  if (set("eps_list")) {
    if (!j["eps_list"].is_array() || !std::all_of(j["eps_list"].begin(), j["eps_list"].end(), [](const json& x) { return x.is_number(); }))
      throw SchemaError("config/eps_list", "expected an array of numbers");
    c.eps_list = j["eps_list"].get<std::vector<double>>();
  }
  if (set("out")) c.out = str("out");
  if (set("seed")) {
    if (!j["seed"].is_number_unsigned()) throw SchemaError("config/seed", "expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (set("z")) c.z = str("z");
  if (set("zp")) c.zp = str("zp");
  if (set("region")) c.region = str("region");
  if (set("form")) c.form = str("form");
  if (set("heatmap")) {
    if (!j["heatmap"].is_boolean()) throw SchemaError("config/heatmap", "expected a boolean");
    c.heatmap = j["heatmap"].get<bool>();
  }
}

void require_inputs(const RunConfig& c, std::size_t n, const char* what) {
  if (c.inputs.size() != n) throw ValidationError(c.command + " expects " + what);
}

GridSpec grid_of(const RunConfig& c, int n_default, double l_default) {
  const int n = c.grid_n.value_or(n_default);
  const double l = c.grid_l.value_or(l_default);
  if (!(l > 1.0) || !std::isfinite(l)) throw ValidationError("--grid-l must exceed 1");
  return GridSpec(l, n);
}

double tol_of(const RunConfig& c) {
  const double tol = c.tol.value_or(1e-10);
  if (!(tol > 0.0 && tol < 1.0)) throw ValidationError("--tol must lie in (0, 1)");
  return tol;
}

std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

fs::path prepare_out(const RunConfig& c) {
  fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw ValidationError("cannot create output directory " + out.string());
  return out;
}

// Portable uniform draw in [0, 1) (the standard distributions are not specified bit-for-bit)
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------- beltrami-solve

int cmd_beltrami_solve(const RunConfig& c, std::ostream& out) {
  require_inputs(c, 1, "one input: a CSV path, 'zero' or 'radial-stretch:K=<K>'");
  const GridSpec spec = grid_of(c, 256, 2.0);
  const double tol = tol_of(c);
  const std::string& input = c.inputs[0];

  std::optional<double> stretch;
  std::optional<BeltramiField> mu;
  if (input == "zero") {
    mu = BeltramiField::zero(spec);
  } else if (input.rfind("radial-stretch:K=", 0) == 0) {
    const auto v = parse_list(input.substr(17));
    if (v.size() != 1 || !(v[0] >= 1.0)) throw ValidationError("radial stretch needs a single K >= 1");
    stretch = v[0];
    mu = BeltramiField::radial_stretch(spec, v[0]);
  } else {
    std::ifstream is(input);
    if (!is) throw ValidationError("cannot open " + input);
    ComplexField f = read_csv(is, spec);
    const double sup = sup_norm(f);
    if (!(sup < 1.0)) throw ValidationError("sup|mu| = " + csv_number(sup) + " is not below 1");
    const double rad = std::max(support_radius(f), spec.spacing());
    mu = BeltramiField(std::move(f), sup, rad);
  }
  const fs::path dir = prepare_out(c);

  const QCMap m = principal_solution(*mu, tol);

  json diag{{"input", input},
            {"grid_n", spec.resolution()},
            {"grid_l", spec.half_width()},
            {"tol", tol},
            {"kappa_bound", mu->kappa_bound()},
            {"support_radius", mu->support_radius()},
            {"iterations", m.iterations},
            {"max_iterations", max_iterations(mu->kappa_bound(), tol)},
            {"residual", m.residual}};
  const Eigen::ArrayXXcd w = node_coordinates(spec);
  if (stretch) {
    const double K = *stretch;
    Eigen::ArrayXXcd exact = w;
    for (Index i = 0; i < exact.size(); ++i) {
      const double r = std::abs(w(i));
      if (r < 1.0) exact(i) = w(i) * std::pow(r, K - 1.0);
    }
    diag["oracle"] = {{"closed_form", "w |w|^(K-1) inside the unit disk, w outside"},
                      {"K", K},
                      {"relative_l2_error", std::sqrt((m.h.values() - exact).abs2().sum() / exact.abs2().sum())}};
  }
  std::ostringstream csv;
  write_csv(csv, m.h);
  write_text(dir / "solution.csv", csv.str());
  write_text(dir / "diagnostics.json", dump(diag));
  if (c.heatmap)
    write_pgm(dir / "displacement.pgm", (m.h.values() - w).abs(),
              {{"quantity", "|h(w) - w|"}, {"rows", "Im w ascending"}, {"grid_l", spec.half_width()}});
  out << "beltrami-solve: " << m.iterations << " iterations, residual " << m.residual << "\n";
  return Success;
}

// ---------------------------------------------------------------- motions

json harnack_z_list(const RunConfig& c, std::vector<cplx>& zs) {
  for (cplx z : default_z_samples())
    if (std::abs(z) <= 0.9) zs.push_back(z);
  std::mt19937_64 rng(c.seed);
  for (int k = 0; k < 8; ++k) {
    const double r = 0.9 * std::sqrt(uniform01(rng)), t = 2.0 * std::numbers::pi * uniform01(rng);
    zs.push_back(std::polar(r, t));
  }
  json out = json::array();
  for (cplx z : zs) out.push_back(from_cplx(z));
  return out;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

int cmd_motion_check(const RunConfig& c, std::ostream& out) {
  require_inputs(c, 1, "one motion JSON");
  const MotionSpec ms = parse_motion(load_json(c.inputs[0]));
  std::vector<cplx> zs;
  const json zlist = harnack_z_list(c, zs);
  const fs::path dir = prepare_out(c);

  const MotionReport r = check_motion(ms.motion, zs);
  json rep{{"motion", ms.motion.description()},
           {"global", ms.motion.global()},
           {"tau", json::array()},
           {"seed", c.seed},
           {"passes", r.passes()}};
  for (cplx a : ms.motion.tau()) rep["tau"].push_back(from_cplx(a));
  rep["disjointness"] = {{"passes", r.disjointness.passes},
                         {"min_gap", finite_or_null(r.disjointness.min_gap)},
                         {"alpha", from_cplx(r.disjointness.alpha)},
                         {"beta", from_cplx(r.disjointness.beta)},
                         {"z", from_cplx(r.disjointness.z)}};
  rep["holomorphy"] = {{"passes", r.holomorphy.passes},
                       {"max_dzbar", r.holomorphy.max_dzbar},
                       {"margin", 1e-6 - r.holomorphy.max_dzbar},
                       {"worst_alpha", from_cplx(r.holomorphy.worst_alpha)},
                       {"worst_z", from_cplx(r.holomorphy.worst_z)},
                       {"fit_residual", ms.motion.fit_residual()}};
  rep["boundedness"] = {{"passes", r.boundedness.passes},
                        {"max_modulus", r.boundedness.max_modulus},
                        {"limit", r.boundedness.limit},
                        {"margin", r.boundedness.limit - r.boundedness.max_modulus}};
  if (r.schwarz) {
    json rows = json::array();
    for (const auto& row : r.schwarz->rows)
      rows.push_back({{"z", from_cplx(row.z)}, {"sup_mu", row.sup_mu}, {"margin", row.margin}});
    rep["schwarz"] = {{"passes", r.schwarz->passes}, {"worst_excess", r.schwarz->worst_excess}, {"rows", rows}};
    if (!r.schwarz_failure.empty()) rep["schwarz"]["failure"] = r.schwarz_failure;
  } else {
    rep["schwarz"] = nullptr;  // tabulated motions have no holonomy off tau
  }
  rep["harnack"] = {{"passes", r.harnack_violations == 0},
                    {"checks", r.harnack_checks},
                    {"violations", r.harnack_violations},
                    {"out_of_regime", r.harnack_out_of_regime},
                    {"worst_margin", finite_or_null(r.harnack_worst_margin)},
                    {"z", zlist}};
  write_text(dir / "motion_report.json", dump(rep));
  out << "motion-check: " << (r.passes() ? "all checks pass" : "checks failed") << "\n";
  return r.passes() ? Success : Invalid;
}

int cmd_motion_holonomy(const RunConfig& c, std::ostream& out) {
  require_inputs(c, 1, "one motion JSON");
  const MotionSpec ms = parse_motion(load_json(c.inputs[0]));
  const cplx z = c.z ? parse_cplx(*c.z) : cplx{};
  const cplx zp = c.zp ? parse_cplx(*c.zp) : cplx(0.5);
  if (!(std::abs(z) < 1.0 && std::abs(zp) < 1.0)) throw ValidationError("--z and --zp must lie in the unit disk");
  const int n = c.grid_n.value_or(41);
  const double l = c.grid_l.value_or(1.0);
  if (n < 4 || n > 2001) throw ValidationError("--grid-n must lie in [4, 2001] for a fiber grid");
  if (!(l > 0.0) || !std::isfinite(l)) throw ValidationError("--grid-l must be positive");
  std::optional<FiberGrid> grid;
  if (ms.motion.global()) grid = FiberGrid{l, n};
  const fs::path dir = prepare_out(c);

  const HolonomyMap h = holonomy(ms.motion, z, zp, grid);
  json rep{{"motion", ms.motion.description()}, {"source", from_cplx(z)}, {"target", from_cplx(zp)}, {"tau_pairs", json::array()}};
  for (const auto& [a, b] : h.tau_pairs()) rep["tau_pairs"].push_back({{"from", from_cplx(a)}, {"to", from_cplx(b)}});
  if (grid) {
    rep["grid"] = {{"radius", grid->radius}, {"n", grid->n}, {"table", "holonomy.csv"}};
    std::ostringstream csv;
    csv << "w_re,w_im,h_re,h_im\n";
    Eigen::ArrayXXd disp(n, n);
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col) {
        const cplx w = grid->point(r, col), v = h.table()(r, col);
        csv << csv_number(w.real()) << ',' << csv_number(w.imag()) << ',' << csv_number(v.real()) << ','
            << csv_number(v.imag()) << '\n';
        disp(r, col) = std::abs(v - w);
      }
    write_text(dir / "holonomy.csv", csv.str());
    if (c.heatmap) write_pgm(dir / "holonomy.pgm", disp, {{"quantity", "|h(w) - w|"}, {"rows", "Im w ascending"}});
  } else {
    rep["grid"] = nullptr;
  }
  write_text(dir / "holonomy.json", dump(rep));
  out << "motion-holonomy: " << h.tau_pairs().size() << " tau images" << (grid ? " and fiber grid table" : "") << "\n";
  return Success;
}

// ---------------------------------------------------------------- currents

int cmd_current_mass(const RunConfig& c, std::ostream& out) {
  require_inputs(c, 1, "one current JSON");
  const WeightedCurrent s = parse_current(load_json(c.inputs[0]));
  Disk region;
  if (c.region) {
    const auto v = parse_list(*c.region);
    if (v.size() != 3 || !(v[2] > 0.0)) throw ValidationError("--region expects 'cx,cy,radius' with radius > 0");
    region = Disk{cplx(v[0], v[1]), v[2]};
  }
  const fs::path dir = prepare_out(c);
  const double m = mass(s, region);
  write_text(dir / "mass.json",
             dump({{"mass", m}, {"region", {{"center", from_cplx(region.center)}, {"radius", region.radius}}}}));
  out << "current-mass: " << std::setprecision(17) << m << "\n";
  return Success;
}

int cmd_current_residuals(const RunConfig& c, std::ostream& out) {
  require_inputs(c, 1, "one current JSON");
  const WeightedCurrent s = parse_current(load_json(c.inputs[0]));
  const int n = c.grid_n.value_or(201);
  if (n < 5 || n > 4001) throw ValidationError("--grid-n must lie in [5, 4001] for the closedness grid");
  const fs::path dir = prepare_out(c);
  const auto forms = default_form_dictionary();
  const double directed = directedness_residual(s);
  const double closed = closedness_residual(s, forms, n);
  write_text(dir / "residuals.json",
             dump({{"directedness", directed}, {"closedness", closed}, {"forms", forms.size()}, {"grid_n", n}}));
  out << "current-residuals: directedness " << directed << ", closedness " << closed << "\n";
  return Success;
}

LaminarCurrent plain_current(const WeightedCurrent& s, const std::string& name) {
  if (s.has_density()) throw ValidationError(name + ": decomposition needs a per-leaf density table, not a formula");
  if (!s.base().rogue().empty()) throw ValidationError(name + ": decomposition works on leaves of the lamination only");
  return s.base();
}

int cmd_current_decompose(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_inputs(c, 2, "two current JSONs: S then T");
  const LaminarCurrent s = plain_current(parse_current(load_json(c.inputs[0]), "S"), "S");
  const LaminarCurrent t = plain_current(parse_current(load_json(c.inputs[1]), "T"), "T");
  const fs::path dir = prepare_out(c);
  try {
    const LeafDensity f = radon_nikodym(s, t);
    json rep{{"tau", json::array()}, {"numerator", f.numerator}, {"denominator", f.denominator}, {"density", json::array()}};
    std::ostringstream csv;
    csv << "alpha_re,alpha_im,numerator,denominator,density\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
      const cplx a = t.tau()[i];
      rep["tau"].push_back(from_cplx(a));
      rep["density"].push_back(f[i]);
      csv << csv_number(a.real()) << ',' << csv_number(a.imag()) << ',' << csv_number(f.numerator[i]) << ','
          << csv_number(f.denominator[i]) << ',' << csv_number(f[i]) << '\n';
    }
    write_text(dir / "decomposition.json", dump(rep));
    write_text(dir / "density.csv", csv.str());
    out << "current-decompose: " << f.size() << " leaf densities\n";
    return Success;
  } catch (const DominationError& e) {
    write_text(dir / "witness.json",
               dump({{"dominated", false}, {"leaf", e.leaf()}, {"alpha", from_cplx(e.alpha())}, {"message", e.what()}}));
    err << "current-decompose: " << e.what() << "\n";
    return Invalid;
  }
}

int cmd_current_refine(const RunConfig& c, std::ostream& out) {
  require_inputs(c, 1, "one current JSON");
  const WeightedCurrent s = parse_current(load_json(c.inputs[0]));
  const TestForm form = c.form ? parse_form(load_json(*c.form)) : default_refine_form();
  const int depth = c.depth.value_or(3);
  if (depth < 1 || depth > 8) throw ValidationError("--depth must lie in [1, 8]");
  const fs::path dir = prepare_out(c);

  const auto steps = refine_subdivide(s, form, depth);
  std::ostringstream csv;
  write_refinement_csv(csv, steps);
  json rows = json::array();
  for (const auto& st : steps)
    rows.push_back({{"k", st.k},
                    {"center", from_cplx(st.center)},
                    {"ball_diameter", st.ball_diameter},
                    {"support_diameter", st.support_diameter},
                    {"mass", st.mass},
                    {"pairing", st.pairing},
                    {"partition_defect", st.partition_defect},
                    {"pairing_defect", st.pairing_defect},
                    {"pieces", st.pieces}});
  write_text(dir / "refine.csv", csv.str());
  write_text(dir / "refine.json", dump({{"depth", depth}, {"steps", rows}}));
  out << "current-refine: " << steps.size() << " steps, final support diameter " << steps.back().support_diameter << "\n";
  return Success;
}

// ---------------------------------------------------------------- approximation

struct ApproxSpec {
  MotionSpec motion;
  Expr function;
  cplx beta;
  int z_grid_n = 91;
};

ApproxSpec parse_approx(const json& j) {
  require_keys(j, "approx", {"motion", "function", "beta", "z_grid_n"});
  if (!j.contains("motion")) throw SchemaError("approx", "missing 'motion'");
  if (!j.contains("function") || !j["function"].is_string())
    throw SchemaError("approx/function", "expected a formula in z and alpha");
  MotionSpec ms = parse_motion(j["motion"], "approx/motion");
  if (!ms.motion.global()) throw SchemaError("approx/motion", "the pipeline needs a global motion");
  Expr f = [&] {
    try {
      return parse(j["function"].get<std::string>());
    } catch (const ValidationError& e) {
      throw SchemaError("approx/function", e.what());
    }
  }();
  for (cplx a : ms.motion.tau())
    for (cplx z : default_z_samples()) try {
        (void)eval(f, a, z);
      } catch (const EvaluationError& e) {
        throw SchemaError("approx/function", e.what());
      }
  const cplx beta = j.contains("beta") ? to_cplx(j["beta"], "approx/beta") : ms.motion.tau().front();
  int n = 91;
  if (j.contains("z_grid_n")) {
    if (!j["z_grid_n"].is_number_integer()) throw SchemaError("approx/z_grid_n", "expected an integer");
    n = j["z_grid_n"].get<int>();
    if (n < 11 || n > 1001) throw SchemaError("approx/z_grid_n", "must lie in [11, 1001]");
  }
  return {std::move(ms), std::move(f), beta, n};
}

int cmd_approx_run(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_inputs(c, 1, "one approximation JSON {motion, function}");
  const ApproxSpec spec = parse_approx(load_json(c.inputs[0]));
  PipelineConfig cfg;
  cfg.grid = grid_of(c, 256, 2.0);
  cfg.tol = tol_of(c);
  cfg.kappa = spec.motion.kappa;
  const double p = c.p.value_or(4.0), delta = c.delta.value_or(0.1);
  if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("--p must exceed 1");
  if (!(delta >= 0.0 && delta < 1.0)) throw ValidationError("--delta must lie in [0, 1)");
  const auto eps = c.eps_list.value_or(std::vector<double>{0.2, 0.1, 0.05});
  if (eps.empty()) throw ValidationError("--eps-list is empty");
  for (double e : eps)
    if (!(e > 0.0 && e < cfg.grid.half_width() - 1.0))
      throw ValidationError("every epsilon must lie in (0, grid-l - 1); got " + csv_number(e));
  if (std::abs(spec.beta) >= cfg.grid.half_width() - 1.0) throw ValidationError("beta lies outside the grid");
  const fs::path dir = prepare_out(c);

  const Expr fexpr = spec.function;
  const AmbientFunction F = [fexpr](cplx z, cplx a) { return eval(fexpr, a, z).real(); };
  const Lamination lam{spec.motion.motion};
  const ZGrid zg{1.0, spec.z_grid_n};

  std::ostringstream table;
  table << "epsilon,sup_error,w1p_error,nu_sup,flagged_points,grad_pi_lp,leaf_deviation,in_regime\n";
  bool warned = false;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const MollifiedLamination moll = mollified_lamination(lam, eps[k], cfg);
    const ApproximationError e = w1p_error(F, moll, p, delta, zg);
    const ProjectionTrace tr = projection_trace(moll, spec.beta, zg, 1.0 - delta);
    const double dev = leaf_deviation(moll, lam.motion.tau());
    const double grad = tr.gradient_lp(p);

    json rep{{"epsilon", eps[k]},
             {"kappa", moll.kappa()},
             {"p", p},
             {"p_max", finite_or_null(e.p_max)},
             {"in_regime", e.in_regime},
             {"delta", delta},
             {"sup_error", e.sup_error},
             {"w1p_error", e.w1p_error},
             {"w1p_error_per_leaf", e.w1p_error_per_leaf},
             {"nu_sup", tr.nu_sup},
             {"flagged_points", tr.flagged_count},
             {"samples", tr.samples},
             {"beta", from_cplx(spec.beta)},
             {"grad_pi_lp", grad},
             {"leaf_deviation", dev},
             {"fibers", moll.fibers()},
             {"sup_mu", moll.sup_mu()},
             {"sup_mu_eps", moll.sup_mu_eps()},
             {"max_iterations", moll.max_iterations()},
             {"max_residual", moll.max_residual()},
             {"warnings", json::array()}};
    if (!e.in_regime) rep["warnings"].push_back("p >= p_max(kappa): outside the regime of the approximation theorem");
    std::ostringstream name;
    name << std::setw(2) << std::setfill('0') << k;
    write_text(dir / ("report_" + name.str() + ".json"), dump(rep));

    const auto& tau = e.difference.tau();
    const int n = zg.n;
    Eigen::ArrayXXd img(n, n * static_cast<Index>(tau.size()));
    for (std::size_t i = 0; i < tau.size(); ++i) img.middleCols(static_cast<Index>(i) * n, n) = e.difference.values(i).abs();
    json tiles = json::array();
    for (cplx a : tau) tiles.push_back(from_cplx(a));
    write_pgm(dir / ("heatmap_" + name.str() + ".pgm"), img,
              {{"quantity", "|f_eps - f| on the leaves"},
               {"epsilon", eps[k]},
               {"layout", "one n x n tile per tau point, left to right; rows Im z ascending"},
               {"z_grid", {{"radius", zg.radius}, {"n", n}}},
               {"tiles", tiles}});

    table << csv_number(eps[k]) << ',' << csv_number(e.sup_error) << ',' << csv_number(e.w1p_error) << ','
          << csv_number(tr.nu_sup) << ',' << tr.flagged_count << ',' << csv_number(grad) << ',' << csv_number(dev) << ','
          << (e.in_regime ? 1 : 0) << '\n';
    out << "approx-run: eps " << eps[k] << " sup " << e.sup_error << " W1p " << e.w1p_error << "\n";
    if (!e.in_regime && !warned) {
      err << "warning: p = " << p << " >= p_max(kappa) = " << e.p_max << "; runs are tagged out of regime\n";
      warned = true;
    }
  }
  write_text(dir / "convergence.csv", table.str());
  return Success;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quasiconformal holonomy and laminar current toolkit", "qclam"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path;
  std::string eps_text;
  int grid_n = 0, depth = 0;
  double grid_l = 0, tol = 0, p = 0, delta = 0;
  std::string z, zp, region, form;

  struct Sub {
    const char* name;
    const char* help;
  };
  const std::vector<Sub> subs = {
      {"beltrami-solve", "principal solution of a Beltrami equation"},
      {"motion-check", "disjointness, holomorphy, Schwarz and Harnack checks of a motion"},
      {"motion-holonomy", "holonomy map between two fibers"},
      {"current-mass", "mass of a laminar current"},
      {"current-residuals", "directedness and closedness residuals"},
      {"current-decompose", "leafwise density of S with respect to T"},
      {"current-refine", "subdivision refinement against a test form"},
      {"approx-run", "mollified approximation sweep over epsilon"},
  };
  struct Flag {
    std::string command, key;
    CLI::Option* opt;
  };
  std::vector<Flag> flags;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("input", cfg.inputs, "input files (or a built-in name)");
    sub->add_option("--config", config_path, "JSON file with any of the flags below");
    flags.push_back(Flag{s.name, "grid_n", sub->add_option("--grid-n", grid_n, "grid resolution")});
    flags.push_back(Flag{s.name, "grid_l", sub->add_option("--grid-l", grid_l, "grid half width")});
    flags.push_back(Flag{s.name, "tol", sub->add_option("--tol", tol, "solver tolerance")});
    flags.push_back(Flag{s.name, "p", sub->add_option("--p", p, "Sobolev exponent")});
    flags.push_back(Flag{s.name, "eps_list", sub->add_option("--eps-list", eps_text, "comma-separated mollifier radii")});
    flags.push_back(Flag{s.name, "delta", sub->add_option("--delta", delta, "boundary margin")});
    flags.push_back(Flag{s.name, "out", sub->add_option("--out", cfg.out, "output directory")});
    flags.push_back(Flag{s.name, "seed", sub->add_option("--seed", cfg.seed, "seed for pseudorandom samples")});
    flags.push_back(Flag{s.name, "heatmap", sub->add_flag("--heatmap", cfg.heatmap, "also write PGM heatmaps")});
    if (std::string(s.name) == "motion-holonomy") {
      flags.push_back(Flag{s.name, "z", sub->add_option("--z", z, "source fiber 're,im'")});
      flags.push_back(Flag{s.name, "zp", sub->add_option("--zp", zp, "target fiber 're,im'")});
    }
    if (std::string(s.name) == "current-mass")
      flags.push_back(Flag{s.name, "region", sub->add_option("--region", region, "disk 'cx,cy,radius'")});
    if (std::string(s.name) == "current-refine") {
      flags.push_back(Flag{s.name, "form", sub->add_option("--form", form, "test form JSON")});
      flags.push_back(Flag{s.name, "depth", sub->add_option("--depth", depth, "number of refinement steps")});
    }
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Success : Invalid;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    std::vector<std::string> given;
    for (const auto& [command, key, opt] : flags) {
      if (command != cfg.command || opt->count() == 0) continue;
      given.push_back(key);
      if (key == "grid_n") cfg.grid_n = grid_n;
      if (key == "grid_l") cfg.grid_l = grid_l;
      if (key == "tol") cfg.tol = tol;
      if (key == "p") cfg.p = p;
      if (key == "delta") cfg.delta = delta;
      if (key == "eps_list") cfg.eps_list = parse_list(eps_text);
      if (key == "z") cfg.z = z;
      if (key == "zp") cfg.zp = zp;
      if (key == "region") cfg.region = region;
      if (key == "form") cfg.form = form;
      if (key == "depth") cfg.depth = depth;
    }
    if (!cfg.inputs.empty()) given.emplace_back("input");
    if (!config_path.empty()) merge_config(cfg, load_json(config_path), given);

    const std::string& cmd = cfg.command;
    if (cmd == "beltrami-solve") return cmd_beltrami_solve(cfg, out);
    if (cmd == "motion-check") return cmd_motion_check(cfg, out);
    if (cmd == "motion-holonomy") return cmd_motion_holonomy(cfg, out);
    if (cmd == "current-mass") return cmd_current_mass(cfg, out);
    if (cmd == "current-residuals") return cmd_current_residuals(cfg, out);
    if (cmd == "current-decompose") return cmd_current_decompose(cfg, out, err);
    if (cmd == "current-refine") return cmd_current_refine(cfg, out);
    if (cmd == "approx-run") return cmd_approx_run(cfg, out, err);
    throw ValidationError("unknown command " + cmd);
  } catch (const ValidationError& e) {
    err << cfg.command << ": invalid input: " << e.what() << "\n";
    return Invalid;
  } catch (const NumericalError& e) {
    err << cfg.command << ": numerical failure: " << e.what() << " (last residual " << e.last_residual() << ")\n";
    return NumericalFailure;
  } catch (const DegeneratePointError& e) {
    err << cfg.command << ": numerical failure: " << e.what() << " at " << e.where() << "\n";
    return NumericalFailure;
  } catch (const std::exception& e) {
    // DomainError, EvaluationError, ...
    err << cfg.command << ": numerical failure: " << e.what() << "\n";
    return NumericalFailure;
  }
}

}  // namespace qclam::cli
