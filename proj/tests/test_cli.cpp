#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "io.hpp"

namespace fs = std::filesystem;
using qclam::cli::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = qclam::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(QCLAM_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path put(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST_CASE("beltrami-solve: zero, radial stretch, malformed CSV") {
  const fs::path d = scratch("beltrami");
  auto r = cli({"beltrami-solve", "zero", "--grid-n", "64", "--out", (d / "zero").string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(d / "zero/diagnostics.json")["residual"].get<double>() <= 1e-12);
  // the solution grid is the identity
  std::ifstream is(d / "zero/solution.csv");
  const auto h = qclam::read_csv(is, qclam::GridSpec(2.0, 64));
  CHECK((h.values() - qclam::node_coordinates(h.spec())).abs().maxCoeff() <= 1e-12);

  r = cli({"beltrami-solve", "radial-stretch:K=2", "--grid-n", "512", "--heatmap", "--out", (d / "rs").string()});
  REQUIRE(r.code == 0);
  const json diag = read_json(d / "rs/diagnostics.json");
  CHECK(diag["oracle"]["relative_l2_error"].get<double>() <= 1e-2);
  CHECK(fs::exists(d / "rs/displacement.pgm"));

  std::string rows;
  for (int k = 0; k < 64; ++k) {
    std::string row;
    for (int c = 0; c < 64; ++c) row += std::string(c ? "," : "") + (k == 6 && c == 3 ? "0,x" : "0,0");
    rows += row + "\n";
  }
  const auto bad = put(d / "bad.csv", rows);
  r = cli({"beltrami-solve", bad.string(), "--grid-n", "64", "--out", (d / "bad").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 7") != std::string::npos);
  CHECK_FALSE(fs::exists(d / "bad/solution.csv"));  // nothing written before validation passes

  CHECK(cli({"beltrami-solve", "radial-stretch:K=0.5", "--out", (d / "x").string()}).code == 1);
  CHECK(cli({"beltrami-solve", "zero", "--tol", "-1"}).code == 1);
  CHECK(cli({"beltrami-solve", "zero", "--grid-n", "100"}).code == 1);
}

TEST_CASE("motion-check report and exit codes") {
  const fs::path d = scratch("motion");
  auto m1 = put(d / "shear.json", R"J({"formula": "alpha + z*conj(alpha)", "tau": [0.3, [0, 0.1]]})J");
  auto r = cli({"motion-check", m1.string(), "--out", (d / "shear").string()});
  CHECK(r.code == 0);
  const json rep = read_json(d / "shear/motion_report.json");
  CHECK(rep["passes"] == true);
  for (const auto& row : rep["schwarz"]["rows"]) CHECK(std::abs(row["margin"].get<double>()) <= 1e-6);
  CHECK(rep["harnack"]["violations"] == 0);

  auto dup = put(d / "dup.json", R"J({"formula": "alpha + z*conj(alpha)", "tau": [0.1, 0.1]})J");
  r = cli({"motion-check", dup.string(), "--out", (d / "dup").string()});
  CHECK(r.code != 0);
  CHECK(read_json(d / "dup/motion_report.json")["disjointness"]["passes"] == false);

  auto conj = put(d / "conj.json", R"J({"formula": "conj(z)", "tau": [0.3, 0.1]})J");
  r = cli({"motion-check", conj.string(), "--out", (d / "conj").string()});
  CHECK(r.code != 0);
  CHECK(read_json(d / "conj/motion_report.json")["holomorphy"]["passes"] == false);

  auto bad = put(d / "bad.json", R"J({"formula": "alpha", "tau": [0.1], "colour": 1})J");
  r = cli({"motion-check", bad.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("colour") != std::string::npos);
  CHECK(cli({"motion-check", put(d / "p.json", R"J({"formula": "alpha +", "tau": [0.1]})J").string()}).code == 1);
  CHECK(cli({"motion-check", (d / "missing.json").string()}).code == 1);

  // tabulated leaves: samples of alpha (1 + z/2)
  json leaves = json::array();
  for (double a : {0.1, 0.2}) {
    json leaf = json::array();
    for (int k = 0; k < 20; ++k) {
      const qclam::cplx z = std::polar(0.9 * (k % 5) / 4.0, 0.7 * k);
      const qclam::cplx w = a * (1.0 + z / 2.0);
      leaf.push_back({qclam::cli::from_cplx(z), qclam::cli::from_cplx(w)});
    }
    leaves.push_back(leaf);
  }
  auto tab = put(d / "tab.json", json{{"leaves", leaves}, {"tau", {0.1, 0.2}}}.dump());
  r = cli({"motion-check", tab.string(), "--out", (d / "tab").string()});
  CHECK(r.code == 0);
  CHECK(read_json(d / "tab/motion_report.json")["schwarz"].is_null());
}

TEST_CASE("motion-holonomy tables") {
  const fs::path d = scratch("holonomy");
  auto m = put(d / "affine.json", R"J({"builtin": "affine", "tau": [0.1, 0.2]})J");
  auto r = cli({"motion-holonomy", m.string(), "--z", "0", "--zp", "0.5", "--grid-n", "11", "--out", d.string()});
  REQUIRE(r.code == 0);
  const json rep = read_json(d / "holonomy.json");
  CHECK(rep["tau_pairs"].size() == 2);
  // affine: h_{0, 1/2}(w) = 1.25 w
  CHECK(rep["tau_pairs"][1]["to"][0].get<double>() == doctest::Approx(0.25));
  std::ifstream is(d / "holonomy.csv");
  std::string line;
  std::getline(is, line);
  CHECK(line == "w_re,w_im,h_re,h_im");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 121);
  CHECK(cli({"motion-holonomy", m.string(), "--z", "1.5"}).code == 1);
  CHECK(cli({"motion-holonomy", m.string(), "--z", "a,b"}).code == 1);
}

TEST_CASE("current commands") {
  const fs::path d = scratch("currents");
  auto s = put(d / "S.json", R"J({"tau": [0, 0.5], "weights": [1, 3]})J");
  auto t = put(d / "T.json", R"J({"tau": [0, 0.5], "weights": [2, 3]})J");

  auto r = cli({"current-decompose", s.string(), t.string(), "--out", (d / "dec").string()});
  REQUIRE(r.code == 0);
  const json dec = read_json(d / "dec/decomposition.json");
  CHECK(dec["density"][0].get<double>() == 0.5);
  CHECK(dec["density"][1].get<double>() == 1.0);

  r = cli({"current-decompose", t.string(), s.string(), "--out", (d / "bad").string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("leaf 0") != std::string::npos);
  CHECK(read_json(d / "bad/witness.json")["leaf"] == 0);

  r = cli({"current-mass", s.string(), "--out", (d / "mass").string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(d / "mass/mass.json")["mass"].get<double>() == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-12));

  // a per-leaf density table multiplies the weights
  auto sd = put(d / "Sd.json", R"J({"tau": [0, 0.5], "weights": [1, 3], "density": [2, 0]})J");
  r = cli({"current-mass", sd.string(), "--out", (d / "massd").string()});
  CHECK(read_json(d / "massd/mass.json")["mass"].get<double>() == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));

  auto rogue = put(d / "rogue.json",
                   R"J({"tau": [0], "weights": [0], "rogue": [{"label": "w = z", "formula": "z", "weight": 1}]})J");
  r = cli({"current-residuals", s.string(), "--out", (d / "res").string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(d / "res/residuals.json")["directedness"].get<double>() == 0.0);
  CHECK(read_json(d / "res/residuals.json")["closedness"].get<double>() <= 1e-6);
  r = cli({"current-residuals", rogue.string(), "--out", (d / "rogue").string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(d / "rogue/residuals.json")["directedness"].get<double>() >= 0.5);

  auto many = put(d / "many.json", R"J({"tau": [0, 0.05, 0.1, [0, 0.2], [0.3, -0.1]], "weights": [1, 2, 1, 1, 3]})J");
  r = cli({"current-refine", many.string(), "--depth", "3", "--out", (d / "ref").string()});
  REQUIRE(r.code == 0);
  const json steps = read_json(d / "ref/refine.json")["steps"];
  REQUIRE(steps.size() == 3);
  for (int k = 1; k <= 3; ++k) {
    CHECK(steps[k - 1]["ball_diameter"].get<double>() <= std::pow(10.0, -k));
    CHECK(steps[k - 1]["support_diameter"].get<double>() <= std::pow(10.0, -k));
    CHECK(steps[k - 1]["mass"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(slurp(d / "ref/refine.csv").rfind("k,center_re,center_im,ball_diameter,support_diameter,mass,pairing\n", 0) == 0);

  auto form = put(d / "form.json", R"J({"bumps": [{"center": [0.3, -0.1], "radius": 0.2}]})J");
  r = cli({"current-refine", many.string(), "--form", form.string(), "--depth", "1", "--out", (d / "ref2").string()});
  REQUIRE(r.code == 0);
  CHECK(read_json(d / "ref2/refine.json")["steps"][0]["center"][0].get<double>() == doctest::Approx(0.3));
  auto wide = put(d / "wide.json", R"J({"bumps": [{"center": [0.5, 0], "radius": 0.6}]})J");
  CHECK(cli({"current-refine", many.string(), "--form", wide.string()}).code == 1);

  CHECK(cli({"current-mass", put(d / "neg.json", R"J({"tau": [0], "weights": [-1]})J").string()}).code == 1);
  CHECK(cli({"current-mass", put(d / "len.json", R"J({"tau": [0, 1], "weights": [1]})J").string()}).code == 1);
  CHECK(cli({"current-decompose", s.string()}).code == 1);
}

TEST_CASE("approx-run tables") {
  const fs::path d = scratch("approx");
  auto prod = put(d / "prod.json",
                  R"J({"motion": {"builtin": "horizontal", "tau": [0.1, [0.1, 0.1]]}, "function": "(alpha + conj(alpha))/2"})J");
  auto r = cli({"approx-run", prod.string(), "--grid-n", "64", "--eps-list", "0.4,0.2", "--out", (d / "prod").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"report_00.json", "report_01.json"}) {
    const json rep = read_json(d / "prod" / f);
    CHECK(rep["sup_error"].get<double>() == 0.0);
    CHECK(rep["w1p_error"].get<double>() == 0.0);
  }

  auto shear = put(d / "shear.json", R"J({"motion": {"formula": "alpha + z*conj(alpha)",
      "tau": [0.2, [0.1, 0.1], [-0.15, 0.05]], "localize": 0.1, "taper": true},
      "function": "(alpha + conj(alpha))/2"})J");
  r = cli({"approx-run", shear.string(), "--grid-n", "64", "--eps-list", "0.4,0.2", "--p", "4", "--out",
           (d / "shear").string()});
  REQUIRE(r.code == 0);
  const json a = read_json(d / "shear/report_00.json"), b = read_json(d / "shear/report_01.json");
  CHECK(a["kappa"].get<double>() == doctest::Approx(0.2 / 1.01));
  CHECK(b["sup_error"].get<double>() < a["sup_error"].get<double>());
  CHECK(b["w1p_error"].get<double>() < a["w1p_error"].get<double>());
  CHECK(a["in_regime"] == true);
  CHECK(a["w1p_error_per_leaf"].size() == 3);
  const std::string pgm = slurp(d / "shear/heatmap_00.pgm");
  CHECK(pgm.rfind("P5\n273 91\n255\n", 0) == 0);
  CHECK(pgm.size() == std::string("P5\n273 91\n255\n").size() + 273 * 91);
  CHECK(read_json(d / "shear/heatmap_00.json")["max"].get<double>() > 0.0);
  CHECK(slurp(d / "shear/convergence.csv")
            .rfind("epsilon,sup_error,w1p_error,nu_sup,flagged_points,grad_pi_lp,leaf_deviation,in_regime\n", 0) == 0);

  r = cli({"approx-run", shear.string(), "--grid-n", "64", "--eps-list", "0.4", "--p", "7", "--out", (d / "p7").string()});
  CHECK(r.code == 0);
  CHECK(read_json(d / "p7/report_00.json")["in_regime"] == false);
  CHECK(r.err.find("warning") != std::string::npos);

  // fail fast: bad epsilon is rejected before any fiber is solved
  CHECK(cli({"approx-run", shear.string(), "--eps-list", "0.2,1.5", "--out", (d / "bad").string()}).code == 1);
  CHECK_FALSE(fs::exists(d / "bad"));
  CHECK(cli({"approx-run", shear.string(), "--grid-n", "64", "--eps-list", "0.4", "--tol", "1e-300", "--out",
             (d / "nc").string()})
            .code == 2);
}

TEST_CASE("config files and determinism") {
  const fs::path d = scratch("config");
  auto m = put(d / "m.json", R"J({"builtin": "shear", "tau": [0.1, [0, 0.2], -0.15]})J");
  auto cfg = put(d / "cfg.json", json{{"input", m.string()}, {"seed", 7}, {"out", (d / "a").string()}}.dump());
  REQUIRE(cli({"motion-check", "--config", cfg.string()}).code == 0);
  REQUIRE(cli({"motion-check", "--config", cfg.string(), "--out", (d / "b").string()}).code == 0);
  CHECK(slurp(d / "a/motion_report.json") == slurp(d / "b/motion_report.json"));
  REQUIRE(cli({"motion-check", m.string(), "--seed", "8", "--out", (d / "c").string()}).code == 0);
  CHECK(slurp(d / "a/motion_report.json") != slurp(d / "c/motion_report.json"));

  auto s = put(d / "S.json", R"J({"tau": [0, 0.05, 0.3], "weights": [1, 2, 1]})J");
  for (const char* o : {"r1", "r2"})
    REQUIRE(cli({"current-refine", s.string(), "--depth", "2", "--out", (d / o).string()}).code == 0);
  CHECK(slurp(d / "r1/refine.csv") == slurp(d / "r2/refine.csv"));
  CHECK(slurp(d / "r1/refine.json") == slurp(d / "r2/refine.json"));

  auto unknown = put(d / "u.json", R"J({"input": "zero", "grid_size": 64})J");
  auto r = cli({"beltrami-solve", "--config", unknown.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("grid_size") != std::string::npos);
  CHECK(cli({"beltrami-solve", "--config", put(d / "t.json", R"J({"input": "zero", "grid_n": "64"})J").string()}).code == 1);
  CHECK(cli({}).code == 1);
  CHECK(cli({"beltrami-solve", "zero", "--frobnicate"}).code == 1);
  CHECK(cli({"beltrami-solve", "--help"}).code == 0);
}
