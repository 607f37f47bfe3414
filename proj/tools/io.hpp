#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qclam/currents.hpp"

namespace qclam::cli {

using json = nlohmann::json;

/// Schema violations; `where` is a JSON-pointer-like path.
class SchemaError : public ValidationError {
public:
  SchemaError(const std::string& where, const std::string& what) : ValidationError(where + ": " + what) {}
};

json load_json(const std::filesystem::path& path);
void require_keys(const json& j, const std::string& where, const std::vector<std::string>& allowed);

/// A complex number is a JSON number or a pair [re, im].
cplx to_cplx(const json& j, const std::string& where);
json from_cplx(cplx c);
/// "re,im" or "re" on the command line.
cplx parse_cplx(const std::string& s);
std::vector<double> parse_list(const std::string& s);

struct MotionSpec {
  HolomorphicMotion motion;
  std::optional<double> kappa;  ///< set by "localize"
};

/// { "formula" | "leaves" | "builtin", "tau", "epsilon_bound", "global",
///   "localize": r, "taper": bool | {"r0", "width"} }.
/// With `tau` given the object must not carry its own.
MotionSpec parse_motion(const json& j, const std::string& where = "motion",
                        const std::optional<std::vector<cplx>>& tau = std::nullopt);

/// { "motion" (default horizontal), "tau", "weights", "density", "rogue", "p" }.
/// A per-leaf density table is folded into the weights; a density formula is
/// the real part of an expression in z and alpha.
WeightedCurrent parse_current(const json& j, const std::string& where = "current");

/// { "bumps": [{"center", "radius", "weight"}], "z_radius", "support" }:
/// the two-form psi (i/2)(dz^dzbar + dw^dwbar) with
/// psi = plateau(|z|) sum_k weight_k plateau(|w - center_k|).
TestForm parse_form(const json& j, const std::string& where = "form");
TestForm default_refine_form();

/// Binary P5 image with 8-bit linear min-max scaling, plus a sidecar
/// <stem>.json recording the scaling. Row 0 of `values` is written first.
void write_pgm(const std::filesystem::path& path, const Eigen::ArrayXXd& values, json meta);

/// Writes text exactly as given (binary mode, so output is byte-identical across runs).
void write_text(const std::filesystem::path& path, const std::string& text);
std::string dump(const json& j);

}  // namespace qclam::cli
