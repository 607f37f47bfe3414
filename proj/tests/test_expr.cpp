#include <random>
#include <string>

#include "doctest.h"
#include "qclam/expr.hpp"

using namespace qclam;
using cplx = std::complex<double>;

namespace {

std::size_t parse_error_offset(const std::string& s) {
  try {
    parse(s);
  } catch (const ParseError& e) {
    return e.offset();
  }
  return std::string::npos;
}

}  // namespace

TEST_CASE("evaluation examples") {
  CHECK(std::abs(eval(parse("alpha + z*conj(alpha)"), 0.3, cplx(0, 0.5)) - cplx(0.3, 0.15)) < 1e-15);
  CHECK(eval(parse("1+2*3"), 0, 0) == cplx(7, 0));
  CHECK(eval(parse("z^2"), 0, cplx(1, 1)) == cplx(0, 2));
  CHECK(eval(parse("conj(z)"), 0, cplx(0, 1)) == cplx(0, -1));
  CHECK(std::abs(eval(parse("exp((0,3.141592653589793))"), 0, 0) - cplx(-1, 0)) < 1e-15);
  CHECK(eval(parse("(1.5,-2)"), 0, 0) == cplx(1.5, -2));
  CHECK(eval(parse("z^-2"), 0, cplx(0, 1)) == cplx(-1, 0));
}

TEST_CASE("precedence and associativity") {
  CHECK(eval(parse("-z^2"), 0, 3.0) == cplx(-9, 0));
  CHECK(eval(parse("8/4/2"), 0, 0) == cplx(1, 0));
  CHECK(eval(parse("8-4-2"), 0, 0) == cplx(2, 0));
  CHECK(eval(parse("2*3^2"), 0, 0) == cplx(18, 0));
  CHECK(eval(parse("z^2^3"), 0, 2.0) == cplx(64, 0));  // (z^2)^3
  CHECK(eval(parse("--2"), 0, 0) == cplx(2, 0));
  CHECK(eval(parse("-2*3"), 0, 0) == cplx(-6, 0));
  CHECK(parse("1 - 2 - 3") == parse("(1-2)-3"));
  CHECK(!(parse("1 - 2 - 3") == parse("1-(2-3)")));
}

TEST_CASE("parse errors carry positions") {
  CHECK(parse_error_offset("alpha + (z") == 10);
  CHECK(parse_error_offset("alpha + beta") == 8);
  CHECK(parse_error_offset("z^2.5") == 2);
  CHECK(parse_error_offset("z^alpha") == 2);
  CHECK(parse_error_offset("1 +") == 3);
  CHECK(parse_error_offset("1 2") == 2);
  CHECK(parse_error_offset("conj z") == 5);
  CHECK(parse_error_offset("(1,") == 3);
  CHECK(parse_error_offset("1e999") == 0);
  CHECK(parse_error_offset("") == 0);
  CHECK(parse_error_offset("   ") == 0);
  CHECK(parse_error_offset("z^99999999999") == 2);
  CHECK(parse_error_offset("z # 2") == 2);
  try {
    parse("alpha + beta");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unknown identifier 'beta'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse(std::string(1000, '(') + "z" + std::string(1000, ')')), ParseError);
}

TEST_CASE("evaluation errors carry positions") {
  try {
    eval(parse("1/(z-1)"), 0, 1.0);
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.offset() == 1);
  }
  CHECK_THROWS_AS(eval(parse("z^-1"), 0, 0.0), EvaluationError);
  CHECK(parse("1/(z-1) + z^-2 + z^2").singular_offsets() == std::vector<std::size_t>{1, 11});
}

TEST_CASE("round trip print -> parse") {
  for (const char* s : {"alpha + z*conj(alpha)", "alpha*(1 + z/2)", "-z^2 - (0.1,-0.25)*exp(z*alpha)",
                        "1/(z-1)", "z^-3 + --alpha", "(1e-300,2.5e10) * 0.1", "exp(conj(alpha))^4"}) {
    const Expr e = parse(s);
    const std::string p = print(e);
    CAPTURE(p);
    CHECK(parse(p) == e);
    CHECK(print(parse(p)) == p);
  }
}

TEST_CASE("parser totality under fuzzing") {
  const std::string alphabet = "alphzconjexp0123456789.,()+-*/^ e";
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> len(0, 24), pick(0, alphabet.size() - 1);
  int parsed = 0;
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    const std::size_t n = len(rng);
    for (std::size_t k = 0; k < n; ++k) s += alphabet[pick(rng)];
    try {
      const Expr e = parse(s);
      ++parsed;
      CHECK(parse(print(e)) == e);
      try {
        eval(e, cplx(0.3, 0.1), cplx(-0.2, 0.4));
      } catch (const EvaluationError&) {
      }
    } catch (const ParseError& e) {
      CHECK(e.offset() <= s.size());
    }
  }
  MESSAGE(parsed << " of 20000 random strings parsed");
  // random token streams too, which parse far more often
  const std::vector<std::string> tokens = {"alpha", "z", "conj(", "exp(", "(", ")", "+", "-", "*", "/", "^2", "^-1", "0.5", "(1,2)"};
  std::uniform_int_distribution<std::size_t> tok(0, tokens.size() - 1);
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    for (std::size_t k = 0, n = len(rng); k < n; ++k) s += tokens[tok(rng)];
    try {
      const Expr e = parse(s);
      CHECK(parse(print(e)) == e);
    } catch (const ParseError& e) {
      CHECK(e.offset() <= s.size());
    }
  }
}

TEST_CASE("leaf holomorphy check") {
  const std::vector<cplx> alphas = {0.0, cplx(0.3, 0.1), cplx(-0.4, 0.2), cplx(0.1, -0.6)};
  const std::vector<cplx> zs = {0.0, cplx(0.5, 0.0), cplx(0.0, 0.5), cplx(-0.6, -0.3), cplx(0.7, 0.6)};
  CHECK(check_leaf_holomorphy(parse("alpha + z*conj(alpha)"), alphas, zs).passes);
  CHECK(check_leaf_holomorphy(parse("alpha*(1 + z/2)"), alphas, zs).passes);
  CHECK(check_leaf_holomorphy(parse("alpha*exp(z)/3 + z^3"), alphas, zs).passes);
  const auto bad = check_leaf_holomorphy(parse("conj(z)"), alphas, zs);
  CHECK_FALSE(bad.passes);
  CHECK(bad.max_dzbar == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(check_leaf_holomorphy(parse("z"), {}, zs), ValidationError);
  const std::vector<cplx> outside = {cplx(1.0, 0.0)};
  CHECK_THROWS_AS(check_leaf_holomorphy(parse("z"), alphas, outside), ValidationError);
}
