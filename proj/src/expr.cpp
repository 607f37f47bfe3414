#include "qclam/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>

namespace qclam {

using cplx = std::complex<double>;
using NodePtr = std::shared_ptr<const Expr::Node>;

namespace {

constexpr int kMaxDepth = 256;
constexpr long kMaxExponent = 1'000'000;

class Parser {
public:
  explicit Parser(std::string_view src) : src_(src) {}

  NodePtr run() {
    if (src_.find_first_not_of(" \t\r\n") == std::string_view::npos) throw ParseError("empty expression", 0);
    NodePtr e = expr();
    skip_ws();
    if (pos_ != src_.size()) throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    return e;
  }

private:
  struct DepthGuard {
    explicit DepthGuard(Parser& p) : p(p) {
      if (++p.depth_ > kMaxDepth) throw ParseError("expression nested too deeply", p.pos_);
    }
    ~DepthGuard() { --p.depth_; }
    Parser& p;
  };

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  static NodePtr make(Expr::Kind k, std::size_t off, NodePtr a = nullptr, NodePtr b = nullptr) {
    return std::make_shared<const Expr::Node>(Expr::Node{k, off, {}, 0, std::move(a), std::move(b)});
  }

  NodePtr expr() {
    DepthGuard g(*this);
    NodePtr lhs = term();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('+'))
        lhs = make(Expr::Kind::Add, at, lhs, term());
      else if (accept('-'))
        lhs = make(Expr::Kind::Sub, at, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('*'))
        lhs = make(Expr::Kind::Mul, at, lhs, unary());
      else if (accept('/'))
        lhs = make(Expr::Kind::Div, at, lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    DepthGuard g(*this);
    skip_ws();
    const std::size_t at = pos_;
    if (accept('-')) return make(Expr::Kind::Neg, at, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (!accept('^')) return base;
      auto n = std::make_shared<Expr::Node>(Expr::Node{Expr::Kind::Pow, at, {}, exponent(), base, nullptr});
      base = std::move(n);
    }
  }

  long exponent() {
    skip_ws();
    const std::size_t start = pos_;
    std::size_t p = pos_;
    bool negative = false;
    if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) negative = src_[p++] == '-';
    const std::size_t digits = p;
    while (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) ++p;
    const bool fractional = p < src_.size() && (src_[p] == '.' || src_[p] == 'e' || src_[p] == 'E');
    if (p == digits || fractional) {
      if (start >= src_.size()) throw ParseError("missing exponent", start);
      throw ParseError("non-integer exponent", start);
    }
    long v = 0;
    auto [end, ec] = std::from_chars(src_.data() + digits, src_.data() + p, v);
    if (ec != std::errc() || v > kMaxExponent) throw ParseError("exponent out of range", start);
    (void)end;
    pos_ = p;
    return negative ? -v : v;
  }

  // Signed real number at p; advances p on success.
  std::optional<double> number_at(std::size_t& p, bool allow_sign) const {
    std::size_t q = p;
    while (q < src_.size() && std::isspace(static_cast<unsigned char>(src_[q]))) ++q;
    const std::size_t start = q;
    if (allow_sign && q < src_.size() && (src_[q] == '-' || src_[q] == '+')) ++q;
    if (q >= src_.size() || !(std::isdigit(static_cast<unsigned char>(src_[q])) || src_[q] == '.')) return std::nullopt;
    const std::size_t num = q;
    while (q < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[q])) || src_[q] == '.')) ++q;
    if (q < src_.size() && (src_[q] == 'e' || src_[q] == 'E')) {
      std::size_t r = q + 1;
      if (r < src_.size() && (src_[r] == '+' || src_[r] == '-')) ++r;
      if (r < src_.size() && std::isdigit(static_cast<unsigned char>(src_[r]))) {
        while (r < src_.size() && std::isdigit(static_cast<unsigned char>(src_[r]))) ++r;
        q = r;
      }
    }
    double v = 0.0;
    auto [end, ec] = std::from_chars(src_.data() + num, src_.data() + q, v);
    if (ec == std::errc::result_out_of_range || (ec == std::errc() && !std::isfinite(v)))
      throw ParseError("number out of range", start);
    if (ec != std::errc() || end != src_.data() + q) throw ParseError("malformed number", start);
    p = q;
    return src_[start] == '-' ? -v : v;
  }

  // "(re, im)" starting at the '(' at pos_.
  std::optional<NodePtr> complex_literal() {
    std::size_t p = pos_ + 1;
    auto re = number_at(p, true);
    if (!re) return std::nullopt;
    while (p < src_.size() && std::isspace(static_cast<unsigned char>(src_[p]))) ++p;
    if (p >= src_.size() || src_[p] != ',') return std::nullopt;
    ++p;
    auto im = number_at(p, true);
    if (!im) throw ParseError("expected imaginary part", p);
    while (p < src_.size() && std::isspace(static_cast<unsigned char>(src_[p]))) ++p;
    if (p >= src_.size() || src_[p] != ')') throw ParseError("expected ')'", p);
    auto n = std::make_shared<const Expr::Node>(Expr::Node{Expr::Kind::Literal, pos_, cplx(*re, *im), 0, nullptr, nullptr});
    pos_ = p + 1;
    return n;
  }

  NodePtr atom() {
    skip_ws();
    const std::size_t at = pos_;
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      if (auto lit = complex_literal()) return *lit;
      ++pos_;
      NodePtr inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t p = pos_;
      const double v = *number_at(p, false);
      pos_ = p;
      return std::make_shared<const Expr::Node>(Expr::Node{Expr::Kind::Literal, at, cplx(v, 0.0), 0, nullptr, nullptr});
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string_view id = src_.substr(at, pos_ - at);
      if (id == "alpha") return make(Expr::Kind::Alpha, at);
      if (id == "z") return make(Expr::Kind::Z, at);
      if (id == "conj" || id == "exp") {
        expect('(');
        NodePtr arg = expr();
        expect(')');
        return make(id == "conj" ? Expr::Kind::Conj : Expr::Kind::Exp, at, arg);
      }
      throw ParseError("unknown identifier '" + std::string(id) + "'", at);
    }
    throw ParseError(std::string("unexpected '") + c + "'", at);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

bool same(const Expr::Node& a, const Expr::Node& b) {
  if (a.kind != b.kind || a.value != b.value || a.exponent != b.exponent) return false;
  if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs) || static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs))
    return false;
  return (!a.lhs || same(*a.lhs, *b.lhs)) && (!a.rhs || same(*a.rhs, *b.rhs));
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);  // fold -0
  return buf;
}

void print_node(const Expr::Node& n, std::string& out) {
  using K = Expr::Kind;
  auto binary = [&](const char* op) {
    out += '(';
    print_node(*n.lhs, out);
    out += op;
    print_node(*n.rhs, out);
    out += ')';
  };
  switch (n.kind) {
    case K::Literal:
      out += '(' + fmt(n.value.real()) + ',' + fmt(n.value.imag()) + ')';
      break;
    case K::Alpha: out += "alpha"; break;
    case K::Z: out += "z"; break;
    case K::Neg:
      out += "(-";
      print_node(*n.lhs, out);
      out += ')';
      break;
    case K::Conj:
    case K::Exp:
      out += n.kind == K::Conj ? "conj(" : "exp(";
      print_node(*n.lhs, out);
      out += ')';
      break;
    case K::Add: binary("+"); break;
    case K::Sub: binary("-"); break;
    case K::Mul: binary("*"); break;
    case K::Div: binary("/"); break;
    case K::Pow:
      out += '(';
      print_node(*n.lhs, out);
      out += '^' + std::to_string(n.exponent) + ')';
      break;
  }
}

cplx ipow(cplx x, long n, std::size_t offset) {
  if (n < 0) {
    if (x == cplx{}) throw EvaluationError("zero raised to a negative power", offset);
    return 1.0 / ipow(x, -n, offset);
  }
  cplx r(1.0, 0.0);
  while (n) {
    if (n & 1) r *= x;
    x *= x;
    n >>= 1;
  }
  return r;
}

cplx eval_node(const Expr::Node& n, cplx alpha, cplx z) {
  using K = Expr::Kind;
  switch (n.kind) {
    case K::Literal: return n.value;
    case K::Alpha: return alpha;
    case K::Z: return z;
    case K::Neg: return -eval_node(*n.lhs, alpha, z);
    case K::Conj: return std::conj(eval_node(*n.lhs, alpha, z));
    case K::Exp: return std::exp(eval_node(*n.lhs, alpha, z));
    case K::Add: return eval_node(*n.lhs, alpha, z) + eval_node(*n.rhs, alpha, z);
    case K::Sub: return eval_node(*n.lhs, alpha, z) - eval_node(*n.rhs, alpha, z);
    case K::Mul: return eval_node(*n.lhs, alpha, z) * eval_node(*n.rhs, alpha, z);
    case K::Div: {
      const cplx num = eval_node(*n.lhs, alpha, z);
      const cplx den = eval_node(*n.rhs, alpha, z);
      if (den == cplx{}) throw EvaluationError("division by zero", n.offset);
      return num / den;
    }
    case K::Pow: return ipow(eval_node(*n.lhs, alpha, z), n.exponent, n.offset);
  }
  return {};
}

void collect_singular(const Expr::Node& n, std::vector<std::size_t>& out) {
  if (n.lhs) collect_singular(*n.lhs, out);
  if (n.kind == Expr::Kind::Div || (n.kind == Expr::Kind::Pow && n.exponent < 0)) out.push_back(n.offset);
  if (n.rhs) collect_singular(*n.rhs, out);
}

}  // namespace

std::vector<std::size_t> Expr::singular_offsets() const {
  std::vector<std::size_t> out;
  collect_singular(*root_, out);
  return out;
}

bool operator==(const Expr& a, const Expr& b) { return same(*a.root_, *b.root_); }

Expr parse(std::string_view src) { return Expr(Parser(src).run()); }

std::string print(const Expr& e) {
  std::string out;
  print_node(e.root(), out);
  return out;
}

cplx eval(const Expr& e, cplx alpha, cplx z) { return eval_node(e.root(), alpha, z); }

HolomorphyReport check_leaf_holomorphy(const LeafFn& phi, std::span<const cplx> alphas, std::span<const cplx> zs) {
  if (alphas.empty() || zs.empty()) throw ValidationError("holomorphy check needs nonempty sample sets");
  for (cplx z : zs)
    if (!(std::abs(z) < 1.0)) throw ValidationError("holomorphy samples must lie in the unit disk");
  const double d = 1e-5;
  HolomorphyReport rep;
  for (cplx a : alphas)
    for (cplx z : zs) {
      const cplx fx = (phi(a, z + d) - phi(a, z - d)) / (2 * d);
      const cplx fy = (phi(a, z + cplx(0, d)) - phi(a, z - cplx(0, d))) / (2 * d);
      const double dzbar = std::abs(0.5 * (fx + cplx(0, 1) * fy));
      if (!(dzbar <= rep.max_dzbar)) {
        rep.max_dzbar = std::isnan(dzbar) ? INFINITY : dzbar;
        rep.worst_alpha = a;
        rep.worst_z = z;
      }
    }
  rep.passes = rep.max_dzbar <= 1e-6;
  return rep;
}

HolomorphyReport check_leaf_holomorphy(const Expr& e, std::span<const cplx> alphas, std::span<const cplx> zs) {
  return check_leaf_holomorphy([&e](cplx a, cplx z) { return eval(e, a, z); }, alphas, zs);
}

}  // namespace qclam
