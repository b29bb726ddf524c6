#include "bdsde/dsl.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace bdsde::dsl {

ParseError::ParseError(std::size_t offset, const std::string& what)
    : std::runtime_error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

ExprPtr make_number(double v) { return std::make_shared<Expr>(Expr{Number{v}}); }
ExprPtr make_var(Var v) { return std::make_shared<Expr>(Expr{v}); }
ExprPtr make_negate(ExprPtr e) { return std::make_shared<Expr>(Expr{Negate{std::move(e)}}); }
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}});
}
ExprPtr make_call(Func f, std::vector<ExprPtr> args) {
  if (static_cast<int>(args.size()) != arity(f)) {
    throw std::invalid_argument(std::string(func_name(f)) + ": wrong number of arguments");
  }
  return std::make_shared<Expr>(Expr{Call{f, std::move(args)}});
}

namespace {

struct FuncEntry {
  std::string_view name;
  Func func;
  int arity;
};

constexpr std::array<FuncEntry, 9> kFuncs{{
    {"abs", Func::Abs, 1},
    {"exp", Func::Exp, 1},
    {"log", Func::Log, 1},
    {"sqrt", Func::Sqrt, 1},
    {"pow", Func::Pow, 2},
    {"min", Func::Min, 2},
    {"max", Func::Max, 2},
    {"sign", Func::Sign, 1},
    {"cbrt", Func::Cbrt, 1},
}};

const FuncEntry* find_func(std::string_view name) {
  for (const auto& e : kFuncs) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
  Tok kind;
  std::size_t offset;
  std::string_view text;
  double number = 0.0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const std::size_t start = pos_;
    if (pos_ >= src_.size()) return {Tok::End, start, {}};
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return lex_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        ++pos_;
      }
      return {Tok::Ident, start, src_.substr(start, pos_ - start)};
    }
    ++pos_;
    switch (c) {
      case '+': return {Tok::Plus, start, src_.substr(start, 1)};
      case '-': return {Tok::Minus, start, src_.substr(start, 1)};
      case '*': return {Tok::Star, start, src_.substr(start, 1)};
      case '/': return {Tok::Slash, start, src_.substr(start, 1)};
      case '^': return {Tok::Caret, start, src_.substr(start, 1)};
      case '(': return {Tok::LParen, start, src_.substr(start, 1)};
      case ')': return {Tok::RParen, start, src_.substr(start, 1)};
      case ',': return {Tok::Comma, start, src_.substr(start, 1)};
      default: break;
    }
    throw ParseError(start, std::string("unexpected character '") + c + "'");
  }

 private:
  Token lex_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t n = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError(start, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // not an exponent; leave 'e' for the next token
    }
    const std::string text(src_.substr(start, pos_ - start));
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (!std::isfinite(v)) throw ParseError(start, "number out of range");
    return {Tok::Number, start, src_.substr(start, pos_ - start), v};
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::string_view src, const ParseOptions& opts) : lex_(src), opts_(opts) {
    cur_ = lex_.next();
  }

  ExprPtr parse_all() {
    auto e = expr();
    if (cur_.kind != Tok::End) throw ParseError(cur_.offset, "unexpected trailing input");
    return e;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  ExprPtr expr() {
    auto lhs = term();
    while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
      const auto op = cur_.kind == Tok::Plus ? BinaryOp::Add : BinaryOp::Sub;
      advance();
      lhs = make_binary(op, lhs, term());
    }
    return lhs;
  }

  ExprPtr term() {
    auto lhs = power();
    while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
      const auto op = cur_.kind == Tok::Star ? BinaryOp::Mul : BinaryOp::Div;
      advance();
      lhs = make_binary(op, lhs, power());
    }
    return lhs;
  }

  ExprPtr power() {
    auto base = unary();
    if (cur_.kind == Tok::Caret) {
      advance();
      return make_binary(BinaryOp::Pow, base, power());
    }
    return base;
  }

  ExprPtr unary() {
    if (cur_.kind == Tok::Minus) {
      advance();
      return make_negate(unary());
    }
    return primary();
  }

  ExprPtr primary() {
    const Token tok = cur_;
    switch (tok.kind) {
      case Tok::Number:
        advance();
        return make_number(tok.number);
      case Tok::LParen: {
        advance();
        auto e = expr();
        expect(Tok::RParen, "expected ')'");
        return e;
      }
      case Tok::Ident:
        advance();
        if (cur_.kind == Tok::LParen) return call(tok);
        return make_var(variable(tok));
      case Tok::End:
        throw ParseError(tok.offset, "unexpected end of input");
      default:
        throw ParseError(tok.offset, "expected operand, found '" + std::string(tok.text) + "'");
    }
  }

  ExprPtr call(const Token& name) {
    const FuncEntry* fe = find_func(name.text);
    if (!fe) throw ParseError(name.offset, "unknown function '" + std::string(name.text) + "'");
    advance();  // '('
    std::vector<ExprPtr> args;
    if (cur_.kind != Tok::RParen) {
      args.push_back(expr());
      while (cur_.kind == Tok::Comma) {
        advance();
        args.push_back(expr());
      }
    }
    if (static_cast<int>(args.size()) != fe->arity) {
      throw ParseError(name.offset, std::string(fe->name) + " expects " +
                                        std::to_string(fe->arity) + " argument(s), got " +
                                        std::to_string(args.size()));
    }
    expect(Tok::RParen, "expected ')'");
    return make_call(fe->func, std::move(args));
  }

  Var variable(const Token& tok) {
    const std::string_view s = tok.text;
    const bool driver = opts_.role == Role::Driver;
    if (opts_.allow_parameter && s == "lam") return {VarKind::Param, 0};
    if (driver && s == "t") return {VarKind::T, 0};
    if (driver && s == "y") return {VarKind::Y, 0};
    if (auto idx = coordinate(s, driver ? 'z' : 'w')) return {driver ? VarKind::Z : VarKind::W, *idx};
    if (find_func(s)) throw ParseError(tok.offset, "function '" + std::string(s) + "' used without arguments");
    if (!driver && (s == "t" || s == "y" || s.starts_with('z'))) {
      throw ParseError(tok.offset, "variable '" + std::string(s) + "' not allowed in a terminal map");
    }
    throw ParseError(tok.offset, "unknown identifier '" + std::string(s) + "'");
  }

  // "z" (first coordinate) or "z<k>" with 1 <= k <= dim.
  std::optional<int> coordinate(std::string_view s, char prefix) const {
    if (s.empty() || s[0] != prefix) return std::nullopt;
    if (s.size() == 1) return 0;
    int k = 0;
    for (char c : s.substr(1)) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      k = k * 10 + (c - '0');
      if (k > 1000) return std::nullopt;
    }
    if (k < 1 || k > opts_.dim) return std::nullopt;
    return k - 1;
  }

  void expect(Tok kind, const char* msg) {
    if (cur_.kind != kind) throw ParseError(cur_.offset, msg);
    advance();
  }

  Lexer lex_;
  ParseOptions opts_;
  Token cur_{Tok::End, 0, {}};
};

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvalError(std::string("non-finite result in ") + what);
  return v;
}

struct Evaluator {
  const Bindings& b;

  double operator()(const Number& n) const { return n.value; }

  double operator()(const Var& v) const {
    switch (v.kind) {
      case VarKind::T:
        if (!b.t) throw EvalError("unbound variable 't'");
        return *b.t;
      case VarKind::Y:
        if (!b.y) throw EvalError("unbound variable 'y'");
        return *b.y;
      case VarKind::Param:
        if (!b.lam) throw EvalError("unbound variable 'lam'");
        return *b.lam;
      case VarKind::Z:
        if (static_cast<std::size_t>(v.index) >= b.z.size()) {
          throw EvalError("unbound variable 'z" + std::to_string(v.index + 1) + "'");
        }
        return b.z[v.index];
      case VarKind::W:
        if (static_cast<std::size_t>(v.index) >= b.w.size()) {
          throw EvalError("unbound variable 'w" + std::to_string(v.index + 1) + "'");
        }
        return b.w[v.index];
    }
    throw EvalError("bad variable");
  }

  double operator()(const Negate& n) const { return -std::visit(*this, n.operand->node); }

  double operator()(const Binary& bin) const {
    const double l = std::visit(*this, bin.lhs->node);
    const double r = std::visit(*this, bin.rhs->node);
    switch (bin.op) {
      case BinaryOp::Add: return checked(l + r, "'+'");
      case BinaryOp::Sub: return checked(l - r, "'-'");
      case BinaryOp::Mul: return checked(l * r, "'*'");
      case BinaryOp::Div:
        if (r == 0.0) throw EvalError("division by zero");
        return checked(l / r, "'/'");
      case BinaryOp::Pow: return real_pow(l, r);
    }
    throw EvalError("bad operator");
  }

  double operator()(const Call& c) const {
    const double a = std::visit(*this, c.args[0]->node);
    switch (c.func) {
      case Func::Abs: return std::abs(a);
      case Func::Exp: return checked(std::exp(a), "exp");
      case Func::Log:
        if (a <= 0.0) throw EvalError("log of non-positive argument");
        return checked(std::log(a), "log");
      case Func::Sqrt:
        if (a < 0.0) throw EvalError("sqrt of negative argument");
        return std::sqrt(a);
      case Func::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
      case Func::Cbrt: return std::cbrt(a);
      case Func::Pow: return real_pow(a, std::visit(*this, c.args[1]->node));
      case Func::Min: return std::min(a, std::visit(*this, c.args[1]->node));
      case Func::Max: return std::max(a, std::visit(*this, c.args[1]->node));
    }
    throw EvalError("bad function");
  }
};

enum Prec { kAdd = 1, kMul = 2, kPow = 3, kUnary = 4, kAtom = 5 };

int precedence(const Expr& e) {
  if (const auto* b = std::get_if<Binary>(&e.node)) {
    switch (b->op) {
      case BinaryOp::Add:
      case BinaryOp::Sub: return kAdd;
      case BinaryOp::Mul:
      case BinaryOp::Div: return kMul;
      case BinaryOp::Pow: return kPow;
    }
  }
  if (std::holds_alternative<Negate>(e.node)) return kUnary;
  return kAtom;
}

void print_into(const Expr& e, std::string& out);

void print_child(const Expr& e, int min_prec, std::string& out) {
  const bool paren = precedence(e) < min_prec;
  if (paren) out += '(';
  print_into(e, out);
  if (paren) out += ')';
}

void print_into(const Expr& e, std::string& out) {
  if (const auto* n = std::get_if<Number>(&e.node)) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", n->value);
    out += buf;
  } else if (const auto* v = std::get_if<Var>(&e.node)) {
    switch (v->kind) {
      case VarKind::T: out += 't'; break;
      case VarKind::Y: out += 'y'; break;
      case VarKind::Param: out += "lam"; break;
      case VarKind::Z: out += 'z' + std::to_string(v->index + 1); break;
      case VarKind::W: out += 'w' + std::to_string(v->index + 1); break;
    }
  } else if (const auto* ng = std::get_if<Negate>(&e.node)) {
    out += '-';
    print_child(*ng->operand, kUnary, out);
  } else if (const auto* b = std::get_if<Binary>(&e.node)) {
    const int p = precedence(e);
    if (b->op == BinaryOp::Pow) {
      print_child(*b->lhs, kUnary, out);  // right associative
      out += '^';
      print_child(*b->rhs, kPow, out);
      return;
    }
    print_child(*b->lhs, p, out);  // left associative
    switch (b->op) {
      case BinaryOp::Add: out += " + "; break;
      case BinaryOp::Sub: out += " - "; break;
      case BinaryOp::Mul: out += '*'; break;
      case BinaryOp::Div: out += '/'; break;
      case BinaryOp::Pow: break;
    }
    print_child(*b->rhs, p + 1, out);
  } else if (const auto* c = std::get_if<Call>(&e.node)) {
    out += func_name(c->func);
    out += '(';
    for (std::size_t i = 0; i < c->args.size(); ++i) {
      if (i) out += ", ";
      print_into(*c->args[i], out);
    }
    out += ')';
  }
}

// Smallest q <= 99 with |x*q - round(x*q)| tiny, via continued fractions.
std::optional<std::pair<long, long>> small_rational(double x) {
  long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int iter = 0; iter < 20; ++iter) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e9) break;
    const long ai = static_cast<long>(a);
    const long h2 = ai * h1 + h0;
    const long k2 = ai * k1 + k0;
    if (k2 > 99) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    if (std::abs(x - static_cast<double>(h1) / static_cast<double>(k1)) <= 1e-12 * std::max(1.0, std::abs(x))) {
      return std::make_pair(h1, k1);
    }
    const double frac = r - a;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

}  // namespace

int arity(Func f) {
  for (const auto& e : kFuncs) {
    if (e.func == f) return e.arity;
  }
  return 0;
}

std::string_view func_name(Func f) {
  for (const auto& e : kFuncs) {
    if (e.func == f) return e.name;
  }
  return "?";
}

ExprPtr parse(std::string_view source, const ParseOptions& opts) {
  if (opts.dim < 1) throw std::invalid_argument("parse: dimension must be >= 1");
  return Parser(source, opts).parse_all();
}

double real_pow(double base, double exponent) {
  if (base >= 0.0 || exponent == std::trunc(exponent)) {
    if (base == 0.0 && exponent < 0.0) throw EvalError("pow: zero base with negative exponent");
    return checked(std::pow(base, exponent), "pow");
  }
  const auto q = small_rational(exponent);
  if (!q || q->second % 2 == 0) {
    throw EvalError("pow: negative base with exponent that is not a ratio with odd denominator");
  }
  const double mag = std::pow(-base, exponent);
  return checked(q->first % 2 != 0 ? -mag : mag, "pow");
}

double evaluate(const Expr& e, const Bindings& b) {
  return checked(std::visit(Evaluator{b}, e.node), "expression");
}

std::string print(const Expr& e) {
  std::string out;
  print_into(e, out);
  return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* n = std::get_if<Number>(&a.node)) return n->value == std::get<Number>(b.node).value;
  if (const auto* v = std::get_if<Var>(&a.node)) return *v == std::get<Var>(b.node);
  if (const auto* ng = std::get_if<Negate>(&a.node)) {
    return structurally_equal(*ng->operand, *std::get<Negate>(b.node).operand);
  }
  if (const auto* bin = std::get_if<Binary>(&a.node)) {
    const auto& o = std::get<Binary>(b.node);
    return bin->op == o.op && structurally_equal(*bin->lhs, *o.lhs) &&
           structurally_equal(*bin->rhs, *o.rhs);
  }
  const auto& ca = std::get<Call>(a.node);
  const auto& cb = std::get<Call>(b.node);
  if (ca.func != cb.func || ca.args.size() != cb.args.size()) return false;
  for (std::size_t i = 0; i < ca.args.size(); ++i) {
    if (!structurally_equal(*ca.args[i], *cb.args[i])) return false;
  }
  return true;
}

bool references(const Expr& e, VarKind kind) {
  if (const auto* v = std::get_if<Var>(&e.node)) return v->kind == kind;
  if (const auto* ng = std::get_if<Negate>(&e.node)) return references(*ng->operand, kind);
  if (const auto* b = std::get_if<Binary>(&e.node)) {
    return references(*b->lhs, kind) || references(*b->rhs, kind);
  }
  if (const auto* c = std::get_if<Call>(&e.node)) {
    for (const auto& a : c->args) {
      if (references(*a, kind)) return true;
    }
  }
  return false;
}

}  // namespace bdsde::dsl
