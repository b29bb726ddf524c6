#pragma once

// Small expression language for drivers f(t,y,z), g(t,y,z) and terminal maps.
//
//   expr    ::= term { ("+" | "-") term }
//   term    ::= power { ("*" | "/") power }
//   power   ::= unary [ "^" power ]
//   unary   ::= "-" unary | primary
//   primary ::= number | variable | name "(" expr { "," expr } ")" | "(" expr ")"
//
// Unary minus binds tighter than "^", so "-2^2" is (-2)^2.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bdsde::dsl {

enum class Role {
  Driver,    // t, y, z, z1..zd
  Terminal,  // w, w1..wd (the value W_T)
};

struct ParseOptions {
  Role role = Role::Driver;
  int dim = 1;                  // d: number of z (or w) coordinates
  bool allow_parameter = false; // admit the family parameter `lam`
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& what);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class VarKind { T, Y, Z, W, Param };

struct Var {
  VarKind kind;
  int index = 0;  // coordinate for Z / W (0-based)
  bool operator==(const Var&) const = default;
};

enum class BinaryOp { Add, Sub, Mul, Div, Pow };

enum class Func { Abs, Exp, Log, Sqrt, Pow, Min, Max, Sign, Cbrt };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Number {
  double value;  // always >= 0; negation is a Negate node
};
struct Negate {
  ExprPtr operand;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs, rhs;
};
struct Call {
  Func func;
  std::vector<ExprPtr> args;
};

struct Expr {
  std::variant<Number, Var, Negate, Binary, Call> node;
};

ExprPtr make_number(double v);
ExprPtr make_var(Var v);
ExprPtr make_negate(ExprPtr e);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr make_call(Func f, std::vector<ExprPtr> args);

int arity(Func f);
std::string_view func_name(Func f);

ExprPtr parse(std::string_view source, const ParseOptions& opts = {});

/// Values for every variable an expression may reference.
struct Bindings {
  std::optional<double> t, y, lam;
  std::span<const double> z;
  std::span<const double> w;
};

double evaluate(const Expr& e, const Bindings& b);

std::string print(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// True if any node of `e` is a variable of the given kind.
bool references(const Expr& e, VarKind kind);

/// Real power with the odd-root convention: a negative base with an exponent
/// p/q (q odd) evaluates as sign^p * |a|^(p/q). Any other negative-base,
/// non-integer exponent is a domain error.
double real_pow(double base, double exponent);

}  // namespace bdsde::dsl
