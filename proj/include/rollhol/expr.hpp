#ifndef ROLLHOL_EXPR_HPP
#define ROLLHOL_EXPR_HPP

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace rollhol {

/// Syntax error with the 0-based offset of the offending token.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg), offset(offset) {}
  std::size_t offset;
};

/// Unknown identifier, bad arity, or variable outside the declared chart.
struct BindError : std::runtime_error {
  explicit BindError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
struct ExprNode;
}

/// Immutable scalar expression over real literals, named variables,
/// + - * / ^, unary minus and the functions
/// sin, cos, tan, exp, log, sqrt, cosh, sinh.
class Expr {
 public:
  Expr() = default;

  static Expr number(double v);
  static Expr var(std::string name);
  static Expr call(const std::string& fn, Expr arg);

  Expr operator-() const;
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  Expr pow(const Expr& e) const;

  bool empty() const { return node_ == nullptr; }

  /// Canonical text form; parse(to_string(e)) evaluates identically to e.
  std::string to_string() const;

  /// Exact symbolic derivative with respect to `var`.
  Expr derivative(const std::string& var) const;

  const detail::ExprNode* node() const { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> n) : node_(std::move(n)) {}
  std::shared_ptr<const detail::ExprNode> node_;
  friend Expr parse_expr(const std::string&);
};

/// Parses `text`; throws ParseError on malformed input. Identifiers are
/// accepted syntactically and validated at bind time.
Expr parse_expr(const std::string& text);

/// Declared variable names, in slot order. `alias` entries resolve extra
/// spellings (e.g. "s" for the radial coordinate of a cone chart).
class VarTable {
 public:
  VarTable() = default;
  explicit VarTable(std::vector<std::string> names) : names_(std::move(names)) {}

  /// x1..xn for an n-dimensional chart.
  static VarTable chart(int dim);

  void add_alias(const std::string& alias, int slot);
  int slot(const std::string& name) const;  // -1 if unknown
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::vector<std::pair<std::string, int>> aliases_;
};

/// Flat postfix program; the hot-path form of an Expr.
class Prog {
 public:
  Prog() = default;

  double eval(const double* vars, int nvars) const;
  double eval(const std::vector<double>& vars) const {
    return eval(vars.data(), static_cast<int>(vars.size()));
  }
  bool empty() const { return code_.empty(); }

 private:
  struct Instr {
    int op;
    double value;  // PushConst
    int slot;      // PushVar / integer exponent
  };
  std::vector<Instr> code_;
  int max_stack_ = 0;
  friend Prog compile_expr(const Expr&, const VarTable&);
};

/// Resolves variable names against `vars`; throws BindError on unknowns.
Prog compile_expr(const Expr& e, const VarTable& vars);

}  // namespace rollhol

#endif
