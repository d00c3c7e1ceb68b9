#include "rollhol/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace rollhol {

namespace detail {

enum class Kind { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Call };

struct ExprNode {
  Kind kind;
  double value = 0.0;                    // Number
  std::string name;                      // Var / Call
  std::shared_ptr<const ExprNode> a, b;  // children
};

}  // namespace detail

using detail::ExprNode;
using detail::Kind;
using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

NodePtr node_number(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Number;
  n->value = v;
  return n;
}

NodePtr node_var(std::string name) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Var;
  n->name = std::move(name);
  return n;
}

NodePtr node_call(std::string fn, NodePtr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Call;
  n->name = std::move(fn);
  n->a = std::move(a);
  return n;
}

NodePtr node_bin(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr node_neg(NodePtr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Neg;
  n->a = std::move(a);
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->kind == Kind::Number && n->value == v;
}

// Folding versions, used when assembling metrics and derivatives
// programmatically so cone-of-cone expressions stay readable.
NodePtr fadd(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return node_bin(Kind::Add, std::move(a), std::move(b));
}
NodePtr fsub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  return node_bin(Kind::Sub, std::move(a), std::move(b));
}
NodePtr fmul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return node_number(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return node_bin(Kind::Mul, std::move(a), std::move(b));
}
NodePtr fdiv(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return node_number(0.0);
  if (is_const(b, 1.0)) return a;
  return node_bin(Kind::Div, std::move(a), std::move(b));
}

}  // namespace

// ---------------------------------------------------------------------------
// construction

Expr Expr::number(double v) { return Expr(node_number(v)); }
Expr Expr::var(std::string name) { return Expr(node_var(std::move(name))); }
Expr Expr::call(const std::string& fn, Expr arg) {
  return Expr(node_call(fn, arg.node_));
}

Expr Expr::operator-() const { return Expr(node_neg(node_)); }
Expr operator+(const Expr& a, const Expr& b) { return Expr(fadd(a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(fsub(a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(fmul(a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(fdiv(a.node_, b.node_)); }
Expr Expr::pow(const Expr& e) const { return Expr(node_bin(Kind::Pow, node_, e.node_)); }

// ---------------------------------------------------------------------------
// parser

namespace {

const char* const kFunctions[] = {"sin", "cos", "tan", "exp",
                                  "log", "sqrt", "cosh", "sinh"};

bool is_function(const std::string& s) {
  for (const char* f : kFunctions)
    if (s == f) return true;
  return false;
}

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) {
    throw ParseError(msg + " at offset " + std::to_string(at), at);
  }

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing input", pos);
    return e;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      char c = peek();
      if (c != '+' && c != '-') return lhs;
      ++pos;
      lhs = node_bin(c == '+' ? Kind::Add : Kind::Sub, lhs, term());
    }
  }

  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      char c = peek();
      if (c != '*' && c != '/') return lhs;
      ++pos;
      lhs = node_bin(c == '*' ? Kind::Mul : Kind::Div, lhs, factor());
    }
  }

  // ^ binds tighter than unary minus, which binds tighter than * /
  NodePtr factor() {
    if (peek() == '-') {
      ++pos;
      return node_neg(factor());
    }
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (peek() == '^') {
      ++pos;
      return node_bin(Kind::Pow, base, factor());  // right associative
    }
    return base;
  }

  NodePtr primary() {
    char c = peek();
    std::size_t at = pos;
    if (c == '(') {
      ++pos;
      NodePtr e = expr();
      if (peek() != ')') fail("expected ')'", pos);
      ++pos;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(at);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier(at);
    fail("expected number, identifier or '('", at);
  }

  NodePtr number(std::size_t at) {
    const char* start = text.c_str() + at;
    char* end = nullptr;
    double v = std::strtod(start, &end);
    if (end == start) fail("malformed number", at);
    pos = at + static_cast<std::size_t>(end - start);
    return node_number(v);
  }

  NodePtr identifier(std::size_t at) {
    std::size_t end = at;
    while (end < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_'))
      ++end;
    std::string name = text.substr(at, end - at);
    pos = end;
    if (is_function(name)) {
      if (peek() != '(') fail("function '" + name + "' expects '('", pos);
      ++pos;
      NodePtr arg = expr();
      if (peek() != ')') fail("expected ')'", pos);
      ++pos;
      return node_call(std::move(name), std::move(arg));
    }
    return node_var(std::move(name));
  }
};

}  // namespace

Expr parse_expr(const std::string& text) {
  Parser p{text};
  return Expr(p.parse());
}

// ---------------------------------------------------------------------------
// printing

namespace {

int precedence(Kind k) {
  switch (k) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void print_node(const ExprNode* n, std::string& out);

void print_child(const ExprNode* c, int parent_prec, bool paren_at_equal,
                 std::string& out) {
  int p = precedence(c->kind);
  bool paren = p < parent_prec || (paren_at_equal && p == parent_prec);
  if (paren) out += '(';
  print_node(c, out);
  if (paren) out += ')';
}

void print_node(const ExprNode* n, std::string& out) {
  switch (n->kind) {
    case Kind::Number:
      if (n->value < 0 || std::signbit(n->value)) {
        out += '(';
        out += format_number(n->value);
        out += ')';
      } else {
        out += format_number(n->value);
      }
      break;
    case Kind::Var: out += n->name; break;
    case Kind::Neg:
      out += '-';
      print_child(n->a.get(), precedence(Kind::Neg), false, out);
      break;
    case Kind::Add:
    case Kind::Sub: {
      int p = precedence(n->kind);
      print_child(n->a.get(), p, false, out);
      out += (n->kind == Kind::Add) ? " + " : " - ";
      print_child(n->b.get(), p, true, out);
      break;
    }
    case Kind::Mul:
    case Kind::Div: {
      int p = precedence(n->kind);
      print_child(n->a.get(), p, false, out);
      out += (n->kind == Kind::Mul) ? "*" : "/";
      print_child(n->b.get(), p, true, out);
      break;
    }
    case Kind::Pow:
      print_child(n->a.get(), precedence(Kind::Pow), true, out);  // left needs parens
      out += '^';
      print_child(n->b.get(), precedence(Kind::Pow), false, out);
      break;
    case Kind::Call:
      out += n->name;
      out += '(';
      print_node(n->a.get(), out);
      out += ')';
      break;
  }
}

}  // namespace

std::string Expr::to_string() const {
  if (!node_) return "0";
  std::string out;
  print_node(node_.get(), out);
  return out;
}

// ---------------------------------------------------------------------------
// symbolic derivative

namespace {

NodePtr diff(const NodePtr& n, const std::string& var) {
  switch (n->kind) {
    case Kind::Number: return node_number(0.0);
    case Kind::Var: return node_number(n->name == var ? 1.0 : 0.0);
    case Kind::Neg: {
      NodePtr d = diff(n->a, var);
      if (is_const(d, 0.0)) return d;
      return node_neg(std::move(d));
    }
    case Kind::Add: return fadd(diff(n->a, var), diff(n->b, var));
    case Kind::Sub: return fsub(diff(n->a, var), diff(n->b, var));
    case Kind::Mul:
      return fadd(fmul(diff(n->a, var), n->b), fmul(n->a, diff(n->b, var)));
    case Kind::Div:
      return fdiv(fsub(fmul(diff(n->a, var), n->b), fmul(n->a, diff(n->b, var))),
                  fmul(n->b, n->b));
    case Kind::Pow: {
      if (n->b->kind == Kind::Number) {  // power rule for constant exponents
        double k = n->b->value;
        if (k == 0.0) return node_number(0.0);
        NodePtr p = (k == 1.0) ? node_number(1.0)
                               : node_bin(Kind::Pow, n->a, node_number(k - 1.0));
        return fmul(fmul(node_number(k), std::move(p)), diff(n->a, var));
      }
      // a^b * (b' log a + b a'/a)
      NodePtr ab = node_bin(Kind::Pow, n->a, n->b);
      NodePtr lhs = fmul(diff(n->b, var), node_call("log", n->a));
      NodePtr rhs = fdiv(fmul(n->b, diff(n->a, var)), n->a);
      return fmul(std::move(ab), fadd(std::move(lhs), std::move(rhs)));
    }
    case Kind::Call: {
      NodePtr da = diff(n->a, var);
      if (is_const(da, 0.0)) return da;
      const std::string& f = n->name;
      if (f == "sin") return fmul(node_call("cos", n->a), std::move(da));
      if (f == "cos") return node_neg(fmul(node_call("sin", n->a), std::move(da)));
      if (f == "tan") {
        NodePtr c = node_call("cos", n->a);
        return fdiv(std::move(da), fmul(c, c));
      }
      if (f == "exp") return fmul(node_call("exp", n->a), std::move(da));
      if (f == "log") return fdiv(std::move(da), n->a);
      if (f == "sqrt")
        return fdiv(std::move(da), fmul(node_number(2.0), node_call("sqrt", n->a)));
      if (f == "cosh") return fmul(node_call("sinh", n->a), std::move(da));
      if (f == "sinh") return fmul(node_call("cosh", n->a), std::move(da));
      throw BindError("cannot differentiate unknown function '" + f + "'");
    }
  }
  throw BindError("cannot differentiate malformed expression");
}

}  // namespace

Expr Expr::derivative(const std::string& var) const {
  if (!node_) return Expr::number(0.0);
  return Expr(diff(node_, var));
}

// ---------------------------------------------------------------------------
// variable table

VarTable VarTable::chart(int dim) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(dim));
  for (int i = 1; i <= dim; ++i) names.push_back("x" + std::to_string(i));
  return VarTable(std::move(names));
}

void VarTable::add_alias(const std::string& alias, int slot) {
  aliases_.emplace_back(alias, slot);
}

int VarTable::slot(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  for (const auto& [a, s] : aliases_)
    if (a == name) return s;
  return -1;
}

// ---------------------------------------------------------------------------
// compilation and evaluation

namespace {

enum Op {
  kPushConst,
  kPushVar,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPowInt,  // slot holds the integer exponent
  kPow,
  kSin,
  kCos,
  kTan,
  kExp,
  kLog,
  kSqrt,
  kCosh,
  kSinh,
};

double pow_int(double x, int k) {
  if (k < 0) return 1.0 / pow_int(x, -k);
  double r = 1.0, b = x;
  while (k > 0) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  return r;
}

}  // namespace

Prog compile_expr(const Expr& e, const VarTable& vars) {
  Prog prog;
  if (!e.node()) throw BindError("cannot compile empty expression");

  struct Builder {
    std::vector<Prog::Instr>& code;
    const VarTable& vars;
    int depth = 0, max_depth = 0;

    void push(int op, double value = 0.0, int slot = 0) {
      code.push_back({op, value, slot});
    }
    void grow() { max_depth = std::max(max_depth, ++depth); }

    void emit(const ExprNode* n) {
      switch (n->kind) {
        case Kind::Number:
          push(kPushConst, n->value);
          grow();
          break;
        case Kind::Var: {
          int s = vars.slot(n->name);
          if (s < 0) throw BindError("unknown identifier '" + n->name + "'");
          push(kPushVar, 0.0, s);
          grow();
          break;
        }
        case Kind::Neg:
          emit(n->a.get());
          push(kNeg);
          break;
        case Kind::Add: binary(n, kAdd); break;
        case Kind::Sub: binary(n, kSub); break;
        case Kind::Mul: binary(n, kMul); break;
        case Kind::Div: binary(n, kDiv); break;
        case Kind::Pow: {
          emit(n->a.get());
          const ExprNode* b = n->b.get();
          bool neg = false;
          if (b->kind == Kind::Neg) {  // x^-2 style exponents
            neg = true;
            b = b->a.get();
          }
          if (b->kind == Kind::Number && b->value == static_cast<int>(b->value) &&
              std::abs(b->value) <= 64) {
            int k = static_cast<int>(b->value);
            push(kPowInt, 0.0, neg ? -k : k);
          } else {
            emit(n->b.get());
            push(kPow);
            --depth;
          }
          break;
        }
        case Kind::Call: {
          emit(n->a.get());
          const std::string& f = n->name;
          if (f == "sin") push(kSin);
          else if (f == "cos") push(kCos);
          else if (f == "tan") push(kTan);
          else if (f == "exp") push(kExp);
          else if (f == "log") push(kLog);
          else if (f == "sqrt") push(kSqrt);
          else if (f == "cosh") push(kCosh);
          else if (f == "sinh") push(kSinh);
          else throw BindError("unknown function '" + f + "'");
          break;
        }
      }
    }

    void binary(const ExprNode* n, int op) {
      emit(n->a.get());
      emit(n->b.get());
      push(op);
      --depth;
    }
  };

  Builder b{prog.code_, vars};
  b.emit(e.node());
  prog.max_stack_ = b.max_depth;
  return prog;
}

double Prog::eval(const double* vars, int nvars) const {
  double stack[64];
  int sp = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case kPushConst: stack[sp++] = in.value; break;
      case kPushVar:
        stack[sp++] = (in.slot < nvars) ? vars[in.slot] : 0.0;
        break;
      case kAdd: --sp; stack[sp - 1] += stack[sp]; break;
      case kSub: --sp; stack[sp - 1] -= stack[sp]; break;
      case kMul: --sp; stack[sp - 1] *= stack[sp]; break;
      case kDiv: --sp; stack[sp - 1] /= stack[sp]; break;
      case kNeg: stack[sp - 1] = -stack[sp - 1]; break;
      case kPowInt: stack[sp - 1] = pow_int(stack[sp - 1], in.slot); break;
      case kPow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
      case kSin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
      case kCos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
      case kTan: stack[sp - 1] = std::tan(stack[sp - 1]); break;
      case kExp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
      case kLog: stack[sp - 1] = std::log(stack[sp - 1]); break;
      case kSqrt: stack[sp - 1] = std::sqrt(stack[sp - 1]); break;
      case kCosh: stack[sp - 1] = std::cosh(stack[sp - 1]); break;
      case kSinh: stack[sp - 1] = std::sinh(stack[sp - 1]); break;
    }
  }
  return sp > 0 ? stack[0] : 0.0;
}

}  // namespace rollhol
