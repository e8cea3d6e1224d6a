#include "bolab/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "bolab/error.hpp"

namespace bolab {

using detail::ExprInstr;
using detail::ExprOp;

struct Expr::Node {
  ExprOp op;
  double value = 0.0;
  std::uint32_t index = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_num(double v) { return std::make_shared<const Expr::Node>(Expr::Node{ExprOp::Num, v, 0, nullptr, nullptr}); }
NodePtr make_var(std::uint32_t i) { return std::make_shared<const Expr::Node>(Expr::Node{ExprOp::Var, 0.0, i, nullptr, nullptr}); }

bool is_num(const NodePtr& n, double v) { return n->op == ExprOp::Num && n->value == v; }
bool is_num(const NodePtr& n) { return n->op == ExprOp::Num; }

struct FunctionName {
  std::string_view name;
  ExprOp op;
};

constexpr std::array<FunctionName, 8> kFunctions{{
    {"exp", ExprOp::Exp},
    {"log", ExprOp::Log},
    {"sin", ExprOp::Sin},
    {"cos", ExprOp::Cos},
    {"sqrt", ExprOp::Sqrt},
    {"abs", ExprOp::Abs},
    {"sign", ExprOp::Sign},
    {"rsqrt", ExprOp::Rsqrt},
}};

std::string_view function_name(ExprOp op) {
  for (const auto& f : kFunctions) {
    if (f.op == op) return f.name;
  }
  return "?";
}

double apply_function(ExprOp op, double u) {
  switch (op) {
    case ExprOp::Exp: return std::exp(u);
    case ExprOp::Log:
      if (!(u > 0.0)) throw Error(ErrorCode::DomainError, "log of non-positive value");
      return std::log(u);
    case ExprOp::Sin: return std::sin(u);
    case ExprOp::Cos: return std::cos(u);
    case ExprOp::Sqrt:
      if (u < 0.0) throw Error(ErrorCode::DomainError, "sqrt of negative value");
      return std::sqrt(u);
    case ExprOp::Abs: return std::abs(u);
    case ExprOp::Sign:
      if (u == 0.0) throw Error(ErrorCode::NonDifferentiable, "derivative of abs at 0");
      return u > 0.0 ? 1.0 : -1.0;
    case ExprOp::Rsqrt:
      if (u < 0.0) throw Error(ErrorCode::DomainError, "sqrt of negative value");
      if (u == 0.0) throw Error(ErrorCode::NonDifferentiable, "derivative of sqrt at 0");
      return 1.0 / std::sqrt(u);
    default: return 0.0;
  }
}

double apply_binary(ExprOp op, double a, double b) {
  switch (op) {
    case ExprOp::Add: return a + b;
    case ExprOp::Sub: return a - b;
    case ExprOp::Mul: return a * b;
    case ExprOp::Div:
      if (b == 0.0) throw Error(ErrorCode::DomainError, "division by zero");
      return a / b;
    case ExprOp::Pow: {
      const double r = std::pow(a, b);
      if (std::isnan(r) && !std::isnan(a) && !std::isnan(b)) {
        throw Error(ErrorCode::DomainError, "power of negative base with non-integer exponent");
      }
      if (a == 0.0 && b < 0.0) throw Error(ErrorCode::DomainError, "zero to a negative power");
      return r;
    }
    default: return 0.0;
  }
}

// Node builders with literal folding and identity elimination.
NodePtr make_unary(ExprOp op, NodePtr a) {
  if (op == ExprOp::Neg) {
    if (is_num(a)) return make_num(-a->value);
    if (a->op == ExprOp::Neg) return a->lhs;
  }
  return std::make_shared<const Expr::Node>(Expr::Node{op, 0.0, 0, std::move(a), nullptr});
}

NodePtr make_binary(ExprOp op, NodePtr a, NodePtr b) {
  if (is_num(a) && is_num(b)) {
    // Division or power that would fail stays symbolic so the error surfaces at eval.
    const bool safe = !(op == ExprOp::Div && b->value == 0.0) &&
                      !(op == ExprOp::Pow && (a->value < 0.0 || (a->value == 0.0 && b->value < 0.0)));
    if (safe) return make_num(apply_binary(op, a->value, b->value));
  }
  switch (op) {
    case ExprOp::Add:
      if (is_num(a, 0.0)) return b;
      if (is_num(b, 0.0)) return a;
      break;
    case ExprOp::Sub:
      if (is_num(b, 0.0)) return a;
      if (is_num(a, 0.0)) return make_unary(ExprOp::Neg, b);
      break;
    case ExprOp::Mul:
      if (is_num(a, 0.0) || is_num(b, 0.0)) return make_num(0.0);
      if (is_num(a, 1.0)) return b;
      if (is_num(b, 1.0)) return a;
      if (is_num(a, -1.0)) return make_unary(ExprOp::Neg, b);
      if (is_num(b, -1.0)) return make_unary(ExprOp::Neg, a);
      break;
    case ExprOp::Div:
      if (is_num(b, 1.0)) return a;
      break;
    case ExprOp::Pow:
      if (is_num(b, 1.0)) return a;
      if (is_num(b, 0.0)) return make_num(1.0);
      break;
    default: break;
  }
  return std::make_shared<const Expr::Node>(Expr::Node{op, 0.0, 0, std::move(a), std::move(b)});
}

NodePtr differentiate(const NodePtr& n, std::uint32_t var) {
  const auto& u = n->lhs;
  const auto& v = n->rhs;
  switch (n->op) {
    case ExprOp::Num: return make_num(0.0);
    case ExprOp::Var: return make_num(n->index == var ? 1.0 : 0.0);
    case ExprOp::Neg: return make_unary(ExprOp::Neg, differentiate(u, var));
    case ExprOp::Add: return make_binary(ExprOp::Add, differentiate(u, var), differentiate(v, var));
    case ExprOp::Sub: return make_binary(ExprOp::Sub, differentiate(u, var), differentiate(v, var));
    case ExprOp::Mul:
      return make_binary(ExprOp::Add, make_binary(ExprOp::Mul, differentiate(u, var), v),
                         make_binary(ExprOp::Mul, u, differentiate(v, var)));
    case ExprOp::Div: {
      // (u'v - uv') / v^2
      auto num = make_binary(ExprOp::Sub, make_binary(ExprOp::Mul, differentiate(u, var), v),
                             make_binary(ExprOp::Mul, u, differentiate(v, var)));
      return make_binary(ExprOp::Div, num, make_binary(ExprOp::Pow, v, make_num(2.0)));
    }
    case ExprOp::Pow: {
      auto du = differentiate(u, var);
      if (is_num(v)) {
        return make_binary(ExprOp::Mul,
                           make_binary(ExprOp::Mul, make_num(v->value),
                                       make_binary(ExprOp::Pow, u, make_num(v->value - 1.0))),
                           du);
      }
      auto dv = differentiate(v, var);
      if (is_num(u)) {
        return make_binary(ExprOp::Mul, make_binary(ExprOp::Mul, n, make_num(std::log(u->value))), dv);
      }
      // u^v (v' log u + v u'/u)
      auto inner = make_binary(ExprOp::Add, make_binary(ExprOp::Mul, dv, make_unary(ExprOp::Log, u)),
                               make_binary(ExprOp::Div, make_binary(ExprOp::Mul, v, du), u));
      return make_binary(ExprOp::Mul, n, inner);
    }
    case ExprOp::Exp: return make_binary(ExprOp::Mul, n, differentiate(u, var));
    case ExprOp::Log: return make_binary(ExprOp::Div, differentiate(u, var), u);
    case ExprOp::Sin:
      return make_binary(ExprOp::Mul, make_unary(ExprOp::Cos, u), differentiate(u, var));
    case ExprOp::Cos:
      return make_unary(ExprOp::Neg,
                        make_binary(ExprOp::Mul, make_unary(ExprOp::Sin, u), differentiate(u, var)));
    case ExprOp::Sqrt:
      return make_binary(ExprOp::Mul, make_binary(ExprOp::Mul, make_num(0.5), make_unary(ExprOp::Rsqrt, u)),
                         differentiate(u, var));
    case ExprOp::Abs: return make_binary(ExprOp::Mul, make_unary(ExprOp::Sign, u), differentiate(u, var));
    case ExprOp::Sign: return make_num(0.0);
    case ExprOp::Rsqrt:
      // d/du u^{-1/2} = -1/2 u^{-3/2}
      return make_binary(ExprOp::Mul,
                         make_binary(ExprOp::Mul, make_num(-0.5),
                                     make_binary(ExprOp::Pow, make_unary(ExprOp::Rsqrt, u), make_num(3.0))),
                         differentiate(u, var));
  }
  return make_num(0.0);
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", std::abs(v));
  std::string s = buf;
  if (std::signbit(v)) return "(-" + s + ")";
  return s;
}

void print(const NodePtr& n, const std::vector<std::string>& vars, std::string& out) {
  switch (n->op) {
    case ExprOp::Num: out += format_number(n->value); return;
    case ExprOp::Var: out += vars[n->index]; return;
    case ExprOp::Neg:
      out += "(-";
      print(n->lhs, vars, out);
      out += ")";
      return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div:
    case ExprOp::Pow: {
      static constexpr std::string_view sym = "+-*/^";
      out += "(";
      print(n->lhs, vars, out);
      out += ' ';
      out += sym[static_cast<int>(n->op) - static_cast<int>(ExprOp::Add)];
      out += ' ';
      print(n->rhs, vars, out);
      out += ")";
      return;
    }
    default:
      out += function_name(n->op);
      out += "(";
      print(n->lhs, vars, out);
      out += ")";
      return;
  }
}

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars) : text_(text), vars_(vars) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ == text_.size()) throw Error(ErrorCode::SyntaxError, "empty expression", pos_);
    auto n = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::SyntaxError, what + " at offset " + std::to_string(pos_), pos_);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                                   text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    auto lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(ExprOp::Add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary(ExprOp::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(ExprOp::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(ExprOp::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_unary(ExprOp::Neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    if (accept('^')) return make_binary(ExprOp::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ == text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = parse_expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if ((c >= '0' && c <= '9') || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr parse_number() {
    double value = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return make_num(value);
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = text_.substr(start, pos_ - start);
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) return make_var(static_cast<std::uint32_t>(i));
    }
    for (const auto& f : kFunctions) {
      if (f.name == name) {
        if (!accept('(')) fail("expected '(' after function name");
        auto arg = parse_expr();
        if (!accept(')')) fail("expected ')'");
        return make_unary(f.op, arg);
      }
    }
    if (name == "pi") return make_num(std::numbers::pi);
    throw Error(ErrorCode::UnknownIdentifier,
                "unknown identifier '" + std::string(name) + "' at offset " + std::to_string(start), start);
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

void emit(const NodePtr& n, std::vector<ExprInstr>& prog, std::size_t depth, std::size_t& max_depth) {
  switch (n->op) {
    case ExprOp::Num:
    case ExprOp::Var:
      prog.push_back({n->op, n->index, n->value});
      max_depth = std::max(max_depth, depth + 1);
      return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div:
    case ExprOp::Pow:
      emit(n->lhs, prog, depth, max_depth);
      emit(n->rhs, prog, depth + 1, max_depth);
      prog.push_back({n->op, 0, 0.0});
      return;
    default:
      emit(n->lhs, prog, depth, max_depth);
      prog.push_back({n->op, 0, 0.0});
      return;
  }
}

bool references(const NodePtr& n, std::uint32_t var) {
  if (!n) return false;
  if (n->op == ExprOp::Var) return n->index == var;
  return references(n->lhs, var) || references(n->rhs, var);
}

}  // namespace

Expr::Expr(std::shared_ptr<const Node> root, std::vector<std::string> vars)
    : root_(std::move(root)), vars_(std::move(vars)) {
  compile();
}

Expr Expr::parse(std::string_view text, std::vector<std::string> vars) {
  Parser p(text, vars);
  auto root = p.parse();
  return Expr(std::move(root), std::move(vars));
}

Expr Expr::constant(double value, std::vector<std::string> vars) { return Expr(make_num(value), std::move(vars)); }

void Expr::compile() {
  program_.clear();
  max_depth_ = 0;
  if (root_) emit(root_, program_, 0, max_depth_);
}

double Expr::eval(std::span<const double> point) const {
  if (point.size() != vars_.size()) {
    throw Error(ErrorCode::InvalidParameter, "expression expects " + std::to_string(vars_.size()) +
                                                 " coordinates, got " + std::to_string(point.size()));
  }
  if (!root_) throw Error(ErrorCode::InvalidParameter, "empty expression");
  std::array<double, 64> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (max_depth_ > small.size()) {
    large.resize(max_depth_);
    stack = large.data();
  }
  std::size_t sp = 0;
  for (const auto& in : program_) {
    switch (in.op) {
      case ExprOp::Num: stack[sp++] = in.value; break;
      case ExprOp::Var: stack[sp++] = point[in.index]; break;
      case ExprOp::Neg: stack[sp - 1] = -stack[sp - 1]; break;
      case ExprOp::Add:
      case ExprOp::Sub:
      case ExprOp::Mul:
      case ExprOp::Div:
      case ExprOp::Pow:
        --sp;
        stack[sp - 1] = apply_binary(in.op, stack[sp - 1], stack[sp]);
        break;
      default: stack[sp - 1] = apply_function(in.op, stack[sp - 1]); break;
    }
  }
  return stack[0];
}

Expr Expr::derive(std::string_view var) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i] == var) return derive(i);
  }
  throw Error(ErrorCode::UnknownIdentifier, "no variable named '" + std::string(var) + "'");
}

Expr Expr::derive(std::size_t var_index) const {
  if (var_index >= vars_.size()) throw Error(ErrorCode::UnknownIdentifier, "variable index out of range");
  return Expr(differentiate(root_, static_cast<std::uint32_t>(var_index)), vars_);
}

std::string Expr::to_string() const {
  std::string out;
  if (root_) print(root_, vars_, out);
  return out;
}

bool Expr::independent_of(std::size_t var_index) const {
  return !references(root_, static_cast<std::uint32_t>(var_index));
}

}  // namespace bolab
