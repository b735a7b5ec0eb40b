#include "toricbern/expr.hpp"

#include "toricbern/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <system_error>

namespace toricbern {

using NodePtr = std::shared_ptr<const Expr::Node>;

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = 0;
  NodePtr lhs;
  NodePtr rhs;
};

namespace {

using Op = Expr::Op;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Const;
  n->value = v;
  return n;
}

NodePtr make_var(int index) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Var;
  n->index = index;
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }
bool is_const(const NodePtr& n) { return n->op == Op::Const; }

double apply_fn(Op op, double a) {
  switch (op) {
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Tanh: return std::tanh(a);
    case Op::Log:
      if (!(a > 0.0)) throw DomainError(fmt::format("log of non-positive value {}", a));
      return std::log(a);
    case Op::Sqrt:
      if (a < 0.0) throw DomainError(fmt::format("sqrt of negative value {}", a));
      return std::sqrt(a);
    default: throw std::logic_error("apply_fn: not a function");
  }
}

double integer_power(double base, long long n) {
  if (n < 0) {
    if (base == 0.0) throw DomainError("zero raised to a negative power");
    return 1.0 / integer_power(base, -n);
  }
  double result = 1.0;
  double sq = base;
  while (n > 0) {
    if (n & 1) result *= sq;
    sq *= sq;
    n >>= 1;
  }
  return result;
}

double apply_pow(double base, double exponent) {
  if (std::nearbyint(exponent) == exponent && std::abs(exponent) <= 64.0) {
    return integer_power(base, static_cast<long long>(exponent));
  }
  if (base > 0.0) return std::pow(base, exponent);
  if (base == 0.0 && exponent > 0.0) return 0.0;
  throw DomainError(fmt::format("non-integer power {} of non-positive base {}", exponent, base));
}

double apply_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
      if (b == 0.0) throw DomainError("division by zero");
      return a / b;
    case Op::Pow: return apply_pow(a, b);
    default: throw std::logic_error("apply_binary: not a binary operator");
  }
}

// Folding only happens when the result is an ordinary finite number, so the
// folded tree raises the same domain errors as the unfolded one would.
bool try_fold(Op op, double a, double b, double& out) {
  try {
    out = apply_binary(op, a, b);
  } catch (const DomainError&) {
    return false;
  }
  return std::isfinite(out);
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b);
NodePtr make_neg(NodePtr a);

NodePtr raw_binary(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  double folded = 0.0;
  if (is_const(a) && is_const(b) && try_fold(op, a->value, b->value, folded)) return make_const(folded);
  switch (op) {
    case Op::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case Op::Sub:
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return make_neg(b);
      break;
    case Op::Mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      if (is_const(a, -1.0)) return make_neg(b);
      if (is_const(b, -1.0)) return make_neg(a);
      break;
    case Op::Div:
      if (is_const(a, 0.0) && !is_const(b, 0.0)) return make_const(0.0);
      if (is_const(b, 1.0)) return a;
      break;
    case Op::Pow:
      if (is_const(b, 0.0)) return make_const(1.0);
      if (is_const(b, 1.0)) return a;
      break;
    default: break;
  }
  return raw_binary(op, std::move(a), std::move(b));
}

NodePtr make_neg(NodePtr a) {
  if (is_const(a)) return make_const(-a->value);
  if (a->op == Op::Neg) return a->lhs;
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::Neg;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_fn(Op op, NodePtr a) {
  if (is_const(a)) {
    try {
      double v = apply_fn(op, a->value);
      if (std::isfinite(v)) return make_const(v);
    } catch (const DomainError&) {
    }
  }
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->lhs = std::move(a);
  return n;
}

NodePtr add(NodePtr a, NodePtr b) { return make_binary(Op::Add, std::move(a), std::move(b)); }
NodePtr sub(NodePtr a, NodePtr b) { return make_binary(Op::Sub, std::move(a), std::move(b)); }
NodePtr mul(NodePtr a, NodePtr b) { return make_binary(Op::Mul, std::move(a), std::move(b)); }
NodePtr divide(NodePtr a, NodePtr b) { return make_binary(Op::Div, std::move(a), std::move(b)); }
NodePtr power(NodePtr a, NodePtr b) { return make_binary(Op::Pow, std::move(a), std::move(b)); }

double eval_node(const Expr::Node& n, std::span<const double> x) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[static_cast<std::size_t>(n.index)];
    case Op::Neg: return -eval_node(*n.lhs, x);
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow: return apply_binary(n.op, eval_node(*n.lhs, x), eval_node(*n.rhs, x));
    default: return apply_fn(n.op, eval_node(*n.lhs, x));
  }
}

NodePtr diff(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::Const: return make_const(0.0);
    case Op::Var: return make_const(n->index == var ? 1.0 : 0.0);
    case Op::Neg: return make_neg(diff(n->lhs, var));
    case Op::Add: return add(diff(n->lhs, var), diff(n->rhs, var));
    case Op::Sub: return sub(diff(n->lhs, var), diff(n->rhs, var));
    case Op::Mul: return add(mul(diff(n->lhs, var), n->rhs), mul(n->lhs, diff(n->rhs, var)));
    case Op::Div: {
      auto da = diff(n->lhs, var);
      auto db = diff(n->rhs, var);
      if (is_const(db, 0.0)) return divide(da, n->rhs);
      return divide(sub(mul(da, n->rhs), mul(n->lhs, db)), mul(n->rhs, n->rhs));
    }
    case Op::Pow: {
      const auto& base = n->lhs;
      const auto& expo = n->rhs;
      auto db = diff(base, var);
      auto de = diff(expo, var);
      if (is_const(de, 0.0)) {
        // c * u^(c-1) * u'
        return mul(mul(expo, power(base, sub(expo, make_const(1.0)))), db);
      }
      // u^v * (v' log u + v u' / u)
      return mul(n, add(mul(de, make_fn(Op::Log, base)), divide(mul(expo, db), base)));
    }
    case Op::Sin: return mul(make_fn(Op::Cos, n->lhs), diff(n->lhs, var));
    case Op::Cos: return mul(make_neg(make_fn(Op::Sin, n->lhs)), diff(n->lhs, var));
    case Op::Exp: return mul(n, diff(n->lhs, var));
    case Op::Log: return divide(diff(n->lhs, var), n->lhs);
    case Op::Sqrt: return divide(diff(n->lhs, var), mul(make_const(2.0), n));
    case Op::Tanh:
      return mul(sub(make_const(1.0), power(n, make_const(2.0))), diff(n->lhs, var));
  }
  throw std::logic_error("diff: unknown node");
}

// Printing precedence: 1 sum, 2 product, 3 unary minus, 4 power, 5 atom.
int precedence(const Expr::Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return n.value < 0.0 ? 0 : 5;
    default: return 5;
  }
}

const char* fn_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Tanh: return "tanh";
    default: return "?";
  }
}

void print(const Expr::Node& n, std::string& out);

void print_child(const Expr::Node& child, int min_prec, std::string& out) {
  if (precedence(child) < min_prec) {
    out += '(';
    print(child, out);
    out += ')';
  } else {
    print(child, out);
  }
}

void print(const Expr::Node& n, std::string& out) {
  switch (n.op) {
    case Op::Const: out += fmt::format("{:.17g}", n.value); return;
    case Op::Var: out += fmt::format("x{}", n.index + 1); return;
    case Op::Neg:
      out += '-';
      print_child(*n.lhs, 3, out);
      return;
    case Op::Add:
    case Op::Sub:
      print_child(*n.lhs, 1, out);
      out += n.op == Op::Add ? " + " : " - ";
      print_child(*n.rhs, 2, out);
      return;
    case Op::Mul:
    case Op::Div:
      print_child(*n.lhs, 2, out);
      out += n.op == Op::Mul ? "*" : "/";
      print_child(*n.rhs, 3, out);
      return;
    case Op::Pow:
      print_child(*n.lhs, 5, out);
      out += '^';
      print_child(*n.rhs, 3, out);
      return;
    default:
      out += fn_name(n.op);
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
  }
}

class Parser {
public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  NodePtr parse() {
    auto root = sum();
    skip_ws();
    if (pos_ != text_.size()) throw SyntaxError(fmt::format("unexpected '{}'", text_[pos_]), pos_);
    return root;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw SyntaxError(fmt::format("expected '{}' but reached end of input", c), pos_);
      throw SyntaxError(fmt::format("expected '{}'", c), pos_);
    }
  }

  NodePtr sum() {
    auto lhs = product();
    while (true) {
      if (accept('+')) {
        lhs = raw_binary(Op::Add, lhs, product());
      } else if (accept('-')) {
        lhs = raw_binary(Op::Sub, lhs, product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr product() {
    auto lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = raw_binary(Op::Mul, lhs, unary());
      } else if (accept('/')) {
        lhs = raw_binary(Op::Div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto inner = unary();
      auto n = std::make_shared<Expr::Node>();
      n->op = Op::Neg;
      n->lhs = std::move(inner);
      return n;
    }
    if (accept('+')) return unary();
    return power_expr();
  }

  NodePtr power_expr() {
    auto base = primary();
    if (accept('^')) return raw_binary(Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto inner = sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw SyntaxError(fmt::format("unexpected '{}'", c), pos_);
  }

  NodePtr number() {
    const std::size_t start = pos_;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) throw SyntaxError("malformed number", start);
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return make_const(value);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    std::string_view name = text_.substr(start, pos_ - start);

    static constexpr std::pair<std::string_view, Op> functions[] = {
        {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp}, {"log", Op::Log}, {"sqrt", Op::Sqrt}, {"tanh", Op::Tanh}};
    for (const auto& [fname, op] : functions) {
      if (name == fname) {
        expect('(');
        auto arg = sum();
        expect(')');
        auto n = std::make_shared<Expr::Node>();
        n->op = op;
        n->lhs = std::move(arg);
        return n;
      }
    }
    if (name == "pi") return make_const(std::numbers::pi);
    if (name == "e") return make_const(std::numbers::e);
    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int index = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (ec != std::errc() || index < 1 || index > dim_) {
        throw VariableOutOfRange(fmt::format("variable '{}' out of range for dimension {} (offset {})", name, dim_, start));
      }
      return make_var(index - 1);
    }
    throw UnknownIdentifier(fmt::format("unknown identifier '{}' at offset {}", name, start));
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr Expr::parse(std::string_view text, int dim) {
  if (dim < 1) throw std::invalid_argument("Expr::parse: dimension must be >= 1");
  return Expr(Parser(text, dim).parse(), dim);
}

Expr Expr::constant(double value, int dim) { return Expr(make_const(value), dim); }

Expr Expr::variable(int index, int dim) {
  if (index < 0 || index >= dim) throw VariableOutOfRange(fmt::format("variable index {} out of range", index));
  return Expr(make_var(index), dim);
}

Expr::Op Expr::op() const noexcept { return root_->op; }

bool Expr::is_zero() const noexcept { return root_->op == Op::Const && root_->value == 0.0; }

double Expr::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) {
    throw DimensionMismatch(fmt::format("expression expects {} coordinates, got {}", dim_, x.size()));
  }
  return eval_node(*root_, x);
}

Expr Expr::derivative(int var) const {
  if (var < 0 || var >= dim_) throw VariableOutOfRange(fmt::format("derivative variable {} out of range", var));
  return Expr(diff(root_, var), dim_);
}

std::string Expr::to_string() const {
  std::string out;
  print(*root_, out);
  return out;
}

}  // namespace toricbern
