#pragma once

#include <cctype>
#include <charconv>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cqrlab/errors.hpp"
#include "cqrlab/jet.hpp"

namespace cqr {

enum class UnaryFn { Neg, Sin, Cos, Sinh, Cosh, Exp, Log, Sqrt };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

// Closed-form scalar expression over chart coordinates and named parameters.
// The AST is immutable after parsing and freely shareable across threads.
struct ExprNode {
  enum class Kind { Constant, Coordinate, Parameter, Unary, Binary } kind;
  double value = 0.0;                     // Constant
  int coord = -1;                         // Coordinate
  std::string name;                       // Parameter
  UnaryFn fn = UnaryFn::Neg;              // Unary
  BinaryOp op = BinaryOp::Add;            // Binary
  std::shared_ptr<const ExprNode> lhs, rhs;
};

class Expression {
 public:
  Expression() = default;
  explicit Expression(std::shared_ptr<const ExprNode> root) : root_(std::move(root)) {}

  bool empty() const { return root_ == nullptr; }
  const ExprNode& root() const { return *root_; }
  std::shared_ptr<const ExprNode> root_ptr() const { return root_; }

  static Expression constant(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Constant;
    n->value = v;
    return Expression(n);
  }
  static Expression coordinate(int i) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Coordinate;
    n->coord = i;
    return Expression(n);
  }
  static Expression parameter(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Parameter;
    n->name = std::move(name);
    return Expression(n);
  }
  static Expression unary(UnaryFn fn, const Expression& a) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Unary;
    n->fn = fn;
    n->lhs = a.root_;
    return Expression(n);
  }
  static Expression binary(BinaryOp op, const Expression& a, const Expression& b) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprNode::Kind::Binary;
    n->op = op;
    n->lhs = a.root_;
    n->rhs = b.root_;
    return Expression(n);
  }

 private:
  std::shared_ptr<const ExprNode> root_;
};

namespace detail {

inline const char* unary_name(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::Neg: return "-";
    case UnaryFn::Sin: return "sin";
    case UnaryFn::Cos: return "cos";
    case UnaryFn::Sinh: return "sinh";
    case UnaryFn::Cosh: return "cosh";
    case UnaryFn::Exp: return "exp";
    case UnaryFn::Log: return "log";
    case UnaryFn::Sqrt: return "sqrt";
  }
  return "?";
}

inline std::string format_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// the exponent of '^' must fold to a real literal (optionally negated)
inline bool fold_constant(const ExprNode& n, double& out) {
  if (n.kind == ExprNode::Kind::Constant) {
    out = n.value;
    return true;
  }
  if (n.kind == ExprNode::Kind::Unary && n.fn == UnaryFn::Neg) {
    double inner;
    if (fold_constant(*n.lhs, inner)) {
      out = -inner;
      return true;
    }
  }
  return false;
}

// Precedence levels for printing: + - (1), * / (2), unary - (3), ^ (4).
// A node is parenthesized when its level is below the context level; the
// right operand of the left-associative operators gets a bumped context so
// the printed text reparses to the identical tree.
inline void print_node(const ExprNode& n, std::string& out, int context,
                       const std::vector<std::string>& coords) {
  switch (n.kind) {
    case ExprNode::Kind::Constant: {
      bool paren = n.value < 0 && context > 3;
      if (paren) out += "(";
      out += format_number(n.value);
      if (paren) out += ")";
      return;
    }
    case ExprNode::Kind::Coordinate:
      out += coords[static_cast<std::size_t>(n.coord)];
      return;
    case ExprNode::Kind::Parameter:
      out += n.name;
      return;
    case ExprNode::Kind::Unary: {
      if (n.fn == UnaryFn::Neg) {
        bool paren = context > 3;
        if (paren) out += "(";
        out += "-";
        print_node(*n.lhs, out, 3, coords);
        if (paren) out += ")";
      } else {
        out += unary_name(n.fn);
        out += "(";
        print_node(*n.lhs, out, 0, coords);
        out += ")";
      }
      return;
    }
    case ExprNode::Kind::Binary: {
      int level = 0, lhs_ctx = 0, rhs_ctx = 0;
      const char* sym = "";
      switch (n.op) {
        case BinaryOp::Add: level = 1; lhs_ctx = 1; rhs_ctx = 2; sym = " + "; break;
        case BinaryOp::Sub: level = 1; lhs_ctx = 1; rhs_ctx = 2; sym = " - "; break;
        case BinaryOp::Mul: level = 2; lhs_ctx = 2; rhs_ctx = 3; sym = "*"; break;
        case BinaryOp::Div: level = 2; lhs_ctx = 2; rhs_ctx = 3; sym = "/"; break;
        case BinaryOp::Pow: level = 4; lhs_ctx = 5; rhs_ctx = 4; sym = "^"; break;
      }
      bool paren = level < context;
      if (paren) out += "(";
      print_node(*n.lhs, out, lhs_ctx, coords);
      out += sym;
      print_node(*n.rhs, out, rhs_ctx, coords);
      if (paren) out += ")";
      return;
    }
  }
}

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& coords,
         const std::vector<std::string>& params)
      : text_(text), coords_(coords), params_(params) {}

  Expression parse() {
    Expression e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw SyntaxError("unexpected trailing input", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool consume(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expression parse_expr() {
    Expression lhs = parse_term();
    for (;;) {
      if (consume('+')) {
        lhs = Expression::binary(BinaryOp::Add, lhs, parse_term());
      } else if (consume('-')) {
        lhs = Expression::binary(BinaryOp::Sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  Expression parse_term() {
    Expression lhs = parse_factor();
    for (;;) {
      if (consume('*')) {
        lhs = Expression::binary(BinaryOp::Mul, lhs, parse_factor());
      } else if (consume('/')) {
        lhs = Expression::binary(BinaryOp::Div, lhs, parse_factor());
      } else {
        return lhs;
      }
    }
  }

  // factor := unary ('^' factor)?  -- right-associative power
  Expression parse_factor() {
    Expression base = parse_unary();
    if (consume('^')) {
      std::size_t at = pos_;
      Expression exponent = parse_factor();
      double folded;
      if (!detail::fold_constant(exponent.root(), folded))
        throw SyntaxError("power exponent must be a numeric literal", at);
      return Expression::binary(BinaryOp::Pow, base, exponent);
    }
    return base;
  }

  Expression parse_unary() {
    if (consume('-')) return Expression::unary(UnaryFn::Neg, parse_unary());
    return parse_atom();
  }

  Expression parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expression e = parse_expr();
      if (!consume(')')) throw SyntaxError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw SyntaxError("unexpected character", pos_);
  }

  Expression parse_number() {
    std::size_t start = pos_;
    double v = 0.0;
    auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (res.ec != std::errc()) throw SyntaxError("malformed number", start);
    pos_ = static_cast<std::size_t>(res.ptr - text_.data());
    return Expression::constant(v);
  }

  Expression parse_ident() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (peek('(')) {
      static const std::map<std::string, UnaryFn> fns = {
          {"sin", UnaryFn::Sin},   {"cos", UnaryFn::Cos}, {"sinh", UnaryFn::Sinh},
          {"cosh", UnaryFn::Cosh}, {"exp", UnaryFn::Exp}, {"log", UnaryFn::Log},
          {"sqrt", UnaryFn::Sqrt}};
      auto it = fns.find(name);
      if (it == fns.end()) throw UnknownIdentifier(name, start);
      ++pos_;  // '('
      Expression arg = parse_expr();
      if (!consume(')')) throw SyntaxError("expected ')'", pos_);
      return Expression::unary(it->second, arg);
    }
    for (std::size_t i = 0; i < coords_.size(); ++i)
      if (coords_[i] == name) return Expression::coordinate(static_cast<int>(i));
    for (const auto& p : params_)
      if (p == name) return Expression::parameter(name);
    throw UnknownIdentifier(name, start);
  }

  std::string_view text_;
  const std::vector<std::string>& coords_;
  const std::vector<std::string>& params_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse_expression(std::string_view text,
                                   const std::vector<std::string>& coordinates,
                                   const std::vector<std::string>& parameter_names = {}) {
  return detail::Parser(text, coordinates, parameter_names).parse();
}

inline std::string to_string(const Expression& e, const std::vector<std::string>& coordinates) {
  if (e.empty()) return "";
  std::string out;
  detail::print_node(e.root(), out, 0, coordinates);
  return out;
}

// structural equality via the canonical printed form
inline bool equivalent(const Expression& a, const Expression& b,
                       const std::vector<std::string>& coordinates) {
  return to_string(a, coordinates) == to_string(b, coordinates);
}

inline Jet eval_jet_node(const ExprNode& n, const std::vector<Jet>& coord_jets,
                         const std::map<std::string, double>& params,
                         const std::shared_ptr<const JetLayout>& layout) {
  switch (n.kind) {
    case ExprNode::Kind::Constant:
      return Jet::constant(layout, n.value);
    case ExprNode::Kind::Coordinate:
      return coord_jets[static_cast<std::size_t>(n.coord)];
    case ExprNode::Kind::Parameter: {
      auto it = params.find(n.name);
      if (it == params.end()) throw UnknownIdentifier(n.name, 0);
      return Jet::constant(layout, it->second);
    }
    case ExprNode::Kind::Unary: {
      Jet a = eval_jet_node(*n.lhs, coord_jets, params, layout);
      switch (n.fn) {
        case UnaryFn::Neg: return -a;
        case UnaryFn::Sin: return sin(a);
        case UnaryFn::Cos: return cos(a);
        case UnaryFn::Sinh: return sinh(a);
        case UnaryFn::Cosh: return cosh(a);
        case UnaryFn::Exp: return exp(a);
        case UnaryFn::Log: return log(a);
        case UnaryFn::Sqrt: return sqrt(a);
      }
      throw DomainError("unreachable");
    }
    case ExprNode::Kind::Binary: {
      Jet a = eval_jet_node(*n.lhs, coord_jets, params, layout);
      if (n.op == BinaryOp::Pow) {
        double p;
        detail::fold_constant(*n.rhs, p);
        return pow(a, p);
      }
      Jet b = eval_jet_node(*n.rhs, coord_jets, params, layout);
      switch (n.op) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div: return a / b;
        default: break;
      }
      throw DomainError("unreachable");
    }
  }
  throw DomainError("unreachable");
}

// Evaluate the expression at a point carrying exact partials through the
// requested order.
inline Jet eval_jet(const Expression& e, const std::vector<double>& point,
                    const std::map<std::string, double>& params, int order) {
  auto layout = JetLayout::get(static_cast<int>(point.size()), order);
  std::vector<Jet> seeds;
  seeds.reserve(point.size());
  for (std::size_t i = 0; i < point.size(); ++i)
    seeds.push_back(Jet::variable(layout, static_cast<int>(i), point[i]));
  return eval_jet_node(e.root(), seeds, params, layout);
}

inline double eval_value(const Expression& e, const std::vector<double>& point,
                         const std::map<std::string, double>& params) {
  return eval_jet(e, point, params, 0).value();
}

}  // namespace cqr
