#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fidcurve/dual.hpp"
#include "fidcurve/errors.hpp"

namespace fidcurve {

// Scalar math expressions in named variables. Grammar:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := atom ('^' unary)?            right-associative, binds above '-'
//   atom    := number | name | name '(' expr ')' | '(' expr ')'
//
// Functions: sin cos exp log sqrt abs. Real literals only, ASCII text,
// whitespace insignificant, no implicit multiplication.
class Expression {
 public:
  enum class NodeKind : std::uint8_t {
    Constant,
    Variable,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Call
  };
  enum class Func : std::uint8_t { Sin, Cos, Exp, Log, Sqrt, Abs };

  struct Node {
    NodeKind kind;
    Func func = Func::Sin;  // Call only
    int lhs = -1;           // unary child / left operand / call argument
    int rhs = -1;           // right operand
    int var = -1;           // Variable: index into free_vars()
    double value = 0.0;     // Constant
  };

  static Expression parse(std::string_view source,
                          std::span<const std::string> allowed_vars);

  // Evaluates with `values[i]` bound to `free_vars()[i]`.
  double eval(std::span<const double> values) const;
  double eval(const std::map<std::string, double>& bindings) const;

  // Value and derivative with respect to the seed variable.
  Dual eval_dual(std::span<const double> values, int seed_slot) const;
  Dual eval_dual(const std::map<std::string, double>& bindings,
                 const std::string& seed) const;

  // Variables actually appearing, in order of first appearance.
  const std::vector<std::string>& free_vars() const { return vars_; }
  int var_slot(std::string_view name) const;

  // Canonical text form; parse(str()) reproduces the identical tree.
  std::string str() const;

  // Replaces every occurrence of `var` by `replacement`, yielding an
  // expression in the remaining variables plus the replacement's.
  Expression substitute(const std::string& var,
                        const Expression& replacement) const;

  bool same_tree(const Expression& other) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  int root() const { return root_; }

 private:
  Expression() = default;

  template <typename T>
  T eval_node(int idx, std::span<const T> values) const;

  void print_node(int idx, int parent_prec, bool rhs_of_parent,
                  std::string& out) const;

  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<std::string> vars_;
};

namespace detail {

struct Token {
  enum Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
  Kind kind;
  std::size_t offset;
  double value = 0.0;   // Number
  std::string text;     // Ident
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token& peek() const { return current_; }
  Token take() {
    Token t = current_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' ||
            src_[pos_] == '\r'))
      ++pos_;
    current_.offset = pos_;
    current_.text.clear();
    if (pos_ >= src_.size()) {
      current_.kind = Token::End;
      return;
    }
    const char c = src_[pos_];
    switch (c) {
      case '+': current_.kind = Token::Plus; ++pos_; return;
      case '-': current_.kind = Token::Minus; ++pos_; return;
      case '*': current_.kind = Token::Star; ++pos_; return;
      case '/': current_.kind = Token::Slash; ++pos_; return;
      case '^': current_.kind = Token::Caret; ++pos_; return;
      case '(': current_.kind = Token::LParen; ++pos_; return;
      case ')': current_.kind = Token::RParen; ++pos_; return;
      default: break;
    }
    if (c >= '0' && c <= '9') {
      lex_number();
      return;
    }
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
      std::size_t end = pos_;
      while (end < src_.size() &&
             ((src_[end] >= 'a' && src_[end] <= 'z') ||
              (src_[end] >= 'A' && src_[end] <= 'Z') ||
              (src_[end] >= '0' && src_[end] <= '9') || src_[end] == '_'))
        ++end;
      current_.kind = Token::Ident;
      current_.text.assign(src_.substr(pos_, end - pos_));
      pos_ = end;
      return;
    }
    throw ParseError(pos_, std::string("unexpected character '") + c + "'");
  }

  void lex_number() {
    std::size_t end = pos_;
    while (end < src_.size() && src_[end] >= '0' && src_[end] <= '9') ++end;
    if (end < src_.size() && src_[end] == '.') {
      ++end;
      while (end < src_.size() && src_[end] >= '0' && src_[end] <= '9') ++end;
    }
    if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
      std::size_t exp_start = end + 1;
      if (exp_start < src_.size() &&
          (src_[exp_start] == '+' || src_[exp_start] == '-'))
        ++exp_start;
      std::size_t exp_end = exp_start;
      while (exp_end < src_.size() && src_[exp_end] >= '0' &&
             src_[exp_end] <= '9')
        ++exp_end;
      if (exp_end > exp_start) end = exp_end;
    }
    double v = 0.0;
    const auto res =
        std::from_chars(src_.data() + pos_, src_.data() + end, v);
    if (res.ec != std::errc() || res.ptr != src_.data() + end)
      throw ParseError(pos_, "malformed number");
    current_.kind = Token::Number;
    current_.value = v;
    pos_ = end;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  Token current_;
};

inline bool is_function_name(std::string_view s, Expression::Func& out) {
  if (s == "sin") { out = Expression::Func::Sin; return true; }
  if (s == "cos") { out = Expression::Func::Cos; return true; }
  if (s == "exp") { out = Expression::Func::Exp; return true; }
  if (s == "log") { out = Expression::Func::Log; return true; }
  if (s == "sqrt") { out = Expression::Func::Sqrt; return true; }
  if (s == "abs") { out = Expression::Func::Abs; return true; }
  return false;
}

class Parser {
 public:
  Parser(std::string_view src, std::span<const std::string> allowed,
         std::vector<Expression::Node>& nodes, std::vector<std::string>& vars)
      : lex_(src), allowed_(allowed), nodes_(nodes), vars_(vars) {}

  // Precedence: '+' '-' (10) < '*' '/' (20) < unary '-' (30) < '^' (40).
  int parse_expr(int min_bp) {
    int lhs = parse_prefix();
    for (;;) {
      const Token& t = lex_.peek();
      int bp;
      Expression::NodeKind kind;
      switch (t.kind) {
        case Token::Plus: bp = 10; kind = Expression::NodeKind::Add; break;
        case Token::Minus: bp = 10; kind = Expression::NodeKind::Sub; break;
        case Token::Star: bp = 20; kind = Expression::NodeKind::Mul; break;
        case Token::Slash: bp = 20; kind = Expression::NodeKind::Div; break;
        case Token::Caret: bp = 40; kind = Expression::NodeKind::Pow; break;
        default: return lhs;
      }
      if (bp < min_bp) return lhs;
      lex_.take();
      // '^' is right-associative and its exponent may carry a unary minus.
      const int rhs = (kind == Expression::NodeKind::Pow)
                          ? parse_expr(30)
                          : parse_expr(bp + 1);
      lhs = add_node({kind, Expression::Func::Sin, lhs, rhs});
    }
  }

  void expect_end() {
    if (lex_.peek().kind != Token::End)
      throw ParseError(lex_.peek().offset, "unexpected trailing input");
  }

 private:
  int parse_prefix() {
    const Token t = lex_.take();
    switch (t.kind) {
      case Token::Minus: {
        const int child = parse_expr(31);
        return add_node({Expression::NodeKind::Neg, Expression::Func::Sin,
                         child});
      }
      case Token::Number: {
        Expression::Node n{Expression::NodeKind::Constant};
        n.value = t.value;
        return add_node(n);
      }
      case Token::LParen: {
        const int inner = parse_expr(0);
        const Token close = lex_.take();
        if (close.kind != Token::RParen)
          throw ParseError(close.offset, "expected ')'");
        return inner;
      }
      case Token::Ident: {
        Expression::Func func;
        const bool is_func = is_function_name(t.text, func);
        if (lex_.peek().kind == Token::LParen) {
          if (!is_func)
            throw ParseError(t.offset, "unknown function '" + t.text + "'");
          lex_.take();
          const int arg = parse_expr(0);
          const Token close = lex_.take();
          if (close.kind != Token::RParen)
            throw ParseError(close.offset, "expected ')'");
          return add_node({Expression::NodeKind::Call, func, arg});
        }
        if (is_func)
          throw ParseError(t.offset,
                           "function '" + t.text + "' needs an argument list");
        bool ok = false;
        for (const auto& name : allowed_)
          if (name == t.text) { ok = true; break; }
        if (!ok)
          throw ParseError(t.offset, "unknown variable '" + t.text + "'");
        int slot = -1;
        for (std::size_t i = 0; i < vars_.size(); ++i)
          if (vars_[i] == t.text) { slot = static_cast<int>(i); break; }
        if (slot < 0) {
          slot = static_cast<int>(vars_.size());
          vars_.push_back(t.text);
        }
        Expression::Node n{Expression::NodeKind::Variable};
        n.var = slot;
        return add_node(n);
      }
      default:
        throw ParseError(t.offset, "expected a value");
    }
  }

  int add_node(Expression::Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size() - 1);
  }

  Lexer lex_;
  std::span<const std::string> allowed_;
  std::vector<Expression::Node>& nodes_;
  std::vector<std::string>& vars_;
};

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline Expression Expression::parse(std::string_view source,
                                    std::span<const std::string> allowed_vars) {
  if (source.empty()) throw ParseError(0, "empty expression");
  Expression e;
  detail::Parser p(source, allowed_vars, e.nodes_, e.vars_);
  e.root_ = p.parse_expr(0);
  p.expect_end();
  return e;
}

template <typename T>
T Expression::eval_node(int idx, std::span<const T> values) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  switch (n.kind) {
    case NodeKind::Constant: return T(n.value);
    case NodeKind::Variable: return values[static_cast<std::size_t>(n.var)];
    case NodeKind::Neg: return -eval_node<T>(n.lhs, values);
    case NodeKind::Add:
      return eval_node<T>(n.lhs, values) + eval_node<T>(n.rhs, values);
    case NodeKind::Sub:
      return eval_node<T>(n.lhs, values) - eval_node<T>(n.rhs, values);
    case NodeKind::Mul:
      return eval_node<T>(n.lhs, values) * eval_node<T>(n.rhs, values);
    case NodeKind::Div: {
      const T a = eval_node<T>(n.lhs, values);
      const T b = eval_node<T>(n.rhs, values);
      if constexpr (std::is_same_v<T, double>) {
        if (b == 0.0) throw DomainError("division by zero");
        return a / b;
      } else {
        return a / b;
      }
    }
    case NodeKind::Pow: {
      const T a = eval_node<T>(n.lhs, values);
      const T b = eval_node<T>(n.rhs, values);
      if constexpr (std::is_same_v<T, double>) {
        return pow(Dual(a), Dual(b)).val;
      } else {
        return pow(a, b);
      }
    }
    case NodeKind::Call: {
      const T a = eval_node<T>(n.lhs, values);
      const Dual d = [&] {
        if constexpr (std::is_same_v<T, double>) return Dual(a);
        else return a;
      }();
      Dual r;
      switch (n.func) {
        case Func::Sin: r = sin(d); break;
        case Func::Cos: r = cos(d); break;
        case Func::Exp: r = exp(d); break;
        case Func::Log: r = log(d); break;
        case Func::Sqrt: r = sqrt(d); break;
        case Func::Abs: r = abs(d); break;
      }
      if constexpr (std::is_same_v<T, double>) return r.val;
      else return r;
    }
  }
  throw Error("corrupt expression node");
}

inline double Expression::eval(std::span<const double> values) const {
  if (values.size() != vars_.size())
    throw DomainError("expected " + std::to_string(vars_.size()) +
                      " bound values, got " + std::to_string(values.size()));
  const double r = eval_node<double>(root_, values);
  if (std::isnan(r)) throw DomainError("evaluation produced NaN");
  return r;
}

inline double Expression::eval(
    const std::map<std::string, double>& bindings) const {
  std::vector<double> values(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto it = bindings.find(vars_[i]);
    if (it == bindings.end())
      throw DomainError("unbound variable '" + vars_[i] + "'");
    values[i] = it->second;
  }
  return eval(values);
}

inline Dual Expression::eval_dual(std::span<const double> values,
                                  int seed_slot) const {
  if (values.size() != vars_.size())
    throw DomainError("expected " + std::to_string(vars_.size()) +
                      " bound values, got " + std::to_string(values.size()));
  if (seed_slot < 0 || static_cast<std::size_t>(seed_slot) >= vars_.size())
    throw DomainError("seed variable is not free in the expression");
  std::vector<Dual> duals(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i)
    duals[i] = Dual(values[i],
                    static_cast<int>(i) == seed_slot ? 1.0 : 0.0);
  const Dual r = eval_node<Dual>(root_, std::span<const Dual>(duals));
  if (std::isnan(r.val) || std::isnan(r.der))
    throw DomainError("evaluation produced NaN");
  return r;
}

inline Dual Expression::eval_dual(const std::map<std::string, double>& bindings,
                                  const std::string& seed) const {
  std::vector<double> values(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const auto it = bindings.find(vars_[i]);
    if (it == bindings.end())
      throw DomainError("unbound variable '" + vars_[i] + "'");
    values[i] = it->second;
  }
  return eval_dual(values, var_slot(seed));
}

inline int Expression::var_slot(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i] == name) return static_cast<int>(i);
  throw DomainError("variable '" + std::string(name) +
                    "' is not free in the expression");
}

inline void Expression::print_node(int idx, int parent_prec,
                                   bool rhs_of_parent, std::string& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(idx)];
  const auto prec = [](const Node& m) {
    switch (m.kind) {
      case NodeKind::Add:
      case NodeKind::Sub: return 10;
      case NodeKind::Mul:
      case NodeKind::Div: return 20;
      case NodeKind::Neg: return 30;
      case NodeKind::Pow: return 40;
      default: return 100;
    }
  };
  const int p = prec(n);
  // Left-associative operators need parens on an equal-precedence right
  // child; right-associative '^' needs them on an equal-precedence left
  // child. rhs_of_parent selects which side this node sits on.
  bool need_parens = false;
  if (p < parent_prec) {
    need_parens = true;
  } else if (p == parent_prec && p != 100) {
    need_parens = (parent_prec == 40) ? !rhs_of_parent : rhs_of_parent;
  }
  if (need_parens) out += '(';
  switch (n.kind) {
    case NodeKind::Constant: out += detail::format_double(n.value); break;
    case NodeKind::Variable: out += vars_[static_cast<std::size_t>(n.var)]; break;
    case NodeKind::Neg:
      out += '-';
      // -(-x) keeps its parens; "--x" is legal but unreadable.
      if (nodes_[static_cast<std::size_t>(n.lhs)].kind == NodeKind::Neg) {
        out += '(';
        print_node(n.lhs, 0, false, out);
        out += ')';
      } else {
        print_node(n.lhs, 31, false, out);
      }
      break;
    case NodeKind::Add:
      print_node(n.lhs, 10, false, out);
      out += " + ";
      print_node(n.rhs, 10, true, out);
      break;
    case NodeKind::Sub:
      print_node(n.lhs, 10, false, out);
      out += " - ";
      print_node(n.rhs, 10, true, out);
      break;
    case NodeKind::Mul:
      print_node(n.lhs, 20, false, out);
      out += '*';
      print_node(n.rhs, 20, true, out);
      break;
    case NodeKind::Div:
      print_node(n.lhs, 20, false, out);
      out += '/';
      print_node(n.rhs, 20, true, out);
      break;
    case NodeKind::Pow:
      print_node(n.lhs, 40, false, out);
      out += '^';
      print_node(n.rhs, 40, true, out);
      break;
    case NodeKind::Call: {
      switch (n.func) {
        case Func::Sin: out += "sin"; break;
        case Func::Cos: out += "cos"; break;
        case Func::Exp: out += "exp"; break;
        case Func::Log: out += "log"; break;
        case Func::Sqrt: out += "sqrt"; break;
        case Func::Abs: out += "abs"; break;
      }
      out += '(';
      print_node(n.lhs, 0, false, out);
      out += ')';
      break;
    }
  }
  if (need_parens) out += ')';
}

inline std::string Expression::str() const {
  std::string out;
  print_node(root_, 0, false, out);
  return out;
}

inline Expression Expression::substitute(const std::string& var,
                                         const Expression& replacement) const {
  Expression result;
  // Replacement tree first; its variables open the new variable table.
  result.nodes_ = replacement.nodes_;
  result.vars_ = replacement.vars_;
  const int repl_root = replacement.root_;

  int target_slot = -1;
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i] == var) { target_slot = static_cast<int>(i); break; }
  if (target_slot < 0)
    throw DomainError("variable '" + var + "' is not free in the expression");

  std::vector<int> slot_map(vars_.size(), -1);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (static_cast<int>(i) == target_slot) continue;
    int mapped = -1;
    for (std::size_t j = 0; j < result.vars_.size(); ++j)
      if (result.vars_[j] == vars_[i]) { mapped = static_cast<int>(j); break; }
    if (mapped < 0) {
      mapped = static_cast<int>(result.vars_.size());
      result.vars_.push_back(vars_[i]);
    }
    slot_map[i] = mapped;
  }

  std::vector<int> node_map(nodes_.size(), -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node n = nodes_[i];
    if (n.kind == NodeKind::Variable) {
      if (n.var == target_slot) {
        node_map[i] = repl_root;
        continue;
      }
      n.var = slot_map[static_cast<std::size_t>(n.var)];
    }
    if (n.lhs >= 0) n.lhs = node_map[static_cast<std::size_t>(n.lhs)];
    if (n.rhs >= 0) n.rhs = node_map[static_cast<std::size_t>(n.rhs)];
    result.nodes_.push_back(n);
    node_map[i] = static_cast<int>(result.nodes_.size() - 1);
  }
  result.root_ = node_map[static_cast<std::size_t>(root_)];
  return result;
}

inline bool Expression::same_tree(const Expression& other) const {
  const auto eq = [&](const auto& self, int a, int b) -> bool {
    const Node& x = nodes_[static_cast<std::size_t>(a)];
    const Node& y = other.nodes_[static_cast<std::size_t>(b)];
    if (x.kind != y.kind) return false;
    switch (x.kind) {
      case NodeKind::Constant: return x.value == y.value;
      case NodeKind::Variable:
        return vars_[static_cast<std::size_t>(x.var)] ==
               other.vars_[static_cast<std::size_t>(y.var)];
      case NodeKind::Neg: return self(self, x.lhs, y.lhs);
      case NodeKind::Call:
        return x.func == y.func && self(self, x.lhs, y.lhs);
      default:
        return self(self, x.lhs, y.lhs) && self(self, x.rhs, y.rhs);
    }
  };
  return eq(eq, root_, other.root_);
}

}  // namespace fidcurve
