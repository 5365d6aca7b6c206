#include "fxpde/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace fxpde {

namespace {

const char* kFunctions[] = {"sin", "cos", "exp", "tanh", "abs", "sqrt"};

int function_id(std::string_view name) {
  for (int i = 0; i < 6; ++i)
    if (name == kFunctions[i]) return i;
  return -1;
}

// Accepts coordinates and slot names: x y z t, u<digits>, u<digits>_[txyz].
bool valid_variable(std::string_view name) {
  if (name == "x" || name == "y" || name == "z" || name == "t") return true;
  if (name.size() < 2 || name[0] != 'u') return false;
  std::size_t i = 1;
  while (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i]))) ++i;
  if (i == 1) return false;
  if (i == name.size()) return true;
  if (name[i] != '_' || i + 2 != name.size()) return false;
  const char s = name[i + 1];
  return s == 't' || s == 'x' || s == 'y' || s == 'z';
}

}  // namespace

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expression run() {
    Expression e;
    expr_ = &e;
    e.root_ = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input", "end of input or operator");
    if (e.root_ < 0) fail("empty expression", "expression");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, const std::string& expected) {
    throw ParseError(pos_, msg, expected);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  int add(Expression::Node n) {
    expr_->nodes_.push_back(n);
    return static_cast<int>(expr_->nodes_.size() - 1);
  }

  int name_id(const std::string& name) {
    for (std::size_t i = 0; i < expr_->names_.size(); ++i)
      if (expr_->names_[i] == name) return static_cast<int>(i);
    expr_->names_.push_back(name);
    return static_cast<int>(expr_->names_.size() - 1);
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (eat('+'))
        lhs = add({Expression::Op::Add, 0, -1, lhs, parse_product()});
      else if (eat('-'))
        lhs = add({Expression::Op::Sub, 0, -1, lhs, parse_product()});
      else
        return lhs;
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (eat('*'))
        lhs = add({Expression::Op::Mul, 0, -1, lhs, parse_unary()});
      else if (eat('/'))
        lhs = add({Expression::Op::Div, 0, -1, lhs, parse_unary()});
      else
        return lhs;
    }
  }

  int parse_unary() {
    if (eat('-')) return add({Expression::Op::Neg, 0, -1, parse_unary(), -1});
    return parse_power();
  }

  int parse_power() {
    int base = parse_atom();
    if (eat('^')) {
      // right associative; exponent may carry a unary minus
      int exp = eat('-') ? add({Expression::Op::Neg, 0, -1, parse_power(), -1}) : parse_power();
      return add({Expression::Op::Pow, 0, -1, base, exp});
    }
    return base;
  }

  int parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input", "number, name or '('");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      int inner = parse_sum();
      if (!eat(')')) fail("unbalanced parenthesis", "')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
    fail(std::string("unexpected character '") + c + "'", "number, name or '('");
  }

  int parse_number() {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number", "number");
    pos_ += static_cast<std::size_t>(end - begin);
    return add({Expression::Op::Const, v, -1, -1, -1});
  }

  int parse_name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                   text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    const int fid = function_id(name);
    if (fid >= 0) {
      if (!eat('(')) {
        pos_ = start;
        fail("function '" + name + "' needs an argument list", "'('");
      }
      int arg = parse_sum();
      if (eat(',')) {
        pos_ -= 1;
        fail("function '" + name + "' takes one argument", "')'");
      }
      if (!eat(')')) fail("unbalanced call to '" + name + "'", "')'");
      return add({Expression::Op::Call, 0, fid, arg, -1});
    }
    if (!valid_variable(name)) {
      pos_ = start;
      fail("unknown identifier '" + name + "'", "x, y, z, t or a slot name like u1_x");
    }
    return add({Expression::Op::Var, 0, name_id(name), -1, -1});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  Expression* expr_ = nullptr;
};

Expression Expression::parse(std::string_view text) { return Parser(text).run(); }

int Expression::variable_id(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

double Expression::eval(const EvalEnv& env) const { return eval_node(root_, env); }

double Expression::eval_node(int n, const EvalEnv& env) const {
  const Node& node = nodes_[static_cast<std::size_t>(n)];
  switch (node.op) {
    case Op::Const:
      return node.value;
    case Op::Var:
      return env.values[static_cast<std::size_t>(node.ref)];
    case Op::Add:
      return eval_node(node.lhs, env) + eval_node(node.rhs, env);
    case Op::Sub:
      return eval_node(node.lhs, env) - eval_node(node.rhs, env);
    case Op::Mul:
      return eval_node(node.lhs, env) * eval_node(node.rhs, env);
    case Op::Div: {
      const double num = eval_node(node.lhs, env);
      const double den = eval_node(node.rhs, env);
      if (den == 0.0) {
        env.fault = true;
        env.fault_what = "division by zero";
        return 0.0;
      }
      return num / den;
    }
    case Op::Pow: {
      const double base = eval_node(node.lhs, env);
      const double exp = eval_node(node.rhs, env);
      const double v = std::pow(base, exp);
      if (!std::isfinite(v)) {
        env.fault = true;
        env.fault_what = "power out of domain";
        return 0.0;
      }
      return v;
    }
    case Op::Neg:
      return -eval_node(node.lhs, env);
    case Op::Call: {
      const double arg = eval_node(node.lhs, env);
      double v = 0;
      switch (node.ref) {
        case 0: v = std::sin(arg); break;
        case 1: v = std::cos(arg); break;
        case 2: v = std::exp(arg); break;
        case 3: v = std::tanh(arg); break;
        case 4: v = std::abs(arg); break;
        case 5:
          if (arg < 0.0) {
            env.fault = true;
            env.fault_what = "sqrt of a negative value";
            return 0.0;
          }
          v = std::sqrt(arg);
          break;
        default: break;
      }
      if (!std::isfinite(v)) {
        env.fault = true;
        env.fault_what = std::string(kFunctions[node.ref]) + " overflow";
        return 0.0;
      }
      return v;
    }
  }
  return 0.0;
}

namespace {
// precedence levels for printing: sum 1, product 2, unary 3, power 4, atom 5
int op_prec(int opi) {
  switch (opi) {
    case 2: case 3: return 1;  // Add Sub
    case 4: case 5: return 2;  // Mul Div
    case 7: return 3;          // Neg
    case 6: return 4;          // Pow
    default: return 5;
  }
}
}  // namespace

void Expression::print_node(int n, int parent_prec, bool right, std::string& out) const {
  const Node& node = nodes_[static_cast<std::size_t>(n)];
  const int prec = op_prec(static_cast<int>(node.op));
  const bool parens = prec < parent_prec || (prec == parent_prec && right && prec != 4);
  if (parens) out += '(';
  switch (node.op) {
    case Op::Const: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", node.value);
      out += buf;
      break;
    }
    case Op::Var:
      out += names_[static_cast<std::size_t>(node.ref)];
      break;
    case Op::Add:
      print_node(node.lhs, prec, false, out);
      out += " + ";
      print_node(node.rhs, prec, true, out);
      break;
    case Op::Sub:
      print_node(node.lhs, prec, false, out);
      out += " - ";
      print_node(node.rhs, prec, true, out);
      break;
    case Op::Mul:
      print_node(node.lhs, prec, false, out);
      out += "*";
      print_node(node.rhs, prec, true, out);
      break;
    case Op::Div:
      print_node(node.lhs, prec, false, out);
      out += "/";
      print_node(node.rhs, prec, true, out);
      break;
    case Op::Pow:
      print_node(node.lhs, prec + 1, false, out);  // left side of ^ binds tighter
      out += "^";
      print_node(node.rhs, prec, true, out);
      break;
    case Op::Neg:
      out += "-";
      print_node(node.lhs, prec, true, out);
      break;
    case Op::Call:
      out += kFunctions[node.ref];
      out += '(';
      print_node(node.lhs, 0, false, out);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

std::string Expression::print() const {
  std::string out;
  if (root_ >= 0) print_node(root_, 0, false, out);
  return out;
}

}  // namespace fxpde
