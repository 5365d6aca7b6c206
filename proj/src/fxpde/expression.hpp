#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fxpde {

/// Syntax error with a byte offset and the token set expected there.
struct ParseError : std::runtime_error {
  ParseError(std::size_t offset, std::string message, std::string expected)
      : std::runtime_error(message + " at offset " + std::to_string(offset) +
                           (expected.empty() ? "" : " (expected " + expected + ")")),
        offset(offset),
        expected(std::move(expected)) {}
  std::size_t offset;
  std::string expected;
};

/// Evaluation bindings plus a sticky domain-fault flag. Faults (division by
/// zero, sqrt of a negative, non-finite results) are reported here instead of
/// propagating silent NaNs.
struct EvalEnv {
  explicit EvalEnv(std::span<const double> values) : values(values) {}
  std::span<const double> values;  // indexed by variable id
  mutable bool fault = false;
  mutable std::string fault_what;
};

/// Arithmetic expression over named variables: slots u<k>, u<k>_t, u<k>_x,
/// u<k>_y, u<k>_z and coordinates x, y, z, t. Grammar: + - * / ^ (right
/// associative), unary minus, parentheses, calls sin cos exp tanh abs sqrt.
/// Precedence: ^  >  unary -  >  * /  >  + -.
class Expression {
 public:
  Expression() = default;

  static Expression parse(std::string_view text);

  double eval(const EvalEnv& env) const;
  std::string print() const;
  const std::vector<std::string>& variables() const { return names_; }
  int variable_id(std::string_view name) const;  // -1 if unreferenced
  bool empty() const { return nodes_.empty(); }

  bool operator==(const Expression& other) const {
    return print() == other.print();
  }

 private:
  enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Call };
  struct Node {
    Op op;
    double value = 0;   // Const
    int ref = -1;       // Var: name id; Call: function id
    int lhs = -1, rhs = -1;
  };

  double eval_node(int n, const EvalEnv& env) const;
  void print_node(int n, int parent_prec, bool right, std::string& out) const;

  std::vector<Node> nodes_;
  std::vector<std::string> names_;
  int root_ = -1;

  friend class Parser;
};

}  // namespace fxpde
