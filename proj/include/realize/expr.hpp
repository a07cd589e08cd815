#pragma once

#include "realize/linalg.hpp"

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace realize::expr {

enum class Func { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Sign };

enum class Kind { Number, Time, State, Neg, Add, Sub, Mul, Div, Pow, Call };

/// A differentiation variable: time t or state component x_k (1-based).
struct Variable {
    bool is_time = true;
    int index = 0;

    static Variable time() { return {true, 0}; }
    static Variable state(int k) { return {false, k}; }
};

struct Node;

/// Immutable scalar expression over t and x1..xn. Copies share the tree.
class Expr {
public:
    Expr() = default;  // the constant 0
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    const Node& node() const;
    Kind kind() const;

    /// True (and stores the value) when the tree is a single literal.
    bool is_number(double* value = nullptr) const;

private:
    std::shared_ptr<const Node> node_;
};

struct Node {
    Kind kind = Kind::Number;
    double value = 0.0;  // Number literal, or the exponent of Pow
    int index = 0;       // State index (1-based)
    Func func = Func::Sin;
    Expr lhs;  // operand of Neg/Call/Pow, left of binary ops
    Expr rhs;  // right of binary ops
};

// Builders. They fold constants and drop additive/multiplicative identities;
// no other simplification is attempted.
Expr number(double v);
Expr time();
Expr state(int k);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& base, double exponent);
Expr call(Func f, const Expr& arg);

/// Parses `text` for a system with `n` state variables. Grammar (whitespace
/// ignored):
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := '-' factor | base ('^' exponent)?
///   base   := number | ident | func '(' expr ')' | '(' expr ')'
/// `^` is right-associative and its exponent must fold to a constant.
/// Throws SyntaxError (with byte offset) or UnknownIdentifier.
Expr parse(std::string_view text, int n);

/// IEEE double evaluation; x holds x1..xn in order. Throws DomainError for
/// log/sqrt outside their domain, division by zero, or non-finite results.
double evaluate(const Expr& e, double t, const Vector& x);

/// Evaluates each expression in turn.
Vector evaluate(const std::vector<Expr>& es, double t, const Vector& x);

/// Exact symbolic derivative. d|u|/du is sign(u), taken as 0 at u = 0.
Expr differentiate(const Expr& e, Variable var);

/// Replaces every occurrence of x_k with `replacement`.
Expr substitute(const Expr& e, int k, const Expr& replacement);

/// Fully parenthesised text that parse() reads back to an equivalent tree.
std::string to_string(const Expr& e);

/// State indices referenced by `e`.
std::set<int> state_variables(const Expr& e);

bool depends_on_time(const Expr& e);

std::string func_name(Func f);

}  // namespace realize::expr
