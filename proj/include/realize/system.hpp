#pragma once

#include "realize/config.hpp"
#include "realize/expr.hpp"
#include "realize/linalg.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace realize {

/// y = C x with C of full row rank.
struct LinearOutput {
    Matrix c;
};

/// y = h(x).
struct NonlinearOutput {
    std::vector<expr::Expr> h;
};

using OutputMap = std::variant<std::monostate, LinearOutput, NonlinearOutput>;

/// R(x) and B(x) evaluated at one state.
struct Dynamics {
    Vector drift;
    Matrix input;
};

/// ẋ = R(x) + B(x)u, y = C x or h(x), x(t0) = x0.
///
/// B(x) is only known symbolically, so its rank is checked at every point it
/// is evaluated (RankDeficient on failure) rather than globally.
class AffineSystem {
public:
    AffineSystem(std::string name, int n, int p, std::vector<expr::Expr> drift,
                 std::vector<expr::Expr> input, OutputMap output, Vector x0);

    const std::string& name() const { return name_; }
    int n() const { return n_; }
    int p() const { return p_; }
    int m() const;

    const std::vector<expr::Expr>& drift_expressions() const { return drift_; }
    /// Input matrix entries in row-major order (n·p).
    const std::vector<expr::Expr>& input_expressions() const { return input_; }
    const expr::Expr& input_entry(int row, int col) const {
        return input_[static_cast<std::size_t>(row * p_ + col)];
    }
    const OutputMap& output() const { return output_; }
    const Vector& x0() const { return x0_; }

    AffineSystem with_initial_state(Vector x0) const;
    AffineSystem with_output(OutputMap output) const;

    Vector drift(const Vector& x) const;
    Matrix input_matrix(const Vector& x, double rank_tol = linalg::kRankTolerance) const;

    bool has_output() const { return m() > 0; }
    bool has_linear_output() const { return std::holds_alternative<LinearOutput>(output_); }
    /// C; throws NoOutputDefined or UnsupportedStructure for nonlinear outputs.
    const Matrix& output_matrix() const;
    /// y(x); throws NoOutputDefined when the system has no output.
    Vector output_value(const Vector& x) const;
    /// Output components as expressions (linear rows expanded).
    std::vector<expr::Expr> output_expressions() const;

private:
    std::string name_;
    int n_;
    int p_;
    std::vector<expr::Expr> drift_;
    std::vector<expr::Expr> input_;
    OutputMap output_;
    Vector x0_;
};

Dynamics eval_dynamics(const AffineSystem& sys, double t, const Vector& x);

/// Builds a system from the [system], [dynamics], [input], [output] and
/// [initial] sections. `[system] example = NAME` starts from a built-in and
/// lets the remaining sections override it.
AffineSystem load_system(const Config& cfg);
AffineSystem load_system(std::string_view config_text);

/// Config text that load_system() reads back to an equivalent system.
std::string print_system(const AffineSystem& sys);

/// mechanical-pendulum, devasia4 or fitzhugh-nagumo.
AffineSystem builtin_example(std::string_view name);
std::vector<std::string> builtin_names();
std::string builtin_description(std::string_view name);

}  // namespace realize
