#include "realize/output_realization.hpp"

#include "realize/config.hpp"
#include "realize/errors.hpp"
#include "realize/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <regex>

namespace realize {

std::string PlanStep::equation() const {
    return output_row ? "y" + std::to_string(row) : "row_" + std::to_string(row);
}

std::string to_string(const PlanStep& step) {
    return "x" + std::to_string(step.variable) + " <- " +
           (step.kind == StepKind::Ode ? "ode(" : "algebraic(") + step.equation() + ")";
}

CascadePlan parse_plan(const std::vector<std::string>& lines, int n) {
    static const std::regex re(R"(^x(\d+)\s*<-\s*(algebraic|ode)\s*\(\s*(y|row_)(\d+)\s*\)$)");
    CascadePlan plan;
    for (const std::string& raw : lines) {
        const std::string line = trim(raw);
        if (line.empty()) {
            continue;
        }
        std::smatch mt;
        if (!std::regex_match(line, mt, re)) {
            throw ConfigError("bad plan entry '" + line +
                              "' (expected e.g. 'x3 <- algebraic(y1)' or 'x1 <- ode(row_3)')");
        }
        PlanStep s;
        s.variable = std::stoi(mt[1]);
        s.kind = mt[2] == "ode" ? StepKind::Ode : StepKind::Algebraic;
        s.output_row = mt[3] == "y";
        s.row = std::stoi(mt[4]);
        if (s.variable < 1 || s.variable > n) {
            throw ConfigError("plan entry '" + line + "' names x" + std::to_string(s.variable) +
                              " but n = " + std::to_string(n));
        }
        plan.steps.push_back(s);
    }
    return plan;
}

namespace {

enum class Role { Unresolved, Free, Algebraic, Ode };

std::string var(int k) { return "x" + std::to_string(k); }

// Symbolic state of a partially executed plan. Algebraic values may still
// mention unresolved variables; ODE right-hand sides mention only t and ODE
// variables.
class Cascade {
public:
    Cascade(const AffineSystem& sys, const DesiredOutput& yd, const Vector& x0)
        : sys_(sys), x0_(x0), n_(sys.n()) {
        if (!sys.has_output()) {
            throw NoOutputDefined("output realization needs an [output] section");
        }
        if (yd.dim() != sys.m()) {
            throw DimensionError("desired output has " + std::to_string(yd.dim()) +
                                 " components, the system has m = " + std::to_string(sys.m()));
        }
        if (sys.m() > sys.p()) {
            throw DimensionError("output realization needs m <= p");
        }
        const ProjectorConstancy pc = check_constant_projectors(sys);
        if (!pc.constant) {
            throw UnsupportedStructure("cascade solver needs a constant input projector");
        }
        q_ = pc.q;
        for (int j : linalg::independent_column_indices(q_, sys.n() - sys.p())) {
            rows_.push_back(j + 1);
        }
        std::sort(rows_.begin(), rows_.end());
        h_ = sys.output_expressions();
        y_ = yd.expressions();
        role_.assign(static_cast<std::size_t>(n_), Role::Unresolved);
        value_.resize(static_cast<std::size_t>(n_));
        rate_.resize(static_cast<std::size_t>(n_));
        used_outputs_.assign(h_.size(), false);
        used_rows_.assign(static_cast<std::size_t>(n_), false);
        t0_ = yd.t0();
        t1_ = yd.t1();
    }

    int equation_count() const { return static_cast<int>(h_.size() + rows_.size()); }
    int used_count() const { return used_; }
    const std::vector<int>& rows() const { return rows_; }
    int output_count() const { return static_cast<int>(h_.size()); }
    Role role(int k) const { return role_[idx(k)]; }
    bool row_used(int j) const { return used_rows_[idx(j)]; }
    bool output_used(int k) const { return used_outputs_[idx(k)]; }

    void set_free(int k, const expr::Expr& value) {
        if (!expr::state_variables(value).empty()) {
            throw ConfigError("free coordinate " + var(k) + " may depend on t only");
        }
        role_[idx(k)] = Role::Free;
        value_[idx(k)] = value;
        rate_[idx(k)] = expr::differentiate(value, expr::Variable::time());
    }

    void apply(const PlanStep& s) {
        const int v = s.variable;
        if (v < 1 || v > n_) {
            throw PlanInfeasible("plan names undefined variable " + var(v));
        }
        if (role(v) != Role::Unresolved) {
            throw PlanInfeasible(var(v) + " is already resolved (or free)");
        }
        if (s.output_row) {
            if (s.row < 1 || s.row > output_count()) {
                throw PlanInfeasible("plan names undefined equation " + s.equation());
            }
            if (output_used(s.row)) {
                throw PlanInfeasible(s.equation() + " is used twice");
            }
            if (s.kind == StepKind::Ode) {
                throw PlanInfeasible(s.equation() + " is an output relation, not an ODE");
            }
            const expr::Expr eq = h_[idx(s.row)] - y_[idx(s.row)];
            solve_linear(eq, v, s);
            used_outputs_[idx(s.row)] = true;
        } else {
            if (std::find(rows_.begin(), rows_.end(), s.row) == rows_.end()) {
                throw PlanInfeasible("plan names " + s.equation() +
                                     ", which is not an independent constraint row");
            }
            if (row_used(s.row)) {
                throw PlanInfeasible(s.equation() + " is used twice");
            }
            if (s.kind == StepKind::Algebraic) {
                algebraic_row(s);
            } else {
                ode_row(s);
            }
            used_rows_[idx(s.row)] = true;
        }
        ++used_;
    }

    // Everything in (t, ODE variables).
    struct Resolved {
        std::vector<int> ode_vars;
        std::vector<expr::Expr> value;  // per coordinate; ODE variables map to themselves
        std::vector<expr::Expr> rate;
    };

    Resolved finish() const {
        if (used_ != equation_count()) {
            throw PlanInfeasible("plan uses " + std::to_string(used_) + " of the " +
                                 std::to_string(equation_count()) + " equations");
        }
        Resolved out;
        out.value.resize(static_cast<std::size_t>(n_));
        out.rate.resize(static_cast<std::size_t>(n_));
        for (int k = 1; k <= n_; ++k) {
            switch (role(k)) {
                case Role::Unresolved:
                    throw PlanInfeasible(var(k) + " is never resolved");
                case Role::Free:
                    out.value[idx(k)] = value_[idx(k)];
                    out.rate[idx(k)] = rate_[idx(k)];
                    break;
                case Role::Ode:
                    out.ode_vars.push_back(k);
                    out.value[idx(k)] = expr::state(k);
                    out.rate[idx(k)] = rate_[idx(k)];
                    break;
                case Role::Algebraic: {
                    const expr::Expr s = closed_value(k, 0);
                    out.value[idx(k)] = s;
                    out.rate[idx(k)] = total_derivative(s, 0, nullptr);
                    break;
                }
            }
        }
        return out;
    }

private:
    static std::size_t idx(int k) { return static_cast<std::size_t>(k - 1); }

    // Replaces free and algebraic variables by their values until none remain.
    expr::Expr substitute_known(expr::Expr e) const {
        for (int pass = 0; pass <= n_ + 1; ++pass) {
            bool changed = false;
            for (int k : expr::state_variables(e)) {
                const Role r = role(k);
                if (r == Role::Free || r == Role::Algebraic) {
                    e = expr::substitute(e, k, value_[idx(k)]);
                    changed = true;
                }
            }
            if (!changed) {
                return e;
            }
        }
        throw PlanInfeasible("circular dependency among algebraic variables");
    }

    // Value of x_k in terms of t, ODE variables and (optionally) `target`.
    expr::Expr closed_value(int k, int target) const {
        const expr::Expr s = substitute_known(role(k) == Role::Ode ? expr::state(k)
                                                                   : value_[idx(k)]);
        require_closed(s, target, var(k));
        return s;
    }

    void require_closed(const expr::Expr& e, int target, const std::string& what) const {
        for (int j : expr::state_variables(e)) {
            if (j != target && role(j) != Role::Ode) {
                throw PlanInfeasible(what + " depends on unresolved variable " + var(j));
            }
        }
    }

    // d/dt of an expression in (t, ODE variables, target). The coefficient of
    // d(target)/dt goes to *coef.
    expr::Expr total_derivative(const expr::Expr& s, int target, expr::Expr* coef) const {
        expr::Expr d = expr::differentiate(s, expr::Variable::time());
        for (int j : expr::state_variables(s)) {
            const expr::Expr partial = expr::differentiate(s, expr::Variable::state(j));
            if (j == target) {
                *coef = *coef + partial;
            } else {
                d = d + partial * rate_[idx(j)];
            }
        }
        return d;
    }

    Vector probe_point(std::mt19937_64& rng, double* t) const {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Vector x = x0_;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            x(i) += dist(rng);
        }
        *t = t0_ + 0.5 * (1.0 + dist(rng)) * (t1_ - t0_);
        return x;
    }

    // eq = 0 solved for x_v, which it must contain affinely.
    void solve_linear(const expr::Expr& raw, int v, const PlanStep& s) {
        const expr::Expr eq = substitute_known(raw);
        if (!expr::state_variables(eq).count(v)) {
            throw PlanInfeasible(s.equation() + " does not involve " + var(v));
        }
        const expr::Expr slope = expr::differentiate(eq, expr::Variable::state(v));
        const expr::Expr rest = expr::substitute(eq, v, expr::number(0.0));
        std::mt19937_64 rng(17);
        int checked = 0;
        for (int i = 0; i < 16 && checked < 6; ++i) {
            double t = t0_;
            Vector x = i == 0 ? x0_ : probe_point(rng, &t);
            try {
                const double s1 = expr::evaluate(slope, t, x);
                x(v - 1) += 0.75;
                const double s2 = expr::evaluate(slope, t, x);
                if (std::fabs(s1 - s2) > 1e-9 * std::max(1.0, std::fabs(s1))) {
                    throw PlanInfeasible(s.equation() + " is not affine in " + var(v));
                }
                if (i == 0 && std::fabs(s1) < 1e-12) {
                    throw PlanInfeasible(s.equation() + " does not determine " + var(v) +
                                         " at x0");
                }
                ++checked;
            } catch (const DomainError&) {
                // probe outside the expression's domain
            }
        }
        role_[idx(v)] = Role::Algebraic;
        value_[idx(v)] = -rest / slope;
    }

    // Σ q_jk ẋ_k − Σ q_jk R_k with the ẋ terms expanded; x_v enters through R.
    void algebraic_row(const PlanStep& s) {
        const int v = s.variable;
        const Eigen::RowVectorXd q = q_.row(s.row - 1);
        expr::Expr eq;
        for (int k = 1; k <= n_; ++k) {
            const double qk = q(k - 1);
            if (qk == 0.0) {
                continue;
            }
            if (k == v) {
                throw PlanInfeasible(s.equation() + " contains d" + var(v) +
                                     "/dt; use ode(...) for " + var(v));
            }
            eq = eq + expr::number(qk) * (rate_of(k, s) - sys_.drift_expressions()[idx(k)]);
        }
        solve_linear(eq, v, s);
    }

    expr::Expr rate_of(int k, const PlanStep& s) const {
        switch (role(k)) {
            case Role::Free:
            case Role::Ode:
                return rate_[idx(k)];
            case Role::Algebraic: {
                expr::Expr none;
                return total_derivative(closed_value(k, 0), 0, &none);
            }
            case Role::Unresolved:
                break;
        }
        throw PlanInfeasible(s.equation() + " needs d" + var(k) + "/dt but " + var(k) +
                             " is unresolved");
    }

    void ode_row(const PlanStep& s) {
        const int v = s.variable;
        const Eigen::RowVectorXd q = q_.row(s.row - 1);
        expr::Expr coef;
        expr::Expr known;
        expr::Expr drift;
        for (int k = 1; k <= n_; ++k) {
            const double qk = q(k - 1);
            if (qk == 0.0) {
                continue;
            }
            drift = drift + expr::number(qk) * sys_.drift_expressions()[idx(k)];
            if (k == v) {
                coef = coef + expr::number(qk);
                continue;
            }
            if (role(k) == Role::Unresolved) {
                throw PlanInfeasible(s.equation() + " needs d" + var(k) + "/dt but " + var(k) +
                                     " is unresolved");
            }
            if (role(k) == Role::Algebraic) {
                // the closed value may mention x_v, whose rate is the unknown
                expr::Expr partial;
                known = known + expr::number(qk) * total_derivative(closed_value(k, v), v, &partial);
                coef = coef + expr::number(qk) * partial;
            } else {
                known = known + expr::number(qk) * rate_[idx(k)];
            }
        }
        drift = substitute_known(drift);
        require_closed(drift, v, s.equation());
        require_closed(coef, v, s.equation());
        require_closed(known, v, s.equation());
        double c0 = 0.0;
        try {
            c0 = expr::evaluate(coef, t0_, x0_);
        } catch (const DomainError&) {
            c0 = 0.0;
        }
        if (std::fabs(c0) < 1e-12) {
            throw PlanInfeasible(s.equation() + " does not contain d" + var(v) + "/dt");
        }
        role_[idx(v)] = Role::Ode;
        rate_[idx(v)] = (drift - known) / coef;
    }

    const AffineSystem& sys_;
    Vector x0_;
    int n_;
    Matrix q_;
    std::vector<int> rows_;
    std::vector<expr::Expr> h_;
    std::vector<expr::Expr> y_;
    std::vector<Role> role_;
    std::vector<expr::Expr> value_;
    std::vector<expr::Expr> rate_;
    std::vector<bool> used_outputs_;
    std::vector<bool> used_rows_;
    int used_ = 0;
    double t0_ = 0.0;
    double t1_ = 0.0;
};

// Depth-first plan search: output rows first, then ODE steps, then algebraic
// constraint steps, variables in ascending order.
bool search(const Cascade& state, int n, std::vector<PlanStep>& steps, int& budget) {
    if (state.used_count() == state.equation_count()) {
        try {
            state.finish();
            return true;
        } catch (const PlanInfeasible&) {
            return false;
        }
    }
    std::vector<PlanStep> candidates;
    for (int k = 1; k <= state.output_count(); ++k) {
        if (!state.output_used(k)) {
            for (int v = 1; v <= n; ++v) {
                candidates.push_back({v, StepKind::Algebraic, true, k});
            }
        }
    }
    for (StepKind kind : {StepKind::Ode, StepKind::Algebraic}) {
        for (int j : state.rows()) {
            if (!state.row_used(j)) {
                for (int v = 1; v <= n; ++v) {
                    candidates.push_back({v, kind, false, j});
                }
            }
        }
    }
    for (const PlanStep& step : candidates) {
        if (state.role(step.variable) != Role::Unresolved) {
            continue;
        }
        if (--budget < 0) {
            return false;
        }
        Cascade next = state;
        try {
            next.apply(step);
        } catch (const PlanInfeasible&) {
            continue;
        }
        steps.push_back(step);
        if (search(next, n, steps, budget)) {
            return true;
        }
        steps.pop_back();
    }
    return false;
}

std::vector<int> validate_free(const std::vector<FreeCoordinate>& given, int n) {
    std::vector<int> out;
    for (const auto& f : given) {
        if (f.index < 1 || f.index > n) {
            throw DimensionError("free coordinate x" + std::to_string(f.index) + " out of range");
        }
        if (std::find(out.begin(), out.end(), f.index) != out.end()) {
            throw ConfigError("free coordinate x" + std::to_string(f.index) + " given twice");
        }
        out.push_back(f.index);
    }
    return out;
}

void apply_free(Cascade& c, const std::vector<int>& free_vars,
                const std::vector<FreeCoordinate>& given, const Vector& x0) {
    for (int k : free_vars) {
        auto it = std::find_if(given.begin(), given.end(),
                               [k](const FreeCoordinate& f) { return f.index == k; });
        c.set_free(k, it != given.end() ? it->value : expr::number(x0(k - 1)));
    }
}

}  // namespace

CascadePlan derive_plan(const AffineSystem& sys, const DesiredOutput& yd,
                        const std::vector<FreeCoordinate>& free) {
    const int n = sys.n();
    const int count = sys.p() - sys.m();
    std::vector<int> given = validate_free(free, n);
    if (!given.empty() && static_cast<int>(given.size()) != count) {
        throw DimensionError("expected " + std::to_string(count) + " free coordinates, got " +
                             std::to_string(given.size()));
    }
    int budget = 20000;
    auto attempt = [&](const std::vector<int>& free_vars) -> std::optional<CascadePlan> {
        Cascade c(sys, yd, sys.x0());
        apply_free(c, free_vars, free, sys.x0());
        std::vector<PlanStep> steps;
        if (search(c, n, steps, budget)) {
            return CascadePlan{steps};
        }
        return std::nullopt;
    };
    if (!given.empty() || count <= 0) {
        if (auto plan = attempt(given)) {
            return *plan;
        }
    } else {
        std::vector<int> pick(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            pick[static_cast<std::size_t>(i)] = i + 1;
        }
        while (budget > 0) {
            if (auto plan = attempt(pick)) {
                return *plan;
            }
            int i = count - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - (count - 1 - i)) {
                --i;
            }
            if (i < 0) {
                break;
            }
            ++pick[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < count; ++j) {
                pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
            }
        }
    }
    throw PlanInfeasible(budget <= 0 ? "no elimination plan found within the search budget; "
                                       "supply one in the [plan] section"
                                     : "no elimination plan exists for this system and output; "
                                       "supply one in the [plan] section");
}

DesiredTrajectory solve_cascade(const AffineSystem& sys, const DesiredOutput& yd,
                                const CascadePlan& plan, const Vector& x0, const TimeGrid& grid,
                                const std::vector<FreeCoordinate>& free) {
    const int n = sys.n();
    if (x0.size() != n) {
        throw DimensionError("x0 has the wrong dimension");
    }
    if (std::fabs(grid.front() - yd.t0()) > 1e-12 * std::max(1.0, std::fabs(yd.t0()))) {
        throw DomainError("grid must start at the desired output's t0");
    }
    validate_free(free, n);
    Cascade c(sys, yd, x0);
    std::vector<int> free_vars;
    for (int k = 1; k <= n; ++k) {
        const bool planned = std::any_of(plan.steps.begin(), plan.steps.end(),
                                         [k](const PlanStep& s) { return s.variable == k; });
        const bool given = std::any_of(free.begin(), free.end(),
                                       [k](const FreeCoordinate& f) { return f.index == k; });
        if (planned && given) {
            throw PlanInfeasible("x" + std::to_string(k) + " is both planned and free");
        }
        if (!planned) {
            free_vars.push_back(k);
        }
    }
    apply_free(c, free_vars, free, x0);
    for (const PlanStep& s : plan.steps) {
        try {
            c.apply(s);
        } catch (const PlanInfeasible& e) {
            throw PlanInfeasible("step '" + to_string(s) + "': " + e.what());
        }
    }
    const Cascade::Resolved res = c.finish();

    const double t0 = grid.front();
    for (int k = 1; k <= n; ++k) {
        if (std::find(res.ode_vars.begin(), res.ode_vars.end(), k) != res.ode_vars.end()) {
            continue;
        }
        const double v = expr::evaluate(res.value[static_cast<std::size_t>(k - 1)], t0, x0);
        if (!(std::fabs(v - x0(k - 1)) <= kConsistencyTol)) {
            std::string source = "its free value";
            for (const PlanStep& s : plan.steps) {
                if (s.variable == k) {
                    source = "equation " + s.equation();
                }
            }
            char buf[200];
            std::snprintf(buf, sizeof buf, "x%d(t0) is determined as %.10g by %s but x0 gives %.10g",
                          k, v, source.c_str(), x0(k - 1));
            throw InconsistentInitialData(buf);
        }
    }

    const std::size_t w = res.ode_vars.size();
    auto embed = [&](const Vector& state) {
        Vector x = Vector::Zero(n);
        for (std::size_t i = 0; i < w; ++i) {
            x(res.ode_vars[i] - 1) = state(static_cast<Eigen::Index>(i));
        }
        return x;
    };
    const VectorField field = [&](double t, const Vector& state) -> Vector {
        const Vector x = embed(state);
        Vector out(static_cast<Eigen::Index>(w));
        for (std::size_t i = 0; i < w; ++i) {
            out(static_cast<Eigen::Index>(i)) =
                expr::evaluate(res.rate[static_cast<std::size_t>(res.ode_vars[i] - 1)], t, x);
        }
        return out;
    };
    Vector w0(static_cast<Eigen::Index>(w));
    for (std::size_t i = 0; i < w; ++i) {
        w0(static_cast<Eigen::Index>(i)) = x0(res.ode_vars[i] - 1);
    }
    std::vector<Vector> states =
        w > 0 ? integrate_rk4(field, w0, grid) : std::vector<Vector>(grid.size(), Vector());

    std::vector<Vector> xs, dxs;
    xs.reserve(grid.size());
    dxs.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Vector x = embed(states[i]);
        xs.push_back(expr::evaluate(res.value, grid[i], x));
        dxs.push_back(expr::evaluate(res.rate, grid[i], x));
    }
    return DesiredTrajectory::sampled(grid, std::move(xs), std::move(dxs));
}

}  // namespace realize
