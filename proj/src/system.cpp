#include "realize/system.hpp"

#include "realize/errors.hpp"

#include <cstdio>
#include <sstream>

namespace realize {

namespace {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_state(const Vector& x) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        s += (i ? ", " : "") + format_real(x(i));
    }
    return s + ")";
}

expr::Expr parse_field(const std::string& text, int n, const std::string& field,
                       bool allow_time = false) {
    expr::Expr e;
    try {
        e = expr::parse(text, n);
    } catch (const Error& err) {
        throw ConfigError(field + ": " + err.what());
    }
    if (!allow_time && expr::depends_on_time(e)) {
        throw ConfigError(field + ": system expressions must not depend on t");
    }
    return e;
}

void reject_unknown_keys(const Config& cfg, const std::string& section,
                         const std::vector<std::string>& allowed) {
    const ConfigSection* s = cfg.section(section);
    if (!s) {
        return;
    }
    for (const auto& [k, v] : s->entries) {
        bool ok = false;
        for (const auto& a : allowed) {
            ok = ok || a == k;
        }
        if (!ok) {
            throw ConfigError("unexpected key '" + k + "' in [" + section + "]");
        }
    }
}

Vector parse_vector(const std::string& text, int n, const std::string& field) {
    const auto parts = split(text, ',');
    if (static_cast<int>(parts.size()) != n) {
        throw ConfigError(field + ": expected " + std::to_string(n) + " values, got " +
                          std::to_string(parts.size()));
    }
    Vector v(n);
    for (int i = 0; i < n; ++i) {
        v(i) = parse_real(parts[static_cast<std::size_t>(i)], field);
    }
    return v;
}

OutputMap parse_output(const Config& cfg, int n) {
    const ConfigSection* s = cfg.section("output");
    if (!s || s->entries.empty()) {
        return std::monostate{};
    }
    const bool linear = s->entries.front().first.rfind("C", 0) == 0;
    const std::string prefix = linear ? "C" : "h";
    const int m = static_cast<int>(s->entries.size());
    std::vector<std::string> allowed;
    for (int i = 1; i <= m; ++i) {
        allowed.push_back(prefix + std::to_string(i));
    }
    reject_unknown_keys(cfg, "output", allowed);
    if (m > n) {
        throw ConfigError("[output] has " + std::to_string(m) + " rows but n = " + std::to_string(n));
    }
    if (linear) {
        Matrix c(m, n);
        for (int i = 0; i < m; ++i) {
            const std::string key = "C" + std::to_string(i + 1);
            c.row(i) = parse_vector(*s->find(key), n, "[output] " + key).transpose();
        }
        return LinearOutput{c};
    }
    std::vector<expr::Expr> h;
    for (int i = 0; i < m; ++i) {
        const std::string key = "h" + std::to_string(i + 1);
        h.push_back(parse_field(*s->find(key), n, "[output] " + key));
    }
    return NonlinearOutput{h};
}

const char* kPendulum = R"(# Point mass on a rigid pendulum, position x1 and velocity x2.
[system]
name = mechanical-pendulum
n = 2
p = 1
[dynamics]
R1 = x2
R2 = -sin(x1)
[input]
B1 = 0
B2 = 1
[output]
C1 = 1, 0
[initial]
x0 = 0, 1
)";

const char* kDevasia = R"(# Four-state single-input system with output y = x1 - 3 x3.
[system]
name = devasia4
n = 4
p = 1
[dynamics]
R1 = x2 - x1
R2 = x1^3 - 3*x2
R3 = x1 - 2*x3
R4 = x3^2 - x4
[input]
B1 = 0
B2 = 2 + sin(x4)^2
B3 = 0
B4 = 0
[output]
C1 = 1, 0, -3, 0
[initial]
x0 = 0, 1, 0, 0
)";

const char* kFitzHugh = R"(# FitzHugh-Nagumo with eps = 0.08, a = 0.7, b = 0.8; control on the activator.
[system]
name = fitzhugh-nagumo
n = 2
p = 1
[dynamics]
R1 = x1 - x1^3/3 - x2
R2 = 0.08*(x1 + 0.7 - 0.8*x2)
[input]
B1 = 1
B2 = 0
[output]
C1 = 1, 0
[initial]
x0 = 0, 0
)";

}  // namespace

AffineSystem::AffineSystem(std::string name, int n, int p, std::vector<expr::Expr> drift,
                           std::vector<expr::Expr> input, OutputMap output, Vector x0)
    : name_(std::move(name)),
      n_(n),
      p_(p),
      drift_(std::move(drift)),
      input_(std::move(input)),
      output_(std::move(output)),
      x0_(std::move(x0)) {
    if (n_ < 1 || p_ < 1 || p_ > n_) {
        throw DimensionError("need 1 <= p <= n, got n = " + std::to_string(n_) +
                             ", p = " + std::to_string(p_));
    }
    if (static_cast<int>(drift_.size()) != n_) {
        throw DimensionError("drift needs " + std::to_string(n_) + " components");
    }
    if (static_cast<int>(input_.size()) != n_ * p_) {
        throw DimensionError("input matrix needs " + std::to_string(n_ * p_) + " entries");
    }
    if (x0_.size() != n_) {
        throw DimensionError("initial state needs " + std::to_string(n_) + " components");
    }
    linalg::require_finite(x0_, "initial state");
    if (const auto* lin = std::get_if<LinearOutput>(&output_)) {
        if (lin->c.cols() != n_ || lin->c.rows() > n_) {
            throw DimensionError("output matrix must have n columns and at most n rows");
        }
        linalg::require_finite(lin->c, "output matrix");
        if (linalg::numeric_rank(lin->c) != lin->c.rows()) {
            throw RankDeficient("output matrix does not have full row rank");
        }
    } else if (const auto* nl = std::get_if<NonlinearOutput>(&output_)) {
        if (static_cast<int>(nl->h.size()) > n_) {
            throw DimensionError("at most n output components allowed");
        }
    }
}

int AffineSystem::m() const {
    if (const auto* lin = std::get_if<LinearOutput>(&output_)) {
        return static_cast<int>(lin->c.rows());
    }
    if (const auto* nl = std::get_if<NonlinearOutput>(&output_)) {
        return static_cast<int>(nl->h.size());
    }
    return 0;
}

AffineSystem AffineSystem::with_initial_state(Vector x0) const {
    return AffineSystem(name_, n_, p_, drift_, input_, output_, std::move(x0));
}

AffineSystem AffineSystem::with_output(OutputMap output) const {
    return AffineSystem(name_, n_, p_, drift_, input_, std::move(output), x0_);
}

Vector AffineSystem::drift(const Vector& x) const {
    if (x.size() != n_) {
        throw DimensionError("state has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(n_));
    }
    return expr::evaluate(drift_, 0.0, x);
}

Matrix AffineSystem::input_matrix(const Vector& x, double rank_tol) const {
    if (x.size() != n_) {
        throw DimensionError("state has dimension " + std::to_string(x.size()) + ", expected " +
                             std::to_string(n_));
    }
    Matrix b(n_, p_);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < p_; ++j) {
            b(i, j) = expr::evaluate(input_entry(i, j), 0.0, x);
        }
    }
    if (linalg::numeric_rank(b, rank_tol) < p_) {
        throw RankDeficient("input matrix loses rank at x = " + format_state(x));
    }
    return b;
}

const Matrix& AffineSystem::output_matrix() const {
    if (const auto* lin = std::get_if<LinearOutput>(&output_)) {
        return lin->c;
    }
    if (std::holds_alternative<std::monostate>(output_)) {
        throw NoOutputDefined("system '" + name_ + "' has no output");
    }
    throw UnsupportedStructure("system '" + name_ + "' has a nonlinear output map");
}

Vector AffineSystem::output_value(const Vector& x) const {
    if (const auto* lin = std::get_if<LinearOutput>(&output_)) {
        return lin->c * x;
    }
    if (const auto* nl = std::get_if<NonlinearOutput>(&output_)) {
        return expr::evaluate(nl->h, 0.0, x);
    }
    throw NoOutputDefined("system '" + name_ + "' has no output");
}

std::vector<expr::Expr> AffineSystem::output_expressions() const {
    if (const auto* nl = std::get_if<NonlinearOutput>(&output_)) {
        return nl->h;
    }
    const Matrix& c = output_matrix();
    std::vector<expr::Expr> out;
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        expr::Expr row = expr::number(0.0);
        for (Eigen::Index j = 0; j < c.cols(); ++j) {
            row = row + expr::number(c(i, j)) * expr::state(static_cast<int>(j) + 1);
        }
        out.push_back(row);
    }
    return out;
}

Dynamics eval_dynamics(const AffineSystem& sys, double /*t*/, const Vector& x) {
    return {sys.drift(x), sys.input_matrix(x)};
}

AffineSystem load_system(const Config& cfg) {
    reject_unknown_keys(cfg, "system", {"n", "p", "name", "example"});
    reject_unknown_keys(cfg, "initial", {"x0"});
    if (auto example = cfg.get("system", "example")) {
        if (cfg.has("dynamics") || cfg.has("input") || cfg.get("system", "n") ||
            cfg.get("system", "p")) {
            throw ConfigError("[system] example cannot be combined with n, p, [dynamics] or [input]");
        }
        AffineSystem base = [&] {
            try {
                return builtin_example(*example);
            } catch (const UnknownExample& e) {
                throw ConfigError(e.what());
            }
        }();
        if (cfg.has("output")) {
            base = base.with_output(parse_output(cfg, base.n()));
        }
        if (auto x0 = cfg.get("initial", "x0")) {
            base = base.with_initial_state(parse_vector(*x0, base.n(), "[initial] x0"));
        }
        return base;
    }

    const int n = parse_int(cfg.require("system", "n"), "[system] n");
    const int p = parse_int(cfg.require("system", "p"), "[system] p");
    if (n < 1 || p < 1 || p > n) {
        throw ConfigError("[system] needs 1 <= p <= n");
    }
    const std::string name = cfg.get("system", "name").value_or("custom");

    std::vector<std::string> r_keys, b_keys;
    for (int i = 1; i <= n; ++i) {
        r_keys.push_back("R" + std::to_string(i));
        b_keys.push_back("B" + std::to_string(i));
    }
    reject_unknown_keys(cfg, "dynamics", r_keys);
    reject_unknown_keys(cfg, "input", b_keys);

    std::vector<expr::Expr> drift;
    for (const auto& key : r_keys) {
        drift.push_back(parse_field(cfg.require("dynamics", key), n, "[dynamics] " + key));
    }
    std::vector<expr::Expr> input;
    for (const auto& key : b_keys) {
        const auto parts = split(cfg.require("input", key), ',');
        if (static_cast<int>(parts.size()) != p) {
            throw ConfigError("[input] " + key + ": expected " + std::to_string(p) +
                              " entries, got " + std::to_string(parts.size()));
        }
        for (const auto& part : parts) {
            input.push_back(parse_field(part, n, "[input] " + key));
        }
    }
    OutputMap output = parse_output(cfg, n);
    const Vector x0 = parse_vector(cfg.require("initial", "x0"), n, "[initial] x0");
    try {
        return AffineSystem(name, n, p, std::move(drift), std::move(input), std::move(output), x0);
    } catch (const RankDeficient& e) {
        throw ConfigError(std::string("[output]: ") + e.what());
    } catch (const DimensionError& e) {
        throw ConfigError(e.what());
    }
}

AffineSystem load_system(std::string_view config_text) {
    return load_system(Config::parse(config_text));
}

std::string print_system(const AffineSystem& sys) {
    std::ostringstream out;
    out << "[system]\nname = " << sys.name() << "\nn = " << sys.n() << "\np = " << sys.p()
        << "\n[dynamics]\n";
    for (int i = 0; i < sys.n(); ++i) {
        out << "R" << i + 1 << " = " << expr::to_string(sys.drift_expressions()[static_cast<std::size_t>(i)])
            << "\n";
    }
    out << "[input]\n";
    for (int i = 0; i < sys.n(); ++i) {
        out << "B" << i + 1 << " = ";
        for (int j = 0; j < sys.p(); ++j) {
            out << (j ? ", " : "") << expr::to_string(sys.input_entry(i, j));
        }
        out << "\n";
    }
    if (const auto* lin = std::get_if<LinearOutput>(&sys.output())) {
        out << "[output]\n";
        for (Eigen::Index i = 0; i < lin->c.rows(); ++i) {
            out << "C" << i + 1 << " = ";
            for (Eigen::Index j = 0; j < lin->c.cols(); ++j) {
                out << (j ? ", " : "") << format_real(lin->c(i, j));
            }
            out << "\n";
        }
    } else if (const auto* nl = std::get_if<NonlinearOutput>(&sys.output())) {
        out << "[output]\n";
        for (std::size_t i = 0; i < nl->h.size(); ++i) {
            out << "h" << i + 1 << " = " << expr::to_string(nl->h[i]) << "\n";
        }
    }
    out << "[initial]\nx0 = ";
    for (Eigen::Index i = 0; i < sys.x0().size(); ++i) {
        out << (i ? ", " : "") << format_real(sys.x0()(i));
    }
    out << "\n";
    return out.str();
}

std::vector<std::string> builtin_names() {
    return {"mechanical-pendulum", "devasia4", "fitzhugh-nagumo"};
}

std::string builtin_description(std::string_view name) {
    if (name == "mechanical-pendulum") {
        return "n=2 p=1: x1' = x2, x2' = -sin(x1) + u; output y = x1; x0 = (0, 1)";
    }
    if (name == "devasia4") {
        return "n=4 p=1: nonlinear cascade, B = (0, 2 + sin(x4)^2, 0, 0); output y = x1 - 3 x3; "
               "x0 = (0, 1, 0, 0)";
    }
    if (name == "fitzhugh-nagumo") {
        return "n=2 p=1: FitzHugh-Nagumo (eps 0.08, a 0.7, b 0.8), control on x1; output y = x1; "
               "x0 = (0, 0)";
    }
    throw UnknownExample("unknown example '" + std::string(name) + "'");
}

AffineSystem builtin_example(std::string_view name) {
    if (name == "mechanical-pendulum") {
        return load_system(kPendulum);
    }
    if (name == "devasia4") {
        return load_system(kDevasia);
    }
    if (name == "fitzhugh-nagumo") {
        return load_system(kFitzHugh);
    }
    throw UnknownExample("unknown example '" + std::string(name) + "'");
}

}  // namespace realize
