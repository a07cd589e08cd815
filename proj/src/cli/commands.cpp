#include "realize/cli/commands.hpp"

#include "realize/config.hpp"
#include "realize/errors.hpp"
#include "realize/output_realization.hpp"
#include "realize/simulation.hpp"
#include "realize/system.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace realize::cli {

namespace fs = std::filesystem;

std::string to_string(Command c) {
    switch (c) {
        case Command::Check: return "check";
        case Command::Synthesize: return "synthesize";
        case Command::OutputRealize: return "output-realize";
        case Command::Analyze: return "analyze";
        case Command::Transfer: return "transfer";
        case Command::Examples: return "examples";
    }
    return "?";
}

LogLevel log_level_from_env() {
    const char* v = std::getenv("REALIZE_LOG");
    if (v == nullptr || *v == '\0') {
        return LogLevel::Error;
    }
    const std::string s(v);
    if (s == "error") return LogLevel::Error;
    if (s == "info") return LogLevel::Info;
    if (s == "debug") return LogLevel::Debug;
    throw ConfigError("REALIZE_LOG must be error, info or debug, got '" + s + "'");
}

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path);
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << format_real(row[i]);
        }
        out << '\n';
    }
    if (!out) {
        throw ConfigError("write to " + path + " failed");
    }
}

namespace {

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

class Log {
public:
    Log(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
    void info(const std::string& msg) const {
        if (level_ >= LogLevel::Info) err_ << "[info] " << msg << '\n';
    }
    void debug(const std::string& msg) const {
        if (level_ >= LogLevel::Debug) err_ << "[debug] " << msg << '\n';
    }
    void warn(const std::string& msg) const { err_ << "warning: " << msg << '\n'; }

private:
    std::ostream& err_;
    LogLevel level_;
};

// Everything one command needs from the config file.
struct Setup {
    Config cfg;
    AffineSystem sys;
    std::optional<TimeGrid> grid;
};

Config load_config(const RunManifest& m) {
    if (m.config_path.empty()) {
        throw ConfigError("--config is required for '" + to_string(m.command) + "'");
    }
    std::ifstream in(m.config_path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read config file " + m.config_path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    Config cfg = Config::parse(buf.str());
    for (const auto& [key, value] : m.overrides) {
        cfg.set(key, value);
    }
    return cfg;
}

std::optional<TimeGrid> load_grid(const Config& cfg, const RunManifest& m) {
    if (!cfg.has("time")) {
        return std::nullopt;
    }
    const double t0 = parse_real(cfg.get("time", "t0").value_or("0"), "[time] t0");
    const double t1 = parse_real(cfg.require("time", "t1"), "[time] t1");
    if (!(t1 > t0)) {
        throw ConfigError("[time] needs t1 > t0");
    }
    int steps = 0;
    if (m.step) {
        if (!(*m.step > 0.0)) {
            throw ConfigError("--step must be positive");
        }
        steps = static_cast<int>(std::lround((t1 - t0) / *m.step));
    } else {
        steps = parse_int(cfg.get("time", "steps").value_or("1000"), "[time] steps");
    }
    if (steps < 2) {
        throw ConfigError("the time grid needs at least 2 steps");
    }
    return TimeGrid::uniform(t0, t1, steps);
}

const TimeGrid& require_grid(const Setup& s) {
    if (!s.grid) {
        throw ConfigError("missing section [time]");
    }
    return *s.grid;
}

Setup load_setup(const RunManifest& m, const Log& log) {
    Config cfg = load_config(m);
    AffineSystem sys = load_system(cfg);
    std::optional<TimeGrid> grid = load_grid(cfg, m);
    log.info("system " + sys.name() + ": n = " + std::to_string(sys.n()) +
             ", p = " + std::to_string(sys.p()) + ", m = " + std::to_string(sys.m()));
    if (grid) {
        log.info("grid [" + format_real(grid->front()) + ", " + format_real(grid->back()) + "] with " +
                 std::to_string(grid->size() - 1) + " steps");
    }
    return Setup{std::move(cfg), std::move(sys), std::move(grid)};
}

// key1..keyN of a section, each an expression in t.
std::vector<expr::Expr> time_expressions(const Config& cfg, const std::string& section,
                                         const std::string& prefix, int count) {
    const ConfigSection* sec = cfg.section(section);
    if (sec == nullptr) {
        throw ConfigError("missing section [" + section + "]");
    }
    for (const auto& [key, value] : sec->entries) {
        bool known = false;
        for (int i = 1; i <= count; ++i) {
            known = known || key == prefix + std::to_string(i);
        }
        if (!known) {
            throw ConfigError("unknown key '" + key + "' in [" + section + "]");
        }
    }
    std::vector<expr::Expr> out;
    for (int i = 1; i <= count; ++i) {
        const std::string key = prefix + std::to_string(i);
        const std::string text = cfg.require(section, key);
        try {
            out.push_back(expr::parse(text, 0));
        } catch (const Error& e) {
            throw ConfigError("[" + section + "] " + key + ": " + e.what());
        }
    }
    return out;
}

Vector parse_vector(const std::string& text, int n, const std::string& what) {
    const auto parts = split(text, ',');
    if (static_cast<int>(parts.size()) != n) {
        throw ConfigError(what + " needs " + std::to_string(n) + " comma-separated values");
    }
    Vector v(n);
    for (int i = 0; i < n; ++i) {
        v(i) = parse_real(parts[static_cast<std::size_t>(i)], what);
    }
    return v;
}

std::vector<std::string> numbered(const std::string& prefix, int count) {
    std::vector<std::string> out;
    for (int i = 1; i <= count; ++i) {
        out.push_back(prefix + std::to_string(i));
    }
    return out;
}

void append(std::vector<double>& row, const Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        row.push_back(v(i));
    }
}

fs::path prepare_output_dir(const RunManifest& m) {
    const fs::path dir(m.output_dir.empty() ? "." : m.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    return dir;
}

void print_report(std::ostream& out, const RealizabilityReport& r) {
    out << "verdict: " << to_string(r.verdict) << '\n'
        << "max constraint residual: " << sci(r.max_constraint_residual) << '\n'
        << "initial error: " << sci(r.initial_error) << '\n';
}

// --- check ------------------------------------------------------------------

int cmd_check(const RunManifest& m, std::ostream& out, const Log& log) {
    const Setup s = load_setup(m, log);
    const TimeGrid& grid = require_grid(s);
    const DesiredTrajectory xd = DesiredTrajectory::analytic(
        time_expressions(s.cfg, "trajectory", "x", s.sys.n()), grid.front(), grid.back());
    const RealizabilityReport r = check_realizable(s.sys, xd, grid, m.tol_constraint, m.tol_initial);
    print_report(out, r);

    const fs::path dir = prepare_output_dir(m);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rows.push_back({grid[i], r.per_time_residuals[i]});
    }
    write_csv((dir / "residuals.csv").string(), {"t", "constraint_residual"}, rows);
    log.info("wrote " + (dir / "residuals.csv").string());
    return r.realizable() ? kExitOk : kExitDomain;
}

// --- synthesize ---------------------------------------------------------------

int cmd_synthesize(const RunManifest& m, std::ostream& out, const Log& log) {
    const Setup s = load_setup(m, log);
    const TimeGrid& grid = require_grid(s);
    const int n = s.sys.n();
    const int p = s.sys.p();
    const DesiredTrajectory xd = DesiredTrajectory::analytic(
        time_expressions(s.cfg, "trajectory", "x", n), grid.front(), grid.back());
    const RealizabilityReport r = check_realizable(s.sys, xd, grid, m.tol_constraint, m.tol_initial);
    print_report(out, r);
    if (!r.realizable()) {
        if (!m.force) {
            out << "not realizable: no control written (use --force to synthesize anyway)\n";
            return kExitDomain;
        }
        log.warn("trajectory is not realizable (" + to_string(r.verdict) +
                 "); the control is a least-squares approximation");
    }
    SynthesisOptions opts;
    opts.tol_constraint = m.tol_constraint;
    opts.tol_initial = m.tol_initial;
    opts.force = m.force;
    const ControlSignal u = synthesize_control(s.sys, xd, grid, opts);
    out << "sup |u|: " << sci(u.sup_norm()) << '\n';

    std::vector<std::string> header{"t"};
    for (const auto& h : numbered("u", p)) header.push_back(h);
    std::vector<Vector> sim;
    if (m.verify) {
        sim = simulate_closed(s.sys, u, s.sys.x0(), grid);
        for (const auto& h : numbered("x", n)) header.push_back(h);
        header.push_back("error");
    }
    std::vector<std::vector<double>> rows;
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> row{grid[i]};
        append(row, u.samples()[i]);
        if (m.verify) {
            append(row, sim[i]);
            const double e = (sim[i] - xd.value(grid[i])).norm();
            worst = std::max(worst, e);
            row.push_back(e);
        }
        rows.push_back(std::move(row));
    }
    if (m.verify) {
        out << "sup tracking error: " << sci(worst) << '\n'
            << "tracking cost J: " << sci(tracking_cost(sim, xd, grid)) << '\n';
    }
    const fs::path dir = prepare_output_dir(m);
    write_csv((dir / "control.csv").string(), header, rows);
    log.info("wrote " + (dir / "control.csv").string());
    return kExitOk;
}

// --- output-realize -----------------------------------------------------------

std::vector<FreeCoordinate> load_free(const Config& cfg, int n) {
    std::vector<FreeCoordinate> out;
    const ConfigSection* sec = cfg.section("free");
    if (sec == nullptr) {
        return out;
    }
    for (const auto& [key, value] : sec->entries) {
        int idx = 0;
        if (key.size() < 2 || key[0] != 'x') {
            throw ConfigError("[free] keys must be x1..x" + std::to_string(n) + ", got '" + key + "'");
        }
        idx = parse_int(key.substr(1), "[free] " + key);
        if (idx < 1 || idx > n) {
            throw ConfigError("[free] " + key + " is not a state coordinate");
        }
        try {
            out.push_back(FreeCoordinate{idx, expr::parse(value, 0)});
        } catch (const Error& e) {
            throw ConfigError("[free] " + key + ": " + e.what());
        }
    }
    return out;
}

int cmd_output_realize(const RunManifest& m, std::ostream& out, const Log& log) {
    const Setup s = load_setup(m, log);
    const TimeGrid& grid = require_grid(s);
    if (!s.sys.has_output()) {
        throw ConfigError("output-realize needs an [output] section");
    }
    const int n = s.sys.n();
    const int p = s.sys.p();
    const DesiredOutput yd(time_expressions(s.cfg, "output_desired", "y", s.sys.m()), grid.front(),
                           grid.back());
    RealizeOptions opts;
    opts.seed = m.seed;
    opts.free = load_free(s.cfg, n);
    if (const ConfigSection* plan = s.cfg.section("plan")) {
        opts.plan = parse_plan(plan->lines, n);
    }

    std::optional<DesiredTrajectory> xd;
    std::optional<ControlSignal> u;
    if (!opts.plan && opts.free.empty() && is_mechanical_position_form(s.sys)) {
        const double t0 = grid.front();
        const Vector& x0 = s.sys.x0();
        if (std::fabs(x0(0) - yd.value(t0)(0)) > kConsistencyTol) {
            throw InconsistentInitialData("x1(t0) = y_d(t0) violated: residual " +
                                          sci(std::fabs(x0(0) - yd.value(t0)(0))));
        }
        if (std::fabs(x0(1) - yd.derivative(t0)(0)) > kConsistencyTol) {
            throw InconsistentInitialData("x2(t0) = y_d'(t0) violated: residual " +
                                          sci(std::fabs(x0(1) - yd.derivative(t0)(0))));
        }
        out << "method: computed-torque\n";
        u = computed_torque(s.sys, yd, grid);
        xd = DesiredTrajectory::analytic(
            {yd.expressions()[0], yd.derivative_expressions()[0]}, grid.front(), grid.back());
    } else {
        OutputRealization r = realize_output(s.sys, yd, grid, opts);
        out << "method: " << to_string(r.method) << '\n';
        if (r.method == RealizationMethod::LinearDae) {
            out << "classification: " << to_string(r.classification) << '\n';
        } else {
            for (const auto& step : r.plan.steps) {
                out << "plan: " << to_string(step) << '\n';
            }
        }
        log.info(r.note);
        xd = std::move(r.trajectory);
        SynthesisOptions so;
        so.tol_constraint = m.tol_constraint;
        so.tol_initial = m.tol_initial;
        so.force = m.force;
        u = synthesize_control(s.sys, *xd, grid, so);
    }

    std::vector<std::string> header{"t"};
    for (const auto& h : numbered("x", n)) header.push_back(h);
    for (const auto& h : numbered("u", p)) header.push_back(h);
    header.push_back("y_residual");
    std::vector<Vector> sim;
    if (m.verify) {
        sim = simulate_closed(s.sys, *u, s.sys.x0(), grid);
        for (const auto& h : numbered("sim_x", n)) header.push_back(h);
        header.push_back("sim_y_error");
    }
    std::vector<std::vector<double>> rows;
    double worst = 0.0, worst_sim = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid[i];
        const Vector x = xd->value(t);
        std::vector<double> row{t};
        append(row, x);
        append(row, u->samples()[i]);
        const double res = (yd.value(t) - s.sys.output_value(x)).norm();
        worst = std::max(worst, res);
        row.push_back(res);
        if (m.verify) {
            append(row, sim[i]);
            const double e = (yd.value(t) - s.sys.output_value(sim[i])).norm();
            worst_sim = std::max(worst_sim, e);
            row.push_back(e);
        }
        rows.push_back(std::move(row));
    }
    out << "max output residual: " << sci(worst) << '\n';
    if (m.verify) {
        out << "max simulated output error: " << sci(worst_sim) << '\n';
    }
    const fs::path dir = prepare_output_dir(m);
    write_csv((dir / "output_realization.csv").string(), header, rows);
    log.info("wrote " + (dir / "output_realization.csv").string());
    return kExitOk;
}

// --- analyze ------------------------------------------------------------------

// Constant B and affine R: the rank test is then also necessary.
bool is_lti(const AffineSystem& sys, std::uint64_t seed) {
    for (const auto& e : sys.input_expressions()) {
        if (!expr::state_variables(e).empty()) {
            return false;
        }
    }
    const int n = sys.n();
    const Vector r0 = sys.drift(Vector::Zero(n));
    Matrix a(n, n);
    for (int j = 0; j < n; ++j) {
        a.col(j) = sys.drift(Vector::Unit(n, j)) - r0;
    }
    std::mt19937_64 rng(seed + 2);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int k = 0; k < 20; ++k) {
        Vector x(n);
        for (int i = 0; i < n; ++i) x(i) = u(rng);
        if ((sys.drift(x) - a * x - r0).norm() > kDefaultAffineTol * std::max(1.0, x.norm())) {
            return false;
        }
    }
    return true;
}

std::string join(const Vector& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += (i ? " " : "") + sci(v(i));
    }
    return s;
}

std::string verdict_line(const ControllabilityReport& r, bool necessary) {
    std::string rank = "rank " + std::to_string(r.rank) + "/" + std::to_string(r.required);
    if (r.controllable) {
        return "YES (" + rank + ")";
    }
    return necessary ? "NO (" + rank + ")" : "NOT PROVEN (" + rank + ")";
}

int cmd_analyze(const RunManifest& m, std::ostream& out, const Log& log) {
    const Setup s = load_setup(m, log);
    const AffineSystem& sys = s.sys;
    out << "system: " << sys.name() << " (n = " << sys.n() << ", p = " << sys.p()
        << ", m = " << sys.m() << ")\n";

    const ProjectorConstancy pc = check_constant_projectors(sys, 25, kDefaultProjectorTol, m.seed);
    out << "projectors: " << (pc.constant ? "constant" : "state-dependent") << " (max deviation "
        << sci(pc.max_deviation) << ")\n";
    if (!pc.constant) {
        out << "linearizing assumption: FAIL (part 1, projector deviation " << sci(pc.max_deviation)
            << ")\n";
        return kExitOk;
    }
    const AffinePart part = fit_affine_part(sys, m.seed);
    out << "affine part: fit residual " << sci(part.fit_residual) << '\n';
    if (part.fit_residual > kDefaultAffineTol) {
        out << "linearizing assumption: FAIL (part 2, fit residual " << sci(part.fit_residual)
            << ")\n";
        return kExitOk;
    }
    if (sys.has_output() && !sys.has_linear_output()) {
        out << "linearizing assumption: FAIL (part 3, nonlinear output)\n";
        return kExitOk;
    }
    const ControllabilityReport kr = controllability_report(part.a, part.p, part.q, m.tol_rank);
    const bool necessary = is_lti(sys, m.seed);
    out << "linearizing assumption: PASS; controllable: " << verdict_line(kr, necessary) << '\n';
    out << "singular values of K: " << join(kr.singular_values) << '\n';
    log.debug("K =\n" + [&] {
        std::ostringstream os;
        os << kr.ctrb_matrix;
        return os.str();
    }());
    if (m.output_analysis) {
        if (!sys.has_output()) {
            out << "output controllable: no output defined\n";
        } else {
            const ControllabilityReport kc = output_controllability_report(
                part.a, part.p, part.q, sys.output_matrix(), m.tol_rank);
            out << "output controllable: " << verdict_line(kc, necessary) << '\n';
            out << "singular values of K_C: " << join(kc.singular_values) << '\n';
        }
    }
    return kExitOk;
}

// --- transfer -----------------------------------------------------------------

int cmd_transfer(const RunManifest& m, std::ostream& out, const Log& log) {
    const Setup s = load_setup(m, log);
    const TimeGrid& grid = require_grid(s);
    const int n = s.sys.n();
    const int p = s.sys.p();
    const Vector x1 = parse_vector(s.cfg.require("transfer", "x1"), n, "[transfer] x1");
    const int basis = parse_int(s.cfg.get("transfer", "basis").value_or("0"), "[transfer] basis");
    const TransferProblem tp = synthesize_transfer(s.sys, x1, grid, basis, m.seed);
    SynthesisOptions so;
    so.tol_constraint = m.tol_constraint;
    so.tol_initial = m.tol_initial;
    const ControlSignal u = synthesize_control(s.sys, tp.trajectory, grid, so);
    const std::vector<Vector> sim = simulate_closed(s.sys, u, s.sys.x0(), grid);
    out << "basis size: " << tp.basis_size << '\n'
        << "terminal residual: " << sci(tp.residual) << '\n'
        << "simulated terminal error: " << sci((sim.back() - x1).norm()) << '\n'
        << "sup |u|: " << sci(u.sup_norm()) << '\n';

    std::vector<std::string> header{"t"};
    for (const auto& h : numbered("x", n)) header.push_back(h);
    for (const auto& h : numbered("u", p)) header.push_back(h);
    if (m.verify) {
        for (const auto& h : numbered("sim_x", n)) header.push_back(h);
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<double> row{grid[i]};
        append(row, tp.trajectory.value(grid[i]));
        append(row, u.samples()[i]);
        if (m.verify) {
            append(row, sim[i]);
        }
        rows.push_back(std::move(row));
    }
    const fs::path dir = prepare_output_dir(m);
    write_csv((dir / "transfer.csv").string(), header, rows);
    log.info("wrote " + (dir / "transfer.csv").string());
    return kExitOk;
}

int cmd_examples(std::ostream& out) {
    for (const auto& name : builtin_names()) {
        out << name << ": " << builtin_description(name) << '\n';
    }
    return kExitOk;
}

}  // namespace

int run(const RunManifest& manifest, std::ostream& out, std::ostream& err, LogLevel level) {
    const Log log(err, level);
    log.debug("command " + to_string(manifest.command) + ", seed " +
              std::to_string(manifest.seed));
    try {
        switch (manifest.command) {
            case Command::Check: return cmd_check(manifest, out, log);
            case Command::Synthesize: return cmd_synthesize(manifest, out, log);
            case Command::OutputRealize: return cmd_output_realize(manifest, out, log);
            case Command::Analyze: return cmd_analyze(manifest, out, log);
            case Command::Transfer: return cmd_transfer(manifest, out, log);
            case Command::Examples: return cmd_examples(out);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SyntaxError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UnknownIdentifier& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UnknownExample& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitUsage;
}

}  // namespace realize::cli
