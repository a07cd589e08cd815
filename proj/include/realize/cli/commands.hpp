#pragma once

#include "realize/linalg.hpp"
#include "realize/realizability.hpp"
#include "realize/structure.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace realize::cli {

enum class Command { Check, Synthesize, OutputRealize, Analyze, Transfer, Examples };

std::string to_string(Command c);

/// Exit codes: 0 success, 1 domain verdict failure, 2 usage or config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

struct RunManifest {
    Command command = Command::Examples;
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;  // section.key, value
    std::string output_dir = ".";
    std::uint64_t seed = kDefaultSeed;
    std::optional<double> step;  // replaces [time] steps
    bool force = false;
    bool verify = false;
    bool output_analysis = false;  // analyze: add K_C
    double tol_constraint = kDefaultConstraintTol;
    double tol_initial = kDefaultInitialTol;
    double tol_rank = linalg::kRankTolerance;
};

enum class LogLevel { Error, Info, Debug };

/// REALIZE_LOG (error, info, debug; default error). Throws ConfigError on
/// anything else.
LogLevel log_level_from_env();

/// Runs one command. Reports go to `out`, diagnostics to `err`; library
/// errors are mapped to exit codes here, nothing escapes.
int run(const RunManifest& manifest, std::ostream& out, std::ostream& err,
        LogLevel level = LogLevel::Error);

/// Header row plus one row per sample, 17 significant digits, LF endings.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string format_real(double v);  // %.17g

}  // namespace realize::cli
