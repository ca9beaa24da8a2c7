#pragma once

#include "fracle/analysis.hpp"
#include "fracle/domain_grid.hpp"
#include "fracle/solvers.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fracle {

using Json = nlohmann::ordered_json;

/// Exit codes shared by the command line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitAuditFailure = 1,
    kExitNonconvergence = 2,
    kExitRejected = 3,
    kExitConfigError = 4,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "FRACLE_OUTPUT_DIR";

enum class SolverChoice { automatic, sublinear, mountain_pass };

struct DomainSpec {
    DomainKind kind = DomainKind::interval;
    double lower = -1.0;  ///< interval
    double upper = 1.0;   ///< interval
    double width = 2.0;   ///< rectangle
    double height = 2.0;  ///< rectangle
    double radius = 1.0;  ///< disk
    Point center{0.0, 0.0};

    Domain build() const;
};

struct ExperimentConfig {
    std::string name = "run";
    DomainSpec domain;
    int resolution = 256;
    double s = 0.5;
    double p = 0.5;
    double q = 0.5;
    SolverChoice solver = SolverChoice::automatic;
    bool singular_correction = true;
    SolverConfig solver_config;
    /// When set, a second solve from this guess feeds the uniqueness gap.
    std::optional<InitialGuess> second_initial_guess;
    std::optional<std::filesystem::path> output_dir;
    bool write_solution = true;
    int trace_samples = 256;

    /// Throws ConfigError. Unknown keys are rejected so that typos do not pass silently.
    static ExperimentConfig from_json(const Json& j);
    Json to_json() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Output directory: the config value, else $FRACLE_OUTPUT_DIR, else "fracle_out".
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

struct ExperimentResult {
    Json record;
    int exit_code = kExitOk;
    std::optional<SolutionPair> pair;
    std::optional<Grid> grid;
};

/// Dispatch, solve and run the analysis battery. Never throws for numerical failures;
/// they are reported in the record. Every record has the same key set.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes the record as <output_dir>/<name>.json and, when requested, the solution CSV
/// next to it. Returns the record path.
std::filesystem::path persist(ExperimentResult& result, const ExperimentConfig& cfg);

/// Record without its wall-clock field, for reproducibility comparisons.
Json strip_timing(Json record);

/// CSV of every lattice node: x[,y],interior,u,v with exterior values 0.
void write_solution_csv(const Grid& grid, const SolutionPair& pair, const std::filesystem::path& path);

struct SweepPoint {
    double p = 0.0;
    double q = 0.0;
};

/// One record per point, in input order. Points run concurrently up to `workers`
/// threads; resonant points are marked skipped without solving.
std::vector<Json> run_phase_diagram(const ExperimentConfig& base, const std::vector<SweepPoint>& points,
                                    unsigned workers = 0);

/// Table header and rows for the phase diagram CSV.
std::string phase_diagram_csv(const std::vector<Json>& records);

/// Maximum-principle audit plus operator invariants as a JSON report.
Json run_audit(const ExperimentConfig& cfg, int trials, std::uint64_t seed, bool& passed);

}  // namespace fracle
