#include "fracle/experiment.hpp"

#include "fracle/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <set>
#include <sstream>
#include <thread>

namespace fracle {

namespace {

std::string_view to_string(SolverChoice choice) {
    switch (choice) {
    case SolverChoice::automatic: return "auto";
    case SolverChoice::sublinear: return "sublinear";
    case SolverChoice::mountain_pass: return "mountain_pass";
    }
    return "auto";
}

SolverChoice parse_solver(const std::string& name) {
    if (name == "auto") return SolverChoice::automatic;
    if (name == "sublinear") return SolverChoice::sublinear;
    if (name == "mountain_pass") return SolverChoice::mountain_pass;
    throw ConfigError("unknown solver '" + name + "' (expected auto, sublinear or mountain_pass)");
}

// Reads keys from one JSON object and rejects anything it did not consume.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) {
            throw ConfigError(where_ + " must be a JSON object");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    template <class T>
    void read(const std::string& key, T& out) {
        seen_.insert(key);
        if (!has(key)) {
            return;
        }
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(where_ + "." + key + ": " + e.what());
        }
    }

    void mark(const std::string& key) { seen_.insert(key); }

    const Json& child(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) {
                throw ConfigError("unknown key '" + item.key() + "' in " + where_);
            }
        }
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

std::string_view kind_name(DomainKind kind) {
    switch (kind) {
    case DomainKind::interval: return "interval";
    case DomainKind::rectangle: return "rectangle";
    case DomainKind::disk: return "disk";
    }
    return "interval";
}

DomainSpec domain_from_json(const Json& j) {
    ObjectReader r(j, "domain");
    DomainSpec spec;
    std::string kind = "interval";
    r.read("kind", kind);
    if (kind == "interval") {
        spec.kind = DomainKind::interval;
        r.read("lower", spec.lower);
        r.read("upper", spec.upper);
    } else if (kind == "rectangle") {
        spec.kind = DomainKind::rectangle;
        r.read("width", spec.width);
        r.read("height", spec.height);
    } else if (kind == "disk") {
        spec.kind = DomainKind::disk;
        r.read("radius", spec.radius);
    } else {
        throw ConfigError("unknown domain kind '" + kind + "'");
    }
    if (spec.kind != DomainKind::interval) {
        std::vector<double> center{0.0, 0.0};
        r.read("center", center);
        if (center.size() != 2) {
            throw ConfigError("domain.center needs two coordinates");
        }
        spec.center = {center[0], center[1]};
    }
    r.finish();
    spec.build();
    return spec;
}

Json domain_to_json(const DomainSpec& spec) {
    Json j;
    j["kind"] = kind_name(spec.kind);
    switch (spec.kind) {
    case DomainKind::interval:
        j["lower"] = spec.lower;
        j["upper"] = spec.upper;
        break;
    case DomainKind::rectangle:
        j["width"] = spec.width;
        j["height"] = spec.height;
        j["center"] = {spec.center[0], spec.center[1]};
        break;
    case DomainKind::disk:
        j["radius"] = spec.radius;
        j["center"] = {spec.center[0], spec.center[1]};
        break;
    }
    return j;
}

SolverConfig solver_config_from_json(const Json& j) {
    ObjectReader r(j, "solver_config");
    SolverConfig c;
    r.read("max_iterations", c.max_iterations);
    r.read("gradient_tolerance", c.gradient_tolerance);
    r.read("mountain_pass_tolerance", c.mountain_pass_tolerance);
    r.read("armijo", c.armijo);
    r.read("backtrack", c.backtrack);
    r.read("min_step", c.min_step);
    r.read("smoothing", c.smoothing);
    r.read("seed", c.seed);
    std::string guess(to_string(c.initial_guess));
    r.read("initial_guess", guess);
    c.initial_guess = parse_initial_guess(guess);
    r.read("supplied_guess", c.supplied_guess);
    r.read("path_nodes", c.path_nodes);
    r.read("polish", c.polish);
    r.read("residual_tolerance", c.residual_tolerance);
    r.read("newton_max_iterations", c.newton_max_iterations);
    r.read("acceptance_tolerance", c.acceptance_tolerance);
    r.finish();
    c.validate();
    return c;
}

Json solver_config_to_json(const SolverConfig& c) {
    Json j;
    j["max_iterations"] = c.max_iterations;
    j["gradient_tolerance"] = c.gradient_tolerance;
    j["mountain_pass_tolerance"] = c.mountain_pass_tolerance;
    j["armijo"] = c.armijo;
    j["backtrack"] = c.backtrack;
    j["min_step"] = c.min_step;
    j["smoothing"] = c.smoothing;
    j["seed"] = c.seed;
    j["initial_guess"] = to_string(c.initial_guess);
    if (!c.supplied_guess.empty()) {
        j["supplied_guess"] = c.supplied_guess;
    }
    j["path_nodes"] = c.path_nodes;
    j["polish"] = c.polish;
    j["residual_tolerance"] = c.residual_tolerance;
    j["newton_max_iterations"] = c.newton_max_iterations;
    j["acceptance_tolerance"] = c.acceptance_tolerance;
    return j;
}

Json number_or_null(double x) {
    return std::isfinite(x) ? Json(x) : Json(nullptr);
}

Json energy_json(const EnergyReport& e) {
    return Json{{"value", number_or_null(e.value)},
                {"kinetic", number_or_null(e.kinetic)},
                {"potential", number_or_null(e.potential)},
                {"norm", number_or_null(e.norm)}};
}

int exit_code_for(SolveStatus status) {
    switch (status) {
    case SolveStatus::converged: return kExitOk;
    case SolveStatus::resonant:
    case SolveStatus::wrong_regime: return kExitRejected;
    default: return kExitNonconvergence;
    }
}

std::string point_name(const std::string& base, double p, double q) {
    std::ostringstream os;
    os << base << "_p" << p << "_q" << q;
    return os.str();
}

}  // namespace

Domain DomainSpec::build() const {
    switch (kind) {
    case DomainKind::interval: return Domain::interval(lower, upper);
    case DomainKind::rectangle: return Domain::rectangle(width, height, center);
    case DomainKind::disk: return Domain::disk(radius, center);
    }
    throw ConfigError("unknown domain kind");
}

ExperimentConfig ExperimentConfig::from_json(const Json& j) {
    ObjectReader r(j, "config");
    ExperimentConfig c;
    r.read("name", c.name);
    if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
        throw ConfigError("name must be a nonempty file stem");
    }
    r.mark("domain");
    if (r.has("domain")) {
        c.domain = domain_from_json(r.child("domain"));
    }
    if (r.has("dimension")) {
        int n = 0;
        r.read("dimension", n);
        if (n != 1 && n != 2) {
            throw ConfigError("dimension " + std::to_string(n) + " is not supported (only 1 and 2)");
        }
        if (n != c.domain.build().dimension()) {
            throw ConfigError("dimension " + std::to_string(n) + " does not match the domain kind");
        }
    } else {
        r.mark("dimension");
    }
    r.read("resolution", c.resolution);
    r.read("s", c.s);
    r.read("p", c.p);
    r.read("q", c.q);
    std::string solver(to_string(c.solver));
    r.read("solver", solver);
    c.solver = parse_solver(solver);
    r.read("singular_correction", c.singular_correction);
    r.mark("solver_config");
    if (r.has("solver_config")) {
        c.solver_config = solver_config_from_json(r.child("solver_config"));
    }
    if (r.has("second_initial_guess")) {
        std::string guess;
        r.read("second_initial_guess", guess);
        c.second_initial_guess = parse_initial_guess(guess);
    } else {
        r.mark("second_initial_guess");
    }
    if (r.has("output_dir")) {
        std::string dir;
        r.read("output_dir", dir);
        c.output_dir = dir;
    } else {
        r.mark("output_dir");
    }
    r.read("write_solution", c.write_solution);
    r.read("trace_samples", c.trace_samples);
    r.finish();

    if (c.resolution < kMinResolution) {
        throw ConfigError("resolution must be at least " + std::to_string(kMinResolution));
    }
    if (!(c.s > 0.0 && c.s < 1.0)) {
        throw ConfigError("s must lie in (0, 1)");
    }
    if (!(c.p > 0.0) || !(c.q > 0.0) || !std::isfinite(c.p) || !std::isfinite(c.q)) {
        throw ConfigError("p and q must be positive");
    }
    if (c.trace_samples < 4) {
        throw ConfigError("trace_samples must be at least 4");
    }
    return c;
}

Json ExperimentConfig::to_json() const {
    Json j;
    j["name"] = name;
    j["domain"] = domain_to_json(domain);
    j["dimension"] = domain.build().dimension();
    j["resolution"] = resolution;
    j["s"] = s;
    j["p"] = p;
    j["q"] = q;
    j["solver"] = to_string(solver);
    j["singular_correction"] = singular_correction;
    j["solver_config"] = solver_config_to_json(solver_config);
    j["second_initial_guess"] = second_initial_guess ? Json(to_string(*second_initial_guess)) : Json(nullptr);
    j["output_dir"] = output_dir ? Json(output_dir->string()) : Json(nullptr);
    j["write_solution"] = write_solution;
    j["trace_samples"] = trace_samples;
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    Json j;
    try {
        j = Json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return ExperimentConfig::from_json(j);
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
    if (cfg.output_dir) {
        return *cfg.output_dir;
    }
    if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
        return env;
    }
    return "fracle_out";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const ExponentPair exps{cfg.p, cfg.q};
    const Domain domain = cfg.domain.build();
    const int n = domain.dimension();
    const Regime regime = classify(exps, n, cfg.s);

    ExperimentResult result;
    Json& rec = result.record;
    rec["input"] = cfg.to_json();
    rec["regime"] = to_string(regime);
    rec["rhs_factor"] = rhs_factor(exps, n, cfg.s);
    rec["solver"] = nullptr;
    rec["status"] = nullptr;
    rec["exit_code"] = nullptr;
    rec["diagnostic"] = "";
    rec["interior_nodes"] = nullptr;
    rec["spacing"] = nullptr;
    rec["residual_u"] = nullptr;
    rec["residual_v"] = nullptr;
    rec["energy"] = nullptr;
    rec["min_u"] = nullptr;
    rec["min_v"] = nullptr;
    rec["sup_u"] = nullptr;
    rec["sup_v"] = nullptr;
    rec["descent_iterations"] = nullptr;
    rec["newton_iterations"] = nullptr;
    rec["mountain_pass"] = nullptr;
    rec["ridge_lower_bound"] = nullptr;
    rec["rellich"] = nullptr;
    rec["boundary_exponent"] = nullptr;
    rec["uniqueness"] = nullptr;
    rec["nonexistence"] = nullptr;
    rec["solution_csv"] = nullptr;
    rec["wall_clock_seconds"] = nullptr;

    auto stamp = [&](int code) {
        result.exit_code = code;
        rec["exit_code"] = code;
        rec["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return result;
    };

    const bool sublinear = regime == Regime::sublinear;
    const bool superlinear = regime == Regime::superlinear_subcritical;
    if (regime == Regime::critical || regime == Regime::supercritical) {
        rec["nonexistence"] = Json{{"star_shaped", domain.is_star_shaped_wrt_origin()},
                                   {"rhs_factor_nonpositive", rhs_factor(exps, n, cfg.s) <= 0.0},
                                   {"verdict", domain.is_star_shaped_wrt_origin() ? "obstructed" : "undecided"}};
    }
    SolverChoice choice = cfg.solver;
    if (choice == SolverChoice::automatic) {
        if (!sublinear && !superlinear) {
            rec["status"] = regime == Regime::resonant ? "resonant" : "wrong_regime";
            rec["diagnostic"] = regime == Regime::resonant
                                    ? "pq = 1 is the resonant case and is not solved"
                                    : "exponents on or above the critical hyperbole; no solver applies";
            return stamp(kExitRejected);
        }
        choice = sublinear ? SolverChoice::sublinear : SolverChoice::mountain_pass;
    }
    rec["solver"] = to_string(choice);

    const Grid grid = build_grid(domain, cfg.resolution);
    const FractionalOperator op = assemble(grid, cfg.s, AssemblyOptions{cfg.singular_correction});
    rec["interior_nodes"] = grid.size();
    rec["spacing"] = grid.spacing();

    auto solve = [&](const SolverConfig& sc) {
        return choice == SolverChoice::sublinear ? minimize_sublinear(op, exps, sc) : mountain_pass(op, exps, sc);
    };
    SolutionPair pair;
    try {
        pair = solve(cfg.solver_config);
    } catch (const NumericalError& e) {
        rec["status"] = "nonconvergence";
        rec["diagnostic"] = e.what();
        return stamp(kExitNonconvergence);
    }

    rec["status"] = to_string(pair.status);
    rec["diagnostic"] = pair.diagnostic;
    if (pair.status == SolveStatus::resonant || pair.status == SolveStatus::wrong_regime) {
        return stamp(kExitRejected);
    }
    rec["residual_u"] = number_or_null(pair.residual_u);
    rec["residual_v"] = number_or_null(pair.residual_v);
    rec["energy"] = energy_json(pair.energy);
    rec["min_u"] = number_or_null(pair.min_u);
    rec["min_v"] = number_or_null(pair.min_v);
    rec["sup_u"] = number_or_null(pair.u.sup_norm());
    rec["sup_v"] = number_or_null(pair.v.sup_norm());
    rec["descent_iterations"] = pair.trace.empty() ? 0 : pair.trace.back().iteration;
    rec["newton_iterations"] = pair.newton_iterations;
    if (pair.mountain_pass) {
        const MountainPassInfo& mp = *pair.mountain_pass;
        rec["mountain_pass"] = Json{{"endpoint_scale", mp.endpoint_scale},
                                    {"endpoint_energy", number_or_null(mp.endpoint_energy)},
                                    {"peak_energy", number_or_null(mp.peak_energy)},
                                    {"sweeps", mp.sweeps},
                                    {"restarts", mp.restarts}};
        // The Green matrix costs O(m^3); skip the certificate on large grids.
        if (grid.size() <= 2048) {
            rec["ridge_lower_bound"] = number_or_null(ridge_lower_bound(op, exps).lower_bound);
        }
    }

    const bool accepted = pair.status == SolveStatus::converged;
    if (accepted) {
        const RellichReport rr = rellich_residual(pair, exps, grid, cfg.s, cfg.trace_samples);
        rec["rellich"] = Json{{"lhs", number_or_null(rr.lhs)},
                              {"rhs_factor", rr.rhs_factor},
                              {"rhs", number_or_null(rr.rhs)},
                              {"relative_residual", number_or_null(rr.relative_residual)},
                              {"cross_gap", number_or_null(rr.cross_gap)},
                              {"fit_failures", rr.fit_failures},
                              {"corners_dropped", rr.corners_dropped},
                              {"star_shaped", rr.star_shaped},
                              {"flagged", rr.flagged}};
        const ExponentFit fu = boundary_exponent_fit(pair.u, grid);
        const ExponentFit fv = boundary_exponent_fit(pair.v, grid);
        rec["boundary_exponent"] = Json{{"u", number_or_null(fu.alpha)},
                                        {"v", number_or_null(fv.alpha)},
                                        {"failures", fu.failures + fv.failures}};
        if (cfg.second_initial_guess) {
            SolverConfig second = cfg.solver_config;
            second.initial_guess = *cfg.second_initial_guess;
            const SolutionPair other = solve(second);
            if (other.status == SolveStatus::converged) {
                const UniquenessGap gap = uniqueness_gap(pair, other);
                rec["uniqueness"] = Json{{"initial_guess", to_string(second.initial_guess)},
                                         {"status", to_string(other.status)},
                                         {"gap_u", gap.gap_u},
                                         {"gap_v", gap.gap_v},
                                         {"relative_u", gap.relative_u},
                                         {"relative_v", gap.relative_v},
                                         {"sliding", gap.sliding}};
            } else {
                rec["uniqueness"] = Json{{"initial_guess", to_string(second.initial_guess)},
                                         {"status", to_string(other.status)},
                                         {"gap_u", nullptr},
                                         {"gap_v", nullptr},
                                         {"relative_u", nullptr},
                                         {"relative_v", nullptr},
                                         {"sliding", nullptr}};
            }
        }
    }
    result.pair = std::move(pair);
    result.grid = grid;
    return stamp(exit_code_for(result.pair->status));
}

std::filesystem::path persist(ExperimentResult& result, const ExperimentConfig& cfg) {
    const std::filesystem::path dir = resolve_output_dir(cfg);
    std::filesystem::create_directories(dir);
    if (cfg.write_solution && result.pair && result.grid) {
        const std::filesystem::path csv = dir / (cfg.name + "_solution.csv");
        write_solution_csv(*result.grid, *result.pair, csv);
        result.record["solution_csv"] = csv.string();
    }
    const std::filesystem::path path = dir / (cfg.name + ".json");
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << result.record.dump(2) << '\n';
    return path;
}

Json strip_timing(Json record) {
    if (record.is_object()) {
        record.erase("wall_clock_seconds");
    }
    return record;
}

void write_solution_csv(const Grid& grid, const SolutionPair& pair, const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (f == nullptr) {
        throw ConfigError("cannot write " + path.string());
    }
    const bool two_d = grid.dimension() == 2;
    std::fputs(two_d ? "x,y,interior,u,v\n" : "x,interior,u,v\n", f);
    for (int j = 0; j < grid.nodes_y(); ++j) {
        for (int i = 0; i < grid.nodes_x(); ++i) {
            const Point x = grid.node(i, j);
            const int k = grid.interior_index(i, j);
            const double u = k >= 0 ? pair.u[static_cast<std::size_t>(k)] : 0.0;
            const double v = k >= 0 ? pair.v[static_cast<std::size_t>(k)] : 0.0;
            if (two_d) {
                std::fprintf(f, "%.17g,%.17g,%d,%.17g,%.17g\n", x[0], x[1], k >= 0 ? 1 : 0, u, v);
            } else {
                std::fprintf(f, "%.17g,%d,%.17g,%.17g\n", x[0], k >= 0 ? 1 : 0, u, v);
            }
        }
    }
    std::fclose(f);
}

std::vector<Json> run_phase_diagram(const ExperimentConfig& base, const std::vector<SweepPoint>& points,
                                    unsigned workers) {
    std::vector<Json> records(points.size());
    if (points.empty()) {
        return records;
    }
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(points.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t k = next++; k < points.size(); k = next++) {
            ExperimentConfig cfg = base;
            cfg.p = points[k].p;
            cfg.q = points[k].q;
            cfg.name = point_name(base.name, cfg.p, cfg.q);
            cfg.write_solution = false;
            const ExponentPair exps{cfg.p, cfg.q};
            if (!(cfg.p > 0.0) || !(cfg.q > 0.0)) {
                records[k] = Json{{"input", cfg.to_json()}, {"status", "config_error"}, {"exit_code", kExitConfigError}};
                continue;
            }
            if (classify(exps, cfg.domain.build().dimension(), cfg.s) == Regime::resonant) {
                ExperimentResult skipped = run_experiment(cfg);
                skipped.record["status"] = "resonant_skipped";
                records[k] = std::move(skipped.record);
                continue;
            }
            try {
                records[k] = run_experiment(cfg).record;
            } catch (const std::exception& e) {
                records[k] = Json{{"input", cfg.to_json()}, {"status", "error"}, {"diagnostic", e.what()}};
            }
        }
    };
    std::vector<std::future<void>> tasks;
    for (unsigned t = 0; t < workers; ++t) {
        tasks.push_back(std::async(std::launch::async, worker));
    }
    for (auto& t : tasks) {
        t.get();
    }
    return records;
}

std::string phase_diagram_csv(const std::vector<Json>& records) {
    std::ostringstream os;
    os << "p,q,regime,solver,status,energy,residual_u,residual_v,rhs_factor\n";
    auto cell = [](const Json& j) -> std::string {
        if (j.is_null()) {
            return "";
        }
        if (j.is_string()) {
            return j.get<std::string>();
        }
        if (j.is_number_float()) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", j.get<double>());
            return buf;
        }
        return j.dump();
    };
    for (const Json& r : records) {
        const Json& in = r.at("input");
        os << cell(in.at("p")) << ',' << cell(in.at("q")) << ',' << cell(r.value("regime", Json())) << ','
           << cell(r.value("solver", Json())) << ',' << cell(r.value("status", Json())) << ',';
        const Json energy = r.value("energy", Json());
        os << (energy.is_object() ? cell(energy.at("value")) : "") << ',' << cell(r.value("residual_u", Json()))
           << ',' << cell(r.value("residual_v", Json())) << ',' << cell(r.value("rhs_factor", Json())) << '\n';
    }
    return os.str();
}

Json run_audit(const ExperimentConfig& cfg, int trials, std::uint64_t seed, bool& passed) {
    const Grid grid = build_grid(cfg.domain.build(), cfg.resolution);
    const FractionalOperator op = assemble(grid, cfg.s, AssemblyOptions{cfg.singular_correction});
    const AuditReport audit = maximum_principle_audit(op, trials, seed);
    const OperatorInvariants inv = operator_invariants(op, seed);
    passed = audit.passed() && inv.passed();
    Json witnesses = Json::array();
    for (const AuditWitness& w : audit.witnesses) {
        witnesses.push_back(Json{{"trial", w.trial}, {"node", w.node}, {"value", w.value}});
    }
    return Json{{"input", cfg.to_json()},
                {"interior_nodes", grid.size()},
                {"maximum_principle",
                 Json{{"trials", audit.trials},
                      {"passes", audit.passes},
                      {"skipped", audit.skipped},
                      {"witnesses", witnesses}}},
                {"invariants",
                 Json{{"symmetry_error", inv.symmetry_error},
                      {"max_off_diagonal", inv.max_off_diagonal},
                      {"min_diagonal", inv.min_diagonal},
                      {"min_row_sum", inv.min_row_sum},
                      {"zero_image", inv.zero_image},
                      {"self_adjoint_error", inv.self_adjoint_error},
                      {"green_min", inv.green_min ? Json(*inv.green_min) : Json(nullptr)}}},
                {"passed", passed}};
}

}  // namespace fracle
