// Command line front end: solve, classify, phase-diagram, audit.

#include "fracle/analysis.hpp"
#include "fracle/errors.hpp"
#include "fracle/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace fracle;

namespace {

struct Overrides {
    std::optional<double> s;
    std::optional<double> p;
    std::optional<double> q;
    std::optional<int> resolution;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> solver;
    std::optional<std::string> output_dir;
    std::optional<std::string> name;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--s", o.s, "fractional order in (0,1)");
    cmd->add_option("--resolution", o.resolution, "nodes along the longest axis");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--solver", o.solver, "auto | sublinear | mountain_pass");
    cmd->add_option("--output-dir", o.output_dir, "output directory");
    cmd->add_option("--name", o.name, "record file stem");
}

// Flags override file values; the merged JSON goes through the same validation.
ExperimentConfig merged_config(const std::string& path, const Overrides& o) {
    Json j = Json::object();
    if (!path.empty()) {
        j = load_config(path).to_json();
    }
    if (o.s) j["s"] = *o.s;
    if (o.p) j["p"] = *o.p;
    if (o.q) j["q"] = *o.q;
    if (o.resolution) j["resolution"] = *o.resolution;
    if (o.solver) j["solver"] = *o.solver;
    if (o.output_dir) j["output_dir"] = *o.output_dir;
    if (o.name) j["name"] = *o.name;
    if (o.seed) {
        if (!j.contains("solver_config")) {
            j["solver_config"] = Json::object();
        }
        j["solver_config"]["seed"] = *o.seed;
    }
    return ExperimentConfig::from_json(j);
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) {
            continue;
        }
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ConfigError("cannot parse '" + item + "' as a number");
        }
    }
    return out;
}

int cmd_solve(const std::string& config, const Overrides& o) {
    const ExperimentConfig cfg = merged_config(config, o);
    ExperimentResult result = run_experiment(cfg);
    const auto path = persist(result, cfg);
    const Json& r = result.record;
    std::cout << "regime: " << r["regime"].get<std::string>() << '\n'
              << "status: " << r["status"].get<std::string>() << '\n';
    if (!r["energy"].is_null()) {
        std::cout << "energy: " << r["energy"]["value"].dump() << '\n'
                  << "residuals: " << r["residual_u"].dump() << ' ' << r["residual_v"].dump() << '\n';
    }
    if (const auto& d = r["diagnostic"].get<std::string>(); !d.empty()) {
        std::cerr << d << '\n';
    }
    std::cout << "record: " << path.string() << '\n';
    return result.exit_code;
}

int cmd_classify(double p, double q, int n, double s) {
    if (!(p > 0.0) || !(q > 0.0) || n < 1 || !(s > 0.0 && s < 1.0)) {
        throw ConfigError("classify needs p, q > 0, n >= 1 and s in (0,1)");
    }
    const ExponentPair exps{p, q};
    Json out{{"p", p},
             {"q", q},
             {"n", n},
             {"s", s},
             {"regime", to_string(classify(exps, n, s))},
             {"rhs_factor", rhs_factor(exps, n, s)}};
    std::cout << out.dump() << '\n';
    return kExitOk;
}

int cmd_phase_diagram(const std::string& config, const Overrides& o, const std::string& p_list,
                      const std::string& q_list, bool diagonal, unsigned workers) {
    const ExperimentConfig base = merged_config(config, o);
    const std::vector<double> ps = parse_list(p_list);
    const std::vector<double> qs = parse_list(q_list);
    std::vector<SweepPoint> points;
    if (diagonal) {
        for (double p : ps) {
            points.push_back({p, p});
        }
    } else {
        for (double p : ps) {
            for (double q : qs) {
                points.push_back({p, q});
            }
        }
    }
    const std::vector<Json> records = run_phase_diagram(base, points, workers);
    const auto dir = resolve_output_dir(base);
    std::filesystem::create_directories(dir);
    const auto table = dir / (base.name + "_phase_diagram.csv");
    std::ofstream(table) << phase_diagram_csv(records);
    std::ofstream(dir / (base.name + "_phase_diagram.json")) << Json(records).dump(2) << '\n';
    std::cout << phase_diagram_csv(records);
    std::cout << "table: " << table.string() << '\n';
    return kExitOk;
}

int cmd_audit(const std::string& config, const Overrides& o, int trials) {
    const ExperimentConfig cfg = merged_config(config, o);
    bool passed = false;
    const Json report = run_audit(cfg, trials, cfg.solver_config.seed, passed);
    std::cout << report.dump(2) << '\n';
    return passed ? kExitOk : kExitAuditFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional Lane-Emden system solver"};
    app.require_subcommand(1);

    std::string config;
    Overrides solve_o;
    auto* solve = app.add_subcommand("solve", "solve one configuration and run the analysis battery");
    solve->add_option("config", config, "JSON config file");
    add_overrides(solve, solve_o);
    solve->add_option("--p", solve_o.p, "exponent p");
    solve->add_option("--q", solve_o.q, "exponent q");

    double cp = 0.0;
    double cq = 0.0;
    int cn = 1;
    double cs = 0.5;
    auto* cls = app.add_subcommand("classify", "print the regime and the Rellich factor");
    cls->add_option("--p", cp, "exponent p")->required();
    cls->add_option("--q", cq, "exponent q")->required();
    cls->add_option("--n", cn, "dimension")->required();
    cls->add_option("--s", cs, "fractional order")->required();

    Overrides sweep_o;
    std::string p_list;
    std::string q_list;
    bool diagonal = false;
    unsigned workers = 0;
    auto* sweep = app.add_subcommand("phase-diagram", "sweep (p, q) and tabulate solver outcomes");
    sweep->add_option("config", config, "JSON config file for the shared settings");
    add_overrides(sweep, sweep_o);
    sweep->add_option("--p-values", p_list, "comma separated p values");
    sweep->add_option("--q-values", q_list, "comma separated q values");
    sweep->add_flag("--diagonal", diagonal, "use p = q for each p value");
    sweep->add_option("--workers", workers, "concurrent points (0 = hardware threads)");

    Overrides audit_o;
    int trials = 100;
    auto* audit = app.add_subcommand("audit", "maximum principle audit and operator invariants");
    audit->add_option("config", config, "JSON config file");
    add_overrides(audit, audit_o);
    audit->add_option("--trials", trials, "random right-hand sides");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfigError;
    }

    try {
        if (*solve) return cmd_solve(config, solve_o);
        if (*cls) return cmd_classify(cp, cq, cn, cs);
        if (*sweep) return cmd_phase_diagram(config, sweep_o, p_list, q_list, diagonal, workers);
        if (*audit) return cmd_audit(config, audit_o, trials);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNonconvergence;
    }
    return kExitOk;
}
