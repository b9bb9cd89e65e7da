#include "belief_divide/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "belief_divide/estimation.hpp"
#include "belief_divide/io.hpp"
#include "belief_divide/parallel.hpp"
#include "belief_divide/policy.hpp"

namespace belief_divide {

namespace fs = std::filesystem;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Master seed (falls back to $BELIEF_DIVIDE_SEED)");
    cmd->add_option("--threads", c.threads, "Worker cap; results do not depend on it (0 = all cores)");
    cmd->add_option("--out", c.out, "Output directory")->required();
}

std::optional<std::uint64_t> resolve_seed(const Common& c) {
    if (c.seed) return c.seed;
    if (const char* env = std::getenv("BELIEF_DIVIDE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw Error("BELIEF_DIVIDE_SEED is not an unsigned integer: '" + std::string(env) + "'");
        }
    }
    return std::nullopt;
}

/// Collects what a run read and wrote and emits manifest.json.
class Manifest {
public:
    Manifest(std::string command, fs::path out_dir)
        : command_(std::move(command)), out_dir_(std::move(out_dir)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(out_dir_);
    }
    void input(const fs::path& p) { inputs_.push_back(Json{{"path", p.string()}, {"fnv1a64", file_digest(p)}}); }
    fs::path output(const std::string& name) {
        outputs_.push_back(name);
        return out_dir_ / name;
    }
    void set_config(Json config) { config_ = std::move(config); }
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    void write() const {
        Json j;
        j["command"] = command_;
        j["version"] = BELIEF_DIVIDE_VERSION;
        j["master_seed"] = seed_;
        j["config"] = config_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        j["wall_time_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_json(out_dir_ / "manifest.json", j);
    }

private:
    std::string command_;
    fs::path out_dir_;
    std::chrono::steady_clock::time_point start_;
    Json inputs_ = Json::array();
    std::vector<std::string> outputs_;
    Json config_ = Json::object();
    std::uint64_t seed_ = 0;
};

ModelParams load_params_or_default(const std::string& path, Manifest& m) {
    if (path.empty()) return ModelParams::table4();
    m.input(path);
    return read_params(path);
}

// --- gen-data -----------------------------------------------------------------

struct GenDataArgs {
    Common common;
    std::string config;
    std::string params;
    bool belief_paths = false;
};

int run_gen_data(const GenDataArgs& a, std::ostream& out) {
    Manifest m("gen-data", a.common.out);
    PopulationSpec spec;
    if (!a.config.empty()) {
        m.input(a.config);
        spec = population_from_json(read_json(a.config));
    }
    if (auto seed = resolve_seed(a.common)) spec.master_seed = *seed;
    const ModelParams params = load_params_or_default(a.params, m);
    m.set_seed(spec.master_seed);
    m.set_config(Json{{"population", population_to_json(spec)}, {"params", params_to_json(params)}});

    const SimulatedDataset sim = simulate_dataset(spec, params);
    write_profiles_csv(m.output("profiles.csv"), sim.panels);
    write_panel_csv(m.output("panel.csv"), sim.panels);
    write_truth_csv(m.output("truth.csv"), sim.truth);
    write_params(m.output("params.json"), params);
    if (a.belief_paths) write_belief_path_csv(m.output("beliefs.csv"), sim.truth);
    m.write();
    out << "simulated " << sim.panels.size() << " users x " << spec.horizon_days << " days into " << a.common.out
        << '\n';
    return exit_success;
}

// --- estimate -------------------------------------------------------------------

struct EstimateArgs {
    Common common;
    std::string data_dir;
    std::string profiles;
    std::string panel;
    std::string init;
    std::string fit_config;
    std::optional<std::size_t> draws;
    std::optional<std::string> mixing;
    std::optional<std::size_t> restarts;
    std::optional<std::size_t> max_evals;
    std::optional<double> tolerance;
    std::vector<std::string> free;
    bool no_se = false;
    std::optional<std::size_t> bootstrap;
};

int run_estimate(const EstimateArgs& a, std::ostream& out) {
    Manifest m("estimate", a.common.out);
    fs::path profiles = a.profiles;
    fs::path panel = a.panel;
    if (!a.data_dir.empty()) {
        if (profiles.empty()) profiles = fs::path(a.data_dir) / "profiles.csv";
        if (panel.empty()) panel = fs::path(a.data_dir) / "panel.csv";
    }
    if (profiles.empty() || panel.empty()) throw Error("estimate needs --data or both --profiles and --panel");
    m.input(profiles);
    m.input(panel);
    const Dataset dataset = load_panel(profiles, panel);
    const ModelParams init = load_params_or_default(a.init, m);

    FitOptions options;
    if (!a.fit_config.empty()) {
        m.input(a.fit_config);
        options = fit_options_from_json(read_json(a.fit_config));
    }
    if (auto seed = resolve_seed(a.common)) options.seed = *seed;
    if (a.draws) options.draws = *a.draws;
    if (a.mixing) options.mixing = mixing_from_string(*a.mixing);
    if (a.restarts) options.restarts = *a.restarts;
    if (a.max_evals) options.max_evaluations = *a.max_evals;
    if (a.tolerance) options.tolerance = *a.tolerance;
    if (!a.free.empty()) options.free_parameters = a.free;
    if (a.no_se) options.compute_standard_errors = false;
    if (a.bootstrap) options.bootstrap_replications = *a.bootstrap;
    m.set_seed(options.seed);
    m.set_config(Json{{"init", params_to_json(init)}, {"fit", fit_options_to_json(options)}});

    const EstimationResult result = fit_msl(dataset, init, options);
    write_json(m.output("estimation.json"), estimation_to_json(result));
    m.write();
    out << render_parameter_table(result.params_hat, result.parameter_names, result.std_errors);
    out << "loglik " << format_double(result.loglik) << (result.converged ? " (converged)" : " (not converged)")
        << '\n';
    return exit_success;
}

// --- recover ----------------------------------------------------------------------

struct RecoverArgs {
    Common common;
    std::string config;
};

int run_recover(const RecoverArgs& a, std::ostream& out) {
    Manifest m("recover", a.common.out);
    RecoveryConfig config;
    Json j = Json::object();
    if (!a.config.empty()) {
        m.input(a.config);
        j = read_json(a.config);
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "truth" && key != "init" && key != "population" && key != "n_replications" && key != "fit") {
            throw Error("recovery config: unknown key '" + key + "'");
        }
    }
    auto params_field = [&](const Json& v) {
        if (v.is_string()) {
            fs::path p = v.get<std::string>();
            if (p.is_relative()) p = fs::path(a.config).parent_path() / p;
            m.input(p);
            return read_params(p);
        }
        return params_from_json(v);
    };
    if (j.contains("truth")) config.truth = params_field(j.at("truth"));
    if (j.contains("init")) config.init = params_field(j.at("init"));
    if (j.contains("population")) config.population = population_from_json(j.at("population"));
    if (j.contains("n_replications")) config.n_replications = j.at("n_replications").get<std::size_t>();
    if (j.contains("fit")) config.fit = fit_options_from_json(j.at("fit"));
    if (auto seed = resolve_seed(a.common)) {
        config.population.master_seed = *seed;
        config.fit.seed = *seed;
    }
    m.set_seed(config.population.master_seed);
    m.set_config(Json{{"truth", params_to_json(config.truth)},
                      {"init", config.init ? params_to_json(*config.init) : Json(nullptr)},
                      {"population", population_to_json(config.population)},
                      {"n_replications", config.n_replications},
                      {"fit", fit_options_to_json(config.fit)}});

    const RecoveryReport report = monte_carlo_recovery(config);
    write_json(m.output("recovery.json"), recovery_to_json(report));
    m.write();
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %9s %9s %9s %9s\n", "parameter", "truth", "bias", "rmse", "coverage");
    out << line;
    for (const auto& p : report.parameters) {
        std::snprintf(line, sizeof line, "%-18s %9.4f %9.4f %9.4f %9.3f%s\n", p.name.c_str(), p.truth, p.bias, p.rmse,
                      p.coverage, p.flat_direction ? "  flat" : "");
        out << line;
    }
    out << report.n_converged << " of " << config.n_replications << " replications converged\n";
    return exit_success;
}

// --- policy -------------------------------------------------------------------------

struct PolicyArgs {
    Common common;
    std::string params;
    std::string preset;
    std::string config;
    std::optional<std::size_t> trajectories;
    std::optional<std::size_t> bootstrap;
    std::optional<std::int64_t> days;
    std::optional<std::int64_t> trap_day;
};

SimConfig apply_policy_overrides(SimConfig c, const PolicyArgs& a, std::uint64_t seed) {
    c.master_seed = seed;
    if (a.trajectories) c.n_trajectories = *a.trajectories;
    if (a.bootstrap) c.n_bootstrap = *a.bootstrap;
    if (a.days) c.days = *a.days;
    if (a.trap_day) c.trap_eval_day = *a.trap_day;
    c.validate();
    return c;
}

void write_trajectories(Manifest& m, const std::vector<std::pair<std::string, Trajectory>>& trajectories, double v_i) {
    for (const auto& [label, t] : trajectories) write_trajectory_csv(m.output("trajectory_" + label + ".csv"), t);
    write_text(m.output("trajectories.svg"), render_trajectory_svg(trajectories, v_i));
}

void write_error_bars(Manifest& m, const std::vector<TrapEstimate>& estimates, std::ostream& out) {
    write_error_bar_csv(m.output("errorbars.csv"), estimates);
    write_text(m.output("errorbars.svg"), render_error_bar_svg(estimates));
    char line[160];
    for (const auto& e : estimates) {
        std::snprintf(line, sizeof line, "%-22s %.4f [%.4f, %.4f]\n", e.label.c_str(), e.point, e.ci_low, e.ci_high);
        out << line;
    }
}

int run_policy(const PolicyArgs& a, std::ostream& out) {
    Manifest m("policy", a.common.out);
    const ModelParams params = load_params_or_default(a.params, m);
    const std::uint64_t seed = resolve_seed(a.common).value_or(0);
    m.set_seed(seed);
    if (a.preset.empty() == a.config.empty()) throw Error("policy needs exactly one of --preset or --config");

    Json snapshot;
    snapshot["params"] = params_to_json(params);
    if (a.preset == "paper-fig4") {
        const SimConfig base = apply_policy_overrides(SimConfig{}, a, seed);
        snapshot["preset"] = a.preset;
        snapshot["sim"] = sim_config_to_json(base);
        m.set_config(snapshot);
        write_error_bars(m, compare_profiles(paper_fig4_scenarios(params, base), params), out);
    } else if (a.preset == "paper-fig3") {
        SimConfig base = apply_policy_overrides(SimConfig{}, a, seed);
        snapshot["preset"] = a.preset;
        snapshot["sim"] = sim_config_to_json(base);
        m.set_config(snapshot);
        // Show the first trajectory whose untrained path ends up trapped, next
        // to the same random stream after 200 training uses.
        std::size_t index = 0;
        Trajectory untrained;
        for (std::size_t k = 0; k < std::max<std::size_t>(base.n_trajectories, 1); ++k) {
            RngStream rng(seed, {static_cast<std::uint64_t>(StreamTag::trajectory), k});
            untrained = simulate_trajectory(fast_learner(), params, base, rng);
            index = k;
            if (untrained.trapped) break;
        }
        SimConfig trained_config = base;
        trained_config.pre_training_uses = 200;
        RngStream rng(seed, {static_cast<std::uint64_t>(StreamTag::trajectory), index});
        const Trajectory trained = simulate_trajectory(fast_learner(), params, trained_config, rng);
        write_trajectories(m, {{"no_training", untrained}, {"training_200", trained}}, untrained.v_i);
        out << "trajectory index " << index << (untrained.trapped ? " (trapped without training)" : "") << '\n';
    } else if (!a.preset.empty()) {
        throw Error("unknown preset '" + a.preset + "' (expected paper-fig3 or paper-fig4)");
    } else {
        m.input(a.config);
        const Json j = read_json(a.config);
        for (const auto& [key, value] : j.items()) {
            if (key != "base" && key != "scenarios") throw Error("policy config: unknown key '" + key + "'");
        }
        SimConfig base = j.contains("base") ? sim_config_from_json(j.at("base")) : SimConfig{};
        base = apply_policy_overrides(base, a, seed);
        std::vector<PolicyScenario> scenarios;
        Json snap_scenarios = Json::array();
        for (const auto& s : j.at("scenarios")) {
            PolicyScenario sc;
            sc.label = s.at("label").get<std::string>();
            sc.profile = profile_from_json(s.at("profile"));
            sc.config = s.contains("config") ? sim_config_from_json(s.at("config"), base) : base;
            sc.config = apply_policy_overrides(sc.config, a, seed);
            if (s.contains("v_i")) sc.overrides.v_i = s.at("v_i").get<double>();
            if (s.contains("sigma_s_sq")) sc.overrides.sigma_s_sq = s.at("sigma_s_sq").get<double>();
            Json snap{{"label", sc.label}, {"profile", profile_to_json(sc.profile)}, {"config", sim_config_to_json(sc.config)}};
            if (sc.overrides.v_i) snap["v_i"] = *sc.overrides.v_i;
            if (sc.overrides.sigma_s_sq) snap["sigma_s_sq"] = *sc.overrides.sigma_s_sq;
            snap_scenarios.push_back(snap);
            scenarios.push_back(std::move(sc));
        }
        snapshot["scenarios"] = snap_scenarios;
        m.set_config(snapshot);
        write_error_bars(m, compare_profiles(scenarios, params), out);
    }
    m.write();
    return exit_success;
}

// --- report -----------------------------------------------------------------------------

struct ReportArgs {
    Common common;
    std::string input;
};

int run_report(const ReportArgs& a, std::ostream& out) {
    Manifest m("report", a.common.out);
    m.input(a.input);
    const Json j = read_json(a.input);
    std::string table;
    if (j.contains("params_hat")) {
        const EstimationResult r = estimation_from_json(j);
        table = render_parameter_table(r.params_hat, r.parameter_names, r.std_errors);
        table += "loglik " + format_double(r.loglik) + (r.converged ? " (converged)\n" : " (not converged)\n");
    } else {
        table = render_parameter_table(params_from_json(j));
    }
    m.set_config(Json{{"input", a.input}});
    write_text(m.output("report.txt"), table);
    m.write();
    out << table;
    return exit_success;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Structural Bayesian learning model of generative-AI adoption", "belief-divide"};
    app.require_subcommand(1);
    app.set_version_flag("--version", BELIEF_DIVIDE_VERSION);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Simulate a panel dataset from the model");
    add_common(gen_cmd, gen.common);
    gen_cmd->add_option("--config", gen.config, "Population spec JSON")->check(CLI::ExistingFile);
    gen_cmd->add_option("--params", gen.params, "True parameters JSON (default: built-in estimates)")->check(CLI::ExistingFile);
    gen_cmd->add_flag("--belief-paths", gen.belief_paths, "Also write per-day latent beliefs");

    EstimateArgs est;
    auto* est_cmd = app.add_subcommand("estimate", "Maximum simulated likelihood fit");
    add_common(est_cmd, est.common);
    est_cmd->add_option("--data", est.data_dir, "Directory holding profiles.csv and panel.csv");
    est_cmd->add_option("--profiles", est.profiles, "Profiles CSV");
    est_cmd->add_option("--panel", est.panel, "Panel CSV");
    est_cmd->add_option("--init", est.init, "Starting parameters JSON (default: built-in estimates)")->check(CLI::ExistingFile);
    est_cmd->add_option("--fit-config", est.fit_config, "Fit options JSON")->check(CLI::ExistingFile);
    est_cmd->add_option("--draws", est.draws, "Simulation draws per user");
    est_cmd->add_option("--mixing", est.mixing, "per_user or per_observation");
    est_cmd->add_option("--restarts", est.restarts, "Simplex restarts");
    est_cmd->add_option("--max-evals", est.max_evals, "Objective evaluations per simplex run");
    est_cmd->add_option("--tolerance", est.tolerance, "Simplex diameter tolerance");
    est_cmd->add_option("--free", est.free, "Free parameters (default: all)")->delimiter(',');
    est_cmd->add_flag("--no-se", est.no_se, "Skip standard errors");
    est_cmd->add_option("--bootstrap", est.bootstrap, "Bootstrap resamples when the Hessian is not definite");

    RecoverArgs rec;
    auto* rec_cmd = app.add_subcommand("recover", "Monte Carlo parameter recovery");
    add_common(rec_cmd, rec.common);
    rec_cmd->add_option("--config", rec.config, "Recovery config JSON")->check(CLI::ExistingFile);

    PolicyArgs pol;
    auto* pol_cmd = app.add_subcommand("policy", "Belief-trap simulations");
    add_common(pol_cmd, pol.common);
    pol_cmd->add_option("--params", pol.params, "Parameters JSON (default: built-in estimates)")->check(CLI::ExistingFile);
    pol_cmd->add_option("--preset", pol.preset, "paper-fig3 or paper-fig4");
    pol_cmd->add_option("--config", pol.config, "Scenario JSON")->check(CLI::ExistingFile);
    pol_cmd->add_option("--trajectories", pol.trajectories, "Trajectories per scenario");
    pol_cmd->add_option("--bootstrap", pol.bootstrap, "Bootstrap resamples");
    pol_cmd->add_option("--days", pol.days, "Simulated days");
    pol_cmd->add_option("--trap-day", pol.trap_day, "Day on which trapping is evaluated");

    ReportArgs rep;
    auto* rep_cmd = app.add_subcommand("report", "Render parameters or an estimation result as a table");
    add_common(rep_cmd, rep.common);
    rep_cmd->add_option("--input", rep.input, "Parameters or estimation JSON")->required()->check(CLI::ExistingFile);

    std::vector<const char*> argv{"belief-divide"};
    for (const auto& s : args) argv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_success;
    } catch (const CLI::CallForVersion&) {
        out << BELIEF_DIVIDE_VERSION << '\n';
        return exit_success;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return exit_usage_error;
    }

    const auto* selected = app.get_subcommands().front();
    try {
        const Common* common = selected == gen_cmd   ? &gen.common
                               : selected == est_cmd ? &est.common
                               : selected == rec_cmd ? &rec.common
                               : selected == pol_cmd ? &pol.common
                                                     : &rep.common;
        set_thread_count(common->threads);
        if (selected == gen_cmd) return run_gen_data(gen, out);
        if (selected == est_cmd) return run_estimate(est, out);
        if (selected == rec_cmd) return run_recover(rec, out);
        if (selected == pol_cmd) return run_policy(pol, out);
        return run_report(rep, out);
    } catch (const std::exception& e) {
        err << Json{{"error", selected->get_name()}, {"message", e.what()}}.dump() << '\n';
        return exit_runtime_error;
    }
}

}  // namespace belief_divide
