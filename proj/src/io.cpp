#include "belief_divide/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace belief_divide {

namespace fs = std::filesystem;

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    return fields;
}

struct CsvTable {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

CsvTable read_csv(const fs::path& path, const std::vector<std::string>& expected_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(path.string() + ": missing header row");
    if (split_csv_line(line) != expected_header) {
        std::string want;
        for (const auto& h : expected_header) want += (want.empty() ? "" : ",") + h;
        throw Error(path.string() + ":1: expected header '" + want + "'");
    }
    CsvTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != expected_header.size()) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(expected_header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

std::int64_t parse_int(const std::string& text, const fs::path& path, std::size_t line, const char* column) {
    std::int64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(path.string() + ":" + std::to_string(line) + ": column " + column + ": '" + text +
                    "' is not an integer");
    }
    return v;
}

bool parse_flag(const std::string& text, const fs::path& path, std::size_t line, const char* column) {
    const auto v = parse_int(text, path, line, column);
    if (v != 0 && v != 1) {
        throw Error(path.string() + ":" + std::to_string(line) + ": column " + column + " must be 0 or 1");
    }
    return v == 1;
}

const char* flag(bool b) { return b ? "1" : "0"; }

}  // namespace

// ---------------------------------------------------------------------------
// panels

void write_profiles_csv(const fs::path& path, const Dataset& dataset) {
    auto out = open_out(path);
    out << "user_id,high_edu,age,male,white,it\n";
    for (const auto& u : dataset) {
        const auto& p = u.profile;
        out << u.user_id << ',' << flag(p.high_edu) << ',' << p.age << ',' << flag(p.male) << ',' << flag(p.white)
            << ',' << flag(p.it) << '\n';
    }
}

void write_panel_csv(const fs::path& path, const Dataset& dataset) {
    auto out = open_out(path);
    out << "user_id,day,w_total,w_gpt,w_news\n";
    for (const auto& u : dataset) {
        for (const auto& o : u.observations) {
            out << u.user_id << ',' << o.day << ',' << o.w_total << ',' << o.w_gpt << ',' << o.w_news << '\n';
        }
    }
}

void write_truth_csv(const fs::path& path, const std::vector<UserTruth>& truth) {
    auto out = open_out(path);
    out << "user_id,latent_class,v_i,sigma_s_sq\n";
    for (const auto& t : truth) {
        out << t.user_id << ',' << to_string(t.latent_class) << ',' << format_double(t.v_i) << ','
            << format_double(t.sigma_s_sq) << '\n';
    }
}

void write_belief_path_csv(const fs::path& path, const std::vector<UserTruth>& truth) {
    auto out = open_out(path);
    out << "user_id,day,belief_mean,belief_variance,usage_sum,news_sum\n";
    for (const auto& t : truth) {
        for (std::size_t d = 0; d < t.usage_sums.size(); ++d) {
            out << t.user_id << ',' << d << ',' << format_double(t.beliefs[d].mean) << ','
                << format_double(t.beliefs[d].variance) << ',' << format_double(t.usage_sums[d]) << ','
                << format_double(t.news_sums[d]) << '\n';
        }
    }
}

Dataset load_panel(const fs::path& profiles_path, const fs::path& panel_path) {
    const auto profiles = read_csv(profiles_path, {"user_id", "high_edu", "age", "male", "white", "it"});
    Dataset dataset;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < profiles.rows.size(); ++k) {
        const auto& row = profiles.rows[k];
        const std::size_t line = profiles.line_numbers[k];
        if (row[0].empty()) throw Error(profiles_path.string() + ":" + std::to_string(line) + ": empty user_id");
        UserPanel u;
        u.user_id = row[0];
        u.profile.high_edu = parse_flag(row[1], profiles_path, line, "high_edu");
        u.profile.age = static_cast<int>(parse_int(row[2], profiles_path, line, "age"));
        u.profile.male = parse_flag(row[3], profiles_path, line, "male");
        u.profile.white = parse_flag(row[4], profiles_path, line, "white");
        u.profile.it = parse_flag(row[5], profiles_path, line, "it");
        try {
            u.profile.validate();
        } catch (const Error& e) {
            throw Error(profiles_path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
        if (!index.emplace(u.user_id, dataset.size()).second) {
            throw Error(profiles_path.string() + ":" + std::to_string(line) + ": duplicate user_id " + u.user_id);
        }
        dataset.push_back(std::move(u));
    }

    const auto panel = read_csv(panel_path, {"user_id", "day", "w_total", "w_gpt", "w_news"});
    if (panel.rows.empty()) throw Error(panel_path.string() + ": no observations");
    std::set<std::pair<std::size_t, std::int64_t>> seen;
    for (std::size_t k = 0; k < panel.rows.size(); ++k) {
        const auto& row = panel.rows[k];
        const std::size_t line = panel.line_numbers[k];
        const std::string where = panel_path.string() + ":" + std::to_string(line) + ": ";
        const auto it = index.find(row[0]);
        if (it == index.end()) throw Error(where + "unknown user_id " + row[0]);
        DayObservation o;
        o.day = parse_int(row[1], panel_path, line, "day");
        o.w_total = parse_int(row[2], panel_path, line, "w_total");
        o.w_gpt = parse_int(row[3], panel_path, line, "w_gpt");
        o.w_news = parse_int(row[4], panel_path, line, "w_news");
        if (o.day < 0 || o.w_total < 0 || o.w_gpt < 0 || o.w_news < 0) throw Error(where + "negative value");
        if (o.w_gpt > o.w_total) throw Error(where + "w_gpt exceeds w_total");
        if (!seen.emplace(it->second, o.day).second) {
            throw Error(where + "duplicate (user_id, day) = (" + row[0] + ", " + row[1] + ")");
        }
        dataset[it->second].observations.push_back(o);
    }
    for (auto& u : dataset) {
        std::sort(u.observations.begin(), u.observations.end(),
                  [](const DayObservation& a, const DayObservation& b) { return a.day < b.day; });
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// parameters

namespace {

double* param_slot(ModelParams& p, std::string_view key) {
    static const std::map<std::string_view, double ModelParams::*, std::less<>> slots = {
        {"c", &ModelParams::c},
        {"alpha0", &ModelParams::alpha0},
        {"log_delta_alpha0", &ModelParams::log_delta_alpha0},
        {"alpha1", &ModelParams::alpha1},
        {"alpha2", &ModelParams::alpha2},
        {"alpha3", &ModelParams::alpha3},
        {"alpha4", &ModelParams::alpha4},
        {"alpha5", &ModelParams::alpha5},
        {"gamma0", &ModelParams::gamma0},
        {"delta_gamma0", &ModelParams::delta_gamma0},
        {"gamma1", &ModelParams::gamma1},
        {"gamma2", &ModelParams::gamma2},
        {"gamma3", &ModelParams::gamma3},
        {"gamma4", &ModelParams::gamma4},
        {"gamma5", &ModelParams::gamma5},
        {"log_sigma_n_sq", &ModelParams::log_sigma_n_sq},
        {"lambda", &ModelParams::lambda},
        {"v0", &ModelParams::v0},
        {"log_sigma0_sq", &ModelParams::log_sigma0_sq},
    };
    const auto it = slots.find(key);
    return it == slots.end() ? nullptr : &(p.*(it->second));
}

double require_number(const Json& j, const std::string& key) {
    if (!j.is_number()) throw Error("parameter '" + key + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw Error("parameter '" + key + "' must be finite");
    return v;
}

}  // namespace

ModelParams params_from_json(const Json& j) {
    if (!j.is_object()) throw Error("parameters must be a JSON object");
    ModelParams p;
    std::vector<std::string> unknown;
    std::set<std::string> seen;
    bool has_levels = false;
    for (const auto& [key, value] : j.items()) {
        if (key == "sigma_n_sq") {
            const double v = require_number(value, key);
            if (!(v > 0.0)) throw Error("sigma_n_sq must be positive");
            if (seen.count("log_sigma_n_sq")) throw Error("give either sigma_n_sq or log_sigma_n_sq, not both");
            p.log_sigma_n_sq = std::log(v);
            has_levels = true;
            seen.insert("log_sigma_n_sq");
            continue;
        }
        double* slot = param_slot(p, key);
        if (!slot) {
            unknown.push_back(key);
            continue;
        }
        if (key == "log_sigma_n_sq" && has_levels) throw Error("give either sigma_n_sq or log_sigma_n_sq, not both");
        *slot = require_number(value, key);
        seen.insert(key);
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
        throw Error("unknown parameter keys: " + list);
    }
    std::string missing;
    for (auto name : ModelParams::free_names()) {
        if (!seen.count(std::string(name))) missing += (missing.empty() ? "" : ", ") + std::string(name);
    }
    if (!missing.empty()) throw Error("missing parameter keys: " + missing);
    return p;
}

Json params_to_json(const ModelParams& p) {
    Json j;
    j["lambda"] = p.lambda;
    j["c"] = p.c;
    j["alpha0"] = p.alpha0;
    j["log_delta_alpha0"] = p.log_delta_alpha0;
    j["alpha1"] = p.alpha1;
    j["alpha2"] = p.alpha2;
    j["alpha3"] = p.alpha3;
    j["alpha4"] = p.alpha4;
    j["alpha5"] = p.alpha5;
    j["log_sigma_n_sq"] = p.log_sigma_n_sq;
    j["gamma0"] = p.gamma0;
    j["delta_gamma0"] = p.delta_gamma0;
    j["gamma1"] = p.gamma1;
    j["gamma2"] = p.gamma2;
    j["gamma3"] = p.gamma3;
    j["gamma4"] = p.gamma4;
    j["gamma5"] = p.gamma5;
    j["v0"] = p.v0;
    j["log_sigma0_sq"] = p.log_sigma0_sq;
    return j;
}

ModelParams read_params(const fs::path& path) {
    try {
        return params_from_json(read_json(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_params(const fs::path& path, const ModelParams& p) { write_json(path, params_to_json(p)); }

// ---------------------------------------------------------------------------
// configs

namespace {

void reject_unknown(const Json& j, std::initializer_list<std::string_view> allowed, const char* what) {
    if (!j.is_object()) throw Error(std::string(what) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw Error(std::string(what) + ": unknown key '" + key + "'");
        }
    }
}

template <class T>
void read_if(const Json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

CountProcess process_from_json(const Json& j) {
    reject_unknown(j, {"kind", "mean", "k"}, "count process");
    const auto kind = j.at("kind").get<std::string>();
    CountProcess p;
    if (kind == "none") {
        p = CountProcess::none();
    } else if (kind == "fixed") {
        p = CountProcess::fixed(j.at("k").get<std::int64_t>());
    } else if (kind == "poisson") {
        p = CountProcess::poisson(j.at("mean").get<double>());
    } else {
        throw Error("unknown count process kind '" + kind + "'");
    }
    p.validate();
    return p;
}

Json process_to_json(const CountProcess& p) {
    Json j;
    switch (p.kind) {
        case CountProcess::Kind::none: j["kind"] = "none"; break;
        case CountProcess::Kind::fixed:
            j["kind"] = "fixed";
            j["k"] = static_cast<std::int64_t>(p.value);
            break;
        case CountProcess::Kind::poisson:
            j["kind"] = "poisson";
            j["mean"] = p.value;
            break;
    }
    return j;
}

}  // namespace

PopulationSpec population_from_json(const Json& j) {
    reject_unknown(j, {"n_users", "horizon_days", "opportunity_process", "news_process", "profile_sampler", "master_seed"},
                   "population spec");
    PopulationSpec s;
    read_if(j, "n_users", s.n_users);
    read_if(j, "horizon_days", s.horizon_days);
    read_if(j, "master_seed", s.master_seed);
    if (j.contains("opportunity_process")) s.opportunity_process = process_from_json(j.at("opportunity_process"));
    if (j.contains("news_process")) s.news_process = process_from_json(j.at("news_process"));
    if (j.contains("profile_sampler")) {
        const auto& ps = j.at("profile_sampler");
        reject_unknown(ps, {"p_high_edu", "p_male", "p_white", "p_it", "age_mean", "age_sd", "age_min", "age_max"},
                       "profile sampler");
        auto& p = s.profile_sampler;
        read_if(ps, "p_high_edu", p.p_high_edu);
        read_if(ps, "p_male", p.p_male);
        read_if(ps, "p_white", p.p_white);
        read_if(ps, "p_it", p.p_it);
        read_if(ps, "age_mean", p.age_mean);
        read_if(ps, "age_sd", p.age_sd);
        read_if(ps, "age_min", p.age_min);
        read_if(ps, "age_max", p.age_max);
    }
    s.validate();
    return s;
}

Json population_to_json(const PopulationSpec& s) {
    Json j;
    j["n_users"] = s.n_users;
    j["horizon_days"] = s.horizon_days;
    j["opportunity_process"] = process_to_json(s.opportunity_process);
    j["news_process"] = process_to_json(s.news_process);
    const auto& p = s.profile_sampler;
    j["profile_sampler"] = Json{{"p_high_edu", p.p_high_edu}, {"p_male", p.p_male},     {"p_white", p.p_white},
                                {"p_it", p.p_it},             {"age_mean", p.age_mean}, {"age_sd", p.age_sd},
                                {"age_min", p.age_min},       {"age_max", p.age_max}};
    j["master_seed"] = s.master_seed;
    return j;
}

SimConfig sim_config_from_json(const Json& j, SimConfig c) {
    reject_unknown(j,
                   {"days", "opportunities_per_day", "pre_training_uses", "include_news", "news_rate", "trap_eval_day",
                    "trap_ratio", "n_trajectories", "n_bootstrap", "master_seed", "prior_variance"},
                   "simulation config");
    read_if(j, "days", c.days);
    read_if(j, "opportunities_per_day", c.opportunities_per_day);
    read_if(j, "pre_training_uses", c.pre_training_uses);
    read_if(j, "include_news", c.include_news);
    read_if(j, "news_rate", c.news_rate);
    read_if(j, "trap_eval_day", c.trap_eval_day);
    read_if(j, "trap_ratio", c.trap_ratio);
    read_if(j, "n_trajectories", c.n_trajectories);
    read_if(j, "n_bootstrap", c.n_bootstrap);
    read_if(j, "master_seed", c.master_seed);
    if (j.contains("prior_variance") && !j.at("prior_variance").is_null()) c.prior_variance = j.at("prior_variance").get<double>();
    c.validate();
    return c;
}

Json sim_config_to_json(const SimConfig& c) {
    Json j;
    j["days"] = c.days;
    j["opportunities_per_day"] = c.opportunities_per_day;
    j["pre_training_uses"] = c.pre_training_uses;
    j["include_news"] = c.include_news;
    j["news_rate"] = c.news_rate;
    j["trap_eval_day"] = c.trap_eval_day;
    j["trap_ratio"] = c.trap_ratio;
    j["n_trajectories"] = c.n_trajectories;
    j["n_bootstrap"] = c.n_bootstrap;
    j["master_seed"] = c.master_seed;
    j["prior_variance"] = c.prior_variance ? Json(*c.prior_variance) : Json(nullptr);
    return j;
}

// Indicators may be written as true/false or as 0/1, as in the CSV files.
static void read_indicator(const Json& j, const char* key, bool& out) {
    if (!j.contains(key)) return;
    const Json& v = j.at(key);
    if (v.is_boolean()) {
        out = v.get<bool>();
    } else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) {
        out = v.get<int>() == 1;
    } else {
        throw Error(std::string("profile: '") + key + "' must be 0, 1, true or false");
    }
}

UserProfile profile_from_json(const Json& j) {
    reject_unknown(j, {"high_edu", "age", "male", "white", "it", "latent_class"}, "profile");
    UserProfile p;
    read_indicator(j, "high_edu", p.high_edu);
    read_if(j, "age", p.age);
    read_indicator(j, "male", p.male);
    read_indicator(j, "white", p.white);
    read_indicator(j, "it", p.it);
    if (j.contains("latent_class")) p.latent_class = latent_class_from_string(j.at("latent_class").get<std::string>());
    p.validate();
    return p;
}

Json profile_to_json(const UserProfile& p) {
    return Json{{"high_edu", p.high_edu}, {"age", p.age}, {"male", p.male},
                {"white", p.white},       {"it", p.it},   {"latent_class", std::string(to_string(p.latent_class))}};
}

FitOptions fit_options_from_json(const Json& j, FitOptions o) {
    reject_unknown(j,
                   {"draws", "mixing", "max_evaluations", "tolerance", "restarts", "restart_agreement", "seed",
                    "free_parameters", "compute_standard_errors", "hessian_relative_step", "bootstrap_replications"},
                   "fit options");
    read_if(j, "draws", o.draws);
    if (j.contains("mixing")) o.mixing = mixing_from_string(j.at("mixing").get<std::string>());
    read_if(j, "max_evaluations", o.max_evaluations);
    read_if(j, "tolerance", o.tolerance);
    read_if(j, "restarts", o.restarts);
    read_if(j, "restart_agreement", o.restart_agreement);
    read_if(j, "seed", o.seed);
    read_if(j, "free_parameters", o.free_parameters);
    read_if(j, "compute_standard_errors", o.compute_standard_errors);
    read_if(j, "hessian_relative_step", o.hessian_relative_step);
    read_if(j, "bootstrap_replications", o.bootstrap_replications);
    return o;
}

Json fit_options_to_json(const FitOptions& o) {
    Json j;
    j["draws"] = o.draws;
    j["mixing"] = std::string(to_string(o.mixing));
    j["max_evaluations"] = o.max_evaluations;
    j["tolerance"] = o.tolerance;
    j["restarts"] = o.restarts;
    j["restart_agreement"] = o.restart_agreement;
    j["seed"] = o.seed;
    j["free_parameters"] = o.free_parameters;
    j["compute_standard_errors"] = o.compute_standard_errors;
    j["hessian_relative_step"] = o.hessian_relative_step;
    j["bootstrap_replications"] = o.bootstrap_replications;
    return j;
}

// ---------------------------------------------------------------------------
// results

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_or_nan(const Json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

Json estimation_to_json(const EstimationResult& r) {
    Json j;
    j["params_hat"] = params_to_json(r.params_hat);
    j["loglik"] = r.loglik;
    j["initial_loglik"] = r.initial_loglik;
    j["converged"] = r.converged;
    j["n_evaluations"] = r.n_evaluations;
    j["n_runs"] = r.n_runs;
    j["se_method"] = r.se_method;
    j["hessian_positive_definite"] = r.hessian_positive_definite;
    Json se = Json::object();
    for (std::size_t k = 0; k < r.std_errors.size() && k < r.parameter_names.size(); ++k) {
        se[r.parameter_names[k]] = number_or_null(r.std_errors[k]);
    }
    j["parameter_names"] = r.parameter_names;
    j["std_errors"] = se;
    return j;
}

EstimationResult estimation_from_json(const Json& j) {
    EstimationResult r;
    r.params_hat = params_from_json(j.at("params_hat"));
    r.loglik = j.at("loglik").get<double>();
    read_if(j, "initial_loglik", r.initial_loglik);
    read_if(j, "converged", r.converged);
    read_if(j, "n_evaluations", r.n_evaluations);
    read_if(j, "n_runs", r.n_runs);
    read_if(j, "se_method", r.se_method);
    read_if(j, "hessian_positive_definite", r.hessian_positive_definite);
    read_if(j, "parameter_names", r.parameter_names);
    if (j.contains("std_errors")) {
        for (const auto& name : r.parameter_names) {
            if (j.at("std_errors").contains(name)) r.std_errors.push_back(number_or_nan(j.at("std_errors").at(name)));
        }
    }
    return r;
}

Json recovery_to_json(const RecoveryReport& r) {
    Json j;
    j["truth"] = params_to_json(r.truth);
    j["n_replications"] = r.replications.size() + r.failures.size();
    j["n_converged"] = r.n_converged;
    Json params = Json::array();
    for (const auto& p : r.parameters) {
        params.push_back(Json{{"name", p.name},
                              {"truth", p.truth},
                              {"mean_estimate", number_or_null(p.mean_estimate)},
                              {"bias", number_or_null(p.bias)},
                              {"rmse", number_or_null(p.rmse)},
                              {"sd_estimate", number_or_null(p.sd_estimate)},
                              {"mean_std_error", number_or_null(p.mean_std_error)},
                              {"coverage", number_or_null(p.coverage)},
                              {"flat_direction", p.flat_direction}});
    }
    j["parameters"] = params;
    Json reps = Json::array();
    for (const auto& e : r.replications) reps.push_back(estimation_to_json(e));
    j["replications"] = reps;
    j["failures"] = r.failures;
    return j;
}

std::string render_parameter_table(const ModelParams& p, const std::vector<std::string>& se_names,
                                   const std::vector<double>& std_errors) {
    struct Row {
        const char* label;
        const char* key;  // free-parameter name, or nullptr for fixed rows
        double value;
    };
    const Row rows[] = {
        {"v0", nullptr, p.v0},
        {"log(sigma0^2)", nullptr, p.log_sigma0_sq},
        {"lambda", "lambda", p.lambda},
        {"c", "c", p.c},
        {"alpha0", "alpha0", p.alpha0},
        {"log(Delta alpha0)", "log_delta_alpha0", p.log_delta_alpha0},
        {"alpha1 (HighEdu)", "alpha1", p.alpha1},
        {"alpha2 (Age)", "alpha2", p.alpha2},
        {"alpha3 (Male)", "alpha3", p.alpha3},
        {"alpha4 (White)", "alpha4", p.alpha4},
        {"alpha5 (IT)", "alpha5", p.alpha5},
        {"sigma_n^2", "log_sigma_n_sq", p.sigma_n_sq()},
        {"gamma0", "gamma0", p.gamma0},
        {"Delta gamma0", "delta_gamma0", p.delta_gamma0},
        {"gamma1 (HighEdu)", "gamma1", p.gamma1},
        {"gamma2 (Age)", "gamma2", p.gamma2},
        {"gamma3 (Male)", "gamma3", p.gamma3},
        {"gamma4 (White)", "gamma4", p.gamma4},
        {"gamma5 (IT)", "gamma5", p.gamma5},
    };
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %10s %12s\n", "Parameter", "Value", "Std");
    out << line;
    for (const auto& row : rows) {
        std::string se = row.key ? "" : "-- (fixed)";
        if (row.key) {
            for (std::size_t k = 0; k < se_names.size() && k < std_errors.size(); ++k) {
                if (se_names[k] != row.key || !std::isfinite(std_errors[k])) continue;
                double s = std_errors[k];
                // Delta method: the variance enters the table in levels.
                if (std::string_view(row.key) == "log_sigma_n_sq") s *= p.sigma_n_sq();
                char buf[32];
                std::snprintf(buf, sizeof buf, "(%.3f)", s);
                se = buf;
            }
        }
        // Avoid printing "-0.000".
        const double shown = std::abs(row.value) < 5e-4 ? 0.0 : row.value;
        std::snprintf(line, sizeof line, "%-20s %10.3f %12s\n", row.label, shown, se.c_str());
        out << line;
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// plot data

void write_error_bar_csv(const fs::path& path, const std::vector<TrapEstimate>& estimates) {
    auto out = open_out(path);
    out << "label,point,ci_low,ci_high\n";
    for (const auto& e : estimates) {
        out << e.label << ',' << format_double(e.point) << ',' << format_double(e.ci_low) << ','
            << format_double(e.ci_high) << '\n';
    }
}

void write_trajectory_csv(const fs::path& path, const Trajectory& t) {
    auto out = open_out(path);
    out << "day,belief_mean,belief_variance,uses\n";
    for (std::size_t d = 0; d < t.uses.size(); ++d) {
        out << d << ',' << format_double(t.belief_means[d]) << ',' << format_double(t.belief_variances[d]) << ','
            << t.uses[d] << '\n';
    }
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string render_error_bar_svg(const std::vector<TrapEstimate>& estimates) {
    const double width = 640, height = 400, left = 60, right = 20, top = 20, bottom = 80;
    double ymax = 0.0;
    for (const auto& e : estimates) ymax = std::max(ymax, e.ci_high);
    ymax = ymax > 0.0 ? ymax * 1.1 : 1.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto y_of = [&](double v) { return top + plot_h * (1.0 - v / ymax); };
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - right << "\" y2=\""
        << top + plot_h << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double v = ymax * k / 4.0;
        svg << "<text x=\"" << left - 5 << "\" y=\"" << fmt(y_of(v) + 4) << "\" font-size=\"10\" text-anchor=\"end\">"
            << fmt(v) << "</text>\n";
    }
    const double slot = estimates.empty() ? plot_w : plot_w / static_cast<double>(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto& e = estimates[i];
        const double x = left + slot * (static_cast<double>(i) + 0.5);
        svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y_of(e.ci_low)) << "\" x2=\"" << fmt(x) << "\" y2=\""
            << fmt(y_of(e.ci_high)) << "\" stroke=\"black\"/>\n";
        for (double v : {e.ci_low, e.ci_high}) {
            svg << "<line x1=\"" << fmt(x - 6) << "\" y1=\"" << fmt(y_of(v)) << "\" x2=\"" << fmt(x + 6) << "\" y2=\""
                << fmt(y_of(v)) << "\" stroke=\"black\"/>\n";
        }
        svg << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y_of(e.point)) << "\" r=\"4\" fill=\"steelblue\"/>\n";
        svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(top + plot_h + 16)
            << "\" font-size=\"10\" text-anchor=\"middle\">" << e.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string render_trajectory_svg(const std::vector<std::pair<std::string, Trajectory>>& trajectories, double v_i) {
    const double width = 720, height = 400, left = 60, right = 120, top = 20, bottom = 40;
    double lo = v_i, hi = v_i;
    std::size_t days = 1;
    for (const auto& [label, t] : trajectories) {
        for (double m : t.belief_means) {
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
        days = std::max(days, t.belief_means.size());
    }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    auto x_of = [&](std::size_t d) { return left + plot_w * static_cast<double>(d) / static_cast<double>(days - 1 ? days - 1 : 1); };
    auto y_of = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };
    static const char* colors[] = {"firebrick", "steelblue", "darkgreen", "darkorange"};
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << fmt(y_of(v_i)) << "\" x2=\"" << left + plot_w << "\" y2=\""
        << fmt(y_of(v_i)) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    svg << "<text x=\"" << left - 5 << "\" y=\"" << fmt(y_of(hi) + 4) << "\" font-size=\"10\" text-anchor=\"end\">"
        << fmt(hi) << "</text>\n";
    svg << "<text x=\"" << left - 5 << "\" y=\"" << fmt(y_of(lo)) << "\" font-size=\"10\" text-anchor=\"end\">"
        << fmt(lo) << "</text>\n";
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        const auto& [label, t] = trajectories[k];
        const char* color = colors[k % 4];
        for (std::size_t d = 0; d < t.belief_means.size(); ++d) {
            svg << "<circle cx=\"" << fmt(x_of(d)) << "\" cy=\"" << fmt(y_of(t.belief_means[d])) << "\" r=\"1\" fill=\""
                << color << "\"/>\n";
        }
        svg << "<text x=\"" << left + plot_w + 8 << "\" y=\"" << top + 14 * (k + 1) << "\" font-size=\"11\" fill=\""
            << color << "\">" << label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// ---------------------------------------------------------------------------
// misc

Json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_json(const fs::path& path, const Json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

}  // namespace belief_divide
