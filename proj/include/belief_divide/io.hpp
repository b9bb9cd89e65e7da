#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "belief_divide/dgp.hpp"
#include "belief_divide/estimation.hpp"
#include "belief_divide/model.hpp"
#include "belief_divide/policy.hpp"

namespace belief_divide {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips to the same double; locale-independent.
std::string format_double(double value);

// --- panels -----------------------------------------------------------------

/// profiles.csv: user_id,high_edu,age,male,white,it
void write_profiles_csv(const std::filesystem::path& path, const Dataset& dataset);
/// panel.csv: user_id,day,w_total,w_gpt,w_news
void write_panel_csv(const std::filesystem::path& path, const Dataset& dataset);
/// truth.csv: user_id,latent_class,v_i,sigma_s_sq
void write_truth_csv(const std::filesystem::path& path, const std::vector<UserTruth>& truth);
/// beliefs.csv: user_id,day,belief_mean,belief_variance,usage_sum,news_sum
void write_belief_path_csv(const std::filesystem::path& path, const std::vector<UserTruth>& truth);

/// Reads and validates a dataset. All-or-nothing: any bad row aborts the load
/// with an Error naming the file and line. Users keep profile-file order;
/// each user's days are sorted.
Dataset load_panel(const std::filesystem::path& profiles_path, const std::filesystem::path& panel_path);

// --- parameters ---------------------------------------------------------------

/// JSON keys follow the parameter names; sigma_n_sq (levels) or
/// log_sigma_n_sq may be given, not both. v0 and log_sigma0_sq default to the
/// normalization. Unknown keys and missing free parameters are errors.
ModelParams params_from_json(const Json& j);
/// Writes every field, with log_sigma_n_sq so the round trip is exact.
Json params_to_json(const ModelParams& p);
ModelParams read_params(const std::filesystem::path& path);
void write_params(const std::filesystem::path& path, const ModelParams& p);

// --- configs and results --------------------------------------------------------

PopulationSpec population_from_json(const Json& j);
Json population_to_json(const PopulationSpec& spec);
SimConfig sim_config_from_json(const Json& j, SimConfig base = {});
Json sim_config_to_json(const SimConfig& c);
UserProfile profile_from_json(const Json& j);
Json profile_to_json(const UserProfile& p);
FitOptions fit_options_from_json(const Json& j, FitOptions base = {});
Json fit_options_to_json(const FitOptions& o);

Json estimation_to_json(const EstimationResult& r);
EstimationResult estimation_from_json(const Json& j);
Json recovery_to_json(const RecoveryReport& r);

/// Fixed-width listing of parameters with optional standard errors.
std::string render_parameter_table(const ModelParams& p, const std::vector<std::string>& se_names = {},
                                   const std::vector<double>& std_errors = {});

// --- plot data ----------------------------------------------------------------

/// label,point,ci_low,ci_high
void write_error_bar_csv(const std::filesystem::path& path, const std::vector<TrapEstimate>& estimates);
/// day,belief_mean,belief_variance,uses
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t);
std::string render_error_bar_svg(const std::vector<TrapEstimate>& estimates);
std::string render_trajectory_svg(const std::vector<std::pair<std::string, Trajectory>>& trajectories, double v_i);

// --- misc -----------------------------------------------------------------------

Json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

}  // namespace belief_divide
