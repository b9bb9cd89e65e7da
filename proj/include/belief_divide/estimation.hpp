#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "belief_divide/dgp.hpp"
#include "belief_divide/likelihood.hpp"
#include "belief_divide/model.hpp"

namespace belief_divide {

struct FitOptions {
    std::size_t draws = 100;
    Mixing mixing = Mixing::per_user;
    std::size_t max_evaluations = 20000;  // per simplex run
    double tolerance = 1e-4;              // simplex diameter
    std::size_t restarts = 3;
    double restart_agreement = 1e-3;      // log-likelihood units
    /// Seeds the CRN store and the restart perturbations.
    std::uint64_t seed = 0;
    /// Names of the parameters to optimize; empty means all 17. The rest are
    /// held at their init values.
    std::vector<std::string> free_parameters;
    bool compute_standard_errors = true;
    double hessian_relative_step = 1e-3;
    /// Resamples for the bootstrap fallback when the Hessian is not negative
    /// definite; 0 disables the fallback.
    std::size_t bootstrap_replications = 0;
};

struct EstimationResult {
    ModelParams params_hat;
    double loglik = 0.0;
    double initial_loglik = 0.0;
    std::vector<std::string> parameter_names;
    /// One entry per free parameter; empty unless converged.
    std::vector<double> std_errors;
    std::string se_method = "none";
    bool hessian_positive_definite = false;
    bool converged = false;
    std::size_t n_evaluations = 0;
    std::size_t n_runs = 0;
    double wall_time = 0.0;  // seconds
};

/// Default initial simplex offsets per free parameter, indexed like
/// ModelParams::free_names().
const ModelParams::FreeVector& default_simplex_steps();

/// Maximum simulated likelihood with the CRN store held fixed for the whole
/// fit. Runs a simplex search from `init`, then restarts from the incumbent
/// with randomly rescaled simplices until two consecutive runs agree.
/// Throws Error when the likelihood at `init` is not finite or when init
/// breaks the v0 = 0, log sigma0^2 = 4 normalization.
EstimationResult fit_msl(const Dataset& dataset, const ModelParams& init, const FitOptions& options = {});

struct StandardErrorResult {
    std::vector<double> std_errors;
    std::string method;  // "hessian" or "bootstrap"; "none" when both fail
    bool hessian_positive_definite = false;
    std::vector<double> hessian;  // row-major, n x n
};

/// Central finite-difference Hessian of `loglik` at `theta`, step
/// relative_step * max(|theta_j|, 1), and SEs from the inverse of its
/// negation. The SEs are NaN when the Hessian is not negative definite.
StandardErrorResult hessian_standard_errors(const std::function<double(std::span<const double>)>& loglik,
                                            std::span<const double> theta, double relative_step = 1e-3);

/// Standard errors for the free parameters of a fit. Falls back to a user
/// resampling bootstrap when the Hessian is not negative definite and
/// options.bootstrap_replications > 0.
StandardErrorResult standard_errors(const Dataset& dataset, const ModelParams& params_hat, const CrnStore& crn,
                                    const FitOptions& options);

struct RecoveryConfig {
    ModelParams truth = ModelParams::table4();
    /// Starting point of every fit; defaults to the truth.
    std::optional<ModelParams> init;
    PopulationSpec population;
    std::size_t n_replications = 1;
    FitOptions fit;
};

struct ParameterRecovery {
    std::string name;
    double truth = 0.0;
    double mean_estimate = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double sd_estimate = 0.0;
    double mean_std_error = 0.0;  // NaN when no replication produced SEs
    double coverage = 0.0;        // share of 95% intervals covering the truth; NaN without SEs
    bool flat_direction = false;  // mean SE exceeds 10x the median across parameters
};

struct RecoveryReport {
    ModelParams truth;
    std::vector<EstimationResult> replications;
    std::vector<std::string> failures;  // one message per failed replication
    std::vector<ParameterRecovery> parameters;
    std::size_t n_converged = 0;
};

/// Simulates an independent dataset per replication (seed derived from the
/// population master seed and the replication index) and fits it.
RecoveryReport monte_carlo_recovery(const RecoveryConfig& config);

/// Per-parameter summaries over converged replications.
std::vector<ParameterRecovery> summarize_recovery(const ModelParams& truth,
                                                  std::span<const EstimationResult> replications);

}  // namespace belief_divide
