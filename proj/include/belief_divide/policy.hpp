#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "belief_divide/model.hpp"
#include "belief_divide/rng.hpp"

namespace belief_divide {

struct SimConfig {
    std::int64_t days = 1000;
    std::int64_t opportunities_per_day = 18;
    std::int64_t pre_training_uses = 0;
    bool include_news = false;
    double news_rate = 0.01;  // Poisson mean of daily news clicks when enabled
    std::int64_t trap_eval_day = 365;
    double trap_ratio = 0.01;
    std::size_t n_trajectories = 10000;
    std::size_t n_bootstrap = 1000;
    std::uint64_t master_seed = 0;
    /// Replaces exp(log_sigma0_sq) as the prior variance; 0 freezes beliefs.
    std::optional<double> prior_variance;

    void validate() const;
};

/// Replacements for a profile's implied primitives.
struct TrajectoryOverrides {
    std::optional<double> v_i;
    std::optional<double> sigma_s_sq;
};

struct Trajectory {
    double v_i = 0.0;
    double sigma_s_sq = 0.0;
    /// Belief at the start of each day after training; days + 1 entries,
    /// the last one being the belief after the final day.
    std::vector<double> belief_means;
    std::vector<double> belief_variances;
    std::vector<std::int64_t> uses;  // per day
    bool trapped = false;            // at trap_eval_day
};

struct TrapEstimate {
    std::string label;
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_trajectories = 0;

    bool operator==(const TrapEstimate&) const = default;
};

/// Pre-period training: n_uses signals drawn from N(v_i, sigma_s_sq) and
/// absorbed in one batched update.
Belief apply_training(const Belief& belief, std::int64_t n_uses, double v_i, double sigma_s_sq, RngStream& rng);

/// True when the current choice probability is below ratio times the
/// full-information choice probability.
bool is_trapped(double belief_mean, double v_i, double c, double ratio);

/// One belief trajectory: optional training, then each day
/// opportunities_per_day Bernoulli choices at the start-of-day belief, one
/// signal per use, and a single end-of-day update.
Trajectory simulate_trajectory(const UserProfile& profile, const ModelParams& params, const SimConfig& config,
                               RngStream& rng, const TrajectoryOverrides& overrides = {});

/// Share of trajectories trapped at trap_eval_day with a 95% percentile
/// bootstrap interval. Trajectory k uses the stream (master_seed, k).
TrapEstimate trap_probability(const UserProfile& profile, const ModelParams& params, const SimConfig& config,
                              const TrajectoryOverrides& overrides = {}, std::string label = {});

/// Trapped indicator of each trajectory, in trajectory order.
std::vector<bool> trap_indicators(const UserProfile& profile, const ModelParams& params, const SimConfig& config,
                                  const TrajectoryOverrides& overrides = {});

/// Percentile bootstrap of the mean of 0/1 indicators.
TrapEstimate bootstrap_share(const std::vector<bool>& indicators, std::size_t n_bootstrap, std::uint64_t seed,
                             std::string label = {});

struct PolicyScenario {
    std::string label;
    UserProfile profile;
    SimConfig config;
    TrajectoryOverrides overrides;
};

/// One TrapEstimate per scenario. Each scenario keeps its own config, so
/// scenarios sharing a master seed share random streams.
std::vector<TrapEstimate> compare_profiles(const std::vector<PolicyScenario>& scenarios, const ModelParams& params);

/// 28-year-old white male IT practitioner with high education, class 2.
UserProfile fast_learner();
/// 48-year-old non-white female, non-IT, low education, class 2.
UserProfile slow_learner();

/// The five-bar comparison: fast; slow; slow with the fast learner's utility;
/// slow after 100 and after 150 training uses.
std::vector<PolicyScenario> paper_fig4_scenarios(const ModelParams& params, const SimConfig& base);

}  // namespace belief_divide
