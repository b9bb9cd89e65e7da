#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "belief_divide/model.hpp"
#include "belief_divide/rng.hpp"

namespace belief_divide {

struct DayObservation {
    std::int64_t day = 0;
    std::int64_t w_total = 0;  // decision opportunities
    std::int64_t w_gpt = 0;    // opportunities resolved in favour of the tool
    std::int64_t w_news = 0;   // news clicks about the tool

    bool operator==(const DayObservation&) const = default;
};

struct UserPanel {
    std::string user_id;
    /// latent_class is only meaningful on simulated ground truth; estimation
    /// never reads it.
    UserProfile profile;
    std::vector<DayObservation> observations;

    std::int64_t total_uses() const;
    std::int64_t total_news() const;
    bool operator==(const UserPanel&) const = default;
};

using Dataset = std::vector<UserPanel>;

/// Checks per-day invariants and strictly increasing days; throws Error.
void validate_panel(const UserPanel& panel);

struct CountProcess {
    enum class Kind { none, fixed, poisson };
    Kind kind = Kind::none;
    double value = 0.0;

    static CountProcess none() { return {Kind::none, 0.0}; }
    static CountProcess fixed(std::int64_t k) { return {Kind::fixed, static_cast<double>(k)}; }
    static CountProcess poisson(double mean) { return {Kind::poisson, mean}; }

    void validate() const;
};

/// Draws one count: k for fixed, a Poisson variate for poisson, 0 for none.
std::int64_t draw_counts(const CountProcess& process, RngStream& rng);

/// Independent covariate marginals; age is a normal truncated to
/// [age_min, age_max] and rounded to whole years.
struct ProfileSampler {
    double p_high_edu = 0.57;
    double p_male = 0.60;
    double p_white = 0.66;
    double p_it = 0.09;
    double age_mean = 39.11;
    double age_sd = 13.62;
    int age_min = 18;
    int age_max = 88;

    void validate() const;
    /// Samples covariates; latent_class is left at class1.
    UserProfile sample(RngStream& rng) const;
};

struct PopulationSpec {
    std::size_t n_users = 1000;
    std::int64_t horizon_days = 183;
    CountProcess opportunity_process = CountProcess::poisson(18.0);
    CountProcess news_process = CountProcess::poisson(0.01);
    ProfileSampler profile_sampler;
    std::uint64_t master_seed = 0;

    void validate() const;
};

struct UserTruth {
    std::string user_id;
    LatentClass latent_class = LatentClass::class1;
    double v_i = 0.0;
    double sigma_s_sq = 0.0;
    /// Start-of-day beliefs; beliefs.size() == observations.size() + 1, the last
    /// entry being the belief after the final day.
    std::vector<Belief> beliefs;
    /// Per-day signal sums that produced each update.
    std::vector<double> usage_sums;
    std::vector<double> news_sums;
};

struct SimulatedUser {
    UserPanel panel;
    UserTruth truth;
};

/// Simulates one user's panel day by day. All decisions within a day share
/// the start-of-day belief; the day's signals are applied once at day end.
SimulatedUser simulate_user_panel(const UserProfile& profile, const ModelParams& params,
                                  const PopulationSpec& spec, RngStream& rng, std::string user_id = "u0");

struct SimulatedDataset {
    Dataset panels;
    std::vector<UserTruth> truth;
};

/// Samples profiles and classes, then simulates each user on its own stream
/// derived from (master_seed, user index).
SimulatedDataset simulate_dataset(const PopulationSpec& spec, const ModelParams& params);

std::string user_id_for_index(std::size_t index);

}  // namespace belief_divide
