#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "belief_divide/dgp.hpp"
#include "belief_divide/model.hpp"

namespace belief_divide {

/// How latent classes enter the simulated likelihood.
///   per_user: each user belongs to one class for the whole panel.
///   per_observation: classes are mixed separately for every (user, day).
enum class Mixing { per_user, per_observation };

std::string_view to_string(Mixing mixing);
Mixing mixing_from_string(std::string_view text);

/// Common random numbers: standard-normal innovations for every observed
/// usage and news signal, one layer per simulation draw. Built once and
/// reused for every parameter evaluation so the simulated objective is a
/// smooth function of the parameters.
class CrnStore {
public:
    /// Innovations of a user depend only on (seed, user_id, draw), so user
    /// order does not matter. Throws Error when draws == 0.
    static CrnStore build(const Dataset& dataset, std::size_t draws, std::uint64_t seed);

    std::size_t draws() const { return draws_; }
    std::size_t n_users() const { return usage_offsets_.size() - 1; }
    std::uint64_t seed() const { return seed_; }

    std::size_t usage_slots(std::size_t user) const { return usage_offsets_[user + 1] - usage_offsets_[user]; }
    std::size_t news_slots(std::size_t user) const { return news_offsets_[user + 1] - news_offsets_[user]; }

    std::span<const double> usage_innovations(std::size_t user, std::size_t draw) const;
    std::span<const double> news_innovations(std::size_t user, std::size_t draw) const;

    /// Every stored innovation, for moment checks.
    std::span<const double> all_usage() const { return usage_; }
    std::span<const double> all_news() const { return news_; }

    bool operator==(const CrnStore&) const = default;

private:
    std::size_t draws_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::size_t> usage_offsets_{0};
    std::vector<std::size_t> news_offsets_{0};
    // Layout: per user, `draws_` consecutive layers of that user's slots.
    std::vector<double> usage_;
    std::vector<double> news_;
};

/// Log-likelihood of one panel's choices given a latent class and one draw of
/// signal innovations. Signals are v_i + sigma * z, consumed in day order.
/// Throws Error when the innovation spans are shorter than the panel needs.
double conditional_path_loglik(const UserPanel& panel, LatentClass cls, const ModelParams& params,
                               std::span<const double> usage_innovations, std::span<const double> news_innovations);

/// Log of the simulated likelihood of one user, averaging over the first
/// `draws` CRN layers and mixing over latent classes. Reference
/// implementation built directly on conditional_path_loglik.
double user_simulated_loglik(const UserPanel& panel, std::size_t user_index, const ModelParams& params,
                             const CrnStore& crn, std::size_t draws, Mixing mixing = Mixing::per_user);

/// Prepared evaluator for the whole dataset. Days between signal arrivals are
/// collapsed and per-day innovation sums are precomputed, so each evaluation
/// touches only the days on which beliefs change.
class SimulatedLikelihood {
public:
    SimulatedLikelihood(const Dataset& dataset, const CrnStore& crn, std::size_t draws = 0,
                        Mixing mixing = Mixing::per_user);

    /// Sum of user log-likelihoods in a fixed tree order. Throws Error naming
    /// the user when any user's likelihood underflows to zero.
    double total(const ModelParams& params) const;
    std::vector<double> per_user(const ModelParams& params) const;
    double user(std::size_t index, const ModelParams& params) const;

    std::size_t n_users() const { return users_.size(); }
    std::size_t draws() const { return draws_; }
    Mixing mixing() const { return mixing_; }
    std::int64_t n_decisions() const { return n_decisions_; }

private:
    // A run of decision days sharing one belief: the belief only moves on
    // days with signals, and those signals land after the day's choices.
    struct Segment {
        double n_gpt = 0.0;
        double n_other = 0.0;
        double uses_before = 0.0;  // usage signals absorbed before the segment
        double news_before = 0.0;
        std::int32_t first_day = 0;  // into day_gpt/day_other
        std::int32_t n_days = 0;
    };
    struct PreparedUser {
        std::string user_id;
        UserProfile profile;
        std::vector<Segment> segments;
        // Innovation sums absorbed before each segment, [segment * draws + r].
        // news_z is empty for users without news clicks.
        std::vector<double> usage_z;
        std::vector<double> news_z;
        std::vector<double> day_gpt;
        std::vector<double> day_other;
    };

    double user_per_user(const PreparedUser& u, const ModelParams& params) const;
    double user_per_observation(const PreparedUser& u, const ModelParams& params) const;

    std::vector<PreparedUser> users_;
    std::size_t draws_ = 0;
    Mixing mixing_ = Mixing::per_user;
    std::int64_t n_decisions_ = 0;
};

/// Sum over users of user_simulated_loglik, via SimulatedLikelihood.
double total_simulated_loglik(const Dataset& dataset, const ModelParams& params, const CrnStore& crn,
                              std::size_t draws, Mixing mixing = Mixing::per_user);

/// log(sum(exp(values))) over a non-empty range.
double log_sum_exp(std::span<const double> values);

}  // namespace belief_divide
