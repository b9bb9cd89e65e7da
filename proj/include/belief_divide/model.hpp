#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace belief_divide {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LatentClass { class1, class2 };

std::string_view to_string(LatentClass cls);
LatentClass latent_class_from_string(std::string_view text);

struct UserProfile {
    bool high_edu = false;
    int age = 0;
    bool male = false;
    bool white = false;
    bool it = false;
    LatentClass latent_class = LatentClass::class1;

    /// Throws Error when age is outside [0, 120].
    void validate() const;
    bool operator==(const UserProfile&) const = default;
};

/// Full parameter vector of the structural model.
///
/// Seventeen entries are free during estimation; v0 and log_sigma0_sq are
/// identification normalizations and stay fixed.
struct ModelParams {
    double c = 0.0;
    double alpha0 = 0.0;
    double log_delta_alpha0 = 0.0;
    double alpha1 = 0.0;  // HighEdu
    double alpha2 = 0.0;  // Age (years)
    double alpha3 = 0.0;  // Male
    double alpha4 = 0.0;  // White
    double alpha5 = 0.0;  // IT
    double gamma0 = 0.0;
    double delta_gamma0 = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double gamma3 = 0.0;
    double gamma4 = 0.0;
    double gamma5 = 0.0;
    double log_sigma_n_sq = 0.0;
    double lambda = 0.0;
    double v0 = 0.0;
    double log_sigma0_sq = 4.0;

    static constexpr std::size_t n_free = 17;
    using FreeVector = std::array<double, n_free>;

    /// Names of the free parameters, in the order used by free vectors.
    static const std::array<std::string_view, n_free>& free_names();

    FreeVector free_vector() const;
    /// Returns a copy with the free entries replaced; v0 and log_sigma0_sq
    /// are carried over from *this.
    ModelParams with_free(std::span<const double> values) const;

    double delta_alpha0() const;
    double sigma_n_sq() const;

    /// Reference estimates shipped in data/table4.json.
    static ModelParams table4();

    bool operator==(const ModelParams&) const = default;
};

/// Index of a free parameter by name; throws Error on unknown names.
std::size_t free_index(std::string_view name);

/// Normal belief over the representative utility of the new tool.
struct Belief {
    double mean = 0.0;
    double variance = 0.0;

    bool operator==(const Belief&) const = default;
};

/// v_i: demographic-linear representative utility, class-shifted intercept.
double representative_utility(const UserProfile& profile, const ModelParams& params);

/// Exponent of the usage-signal variance (log sigma_s^2).
double log_signal_variance(const UserProfile& profile, const ModelParams& params);

/// sigma_s^2 = exp(log_signal_variance); throws Error on overflow.
double signal_variance(const UserProfile& profile, const ModelParams& params);

/// Pr(Class2) = logistic(lambda).
double class2_probability(const ModelParams& params);

double class_probability(const ModelParams& params, LatentClass cls);

Belief initial_belief(const ModelParams& params);

/// Conjugate normal update with aggregated usage and news signals.
///
/// A prior with zero variance is degenerate and returned unchanged. Counts
/// must be non-negative and sums finite.
Belief update_belief(const Belief& prior, double usage_sum, std::int64_t usage_count,
                     double news_sum, std::int64_t news_count, double sigma_s_sq,
                     double sigma_n_sq);

/// Overflow-safe logistic function.
double logistic(double x);

/// log(logistic(x)) without overflow or cancellation.
double log_logistic(double x);

/// Logit probability of choosing the new tool: logistic(belief_mean - c).
double choice_probability(double belief_mean, double c);

/// Log-likelihood of a day with w_gpt tool choices out of w_total opportunities
/// (sequence probability, no binomial coefficient). Zero when w_total is 0.
double day_log_likelihood(double belief_mean, double c, std::int64_t w_total, std::int64_t w_gpt);

}  // namespace belief_divide
