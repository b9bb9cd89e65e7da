#include "belief_divide/model.hpp"

#include <cmath>
#include <limits>

namespace belief_divide {

namespace {

double indicator(bool flag) { return flag ? 1.0 : 0.0; }

bool is_class2(const UserProfile& profile) { return profile.latent_class == LatentClass::class2; }

}  // namespace

std::string_view to_string(LatentClass cls) { return cls == LatentClass::class1 ? "class1" : "class2"; }

LatentClass latent_class_from_string(std::string_view text) {
    if (text == "class1" || text == "1") return LatentClass::class1;
    if (text == "class2" || text == "2") return LatentClass::class2;
    throw Error("unknown latent class '" + std::string(text) + "'");
}

void UserProfile::validate() const {
    if (age < 0 || age > 120) throw Error("age " + std::to_string(age) + " outside [0, 120]");
}

const std::array<std::string_view, ModelParams::n_free>& ModelParams::free_names() {
    static const std::array<std::string_view, n_free> names = {
        "lambda", "c",      "alpha0", "log_delta_alpha0", "alpha1",       "alpha2",
        "alpha3", "alpha4", "alpha5", "log_sigma_n_sq",   "gamma0",       "delta_gamma0",
        "gamma1", "gamma2", "gamma3", "gamma4",           "gamma5"};
    return names;
}

ModelParams::FreeVector ModelParams::free_vector() const {
    return {lambda, c,      alpha0, log_delta_alpha0, alpha1,       alpha2,
            alpha3, alpha4, alpha5, log_sigma_n_sq,   gamma0,       delta_gamma0,
            gamma1, gamma2, gamma3, gamma4,           gamma5};
}

ModelParams ModelParams::with_free(std::span<const double> v) const {
    if (v.size() != n_free) throw Error("free vector must have 17 entries");
    ModelParams p = *this;
    p.lambda = v[0];
    p.c = v[1];
    p.alpha0 = v[2];
    p.log_delta_alpha0 = v[3];
    p.alpha1 = v[4];
    p.alpha2 = v[5];
    p.alpha3 = v[6];
    p.alpha4 = v[7];
    p.alpha5 = v[8];
    p.log_sigma_n_sq = v[9];
    p.gamma0 = v[10];
    p.delta_gamma0 = v[11];
    p.gamma1 = v[12];
    p.gamma2 = v[13];
    p.gamma3 = v[14];
    p.gamma4 = v[15];
    p.gamma5 = v[16];
    return p;
}

double ModelParams::delta_alpha0() const { return std::exp(log_delta_alpha0); }

double ModelParams::sigma_n_sq() const { return std::exp(log_sigma_n_sq); }

ModelParams ModelParams::table4() {
    ModelParams p;
    p.lambda = -0.384;
    p.c = 1.411;
    p.alpha0 = -1.560;
    p.log_delta_alpha0 = 0.976;
    p.alpha1 = -0.468;
    p.alpha2 = -0.021;
    p.alpha3 = 0.562;
    p.alpha4 = -0.208;
    p.alpha5 = 0.507;
    p.log_sigma_n_sq = std::log(4.842);
    p.gamma0 = 4.900;
    p.delta_gamma0 = 2.031;
    p.gamma1 = -0.256;
    p.gamma2 = 0.029;
    p.gamma3 = -0.522;
    p.gamma4 = -0.481;
    p.gamma5 = -0.456;
    p.v0 = 0.0;
    p.log_sigma0_sq = 4.0;
    return p;
}

std::size_t free_index(std::string_view name) {
    const auto& names = ModelParams::free_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw Error("unknown free parameter '" + std::string(name) + "'");
}

double representative_utility(const UserProfile& profile, const ModelParams& params) {
    double intercept = params.alpha0;
    if (is_class2(profile)) intercept += params.delta_alpha0();
    return intercept + params.alpha1 * indicator(profile.high_edu) + params.alpha2 * profile.age +
           params.alpha3 * indicator(profile.male) + params.alpha4 * indicator(profile.white) +
           params.alpha5 * indicator(profile.it);
}

double log_signal_variance(const UserProfile& profile, const ModelParams& params) {
    double intercept = params.gamma0;
    if (is_class2(profile)) intercept += params.delta_gamma0;
    return intercept + params.gamma1 * indicator(profile.high_edu) + params.gamma2 * profile.age +
           params.gamma3 * indicator(profile.male) + params.gamma4 * indicator(profile.white) +
           params.gamma5 * indicator(profile.it);
}

double signal_variance(const UserProfile& profile, const ModelParams& params) {
    const double exponent = log_signal_variance(profile, params);
    static const double max_exponent = std::log(std::numeric_limits<double>::max());
    if (!(exponent < max_exponent)) {
        throw Error("signal variance overflows: exponent " + std::to_string(exponent));
    }
    return std::exp(exponent);
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_logistic(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double class2_probability(const ModelParams& params) { return logistic(params.lambda); }

double class_probability(const ModelParams& params, LatentClass cls) {
    return cls == LatentClass::class2 ? logistic(params.lambda) : logistic(-params.lambda);
}

Belief initial_belief(const ModelParams& params) { return {params.v0, std::exp(params.log_sigma0_sq)}; }

Belief update_belief(const Belief& prior, double usage_sum, std::int64_t usage_count, double news_sum,
                     std::int64_t news_count, double sigma_s_sq, double sigma_n_sq) {
    if (usage_count < 0 || news_count < 0) throw Error("signal counts must be non-negative");
    if (!std::isfinite(usage_sum) || !std::isfinite(news_sum)) throw Error("signal sums must be finite");
    if (usage_count == 0 && news_count == 0) return prior;
    if (prior.variance == 0.0) return prior;
    if (!(prior.variance > 0.0)) throw Error("prior variance must be non-negative");
    if (!(sigma_s_sq > 0.0) || !(sigma_n_sq > 0.0)) throw Error("signal variances must be positive");

    const double prior_precision = 1.0 / prior.variance;
    const double precision = prior_precision + static_cast<double>(usage_count) / sigma_s_sq +
                             static_cast<double>(news_count) / sigma_n_sq;
    const double weighted = prior.mean * prior_precision + usage_sum / sigma_s_sq + news_sum / sigma_n_sq;
    return {weighted / precision, 1.0 / precision};
}

double choice_probability(double belief_mean, double c) { return logistic(belief_mean - c); }

double day_log_likelihood(double belief_mean, double c, std::int64_t w_total, std::int64_t w_gpt) {
    if (w_gpt < 0 || w_total < 0) throw Error("choice counts must be non-negative");
    if (w_gpt > w_total) throw Error("w_gpt exceeds w_total");
    if (w_total == 0) return 0.0;
    const double x = belief_mean - c;
    double ll = 0.0;
    if (w_gpt > 0) ll += static_cast<double>(w_gpt) * log_logistic(x);
    if (w_total > w_gpt) ll += static_cast<double>(w_total - w_gpt) * log_logistic(-x);
    return ll;
}

}  // namespace belief_divide
