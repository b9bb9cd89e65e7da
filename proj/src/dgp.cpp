#include "belief_divide/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "belief_divide/parallel.hpp"

namespace belief_divide {

std::int64_t UserPanel::total_uses() const {
    std::int64_t n = 0;
    for (const auto& o : observations) n += o.w_gpt;
    return n;
}

std::int64_t UserPanel::total_news() const {
    std::int64_t n = 0;
    for (const auto& o : observations) n += o.w_news;
    return n;
}

void validate_panel(const UserPanel& panel) {
    panel.profile.validate();
    std::int64_t previous = -1;
    for (const auto& o : panel.observations) {
        if (o.day <= previous) throw Error("user " + panel.user_id + ": days must be strictly increasing");
        if (o.w_total < 0 || o.w_gpt < 0 || o.w_news < 0) throw Error("user " + panel.user_id + ": negative count");
        if (o.w_gpt > o.w_total) {
            throw Error("user " + panel.user_id + ", day " + std::to_string(o.day) + ": w_gpt exceeds w_total");
        }
        previous = o.day;
    }
}

void CountProcess::validate() const {
    if (!std::isfinite(value) || value < 0.0) throw Error("count process rate must be a finite non-negative number");
    if (kind == Kind::fixed && value != std::floor(value)) throw Error("fixed count must be an integer");
}

std::int64_t draw_counts(const CountProcess& process, RngStream& rng) {
    process.validate();
    switch (process.kind) {
        case CountProcess::Kind::none: return 0;
        case CountProcess::Kind::fixed: return static_cast<std::int64_t>(process.value);
        case CountProcess::Kind::poisson: return rng.poisson(process.value);
    }
    return 0;
}

void ProfileSampler::validate() const {
    for (double p : {p_high_edu, p_male, p_white, p_it}) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error("covariate probabilities must lie in [0, 1]");
    }
    if (!(age_sd >= 0.0) || age_min < 0 || age_max > 120 || age_min > age_max) {
        throw Error("invalid age distribution");
    }
}

UserProfile ProfileSampler::sample(RngStream& rng) const {
    UserProfile p;
    p.high_edu = rng.bernoulli(p_high_edu);
    p.male = rng.bernoulli(p_male);
    p.white = rng.bernoulli(p_white);
    p.it = rng.bernoulli(p_it);
    // Rejection sampling for the truncated normal; clamp as a fallback when the
    // window sits far in a tail.
    double age = age_mean;
    bool accepted = false;
    for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
        age = age_mean + age_sd * rng.normal();
        accepted = age >= age_min && age <= age_max;
    }
    p.age = static_cast<int>(std::lround(std::clamp(age, double(age_min), double(age_max))));
    return p;
}

void PopulationSpec::validate() const {
    if (horizon_days < 0) throw Error("horizon_days must be non-negative");
    opportunity_process.validate();
    news_process.validate();
    profile_sampler.validate();
}

SimulatedUser simulate_user_panel(const UserProfile& profile, const ModelParams& params, const PopulationSpec& spec,
                                  RngStream& rng, std::string user_id) {
    profile.validate();
    spec.validate();
    SimulatedUser out;
    out.panel.user_id = user_id;
    out.panel.profile = profile;
    out.truth.user_id = std::move(user_id);
    out.truth.latent_class = profile.latent_class;
    out.truth.v_i = representative_utility(profile, params);
    out.truth.sigma_s_sq = signal_variance(profile, params);
    const double sigma_s = std::sqrt(out.truth.sigma_s_sq);
    const double sigma_n_sq = params.sigma_n_sq();
    const double sigma_n = std::sqrt(sigma_n_sq);

    const auto days = static_cast<std::size_t>(spec.horizon_days);
    out.panel.observations.reserve(days);
    out.truth.beliefs.reserve(days + 1);
    out.truth.usage_sums.reserve(days);
    out.truth.news_sums.reserve(days);

    Belief belief = initial_belief(params);
    out.truth.beliefs.push_back(belief);
    for (std::int64_t day = 0; day < spec.horizon_days; ++day) {
        DayObservation obs;
        obs.day = day;
        obs.w_total = draw_counts(spec.opportunity_process, rng);
        obs.w_news = draw_counts(spec.news_process, rng);
        const double p = choice_probability(belief.mean, params.c);
        for (std::int64_t w = 0; w < obs.w_total; ++w) obs.w_gpt += rng.bernoulli(p) ? 1 : 0;

        double usage_sum = 0.0;
        for (std::int64_t k = 0; k < obs.w_gpt; ++k) usage_sum += out.truth.v_i + sigma_s * rng.normal();
        double news_sum = 0.0;
        for (std::int64_t j = 0; j < obs.w_news; ++j) news_sum += out.truth.v_i + sigma_n * rng.normal();

        belief = update_belief(belief, usage_sum, obs.w_gpt, news_sum, obs.w_news, out.truth.sigma_s_sq, sigma_n_sq);
        out.panel.observations.push_back(obs);
        out.truth.usage_sums.push_back(usage_sum);
        out.truth.news_sums.push_back(news_sum);
        out.truth.beliefs.push_back(belief);
    }
    return out;
}

std::string user_id_for_index(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%06zu", index);
    return buf;
}

SimulatedDataset simulate_dataset(const PopulationSpec& spec, const ModelParams& params) {
    if (spec.n_users == 0) throw Error("n_users must be positive");
    spec.validate();
    const double p_class2 = class2_probability(params);
    std::vector<SimulatedUser> users(spec.n_users);
    parallel_for(spec.n_users, [&](std::size_t i) {
        RngStream profile_rng(spec.master_seed, {static_cast<std::uint64_t>(StreamTag::profile), i});
        UserProfile profile = spec.profile_sampler.sample(profile_rng);
        profile.latent_class = profile_rng.bernoulli(p_class2) ? LatentClass::class2 : LatentClass::class1;
        RngStream panel_rng(spec.master_seed, {static_cast<std::uint64_t>(StreamTag::panel), i});
        users[i] = simulate_user_panel(profile, params, spec, panel_rng, user_id_for_index(i));
    });
    SimulatedDataset out;
    out.panels.reserve(users.size());
    out.truth.reserve(users.size());
    for (auto& u : users) {
        out.panels.push_back(std::move(u.panel));
        out.truth.push_back(std::move(u.truth));
    }
    return out;
}

}  // namespace belief_divide
