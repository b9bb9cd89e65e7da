#include "belief_divide/policy.hpp"

#include <algorithm>
#include <cmath>

#include "belief_divide/parallel.hpp"

namespace belief_divide {

namespace {

struct Primitives {
    double v_i;
    double sigma_s_sq;
};

Primitives primitives(const UserProfile& profile, const ModelParams& params, const TrajectoryOverrides& overrides) {
    return {overrides.v_i.value_or(representative_utility(profile, params)),
            overrides.sigma_s_sq.value_or(signal_variance(profile, params))};
}

Belief starting_belief(const ModelParams& params, const SimConfig& config) {
    Belief b = initial_belief(params);
    if (config.prior_variance) b.variance = *config.prior_variance;
    return b;
}

/// Runs `n_days` days starting from `belief`; `record` receives
/// (day, start-of-day belief, uses) for each day.
template <class Record>
Belief run_days(Belief belief, std::int64_t n_days, const Primitives& prim, const ModelParams& params,
                const SimConfig& config, RngStream& rng, Record&& record) {
    const double sigma_s = std::sqrt(prim.sigma_s_sq);
    const double sigma_n_sq = params.sigma_n_sq();
    const double sigma_n = std::sqrt(sigma_n_sq);
    for (std::int64_t day = 0; day < n_days; ++day) {
        const double p = choice_probability(belief.mean, params.c);
        std::int64_t uses = 0;
        for (std::int64_t w = 0; w < config.opportunities_per_day; ++w) uses += rng.bernoulli(p) ? 1 : 0;
        double usage_sum = 0.0;
        for (std::int64_t k = 0; k < uses; ++k) usage_sum += prim.v_i + sigma_s * rng.normal();
        std::int64_t news = 0;
        double news_sum = 0.0;
        if (config.include_news) {
            news = rng.poisson(config.news_rate);
            for (std::int64_t j = 0; j < news; ++j) news_sum += prim.v_i + sigma_n * rng.normal();
        }
        record(day, belief, uses);
        belief = update_belief(belief, usage_sum, uses, news_sum, news, prim.sigma_s_sq, sigma_n_sq);
    }
    return belief;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

void SimConfig::validate() const {
    if (days < 0 || opportunities_per_day < 0 || pre_training_uses < 0) {
        throw Error("days, opportunities and training uses must be non-negative");
    }
    if (trap_eval_day < 0 || trap_eval_day > days) throw Error("trap_eval_day must lie in [0, days]");
    if (!(trap_ratio > 0.0 && trap_ratio < 1.0)) throw Error("trap_ratio must lie in (0, 1)");
    if (!(news_rate >= 0.0)) throw Error("news_rate must be non-negative");
    if (prior_variance && !(*prior_variance >= 0.0)) throw Error("prior variance must be non-negative");
}

Belief apply_training(const Belief& belief, std::int64_t n_uses, double v_i, double sigma_s_sq, RngStream& rng) {
    if (n_uses < 0) throw Error("training uses must be non-negative");
    if (n_uses == 0) return belief;
    const double sigma_s = std::sqrt(sigma_s_sq);
    double sum = 0.0;
    for (std::int64_t k = 0; k < n_uses; ++k) sum += v_i + sigma_s * rng.normal();
    return update_belief(belief, sum, n_uses, 0.0, 0, sigma_s_sq, 1.0);
}

bool is_trapped(double belief_mean, double v_i, double c, double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error("trap ratio must lie in (0, 1)");
    return choice_probability(belief_mean, c) < ratio * choice_probability(v_i, c);
}

Trajectory simulate_trajectory(const UserProfile& profile, const ModelParams& params, const SimConfig& config,
                               RngStream& rng, const TrajectoryOverrides& overrides) {
    config.validate();
    const Primitives prim = primitives(profile, params, overrides);
    Trajectory t;
    t.v_i = prim.v_i;
    t.sigma_s_sq = prim.sigma_s_sq;
    const auto n = static_cast<std::size_t>(config.days);
    t.belief_means.reserve(n + 1);
    t.belief_variances.reserve(n + 1);
    t.uses.reserve(n);
    RngStream training_rng(rng.engine()());
    Belief belief = apply_training(starting_belief(params, config), config.pre_training_uses, prim.v_i,
                                   prim.sigma_s_sq, training_rng);
    belief = run_days(belief, config.days, prim, params, config, rng, [&](std::int64_t, const Belief& b, std::int64_t uses) {
        t.belief_means.push_back(b.mean);
        t.belief_variances.push_back(b.variance);
        t.uses.push_back(uses);
    });
    t.belief_means.push_back(belief.mean);
    t.belief_variances.push_back(belief.variance);
    t.trapped = is_trapped(t.belief_means[static_cast<std::size_t>(config.trap_eval_day)], prim.v_i, params.c,
                           config.trap_ratio);
    return t;
}

std::vector<bool> trap_indicators(const UserProfile& profile, const ModelParams& params, const SimConfig& config,
                                  const TrajectoryOverrides& overrides) {
    config.validate();
    const Primitives prim = primitives(profile, params, overrides);
    std::vector<char> trapped(config.n_trajectories, 0);
    parallel_for(config.n_trajectories, [&](std::size_t k) {
        RngStream rng(config.master_seed, {static_cast<std::uint64_t>(StreamTag::trajectory), k});
        // Mirrors simulate_trajectory's stream use, stopping at the evaluation day.
        RngStream training_rng(rng.engine()());
        Belief belief = apply_training(starting_belief(params, config), config.pre_training_uses, prim.v_i,
                                       prim.sigma_s_sq, training_rng);
        belief = run_days(belief, config.trap_eval_day, prim, params, config, rng,
                          [](std::int64_t, const Belief&, std::int64_t) {});
        trapped[k] = is_trapped(belief.mean, prim.v_i, params.c, config.trap_ratio) ? 1 : 0;
    });
    return {trapped.begin(), trapped.end()};
}

TrapEstimate bootstrap_share(const std::vector<bool>& indicators, std::size_t n_bootstrap, std::uint64_t seed,
                             std::string label) {
    TrapEstimate est;
    est.label = std::move(label);
    est.n_trajectories = indicators.size();
    if (indicators.empty()) throw Error("cannot bootstrap an empty sample");
    const auto hits = static_cast<double>(std::count(indicators.begin(), indicators.end(), true));
    const auto n = static_cast<double>(indicators.size());
    est.point = hits / n;
    if (n_bootstrap == 0) {
        est.ci_low = est.ci_high = est.point;
        return est;
    }
    std::vector<double> shares(n_bootstrap);
    parallel_for(n_bootstrap, [&](std::size_t b) {
        RngStream rng(seed, {static_cast<std::uint64_t>(StreamTag::bootstrap), b});
        std::size_t count = 0;
        for (std::size_t i = 0; i < indicators.size(); ++i) count += indicators[rng.below(indicators.size())] ? 1 : 0;
        shares[b] = static_cast<double>(count) / n;
    });
    std::sort(shares.begin(), shares.end());
    est.ci_low = std::min(quantile_sorted(shares, 0.025), est.point);
    est.ci_high = std::max(quantile_sorted(shares, 0.975), est.point);
    return est;
}

TrapEstimate trap_probability(const UserProfile& profile, const ModelParams& params, const SimConfig& config,
                              const TrajectoryOverrides& overrides, std::string label) {
    const auto indicators = trap_indicators(profile, params, config, overrides);
    return bootstrap_share(indicators, config.n_bootstrap, config.master_seed, std::move(label));
}

std::vector<TrapEstimate> compare_profiles(const std::vector<PolicyScenario>& scenarios, const ModelParams& params) {
    if (scenarios.empty()) throw Error("no scenarios to compare");
    std::vector<TrapEstimate> out;
    out.reserve(scenarios.size());
    for (const auto& s : scenarios) out.push_back(trap_probability(s.profile, params, s.config, s.overrides, s.label));
    return out;
}

UserProfile fast_learner() {
    UserProfile p;
    p.age = 28;
    p.male = true;
    p.white = true;
    p.it = true;
    p.high_edu = true;
    p.latent_class = LatentClass::class2;
    return p;
}

UserProfile slow_learner() {
    UserProfile p;
    p.age = 48;
    p.male = false;
    p.white = false;
    p.it = false;
    p.high_edu = false;
    p.latent_class = LatentClass::class2;
    return p;
}

std::vector<PolicyScenario> paper_fig4_scenarios(const ModelParams& params, const SimConfig& base) {
    const double fast_v = representative_utility(fast_learner(), params);
    std::vector<PolicyScenario> out;
    out.push_back({"fast", fast_learner(), base, {}});
    out.push_back({"slow", slow_learner(), base, {}});
    out.push_back({"slow_fast_utility", slow_learner(), base, {fast_v, std::nullopt}});
    for (std::int64_t uses : {100, 150}) {
        SimConfig c = base;
        c.pre_training_uses = uses;
        out.push_back({"slow_training_" + std::to_string(uses), slow_learner(), c, {}});
    }
    return out;
}

}  // namespace belief_divide
