#include "belief_divide/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "belief_divide/parallel.hpp"
#include "belief_divide/rng.hpp"
#include "likelihood_kernel.hpp"

namespace belief_divide {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

UserProfile with_class(UserProfile profile, LatentClass cls) {
    profile.latent_class = cls;
    return profile;
}

inline double log_add_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(-std::abs(a - b)));
}

/// Per-day log-likelihood terms of one class path (reference route).
std::vector<double> conditional_day_logliks(const UserPanel& panel, LatentClass cls, const ModelParams& params,
                                            std::span<const double> usage_z, std::span<const double> news_z) {
    const auto profile = with_class(panel.profile, cls);
    const double v = representative_utility(profile, params);
    const double sigma_s_sq = signal_variance(profile, params);
    const double sigma_n_sq = params.sigma_n_sq();
    const double sigma_s = std::sqrt(sigma_s_sq);
    const double sigma_n = std::sqrt(sigma_n_sq);
    if (static_cast<std::size_t>(panel.total_uses()) > usage_z.size() ||
        static_cast<std::size_t>(panel.total_news()) > news_z.size()) {
        throw Error("user " + panel.user_id + ": not enough CRN slots for observed signals");
    }

    std::vector<double> out;
    out.reserve(panel.observations.size());
    Belief belief = initial_belief(params);
    std::size_t u = 0;
    std::size_t n = 0;
    for (const auto& obs : panel.observations) {
        out.push_back(day_log_likelihood(belief.mean, params.c, obs.w_total, obs.w_gpt));
        double usage_sum = 0.0;
        for (std::int64_t k = 0; k < obs.w_gpt; ++k) usage_sum += v + sigma_s * usage_z[u++];
        double news_sum = 0.0;
        for (std::int64_t j = 0; j < obs.w_news; ++j) news_sum += v + sigma_n * news_z[n++];
        belief = update_belief(belief, usage_sum, obs.w_gpt, news_sum, obs.w_news, sigma_s_sq, sigma_n_sq);
    }
    return out;
}

}  // namespace

std::string_view to_string(Mixing mixing) { return mixing == Mixing::per_user ? "per_user" : "per_observation"; }

Mixing mixing_from_string(std::string_view text) {
    if (text == "per_user") return Mixing::per_user;
    if (text == "per_observation") return Mixing::per_observation;
    throw Error("unknown mixing mode '" + std::string(text) + "'");
}

double log_sum_exp(std::span<const double> values) {
    if (values.empty()) throw Error("log_sum_exp of an empty range");
    const double hi = *std::max_element(values.begin(), values.end());
    if (hi == neg_inf) return neg_inf;
    if (hi == std::numeric_limits<double>::infinity()) return hi;
    double s = 0.0;
    for (double v : values) s += std::exp(v - hi);
    return hi + std::log(s);
}

// ---------------------------------------------------------------------------
// CrnStore

namespace {

std::uint64_t id_hash(std::string_view id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : id) h = (h ^ ch) * 0x100000001b3ULL;
    return h;
}

}  // namespace

CrnStore CrnStore::build(const Dataset& dataset, std::size_t draws, std::uint64_t seed) {
    if (draws == 0) throw Error("number of simulation draws must be positive");
    CrnStore store;
    store.draws_ = draws;
    store.seed_ = seed;
    store.usage_offsets_.reserve(dataset.size() + 1);
    store.news_offsets_.reserve(dataset.size() + 1);
    for (const auto& panel : dataset) {
        store.usage_offsets_.push_back(store.usage_offsets_.back() + static_cast<std::size_t>(panel.total_uses()));
        store.news_offsets_.push_back(store.news_offsets_.back() + static_cast<std::size_t>(panel.total_news()));
    }
    store.usage_.resize(store.usage_offsets_.back() * draws);
    store.news_.resize(store.news_offsets_.back() * draws);
    parallel_for(dataset.size(), [&](std::size_t user) {
        const std::uint64_t key = id_hash(dataset[user].user_id);
        const std::size_t nu = store.usage_slots(user);
        const std::size_t nn = store.news_slots(user);
        double* usage = store.usage_.data() + store.usage_offsets_[user] * draws;
        double* news = store.news_.data() + store.news_offsets_[user] * draws;
        for (std::size_t r = 0; r < draws; ++r) {
            RngStream rng(seed, {static_cast<std::uint64_t>(StreamTag::crn), key, r});
            for (std::size_t j = 0; j < nu; ++j) usage[r * nu + j] = rng.normal();
            for (std::size_t j = 0; j < nn; ++j) news[r * nn + j] = rng.normal();
        }
    });
    return store;
}

std::span<const double> CrnStore::usage_innovations(std::size_t user, std::size_t draw) const {
    const std::size_t n = usage_slots(user);
    return {usage_.data() + usage_offsets_[user] * draws_ + draw * n, n};
}

std::span<const double> CrnStore::news_innovations(std::size_t user, std::size_t draw) const {
    const std::size_t n = news_slots(user);
    return {news_.data() + news_offsets_[user] * draws_ + draw * n, n};
}

// ---------------------------------------------------------------------------
// Reference route

double conditional_path_loglik(const UserPanel& panel, LatentClass cls, const ModelParams& params,
                               std::span<const double> usage_innovations, std::span<const double> news_innovations) {
    double total = 0.0;
    for (double term : conditional_day_logliks(panel, cls, params, usage_innovations, news_innovations)) total += term;
    return total;
}

double user_simulated_loglik(const UserPanel& panel, std::size_t user_index, const ModelParams& params,
                             const CrnStore& crn, std::size_t draws, Mixing mixing) {
    if (draws == 0 || draws > crn.draws()) throw Error("draws must lie in [1, crn.draws()]");
    if (user_index >= crn.n_users()) throw Error("user index outside the CRN store");
    const double log_p1 = std::log(class_probability(params, LatentClass::class1));
    const double log_p2 = std::log(class_probability(params, LatentClass::class2));
    std::vector<double> per_draw;
    per_draw.reserve(2 * draws);
    for (std::size_t r = 0; r < draws; ++r) {
        const auto uz = crn.usage_innovations(user_index, r);
        const auto nz = crn.news_innovations(user_index, r);
        if (mixing == Mixing::per_user) {
            per_draw.push_back(log_p1 + conditional_path_loglik(panel, LatentClass::class1, params, uz, nz));
            per_draw.push_back(log_p2 + conditional_path_loglik(panel, LatentClass::class2, params, uz, nz));
        } else {
            const auto d1 = conditional_day_logliks(panel, LatentClass::class1, params, uz, nz);
            const auto d2 = conditional_day_logliks(panel, LatentClass::class2, params, uz, nz);
            double sum = 0.0;
            for (std::size_t t = 0; t < d1.size(); ++t) sum += log_add_exp(log_p1 + d1[t], log_p2 + d2[t]);
            per_draw.push_back(sum);
        }
    }
    const double ll = log_sum_exp(per_draw) - std::log(static_cast<double>(draws));
    if (ll == neg_inf || std::isnan(ll)) throw Error("user " + panel.user_id + ": simulated likelihood is zero");
    return ll;
}

// ---------------------------------------------------------------------------
// Prepared evaluator

namespace {

// The vectorized kernel assumes finite arithmetic.
void require_finite(const ModelParams& params) {
    const auto v = params.free_vector();
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (!std::isfinite(v[j])) {
            throw Error("parameter " + std::string(ModelParams::free_names()[j]) + " is not finite");
        }
    }
    if (!std::isfinite(params.v0) || !std::isfinite(params.log_sigma0_sq)) throw Error("fixed parameters must be finite");
}

}  // namespace

SimulatedLikelihood::SimulatedLikelihood(const Dataset& dataset, const CrnStore& crn, std::size_t draws,
                                         Mixing mixing)
    : draws_(draws == 0 ? crn.draws() : draws), mixing_(mixing) {
    if (dataset.empty()) throw Error("dataset is empty");
    if (crn.n_users() != dataset.size()) throw Error("CRN store was built for a different dataset");
    if (draws_ > crn.draws()) throw Error("requested more draws than the CRN store holds");
    users_.resize(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const UserPanel& panel = dataset[i];
        if (crn.usage_slots(i) < static_cast<std::size_t>(panel.total_uses()) ||
            crn.news_slots(i) < static_cast<std::size_t>(panel.total_news())) {
            throw Error("user " + panel.user_id + ": not enough CRN slots for observed signals");
        }
        PreparedUser& u = users_[i];
        u.user_id = panel.user_id;
        u.profile = panel.profile;

        // Signal counts arriving at the end of each segment.
        std::vector<std::int64_t> seg_uses;
        std::vector<std::int64_t> seg_news;
        Segment current;
        double uses_so_far = 0.0;
        double news_so_far = 0.0;
        for (const auto& obs : panel.observations) {
            if (obs.w_gpt < 0 || obs.w_gpt > obs.w_total) {
                throw Error("user " + panel.user_id + ": w_gpt exceeds w_total");
            }
            if (obs.w_total > 0) {
                if (current.n_days == 0) current.first_day = static_cast<std::int32_t>(u.day_gpt.size());
                current.n_gpt += static_cast<double>(obs.w_gpt);
                current.n_other += static_cast<double>(obs.w_total - obs.w_gpt);
                u.day_gpt.push_back(static_cast<double>(obs.w_gpt));
                u.day_other.push_back(static_cast<double>(obs.w_total - obs.w_gpt));
                ++current.n_days;
                n_decisions_ += obs.w_total;
            }
            if (obs.w_gpt > 0 || obs.w_news > 0) {
                current.uses_before = uses_so_far;
                current.news_before = news_so_far;
                u.segments.push_back(current);
                seg_uses.push_back(obs.w_gpt);
                seg_news.push_back(obs.w_news);
                uses_so_far += static_cast<double>(obs.w_gpt);
                news_so_far += static_cast<double>(obs.w_news);
                current = Segment{};
            }
        }
        if (current.n_days > 0) {
            current.uses_before = uses_so_far;
            current.news_before = news_so_far;
            u.segments.push_back(current);
            seg_uses.push_back(0);
            seg_news.push_back(0);
        }

        const std::size_t n_seg = u.segments.size();
        const bool has_news = panel.total_news() > 0;
        u.usage_z.assign(n_seg * draws_, 0.0);
        if (has_news) u.news_z.assign(n_seg * draws_, 0.0);
        for (std::size_t r = 0; r < draws_; ++r) {
            const auto uz = crn.usage_innovations(i, r);
            const auto nz = crn.news_innovations(i, r);
            std::size_t pu = 0;
            std::size_t pn = 0;
            double cum_u = 0.0;
            double cum_n = 0.0;
            for (std::size_t s = 0; s < n_seg; ++s) {
                u.usage_z[s * draws_ + r] = cum_u;
                if (has_news) u.news_z[s * draws_ + r] = cum_n;
                for (std::int64_t k = 0; k < seg_uses[s]; ++k) cum_u += uz[pu++];
                for (std::int64_t k = 0; k < seg_news[s]; ++k) cum_n += nz[pn++];
            }
        }
    }
}

namespace {

struct ClassTerms {
    double log_weight;
    double v;
    double inv_s2;
    double sigma_s;
};

ClassTerms class_terms(const UserProfile& profile, LatentClass cls, const ModelParams& params) {
    const auto p = with_class(profile, cls);
    const double s2 = signal_variance(p, params);
    return {std::log(class_probability(params, cls)), representative_utility(p, params), 1.0 / s2, std::sqrt(s2)};
}

/// Belief mean before a segment is offset + usage_scale * Z_u + news_scale * Z_n,
/// where Z_u, Z_n are the innovation sums absorbed so far.
struct MeanMap {
    double offset;
    double usage_scale;
    double news_scale;
};

struct PriorTerms {
    Belief prior;
    bool frozen;
    double precision;
    double inv_n2;
    double sigma_n;

    explicit PriorTerms(const ModelParams& params) : prior(initial_belief(params)) {
        frozen = prior.variance == 0.0;
        precision = frozen ? 0.0 : 1.0 / prior.variance;
        inv_n2 = 1.0 / params.sigma_n_sq();
        sigma_n = std::sqrt(params.sigma_n_sq());
    }

    MeanMap map(const ClassTerms& ct, double uses_before, double news_before) const {
        if (frozen) return {prior.mean, 0.0, 0.0};
        const double precision_now = precision + uses_before * ct.inv_s2 + news_before * inv_n2;
        const double base = prior.mean * precision + ct.v * (uses_before * ct.inv_s2 + news_before * inv_n2);
        return {base / precision_now, ct.sigma_s * ct.inv_s2 / precision_now, sigma_n * inv_n2 / precision_now};
    }
};

}  // namespace

double SimulatedLikelihood::user_per_user(const PreparedUser& u, const ModelParams& params) const {
    const PriorTerms pt(params);
    const ClassTerms classes[2] = {class_terms(u.profile, LatentClass::class1, params),
                                   class_terms(u.profile, LatentClass::class2, params)};
    const bool has_news = !u.news_z.empty();

    thread_local std::vector<double> ll;
    thread_local std::vector<double> terms;
    ll.resize(draws_);
    terms.resize(2 * draws_);
    for (int k = 0; k < 2; ++k) {
        std::fill(ll.begin(), ll.end(), 0.0);
        for (std::size_t s = 0; s < u.segments.size(); ++s) {
            const Segment& seg = u.segments[s];
            if (seg.n_days == 0) continue;
            const MeanMap m = pt.map(classes[k], seg.uses_before, seg.news_before);
            const double* zu = u.usage_z.data() + s * draws_;
            if (has_news) {
                detail::accumulate_choice_terms(zu, u.news_z.data() + s * draws_, draws_, m.offset - params.c,
                                                m.usage_scale, m.news_scale, seg.n_gpt, seg.n_other, ll.data());
            } else {
                detail::accumulate_choice_terms(zu, draws_, m.offset - params.c, m.usage_scale, seg.n_gpt,
                                                seg.n_other, ll.data());
            }
        }
        for (std::size_t r = 0; r < draws_; ++r) terms[2 * r + k] = classes[k].log_weight + ll[r];
    }
    return log_sum_exp(terms) - std::log(static_cast<double>(draws_));
}

double SimulatedLikelihood::user_per_observation(const PreparedUser& u, const ModelParams& params) const {
    const PriorTerms pt(params);
    const ClassTerms classes[2] = {class_terms(u.profile, LatentClass::class1, params),
                                   class_terms(u.profile, LatentClass::class2, params)};
    const bool has_news = !u.news_z.empty();

    thread_local std::vector<double> terms;
    terms.assign(draws_, 0.0);
    for (std::size_t s = 0; s < u.segments.size(); ++s) {
        const Segment& seg = u.segments[s];
        if (seg.n_days == 0) continue;
        const MeanMap m1 = pt.map(classes[0], seg.uses_before, seg.news_before);
        const MeanMap m2 = pt.map(classes[1], seg.uses_before, seg.news_before);
        for (std::size_t r = 0; r < draws_; ++r) {
            const double zu = u.usage_z[s * draws_ + r];
            const double zn = has_news ? u.news_z[s * draws_ + r] : 0.0;
            const double x1 = m1.offset + m1.usage_scale * zu + m1.news_scale * zn - params.c;
            const double x2 = m2.offset + m2.usage_scale * zu + m2.news_scale * zn - params.c;
            double sum = 0.0;
            for (std::int32_t d = 0; d < seg.n_days; ++d) {
                const double g = u.day_gpt[seg.first_day + d];
                const double o = u.day_other[seg.first_day + d];
                sum += log_add_exp(classes[0].log_weight + g * log_logistic(x1) + o * log_logistic(-x1),
                                   classes[1].log_weight + g * log_logistic(x2) + o * log_logistic(-x2));
            }
            terms[r] += sum;
        }
    }
    return log_sum_exp(terms) - std::log(static_cast<double>(draws_));
}

double SimulatedLikelihood::user(std::size_t index, const ModelParams& params) const {
    const PreparedUser& u = users_.at(index);
    require_finite(params);
    const double ll = mixing_ == Mixing::per_user ? user_per_user(u, params) : user_per_observation(u, params);
    if (ll == neg_inf || std::isnan(ll)) throw Error("user " + u.user_id + ": simulated likelihood is zero");
    return ll;
}

std::vector<double> SimulatedLikelihood::per_user(const ModelParams& params) const {
    std::vector<double> out(users_.size());
    parallel_for(users_.size(), [&](std::size_t i) { out[i] = user(i, params); });
    return out;
}

double SimulatedLikelihood::total(const ModelParams& params) const {
    const auto terms = per_user(params);
    return tree_sum(terms);
}

double total_simulated_loglik(const Dataset& dataset, const ModelParams& params, const CrnStore& crn,
                              std::size_t draws, Mixing mixing) {
    return SimulatedLikelihood(dataset, crn, draws, mixing).total(params);
}

}  // namespace belief_divide
