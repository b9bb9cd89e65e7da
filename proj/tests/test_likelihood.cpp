#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "belief_divide/dgp.hpp"
#include "belief_divide/likelihood.hpp"
#include "belief_divide/parallel.hpp"

using namespace belief_divide;

namespace {

UserPanel make_panel(std::string id, std::vector<DayObservation> obs) {
    UserPanel p;
    p.user_id = std::move(id);
    p.profile = {true, 30, false, true, false, LatentClass::class1};
    p.observations = std::move(obs);
    return p;
}

SimulatedDataset small_dataset(std::size_t n, std::int64_t days, std::uint64_t seed, double news = 0.01) {
    PopulationSpec spec;
    spec.n_users = n;
    spec.horizon_days = days;
    spec.news_process = CountProcess::poisson(news);
    spec.master_seed = seed;
    return simulate_dataset(spec, ModelParams::table4());
}

double naive_log_sigmoid(double x) { return -std::log1p(std::exp(-x)); }

}  // namespace

TEST_CASE("CRN store shape and reproducibility") {
    const Dataset one{make_panel("a", {{0, 5, 3, 1}})};
    const CrnStore crn = CrnStore::build(one, 1, 42);
    CHECK(crn.usage_slots(0) == 3);
    CHECK(crn.news_slots(0) == 1);
    CHECK(crn.usage_innovations(0, 0).size() == 3);
    CHECK(crn.all_usage().size() == 3);
    CHECK(CrnStore::build(one, 1, 42) == crn);
    CHECK_FALSE(CrnStore::build(one, 1, 43) == crn);
    CHECK_THROWS_AS(CrnStore::build(one, 0, 42), Error);
}

TEST_CASE("CRN innovations are standard normal") {
    const SimulatedDataset sim = small_dataset(200, 60, 5);
    const CrnStore crn = CrnStore::build(sim.panels, 20, 9);
    const auto z = crn.all_usage();
    REQUIRE(z.size() >= 100000);
    const double n = static_cast<double>(z.size());
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / n;
    double var = 0.0;
    for (double v : z) var += (v - mean) * (v - mean);
    var /= n - 1.0;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("conditional path log-likelihood") {
    const ModelParams p = ModelParams::table4();
    const std::vector<double> none;

    const UserPanel idle = make_panel("idle", {{0, 0, 0, 0}, {1, 0, 0, 0}});
    CHECK(conditional_path_loglik(idle, LatentClass::class1, p, none, none) == 0.0);

    const UserPanel single = make_panel("single", {{0, 1, 0, 0}});
    CHECK(conditional_path_loglik(single, LatentClass::class2, p, none, none) ==
          doctest::Approx(std::log(0.80392)).epsilon(1e-5));

    // Two days, one use on day 0: day 1 is scored at the updated belief.
    const UserPanel two = make_panel("two", {{0, 2, 1, 0}, {1, 3, 2, 0}});
    const std::vector<double> z{0.7, 0.0, 0.0};
    UserProfile prof = two.profile;
    prof.latent_class = LatentClass::class2;
    const double v = -1.560 + std::exp(0.976) - 0.468 - 0.021 * 30 - 0.208;
    const double s2 = std::exp(4.900 + 2.031 - 0.256 + 0.029 * 30 - 0.481);
    const double signal = v + std::sqrt(s2) * 0.7;
    const double prec = std::exp(-4.0) + 1.0 / s2;
    const double m1 = (signal / s2) / prec;
    const double want = naive_log_sigmoid(-1.411) + naive_log_sigmoid(1.411) + 2.0 * naive_log_sigmoid(m1 - 1.411) +
                        naive_log_sigmoid(1.411 - m1);
    CHECK(conditional_path_loglik(two, LatentClass::class2, p, z, none) == doctest::Approx(want).epsilon(1e-12));

    CHECK_THROWS_AS(conditional_path_loglik(two, LatentClass::class2, p, std::vector<double>{0.7, 0.1}, none), Error);
}

TEST_CASE("degenerate class mixture") {
    ModelParams p = ModelParams::table4();
    p.lambda = 700.0;
    const SimulatedDataset sim = small_dataset(3, 40, 8);
    const CrnStore crn = CrnStore::build(sim.panels, 1, 1);
    for (std::size_t i = 0; i < sim.panels.size(); ++i) {
        const double want = conditional_path_loglik(sim.panels[i], LatentClass::class2, p, crn.usage_innovations(i, 0),
                                                    crn.news_innovations(i, 0));
        CHECK(user_simulated_loglik(sim.panels[i], i, p, crn, 1) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("one-day panel without uses: mixing modes agree") {
    const Dataset d{make_panel("a", {{0, 7, 0, 0}})};
    const CrnStore crn = CrnStore::build(d, 5, 2);
    const ModelParams p = ModelParams::table4();
    CHECK(user_simulated_loglik(d[0], 0, p, crn, 5, Mixing::per_user) ==
          doctest::Approx(user_simulated_loglik(d[0], 0, p, crn, 5, Mixing::per_observation)).epsilon(1e-15));
}

TEST_CASE("identical classes collapse the mixture") {
    ModelParams p = ModelParams::table4();
    p.log_delta_alpha0 = -60.0;
    p.delta_gamma0 = 0.0;
    const SimulatedDataset sim = small_dataset(4, 50, 21);
    const CrnStore crn = CrnStore::build(sim.panels, 1, 3);
    for (double lambda : {-3.0, 0.0, 2.5}) {
        p.lambda = lambda;
        for (std::size_t i = 0; i < sim.panels.size(); ++i) {
            const double cond = conditional_path_loglik(sim.panels[i], LatentClass::class1, p,
                                                        crn.usage_innovations(i, 0), crn.news_innovations(i, 0));
            CHECK(std::abs(user_simulated_loglik(sim.panels[i], i, p, crn, 1, Mixing::per_user) - cond) < 1e-10);
            CHECK(std::abs(user_simulated_loglik(sim.panels[i], i, p, crn, 1, Mixing::per_observation) - cond) <
                  1e-10);
        }
    }
}

TEST_CASE("per-user mixing matches a hand-rolled average") {
    const ModelParams p = ModelParams::table4();
    const SimulatedDataset sim = small_dataset(2, 30, 13);
    const std::size_t R = 7;
    const CrnStore crn = CrnStore::build(sim.panels, R, 4);
    const double pi2 = 1.0 / (1.0 + std::exp(0.384));
    for (std::size_t i = 0; i < sim.panels.size(); ++i) {
        // Small panels keep exp() in range, so the plain average is exact enough.
        long double sum = 0.0L;
        for (std::size_t r = 0; r < R; ++r) {
            const auto uz = crn.usage_innovations(i, r);
            const auto nz = crn.news_innovations(i, r);
            sum += (1.0L - pi2) * std::exp(static_cast<long double>(
                                      conditional_path_loglik(sim.panels[i], LatentClass::class1, p, uz, nz))) +
                   pi2 * std::exp(static_cast<long double>(
                             conditional_path_loglik(sim.panels[i], LatentClass::class2, p, uz, nz)));
        }
        const double want = static_cast<double>(std::log(sum / R));
        CHECK(user_simulated_loglik(sim.panels[i], i, p, crn, R) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("fast evaluator matches the reference route") {
    const SimulatedDataset sim = small_dataset(25, 183, 17, 0.3);
    const std::size_t R = 12;
    const CrnStore crn = CrnStore::build(sim.panels, R, 6);
    ModelParams other = ModelParams::table4();
    other.c = 0.9;
    other.gamma0 = 3.0;
    other.log_sigma_n_sq = -0.5;
    for (Mixing mixing : {Mixing::per_user, Mixing::per_observation}) {
        const SimulatedLikelihood lik(sim.panels, crn, R, mixing);
        for (const ModelParams& p : {ModelParams::table4(), other}) {
            double worst = 0.0;
            for (std::size_t i = 0; i < sim.panels.size(); ++i) {
                const double want = user_simulated_loglik(sim.panels[i], i, p, crn, R, mixing);
                worst = std::max(worst, std::abs(lik.user(i, p) - want) / std::max(1.0, std::abs(want)));
            }
            CHECK(worst < 1e-10);
        }
    }
}

TEST_CASE("total log-likelihood: reductions and additivity") {
    const SimulatedDataset sim = small_dataset(20, 60, 23);
    const ModelParams p = ModelParams::table4();
    const CrnStore crn = CrnStore::build(sim.panels, 10, 7);

    const Dataset first{sim.panels[0]};
    const CrnStore crn1 = CrnStore::build(first, 10, 7);
    CHECK(total_simulated_loglik(first, p, crn1, 10) ==
          doctest::Approx(user_simulated_loglik(first[0], 0, p, crn1, 10)).epsilon(1e-13));
    CHECK(crn1.usage_innovations(0, 3)[0] == crn.usage_innovations(0, 3)[0]);

    Dataset doubled = sim.panels;
    doubled.insert(doubled.end(), sim.panels.begin(), sim.panels.end());
    const CrnStore crn2 = CrnStore::build(doubled, 10, 7);
    CHECK(total_simulated_loglik(doubled, p, crn2, 10) == 2.0 * total_simulated_loglik(sim.panels, p, crn, 10));

    Dataset reversed(sim.panels.rbegin(), sim.panels.rend());
    const CrnStore crn_r = CrnStore::build(reversed, 10, 7);
    CHECK(total_simulated_loglik(reversed, p, crn_r, 10) ==
          doctest::Approx(total_simulated_loglik(sim.panels, p, crn, 10)).epsilon(1e-13));

    set_thread_count(1);
    const double serial = total_simulated_loglik(sim.panels, p, crn, 10);
    set_thread_count(4);
    const double parallel = total_simulated_loglik(sim.panels, p, crn, 10);
    set_thread_count(0);
    CHECK(serial == parallel);
}

TEST_CASE("user likelihoods are probabilities") {
    const SimulatedDataset sim = small_dataset(30, 30, 29);
    const CrnStore crn = CrnStore::build(sim.panels, 5, 1);
    const SimulatedLikelihood lik(sim.panels, crn);
    for (double ll : lik.per_user(ModelParams::table4())) {
        CHECK(ll <= 0.0);
        CHECK(std::isfinite(ll));
    }
}

TEST_CASE("objective is continuous in every parameter under fixed CRN") {
    const SimulatedDataset sim = small_dataset(30, 90, 31);
    const CrnStore crn = CrnStore::build(sim.panels, 10, 2);
    const SimulatedLikelihood lik(sim.panels, crn);
    const ModelParams base = ModelParams::table4();
    const double ll0 = lik.total(base);
    for (std::size_t j = 0; j < ModelParams::n_free; ++j) {
        auto v = base.free_vector();
        v[j] += 1e-6;
        CHECK(std::abs(lik.total(base.with_free(v)) - ll0) < 1.0);
    }
}

TEST_CASE("zero likelihoods are reported by user id") {
    ModelParams p = ModelParams::table4();
    p.c = std::numeric_limits<double>::infinity();
    const Dataset d{make_panel("heavy", {{0, 5, 5, 0}})};
    const CrnStore crn = CrnStore::build(d, 2, 1);
    CHECK_THROWS_WITH_AS(user_simulated_loglik(d[0], 0, p, crn, 2), doctest::Contains("heavy"), Error);
    const SimulatedLikelihood lik(d, crn);
    CHECK_THROWS_WITH_AS(lik.total(p), doctest::Contains("not finite"), Error);
}

TEST_CASE("log_sum_exp") {
    const std::vector<double> v{-1000.0, -1000.0};
    CHECK(log_sum_exp(v) == doctest::Approx(-1000.0 + std::log(2.0)));
    CHECK_THROWS_AS(log_sum_exp(std::span<const double>{}), Error);
    CHECK(mixing_from_string("per_observation") == Mixing::per_observation);
    CHECK_THROWS_AS(mixing_from_string("global"), Error);
}
