#include <doctest.h>

#include <cmath>

#include "belief_divide/dgp.hpp"
#include "belief_divide/estimation.hpp"
#include "belief_divide/nelder_mead.hpp"
#include "belief_divide/parallel.hpp"

using namespace belief_divide;

namespace {

SimulatedDataset synthetic(std::size_t n, std::int64_t days, std::uint64_t seed) {
    PopulationSpec spec;
    spec.n_users = n;
    spec.horizon_days = days;
    spec.master_seed = seed;
    return simulate_dataset(spec, ModelParams::table4());
}

bool same_result(const EstimationResult& a, const EstimationResult& b) {
    return a.params_hat == b.params_hat && a.loglik == b.loglik && a.n_evaluations == b.n_evaluations &&
           a.converged == b.converged && a.std_errors.size() == b.std_errors.size() &&
           std::equal(a.std_errors.begin(), a.std_errors.end(), b.std_errors.begin(),
                      [](double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); });
}

}  // namespace

TEST_CASE("nelder-mead minimizes smooth functions") {
    auto rosenbrock = [](std::span<const double> x) {
        return 100.0 * (x[1] - x[0] * x[0]) * (x[1] - x[0] * x[0]) + (1.0 - x[0]) * (1.0 - x[0]);
    };
    NelderMeadOptions opt;
    opt.x_tolerance = 1e-8;
    const NelderMeadResult r = nelder_mead_minimize(rosenbrock, {-1.2, 1.0}, opt);
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));

    auto bowl = [](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += (j + 1.0) * (x[j] - 0.5 * j) * (x[j] - 0.5 * j);
        return s;
    };
    const NelderMeadResult b = nelder_mead_minimize(bowl, std::vector<double>(10, 3.0), opt);
    CHECK(b.converged);
    for (std::size_t j = 0; j < 10; ++j) CHECK(b.x[j] == doctest::Approx(0.5 * j).epsilon(1e-6).scale(1.0));

    opt.max_evaluations = 30;
    const NelderMeadResult capped = nelder_mead_minimize(bowl, std::vector<double>(10, 3.0), opt);
    CHECK_FALSE(capped.converged);
    CHECK(capped.evaluations <= 30);

    auto walled = [](std::span<const double> x) { return x[0] < 0.0 ? NAN : (x[0] - 1.0) * (x[0] - 1.0); };
    opt.max_evaluations = 1000;
    CHECK(nelder_mead_minimize(walled, {0.5}, opt).x[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("hessian standard errors of a gaussian log-likelihood") {
    const std::vector<double> centre{0.3, -1.2, 4.0};
    const std::vector<double> sigma{0.5, 2.0, 0.05};
    auto loglik = [&](std::span<const double> t) {
        double s = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) s -= (t[j] - centre[j]) * (t[j] - centre[j]) / (2 * sigma[j] * sigma[j]);
        return s;
    };
    const StandardErrorResult se = hessian_standard_errors(loglik, centre);
    REQUIRE(se.hessian_positive_definite);
    CHECK(se.method == "hessian");
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(se.std_errors[j] - sigma[j]) < 1e-6);

    auto saddle = [](std::span<const double> t) { return t[0] * t[0] - t[1] * t[1]; };
    const StandardErrorResult bad = hessian_standard_errors(saddle, std::vector<double>{0.0, 0.0});
    CHECK_FALSE(bad.hessian_positive_definite);
    CHECK(std::isnan(bad.std_errors[0]));
}

TEST_CASE("fit contract on a small synthetic panel") {
    const SimulatedDataset sim = synthetic(120, 60, 3);
    const ModelParams truth = ModelParams::table4();
    FitOptions opt;
    opt.draws = 20;
    opt.seed = 5;
    opt.free_parameters = {"c", "alpha0", "gamma0"};
    const EstimationResult r = fit_msl(sim.panels, truth, opt);
    CHECK(r.loglik >= r.initial_loglik);
    CHECK(r.params_hat.v0 == 0.0);
    CHECK(r.params_hat.log_sigma0_sq == 4.0);
    CHECK(r.parameter_names == opt.free_parameters);
    CHECK(r.params_hat.alpha3 == truth.alpha3);
    CHECK(r.n_runs >= 2);

    const CrnStore crn = CrnStore::build(sim.panels, opt.draws, derive_seed(opt.seed, {3}));
    CHECK(std::abs(total_simulated_loglik(sim.panels, r.params_hat, crn, opt.draws) - r.loglik) <= 1e-10);
    CHECK(r.loglik >= total_simulated_loglik(sim.panels, truth, crn, opt.draws) - 1e-6);
    if (r.converged) {
        CHECK(r.std_errors.size() == 3);
        for (double s : r.std_errors) CHECK(s > 0.0);
    }

    set_thread_count(1);
    const EstimationResult again = fit_msl(sim.panels, truth, opt);
    set_thread_count(4);
    const EstimationResult threaded = fit_msl(sim.panels, truth, opt);
    set_thread_count(0);
    CHECK(same_result(r, again));
    CHECK(same_result(r, threaded));
}

TEST_CASE("fit input errors") {
    const SimulatedDataset sim = synthetic(10, 20, 4);
    ModelParams bad = ModelParams::table4();
    bad.v0 = 0.5;
    CHECK_THROWS_AS(fit_msl(sim.panels, bad), Error);
    ModelParams overflow = ModelParams::table4();
    overflow.gamma0 = 900.0;
    FitOptions opt;
    opt.draws = 2;
    CHECK_THROWS_WITH_AS(fit_msl(sim.panels, overflow, opt), doctest::Contains("not finite"), Error);
    opt.free_parameters = {"c", "c"};
    CHECK_THROWS_AS(fit_msl(sim.panels, ModelParams::table4(), opt), Error);
    opt.free_parameters = {"alpha6"};
    CHECK_THROWS_AS(fit_msl(sim.panels, ModelParams::table4(), opt), Error);
    CHECK_THROWS_AS(fit_msl({}, ModelParams::table4(), opt), Error);
}

TEST_CASE("one-parameter fit recovers c") {
    // Short panels keep the simulation bias of the path likelihood small
    // enough for the statistical error to dominate.
    const SimulatedDataset sim = synthetic(2000, 5, 12);
    FitOptions opt;
    opt.seed = 1;
    opt.free_parameters = {"c"};
    opt.draws = 1000;
    const EstimationResult r = fit_msl(sim.panels, ModelParams::table4(), opt);
    CHECK(r.converged);
    CHECK(std::abs(r.params_hat.c - 1.411) < 0.05);

    opt.draws = 100;
    const EstimationResult coarse = fit_msl(sim.panels, ModelParams::table4(), opt);
    CHECK(std::abs(r.params_hat.c - 1.411) < std::abs(coarse.params_hat.c - 1.411));
}

TEST_CASE("standard error of c against replication spread and sample size") {
    FitOptions opt;
    opt.draws = 200;
    opt.free_parameters = {"c"};
    opt.restarts = 1;

    RecoveryConfig config;
    config.population.n_users = 500;
    config.population.horizon_days = 5;
    config.population.master_seed = 77;
    config.n_replications = 16;
    config.fit = opt;
    const RecoveryReport small = monte_carlo_recovery(config);
    REQUIRE(small.parameters.size() == 1);
    const ParameterRecovery& c_small = small.parameters[0];
    CHECK(small.n_converged >= 14);
    CHECK(c_small.mean_std_error > 0.5 * c_small.sd_estimate);
    CHECK(c_small.mean_std_error < 2.0 * c_small.sd_estimate);
    CHECK(std::abs(c_small.bias) < c_small.rmse + 1e-12);

    config.population.n_users = 1000;
    const RecoveryReport large = monte_carlo_recovery(config);
    const double ratio = large.parameters[0].mean_std_error / c_small.mean_std_error;
    CHECK(std::abs(ratio - 1.0 / std::sqrt(2.0)) < 0.2 / std::sqrt(2.0));
}

TEST_CASE("recovery with a single replication") {
    RecoveryConfig config;
    config.population.n_users = 60;
    config.population.horizon_days = 30;
    config.population.master_seed = 9;
    config.fit.draws = 10;
    config.fit.free_parameters = {"c", "alpha0"};
    config.fit.restarts = 0;
    const RecoveryReport report = monte_carlo_recovery(config);
    CHECK(report.replications.size() + report.failures.size() == 1);
    CHECK(report.parameters.size() == 2);
    config.n_replications = 0;
    CHECK_THROWS_AS(monte_carlo_recovery(config), Error);
}

TEST_CASE("unidentified classes show up as a flat lambda direction") {
    RecoveryConfig config;
    config.truth.log_delta_alpha0 = std::log(1e-3);
    config.truth.delta_gamma0 = 0.0;
    config.population.n_users = 300;
    config.population.horizon_days = 90;
    config.population.master_seed = 15;
    config.fit.draws = 20;
    config.fit.restarts = 0;
    config.fit.free_parameters = {"lambda", "c", "alpha0", "alpha1", "gamma0"};
    config.n_replications = 1;
    const RecoveryReport report = monte_carlo_recovery(config);
    REQUIRE(report.parameters.size() == 5);
    CHECK(report.parameters[0].name == "lambda");
    CHECK(report.parameters[0].flat_direction);
    for (std::size_t j = 1; j < 5; ++j) CHECK_FALSE(report.parameters[j].flat_direction);
}
