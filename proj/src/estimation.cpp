#include "belief_divide/estimation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "belief_divide/nelder_mead.hpp"
#include "belief_divide/parallel.hpp"
#include "belief_divide/rng.hpp"

namespace belief_divide {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::vector<std::size_t> free_indices(const std::vector<std::string>& names) {
    std::vector<std::size_t> idx;
    if (names.empty()) {
        idx.resize(ModelParams::n_free);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return idx;
    }
    for (const auto& name : names) {
        const std::size_t i = free_index(name);
        if (std::find(idx.begin(), idx.end(), i) != idx.end()) throw Error("duplicate free parameter '" + name + "'");
        idx.push_back(i);
    }
    return idx;
}

/// Maps a subvector of free parameters onto a full parameter set.
class ParameterMap {
public:
    ParameterMap(const ModelParams& base, std::vector<std::size_t> indices)
        : base_(base), full_(base.free_vector()), indices_(std::move(indices)) {}

    ModelParams expand(std::span<const double> sub) const {
        ModelParams::FreeVector full = full_;
        for (std::size_t k = 0; k < indices_.size(); ++k) full[indices_[k]] = sub[k];
        return base_.with_free(full);
    }
    std::vector<double> project(const ModelParams& p) const {
        const auto full = p.free_vector();
        std::vector<double> sub;
        for (std::size_t i : indices_) sub.push_back(full[i]);
        return sub;
    }
    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (std::size_t i : indices_) out.emplace_back(ModelParams::free_names()[i]);
        return out;
    }
    std::size_t size() const { return indices_.size(); }
    const std::vector<std::size_t>& indices() const { return indices_; }

private:
    ModelParams base_;
    ModelParams::FreeVector full_;
    std::vector<std::size_t> indices_;
};

void check_normalization(const ModelParams& p) {
    if (p.v0 != 0.0 || p.log_sigma0_sq != 4.0) {
        throw Error("estimation requires the normalization v0 = 0, log_sigma0_sq = 4");
    }
}

/// Log-likelihood that maps errors (overflowing variances, zero likelihoods)
/// to -infinity so the simplex treats them as infeasible.
double safe_total(const SimulatedLikelihood& lik, const ModelParams& p) {
    try {
        return lik.total(p);
    } catch (const Error&) {
        return -std::numeric_limits<double>::infinity();
    }
}

double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) return nan;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (xs.size() - 1));
}

std::uint64_t crn_seed(std::uint64_t seed) { return derive_seed(seed, {static_cast<std::uint64_t>(StreamTag::crn)}); }

EstimationResult fit_with_crn(const Dataset& dataset, const ModelParams& init, const FitOptions& options,
                              const CrnStore& crn, bool standard_errors_wanted);

}  // namespace

const ModelParams::FreeVector& default_simplex_steps() {
    // lambda, c, alpha0, log_delta_alpha0, alpha1..5, log_sigma_n_sq,
    // gamma0, delta_gamma0, gamma1..5
    static const ModelParams::FreeVector steps = {0.2, 0.1, 0.1, 0.1,  0.1, 0.005, 0.1, 0.1, 0.1,
                                                  0.3, 0.3, 0.3, 0.2, 0.01, 0.2,   0.2, 0.2};
    return steps;
}

StandardErrorResult hessian_standard_errors(const std::function<double(std::span<const double>)>& loglik,
                                            std::span<const double> theta, double relative_step) {
    const std::size_t n = theta.size();
    std::vector<double> h(n);
    for (std::size_t j = 0; j < n; ++j) h[j] = relative_step * std::max(std::abs(theta[j]), 1.0);

    std::vector<double> x(theta.begin(), theta.end());
    auto at = [&](std::size_t j, double dj, std::size_t k, double dk) {
        x[j] += dj;
        x[k] += dk;
        const double f = loglik(x);
        x[j] -= dj;
        x[k] -= dk;
        return f;
    };
    const double f0 = loglik(x);
    Eigen::MatrixXd hess(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        hess(j, j) = (at(j, h[j], j, 0.0) - 2.0 * f0 + at(j, -h[j], j, 0.0)) / (h[j] * h[j]);
        for (std::size_t k = 0; k < j; ++k) {
            const double v = (at(j, h[j], k, h[k]) - at(j, h[j], k, -h[k]) - at(j, -h[j], k, h[k]) +
                              at(j, -h[j], k, -h[k])) /
                             (4.0 * h[j] * h[k]);
            hess(j, k) = v;
            hess(k, j) = v;
        }
    }

    StandardErrorResult out;
    out.hessian.assign(hess.data(), hess.data() + n * n);
    out.std_errors.assign(n, nan);
    out.method = "none";
    const Eigen::MatrixXd info = -hess;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (hess.allFinite() && llt.info() == Eigen::Success) {
        const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(n, n));
        bool ok = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (!(cov(j, j) > 0.0)) ok = false;
        }
        if (ok) {
            for (std::size_t j = 0; j < n; ++j) out.std_errors[j] = std::sqrt(cov(j, j));
            out.hessian_positive_definite = true;
            out.method = "hessian";
        }
    }
    return out;
}

StandardErrorResult standard_errors(const Dataset& dataset, const ModelParams& params_hat, const CrnStore& crn,
                                    const FitOptions& options) {
    const ParameterMap map(params_hat, free_indices(options.free_parameters));
    const SimulatedLikelihood lik(dataset, crn, options.draws, options.mixing);
    auto objective = [&](std::span<const double> sub) { return safe_total(lik, map.expand(sub)); };
    StandardErrorResult out = hessian_standard_errors(objective, map.project(params_hat), options.hessian_relative_step);
    if (out.hessian_positive_definite || options.bootstrap_replications == 0) return out;

    // Bootstrap fallback: refit on user-resampled datasets starting from the
    // estimate, each with its own CRN store.
    const std::size_t b_count = options.bootstrap_replications;
    std::vector<std::vector<double>> estimates(b_count);
    std::vector<bool> ok(b_count, false);
    FitOptions refit = options;
    refit.restarts = 0;
    parallel_for(b_count, [&](std::size_t b) {
        RngStream rng(options.seed, {static_cast<std::uint64_t>(StreamTag::bootstrap), b});
        Dataset resampled;
        resampled.reserve(dataset.size());
        for (std::size_t i = 0; i < dataset.size(); ++i) resampled.push_back(dataset[rng.below(dataset.size())]);
        try {
            const CrnStore boot_crn = CrnStore::build(resampled, options.draws, derive_seed(options.seed, {b}));
            const EstimationResult r = fit_with_crn(resampled, params_hat, refit, boot_crn, false);
            estimates[b] = map.project(r.params_hat);
            ok[b] = true;
        } catch (const Error&) {
        }
    });
    std::vector<std::vector<double>> columns(map.size());
    for (std::size_t b = 0; b < b_count; ++b) {
        if (!ok[b]) continue;
        for (std::size_t j = 0; j < map.size(); ++j) columns[j].push_back(estimates[b][j]);
    }
    for (std::size_t j = 0; j < map.size(); ++j) out.std_errors[j] = sample_sd(columns[j]);
    out.method = "bootstrap";
    return out;
}

namespace {

EstimationResult fit_with_crn(const Dataset& dataset, const ModelParams& init, const FitOptions& options,
                              const CrnStore& crn, bool standard_errors_wanted) {
    const auto start_time = std::chrono::steady_clock::now();
    const ParameterMap map(init, free_indices(options.free_parameters));
    const SimulatedLikelihood lik(dataset, crn, options.draws, options.mixing);

    EstimationResult result;
    result.parameter_names = map.names();
    result.initial_loglik = safe_total(lik, init);
    if (!std::isfinite(result.initial_loglik)) throw Error("log-likelihood at the initial parameters is not finite");

    NelderMeadOptions nm;
    nm.max_evaluations = options.max_evaluations;
    nm.x_tolerance = options.tolerance;
    for (std::size_t i : map.indices()) nm.initial_step.push_back(default_simplex_steps()[i]);
    const std::vector<double> base_step = nm.initial_step;

    auto objective = [&](std::span<const double> sub) { return -safe_total(lik, map.expand(sub)); };

    std::vector<double> best_x = map.project(init);
    double best_f = -result.initial_loglik;
    double previous_run = std::numeric_limits<double>::infinity();
    bool last_converged = false;
    bool agreed = false;
    RngStream restart_rng(options.seed, {static_cast<std::uint64_t>(StreamTag::restart)});
    for (std::size_t run = 0; run <= options.restarts; ++run) {
        if (run > 0) {
            for (std::size_t j = 0; j < base_step.size(); ++j) {
                const double scale = 0.5 + restart_rng.uniform();
                nm.initial_step[j] = (restart_rng.bernoulli(0.5) ? scale : -scale) * base_step[j];
            }
        }
        const NelderMeadResult r = nelder_mead_minimize(objective, best_x, nm);
        result.n_evaluations += r.evaluations;
        ++result.n_runs;
        if (r.value <= best_f) {
            best_f = r.value;
            best_x = r.x;
        }
        last_converged = r.converged;
        agreed = std::abs(r.value - previous_run) < options.restart_agreement;
        previous_run = r.value;
        if (agreed && last_converged) break;
    }

    result.params_hat = map.expand(best_x);
    result.loglik = -best_f;
    result.converged = last_converged && (agreed || options.restarts == 0);
    if (result.params_hat.v0 != init.v0 || result.params_hat.log_sigma0_sq != init.log_sigma0_sq) {
        throw Error("fixed normalization changed during optimization");
    }
    if (result.converged && standard_errors_wanted && options.compute_standard_errors) {
        const StandardErrorResult se = standard_errors(dataset, result.params_hat, crn, options);
        result.std_errors = se.std_errors;
        result.se_method = se.method;
        result.hessian_positive_definite = se.hessian_positive_definite;
    }
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return result;
}

}  // namespace

EstimationResult fit_msl(const Dataset& dataset, const ModelParams& init, const FitOptions& options) {
    check_normalization(init);
    if (dataset.empty()) throw Error("dataset is empty");
    const CrnStore crn = CrnStore::build(dataset, options.draws, crn_seed(options.seed));
    return fit_with_crn(dataset, init, options, crn, true);
}

std::vector<ParameterRecovery> summarize_recovery(const ModelParams& truth,
                                                  std::span<const EstimationResult> replications) {
    std::vector<ParameterRecovery> out;
    if (replications.empty()) return out;
    const auto& names = replications.front().parameter_names;
    const auto truth_vec = truth.free_vector();
    for (std::size_t j = 0; j < names.size(); ++j) {
        ParameterRecovery pr;
        pr.name = names[j];
        const std::size_t fi = free_index(names[j]);
        pr.truth = truth_vec[fi];
        std::vector<double> est;
        std::vector<double> ses;
        std::size_t covered = 0;
        for (const auto& r : replications) {
            if (!r.converged) continue;
            const double e = r.params_hat.free_vector()[fi];
            est.push_back(e);
            if (j < r.std_errors.size() && std::isfinite(r.std_errors[j])) {
                ses.push_back(r.std_errors[j]);
                if (std::abs(e - pr.truth) <= 1.959963984540054 * r.std_errors[j]) ++covered;
            }
        }
        if (est.empty()) {
            pr.mean_estimate = pr.bias = pr.rmse = pr.sd_estimate = pr.mean_std_error = pr.coverage = nan;
        } else {
            pr.mean_estimate = std::accumulate(est.begin(), est.end(), 0.0) / est.size();
            pr.bias = pr.mean_estimate - pr.truth;
            double ss = 0.0;
            for (double e : est) ss += (e - pr.truth) * (e - pr.truth);
            pr.rmse = std::sqrt(ss / est.size());
            pr.sd_estimate = sample_sd(est);
            pr.mean_std_error = ses.empty() ? nan : std::accumulate(ses.begin(), ses.end(), 0.0) / ses.size();
            pr.coverage = ses.empty() ? nan : static_cast<double>(covered) / ses.size();
        }
        out.push_back(pr);
    }
    std::vector<double> se_values;
    for (const auto& pr : out) {
        if (std::isfinite(pr.mean_std_error)) se_values.push_back(pr.mean_std_error);
    }
    if (se_values.size() >= 2) {
        std::sort(se_values.begin(), se_values.end());
        const std::size_t m = se_values.size();
        const double median = m % 2 ? se_values[m / 2] : 0.5 * (se_values[m / 2 - 1] + se_values[m / 2]);
        for (auto& pr : out) pr.flat_direction = std::isfinite(pr.mean_std_error) && pr.mean_std_error > 10.0 * median;
    }
    return out;
}

RecoveryReport monte_carlo_recovery(const RecoveryConfig& config) {
    if (config.n_replications == 0) throw Error("n_replications must be at least 1");
    RecoveryReport report;
    report.truth = config.truth;
    const std::size_t n = config.n_replications;
    std::vector<std::optional<EstimationResult>> results(n);
    std::vector<std::string> errors(n);
    parallel_for(n, [&](std::size_t rep) {
        try {
            PopulationSpec spec = config.population;
            spec.master_seed =
                derive_seed(config.population.master_seed, {static_cast<std::uint64_t>(StreamTag::replication), rep});
            const SimulatedDataset sim = simulate_dataset(spec, config.truth);
            FitOptions fit = config.fit;
            fit.seed = derive_seed(config.fit.seed, {static_cast<std::uint64_t>(StreamTag::replication), rep});
            results[rep] = fit_msl(sim.panels, config.init.value_or(config.truth), fit);
        } catch (const std::exception& e) {
            errors[rep] = "replication " + std::to_string(rep) + ": " + e.what();
        }
    });
    for (std::size_t rep = 0; rep < n; ++rep) {
        if (results[rep]) {
            if (results[rep]->converged) ++report.n_converged;
            report.replications.push_back(std::move(*results[rep]));
        } else {
            report.failures.push_back(errors[rep]);
        }
    }
    report.parameters = summarize_recovery(config.truth, report.replications);
    return report;
}

}  // namespace belief_divide
