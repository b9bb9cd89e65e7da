#pragma once

#include <cmath>
#include <vector>

#include "belief_divide/model.hpp"

namespace oracles {

/// Posterior mean and variance of a normal prior times normal signal
/// likelihoods, by brute-force integration on a fine grid over [-60, 60].
inline belief_divide::Belief grid_posterior(const belief_divide::Belief& prior, const std::vector<double>& usage,
                                            const std::vector<double>& news, double sigma_s_sq, double sigma_n_sq) {
    const double lo = -60.0, hi = 60.0;
    const int n = 200001;
    const double h = (hi - lo) / (n - 1);
    std::vector<double> logp(n);
    double peak = -INFINITY;
    for (int k = 0; k < n; ++k) {
        const double t = lo + k * h;
        double lp = -(t - prior.mean) * (t - prior.mean) / (2.0 * prior.variance);
        for (double x : usage) lp -= (x - t) * (x - t) / (2.0 * sigma_s_sq);
        for (double y : news) lp -= (y - t) * (y - t) / (2.0 * sigma_n_sq);
        logp[k] = lp;
        peak = std::max(peak, lp);
    }
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double t = lo + k * h;
        const double w = std::exp(logp[k] - peak);
        z += w;
        m1 += w * t;
        m2 += w * t * t;
    }
    const double mean = m1 / z;
    return {mean, m2 / z - mean * mean};
}

}  // namespace oracles
