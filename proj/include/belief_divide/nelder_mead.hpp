#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace belief_divide {

struct NelderMeadOptions {
    std::size_t max_evaluations = 20000;
    /// Converged once every vertex lies within this max-norm distance of the best.
    double x_tolerance = 1e-4;
    /// Per-coordinate offsets of the initial simplex; empty means 0.1 everywhere.
    std::vector<double> initial_step;
    /// Dimension-dependent coefficients (Gao & Han); classic 1/2/0.5/0.5 otherwise.
    bool adaptive = true;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
    std::size_t iterations = 0;
    double diameter = 0.0;
    bool converged = false;
};

/// Minimizes `objective` with the Nelder-Mead simplex method. Non-finite
/// objective values are treated as +infinity.
NelderMeadResult nelder_mead_minimize(const std::function<double(std::span<const double>)>& objective,
                                      std::vector<double> start, const NelderMeadOptions& options);

}  // namespace belief_divide
