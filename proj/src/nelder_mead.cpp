#include "belief_divide/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "belief_divide/model.hpp"

namespace belief_divide {

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

double sanitize(double f) { return std::isfinite(f) ? f : std::numeric_limits<double>::infinity(); }

double diameter(const std::vector<Vertex>& simplex) {
    double d = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i) {
        for (std::size_t j = 0; j < simplex[i].x.size(); ++j) {
            d = std::max(d, std::abs(simplex[i].x[j] - simplex[0].x[j]));
        }
    }
    return d;
}

}  // namespace

NelderMeadResult nelder_mead_minimize(const std::function<double(std::span<const double>)>& objective,
                                      std::vector<double> start, const NelderMeadOptions& options) {
    const std::size_t n = start.size();
    if (n == 0) throw Error("cannot optimize over zero parameters");
    std::vector<double> step = options.initial_step;
    if (step.empty()) step.assign(n, 0.1);
    if (step.size() != n) throw Error("initial_step size does not match the parameter count");

    const double dim = static_cast<double>(n);
    const double reflect = 1.0;
    const double expand = options.adaptive ? 1.0 + 2.0 / dim : 2.0;
    const double contract = options.adaptive ? 0.75 - 1.0 / (2.0 * dim) : 0.5;
    const double shrink = options.adaptive ? 1.0 - 1.0 / dim : 0.5;

    NelderMeadResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        return sanitize(objective(x));
    };

    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    simplex.push_back({start, eval(start)});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x = start;
        x[i] += step[i] != 0.0 ? step[i] : 0.1;
        simplex.push_back({x, eval(x)});
    }

    auto order = [&] {
        std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    };
    auto point = [&](const std::vector<double>& centroid, const std::vector<double>& worst, double coef) {
        std::vector<double> x(n);
        for (std::size_t j = 0; j < n; ++j) x[j] = centroid[j] + coef * (centroid[j] - worst[j]);
        return x;
    };

    order();
    std::vector<double> centroid(n);
    while (true) {
        result.diameter = diameter(simplex);
        if (result.diameter < options.x_tolerance) {
            result.converged = true;
            break;
        }
        if (result.evaluations >= options.max_evaluations) break;
        ++result.iterations;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i].x[j];
        }
        for (double& c : centroid) c /= dim;

        Vertex& worst = simplex[n];
        const double f_best = simplex[0].f;
        const double f_second_worst = simplex[n - 1].f;

        auto xr = point(centroid, worst.x, reflect);
        const double fr = eval(xr);
        if (fr < f_best) {
            auto xe = point(centroid, worst.x, reflect * expand);
            const double fe = eval(xe);
            if (fe < fr) {
                worst = {std::move(xe), fe};
            } else {
                worst = {std::move(xr), fr};
            }
        } else if (fr < f_second_worst) {
            worst = {std::move(xr), fr};
        } else {
            bool accepted = false;
            if (fr < worst.f) {
                auto xc = point(centroid, worst.x, reflect * contract);
                const double fc = eval(xc);
                if (fc <= fr) {
                    worst = {std::move(xc), fc};
                    accepted = true;
                }
            } else {
                auto xc = point(centroid, worst.x, -contract);
                const double fc = eval(xc);
                if (fc < worst.f) {
                    worst = {std::move(xc), fc};
                    accepted = true;
                }
            }
            if (!accepted) {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        simplex[i].x[j] = simplex[0].x[j] + shrink * (simplex[i].x[j] - simplex[0].x[j]);
                    }
                    simplex[i].f = eval(simplex[i].x);
                }
            }
        }
        order();
    }
    result.x = simplex[0].x;
    result.value = simplex[0].f;
    return result;
}

}  // namespace belief_divide
