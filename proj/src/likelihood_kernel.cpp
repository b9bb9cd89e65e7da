#include "likelihood_kernel.hpp"

#include <algorithm>
#include <cmath>

namespace belief_divide::detail {

namespace {

// log p = min(x, 0) - log1p(exp(-|x|)), log(1 - p) = min(-x, 0) - log1p(exp(-|x|)).
inline double choice_terms(double x, double n_gpt, double n_other) {
    const double l = std::log1p(std::exp(-std::abs(x)));
    return n_gpt * (std::min(x, 0.0) - l) + n_other * (std::min(-x, 0.0) - l);
}

}  // namespace

void accumulate_choice_terms(const double* __restrict usage_z, const double* __restrict news_z, std::size_t n,
                             double offset, double usage_scale, double news_scale, double n_gpt, double n_other,
                             double* __restrict ll) {
#pragma omp simd
    for (std::size_t r = 0; r < n; ++r) {
        ll[r] += choice_terms(offset + usage_scale * usage_z[r] + news_scale * news_z[r], n_gpt, n_other);
    }
}

void accumulate_choice_terms(const double* __restrict usage_z, std::size_t n, double offset, double usage_scale,
                             double n_gpt, double n_other, double* __restrict ll) {
#pragma omp simd
    for (std::size_t r = 0; r < n; ++r) {
        ll[r] += choice_terms(offset + usage_scale * usage_z[r], n_gpt, n_other);
    }
}

}  // namespace belief_divide::detail
