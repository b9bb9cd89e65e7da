#pragma once

#include <cstddef>

namespace belief_divide::detail {

/// ll[r] += n_gpt * log p_r + n_other * log(1 - p_r), where
/// p_r = logistic(offset + usage_scale * usage_z[r] + news_scale * news_z[r]).
/// Compiled with vector math enabled; do not call with non-finite scalars.
void accumulate_choice_terms(const double* usage_z, const double* news_z, std::size_t n, double offset,
                             double usage_scale, double news_scale, double n_gpt, double n_other, double* ll);

/// Same as above without a news component.
void accumulate_choice_terms(const double* usage_z, std::size_t n, double offset, double usage_scale, double n_gpt,
                             double n_other, double* ll);

}  // namespace belief_divide::detail
