#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace belief_divide {

/// Worker cap for library-internal parallel loops. 0 means hardware concurrency.
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs body(i) for i in [0, n) across the configured workers. Each index is
/// processed exactly once; callers write results into per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Pairwise sum in a fixed tree order, independent of worker count.
double tree_sum(std::span<const double> values);

}  // namespace belief_divide
