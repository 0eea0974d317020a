#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>

namespace rgam {

/// How independent work items (folds, spline features, replicates, bench
/// cells) are scheduled. Both modes write every result to its own slot and
/// reduce in index order, so they produce bit-identical output.
enum class Execution { serial, parallel };

/// Runs body(i) for i in [0, count). In parallel mode the loop is an OpenMP
/// dynamic schedule; the first exception thrown (lowest index) is rethrown
/// after the loop.
void for_each_index(Execution exec, std::size_t count, const std::function<void(std::size_t)>& body);

/// Threads used by Execution::parallel (omp_get_max_threads()).
int parallel_threads();

} // namespace rgam
