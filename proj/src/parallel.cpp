#include "rgam/parallel.hpp"

#include <limits>
#include <omp.h>

namespace rgam {

void for_each_index(Execution exec, std::size_t count, const std::function<void(std::size_t)>& body) {
    if (exec == Execution::serial || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::exception_ptr first_error;
    std::size_t first_index = std::numeric_limits<std::size_t>::max();
    std::mutex guard;
    const auto n = static_cast<long long>(count);

#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < n; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(guard);
            if (static_cast<std::size_t>(i) < first_index) {
                first_index = static_cast<std::size_t>(i);
                first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

int parallel_threads() {
    return omp_get_max_threads();
}

} // namespace rgam
