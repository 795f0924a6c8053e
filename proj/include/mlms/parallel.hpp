#pragma once

#include <cstddef>
#include <exception>
#include <optional>
#include <type_traits>
#include <vector>

namespace mlms {

/// How independent trials are scheduled. Both produce identical results:
/// every trial draws from its own substream and writes its own slot.
enum class Execution { serial, parallel };

/// Evaluates `fn(i)` for i in [0, n) and returns the results in index order.
/// The serial path is the reference; the parallel path distributes indices
/// over OpenMP threads. If several trials throw, the exception of the lowest
/// index is rethrown, so error reporting is schedule-independent too.
template <class Fn>
auto map_indexed(std::size_t n, Fn&& fn, Execution exec = Execution::parallel)
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>>
{
    using R = std::invoke_result_t<Fn&, std::size_t>;
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);

    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < count; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            try {
                slots[idx].emplace(fn(idx));
            } catch (...) {
                errors[idx] = std::current_exception();
            }
        }
    }

    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace mlms
