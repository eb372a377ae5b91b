#ifndef BALANS_PARALLEL_HPP
#define BALANS_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace balans {

/**
 * Run `fun(start, end)` over contiguous chunks of `[0, count)` using up to `threads` workers.
 * The first exception thrown by any worker is rethrown on the calling thread.
 */
template <class Function>
void parallel_for(std::size_t count, int threads, Function fun) {
    std::size_t nworkers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
    if (nworkers <= 1) {
        if (count) {
            fun(std::size_t(0), count);
        }
        return;
    }

    const std::size_t per = (count + nworkers - 1) / nworkers;
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(nworkers);
    workers.reserve(nworkers);
    for (std::size_t w = 0; w < nworkers; ++w) {
        const std::size_t start = w * per, end = std::min(count, start + per);
        if (start >= end) {
            break;
        }
        workers.emplace_back([&, w, start, end]() {
            try {
                fun(start, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}

#endif
