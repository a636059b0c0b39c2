#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace chainexit
{

//! Worker count used when the caller asks for 0.
inline std::size_t default_threads()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

//---------------------------------------------------------------------------//
/*!
 * Split [0, n) into contiguous ranges, one per worker, and call
 * body(begin, end) on each. Results must be written by index so that the
 * outcome does not depend on the worker count.
 */
template<class Body>
void parallel_ranges(std::size_t n, std::size_t threads, Body&& body)
{
    if (threads == 0)
        threads = default_threads();
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1)
    {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w)
    {
        std::size_t begin = n * w / threads;
        std::size_t end = n * (w + 1) / threads;
        pool.emplace_back([&, w, begin, end] {
            try
            {
                body(begin, end);
            }
            catch (...)
            {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
    {
        if (e)
            std::rethrow_exception(e);
    }
}

}  // namespace chainexit
