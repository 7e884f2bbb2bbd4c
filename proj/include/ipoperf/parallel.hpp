#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ipoperf
{

// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware concurrency).
// Each index runs exactly once; the first exception is rethrown after all workers stop.
template <typename Body>
void parallel_for(int count, int threads, Body &&body)
{
    if (count <= 0)
        return;
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const int workers = std::clamp(threads > 0 ? threads : hw, 1, count);
    if (workers == 1)
    {
        for (int i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (int i = next++; i < count; i = next++)
        {
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(run);
    }
    if (error)
        std::rethrow_exception(error);
}

}  // namespace ipoperf
