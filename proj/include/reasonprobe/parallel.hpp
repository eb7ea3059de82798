#pragma once

#include <cstddef>
#include <functional>

namespace reasonprobe {

/// Calls fn(i) for every i in [0, n) from at most `workers` threads. Once an
/// invocation throws, no further indices are started and the first exception
/// is rethrown on the calling thread.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

/// std::thread::hardware_concurrency with a floor of 1.
std::size_t hardware_workers();

}  // namespace reasonprobe
