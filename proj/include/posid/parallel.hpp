#pragma once

#include <cstddef>
#include <functional>

namespace posid {

/// Number of hardware threads, at least 1.
unsigned default_workers();

/// Calls body(i) for i in [0, count) on up to `workers` threads. The first
/// exception thrown by any call is rethrown after all threads finish.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace posid
