#pragma once

#include <cstddef>
#include <functional>

namespace stepdecay {

/// Worker count used by parallel_for. Defaults to the number of logical cores.
std::size_t thread_count() noexcept;
void set_thread_count(std::size_t n) noexcept;

/// Runs body(i) for i in [0, n). Each index is processed exactly once; callers
/// write into pre-sized, index-addressed storage so results never depend on
/// scheduling. Nested calls from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stepdecay
