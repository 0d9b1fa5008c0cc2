#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace cureweib {

// Worker cap: CUREWEIB_THREADS if set and positive, else hardware concurrency.
int worker_count();

// Runs body(i) for i in [0, n) on up to `threads` workers. Exceptions thrown by
// body are rethrown (first one wins) after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// splitmix64 step; used to derive independent per-replicate seeds.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace cureweib
