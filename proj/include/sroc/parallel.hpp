#pragma once

#include <cstddef>
#include <functional>

namespace sroc {

// Worker count from SROC_WORKERS, else the hardware concurrency (at least 1).
std::size_t default_worker_count();

// Runs body(i) for i in [0, n) on up to `workers` threads. Each index runs exactly
// once; results must be written to per-index slots for deterministic output.
// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace sroc
