#pragma once

#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace kgraph {

// Invalid arguments or broken call contracts. CLI maps this to exit code 2.
struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files and data/parameter inconsistencies (e.g. a declared
// tau that the data visibly violates). CLI maps this to exit code 3.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative method ran out of its iteration budget. CLI exit code 4.
struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Process-wide cost counters. kernel_evaluations counts calls of the public
// kernel_eval entry point, i.e. how many entries of the kernel matrix were
// actually computed. kde_queries counts oracle queries (each node query of a
// multi-level structure counts once). The two are separate cost lines: work
// done inside a KDE oracle is priced per query, not per kernel evaluation.
namespace counters {

inline std::atomic<std::uint64_t> g_kernel_evaluations{0};
inline std::atomic<std::uint64_t> g_kde_queries{0};

inline void add_kernel_evaluations(std::uint64_t k = 1) noexcept {
  g_kernel_evaluations.fetch_add(k, std::memory_order_relaxed);
}

inline void add_kde_query() noexcept {
  g_kde_queries.fetch_add(1, std::memory_order_relaxed);
}

inline std::uint64_t kernel_evaluations() noexcept {
  return g_kernel_evaluations.load(std::memory_order_relaxed);
}

inline std::uint64_t kde_queries() noexcept {
  return g_kde_queries.load(std::memory_order_relaxed);
}

inline void reset() noexcept {
  g_kernel_evaluations.store(0, std::memory_order_relaxed);
  g_kde_queries.store(0, std::memory_order_relaxed);
}

}  // namespace counters

}  // namespace kgraph
