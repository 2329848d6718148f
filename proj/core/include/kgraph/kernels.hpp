#pragma once

#include <span>
#include <string>

#include "kgraph/common.hpp"
#include "kgraph/dataset.hpp"
#include "kgraph/rng.hpp"

namespace kgraph {

enum class KernelFamily { gaussian, exponential, laplacian, rational_quadratic };

const char* kernel_family_name(KernelFamily family);
KernelFamily kernel_family_from_name(const std::string& name);

// Positive-definite similarity kernels on point pairs, all mapping into (0, 1]
// with k(x, x) = 1:
//   gaussian             exp(-|x-y|_2^2 / sigma^2)
//   exponential          exp(-|x-y|_2 / sigma)
//   laplacian            exp(-|x-y|_1 / sigma)
//   rational_quadratic   (1 + |x-y|_2^2 / sigma^2)^(-beta)
// tau is the caller's promise that every pairwise value in the dataset at
// hand is at least tau; sample sizes across the library are budgeted from it.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double sigma = 1.0;
  double beta = 1.0;  // rational_quadratic only
  double tau = 0.5;
};

void validate_spec(const KernelSpec& spec);

// Single counted entry point for kernel evaluations.
double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y);

namespace detail {
// Same value, not counted. KDE oracle internals use this; their cost is
// accounted on the kde_queries line instead.
double kernel_eval_uncounted(const KernelSpec& spec, std::span<const double> x,
                             std::span<const double> y);
}  // namespace detail

// Scale c with k(x, y)^2 == k(c*x, c*y) for every pair. Exists for the
// gaussian, exponential and laplacian families; rational_quadratic has no
// such point scaling and raises input_error.
double squared_kernel_scale(const KernelSpec& spec);

// Spec for the scaled dataset: same family and bandwidth, tau becomes tau^2.
KernelSpec squared_spec(const KernelSpec& spec);

// Exact minimum pairwise kernel value, O(n^2). Reference-grade; used to
// measure the true tau of generated datasets.
double brute_min_pair_weight(const Dataset& data, const KernelSpec& spec);

// Median pairwise distance in the family's base metric (l1 for laplacian,
// l2 otherwise). Exact for n <= 10^4; a seeded 10^5-pair subsample above.
double median_bandwidth(const Dataset& data, KernelFamily family,
                        RngStream& rng);

}  // namespace kgraph
