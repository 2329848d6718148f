#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "kgraph/dataset.hpp"
#include "kgraph/kde.hpp"
#include "kgraph/kernels.hpp"
#include "kgraph/rng.hpp"
#include "kgraph/sampling.hpp"
#include "kgraph/sparsify.hpp"

namespace kgraph {

struct L2TestResult {
  bool accept = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::size_t samples = 0;  // per side
};

// Closeness test between two distributions from r samples of each, deciding
// ||p - q||_2^2 <= xi (accept) versus >= 4 xi (reject). The statistic
// (C_p + C_q)/C(r,2) - 2M/r^2, with C the within-set collision pair counts
// and M the cross-set match count, is unbiased for ||p - q||_2^2; the
// midpoint 2.5 xi splits the promise gap. delta is the failure budget the
// caller used when sizing r and does not change the decision rule.
L2TestResult l2_distance_test(std::span<const std::size_t> samples_p,
                              std::span<const std::size_t> samples_q,
                              double xi, double delta);

struct LocalClusterOptions {
  // r = ceil(c_samples * sqrt(n k / (eps tau)) * ln(1/eps)) endpoint samples
  // per start vertex unless overridden.
  double c_samples = 2.0;
  std::size_t r_override = 0;
  // Walk length, default ceil(3 ln n / phi_in^2).
  std::size_t t_override = 0;
  // Hard cap on r; a configuration demanding more reports the required count
  // instead of silently running for hours.
  std::size_t max_samples = 200000;
};

struct ClusterVerdict {
  bool same_cluster = false;
  double statistic = 0.0;  // estimate of ||p_u^t - p_w^t||_2^2, can dip below 0
  double threshold = 0.0;  // 2.5 / (7n)
  std::size_t samples = 0;
  std::size_t walk_length = 0;
};

// Same-cluster test: runs r exact-neighbor walks of length t from u and from
// w and compares endpoint distributions with the l2 tester at xi = 1/(7n).
ClusterVerdict local_cluster_test(const MultiLevelKde& tree,
                                  const DegreeTable& table, std::size_t u,
                                  std::size_t w, double phi_in, std::size_t k,
                                  double eps, double tau, RngStream& rng,
                                  LocalClusterOptions options = {});

struct ClusteringOptions {
  OracleConfig oracle = {};
  SparsifyOptions sparsify = {};
  // Cache exact per-node KDE answers; costs about 16 n^2 bytes on a full
  // tree, a big win for the walk-heavy paths at desk scale.
  bool memoize = true;
  std::size_t block_extra = 4;  // subspace iteration block is k + extra
  std::size_t max_iters = 500;
  double tol = 1e-6;
  std::size_t kmeans_restarts = 5;
  std::size_t kmeans_iters = 100;
};

struct ClusteringResult {
  std::vector<std::size_t> labels;  // n entries in [0, k)
  // Bottom-k eigenvector estimates of the sparsifier's normalized Laplacian,
  // orthonormal columns; k-means runs on the row-normalized copy.
  Eigen::MatrixXd embedding;
  double inertia = 0.0;
  std::vector<double> eigenvalues;  // matching Ritz values, ascending
  std::size_t sparsifier_edges = 0;
  std::size_t sparsifier_draws = 0;
};

// Sparsify the kernel graph, take the bottom-k eigenvectors of the
// sparsifier's normalized Laplacian by block subspace iteration, and run
// seeded Lloyd's k-means on the row-normalized embedding.
ClusteringResult spectral_cluster(const Dataset& data, const KernelSpec& spec,
                                  std::size_t k, double eps, double tau,
                                  RngStream& rng,
                                  const ClusteringOptions& options = {});

struct DensestResult {
  double density = 0.0;
  std::vector<std::size_t> witness;  // sorted vertex ids
};

// Exact maximum of w(E(U))/|U| over vertex subsets via min-cut binary search
// on the density parameter; the interval shrinks to 1e-9 relative. Capped at
// 10^4 edges; larger graphs should use densest_subgraph_peel.
DensestResult densest_subgraph_exact(std::size_t n,
                                     std::span<const WeightedEdge> edges);

// Greedy min-degree peeling; the best intermediate set 2-approximates the
// densest subgraph. Linear-ish and uncapped.
DensestResult densest_subgraph_peel(std::size_t n,
                                    std::span<const WeightedEdge> edges);

struct ArboricityOptions {
  double c_m = 1.0;            // m = ceil(c_m * n * Delta * ln n / eps^2)
  std::size_t m_override = 0;
  double delta_override = 0.0;  // max/min weight ratio bound; default 1/tau
  std::size_t exact_edge_cap = 10000;
};

struct ArboricityEstimate {
  double alpha_hat = 0.0;  // exact density of `witness` inside `graph`
  std::vector<std::size_t> witness;
  std::size_t m_samples = 0;
  double delta = 0.0;
  bool exact_solver = true;  // false when the peeling fallback ran
  SparsifierGraph graph;     // the reweighted sampled graph G'
};

// Densest-subgraph density of the kernel graph, estimated on a graph of m
// sampled edges where each draw of e adds k(x_u,x_v) / (m * p_e) with p_e
// the draw's emission probability; that keeps E[w'(E(U))] = w(E(U)) for
// every fixed subset U.
ArboricityEstimate arboricity_estimate(const DegreeTable& table,
                                       const MultiLevelKde& tree, double eps,
                                       double tau, RngStream& rng,
                                       ArboricityOptions options = {});

// Total order by (approximate degree, index); rank[i] is vertex i's
// position. Any fixed total order keeps the per-edge triangle assignment a
// partition, so near-tie flips do not bias the total below.
std::vector<std::size_t> degree_ranks(const DegreeTable& table);

struct TriangleOptions {
  std::size_t boost = 1;  // median over this many independent runs
};

struct TriangleEstimate {
  double w_hat = 0.0;
  std::size_t pairs = 0;  // uniform vertex pairs per run
  std::size_t reps_per_edge = 0;
  std::size_t boost = 1;
};

// Estimates sum over triples {u,v,x} of w_uv * w_vx * w_ux. Each uniform
// pair (u,v) with u before v in the degree order contributes the mean over
// reps of deg(u) * w(u,v) * w(v,x) * [v before x], x an exact neighbor draw
// of u; that mean is unbiased for the triangle weight assigned to edge (u,v)
// and the pair average scales up by C(n,2).
TriangleEstimate triangle_weight_estimate(const DegreeTable& table,
                                          const MultiLevelKde& tree,
                                          std::size_t pairs, std::size_t reps,
                                          RngStream& rng,
                                          TriangleOptions options = {});

}  // namespace kgraph
