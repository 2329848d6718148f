#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "kgraph/dataset.hpp"
#include "kgraph/kernels.hpp"
#include "kgraph/sparsify.hpp"

// Dense brute-force oracles. Everything here is O(n^2) or worse by design
// and exists to pin down the estimators; size caps keep accidental misuse
// from eating the machine.
namespace kgraph::reference {

inline constexpr std::size_t kDenseCap = 2000;
inline constexpr std::size_t kFactorCap = 500;  // SVD / incidence builds

// Full kernel matrix, evaluating each unordered pair once.
Eigen::MatrixXd dense_kernel_matrix(const Dataset& data,
                                    const KernelSpec& spec);

// Weighted degrees with the self term excluded: row sums of K minus 1.
std::vector<double> exact_degrees(const Eigen::MatrixXd& kernel);

// Degree distribution, normalized.
std::vector<double> exact_vertex_distribution(const Eigen::MatrixXd& kernel);

// Neighbor row distribution k(x_i, .) / deg(i), zero at i.
std::vector<double> exact_neighbor_distribution(const Eigen::MatrixXd& kernel,
                                                std::size_t i);

// Unordered pair distribution w(e) / W in lexicographic (i < j) order.
std::vector<double> exact_edge_distribution(const Eigen::MatrixXd& kernel);

// Column-stochastic walk matrix A D^{-1} of the self-loop-free kernel graph.
Eigen::MatrixXd exact_walk_matrix(const Eigen::MatrixXd& kernel);

// Distribution of a t-step walk started at `start` (exact matrix powering).
std::vector<double> exact_walk_distribution(const Eigen::MatrixXd& kernel,
                                            std::size_t start,
                                            std::size_t steps);

// Return probabilities tr(M^l)/n for l = 1..l_max.
std::vector<double> exact_return_moments(const Eigen::MatrixXd& kernel,
                                         std::size_t l_max);

// Laplacian of the kernel graph (dense adjacency K - I).
Eigen::MatrixXd dense_laplacian(const Eigen::MatrixXd& kernel);

// Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}.
Eigen::MatrixXd dense_normalized_laplacian(const Eigen::MatrixXd& kernel);

// Ascending eigenvalues of a symmetric matrix.
std::vector<double> dense_spectrum(const Eigen::MatrixXd& sym);

// Dense pseudoinverse solve of L x = b on the ones-orthogonal subspace.
std::vector<double> dense_laplacian_solve(const Eigen::MatrixXd& laplacian,
                                          std::span<const double> b);

// Incidence matrix with rows sqrt(w_uv) (chi_u - chi_v), C(n,2) x n,
// capped at kFactorCap points. H^T H equals the Laplacian.
Eigen::MatrixXd incidence_matrix(const Eigen::MatrixXd& kernel);

// Total triangle weight sum_{u<v<w} w_uv w_vw w_uw by the cubic loop.
double exact_triangle_weight(const Eigen::MatrixXd& kernel);

// Laplacian of an explicit weighted edge list (for sparsifier checks).
Eigen::MatrixXd dense_laplacian_from_edges(std::size_t n,
                                           std::span<const WeightedEdge> edges);

// Exact densest-subgraph density max_U w(E(U)) / |U| by full enumeration,
// n <= 20.
double enumerate_densest_density(std::size_t n,
                                 std::span<const WeightedEdge> edges);

// Total variation distance between two distributions on the same support.
double tv_distance(std::span<const double> p, std::span<const double> q);

}  // namespace kgraph::reference
