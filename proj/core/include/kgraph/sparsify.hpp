#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kgraph/sampling.hpp"

namespace kgraph {

struct WeightedEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;
};

struct SparsifierGraph {
  std::size_t n = 0;
  std::vector<WeightedEdge> edges;  // unordered pairs, u < v, merged
  std::size_t draws = 0;            // sampling rounds that produced the edges

  double total_weight() const;
};

struct SparsifyOptions {
  double c_t = 1.0;  // draws t = ceil(c_t * n ln n / (eps^2 tau^3))
  std::optional<std::size_t> t_override;
};

// Importance-sampled spectral sparsifier of the kernel graph. Each round
// draws an edge through the vertex/neighbor samplers and adds
// k(x_u, x_v) / (t * (p_u q_uv + p_v q_vu)) to its weight, so the expected
// Laplacian is the kernel graph's Laplacian exactly; duplicates merge by
// summing.
SparsifierGraph spectral_sparsify(const DegreeTable& table,
                                  const MultiLevelKde& tree, double eps,
                                  double tau, RngStream& rng,
                                  SparsifyOptions options = {});

// Graph Laplacian as an operator: apply, quadratic form, weighted degrees.
// L 1 = 0 holds by construction and L is positive semidefinite whenever all
// edge weights are nonnegative.
class LaplacianOperator {
 public:
  static LaplacianOperator from_graph(const SparsifierGraph& graph);
  static LaplacianOperator from_edges(std::size_t n,
                                      std::vector<WeightedEdge> edges);

  std::size_t size() const { return n_; }
  const std::vector<WeightedEdge>& edges() const { return edges_; }
  const std::vector<double>& degrees() const { return degrees_; }

  void apply(std::span<const double> x, std::span<double> out) const;
  double quad(std::span<const double> x) const;

 private:
  std::size_t n_ = 0;
  std::vector<WeightedEdge> edges_;
  std::vector<double> degrees_;
};

struct SolveOptions {
  double alpha = 1e-6;         // stop when ||r|| <= alpha * ||b_projected||
  std::size_t max_iters = 0;   // 0 picks 20 * n
};

struct SolveResult {
  std::vector<double> x;  // orthogonal to the all-ones vector
  double residual = 0.0;  // final ||b - Lx|| / ||b_projected||
  std::size_t iterations = 0;
  // mass of b along the all-ones direction that had to be projected away
  double ones_component = 0.0;
};

// Conjugate-gradient solve of L x = b on the subspace orthogonal to the
// all-ones vector. b is projected there first; the removed component is
// reported. convergence_error when the iteration budget runs out.
SolveResult solve_laplacian(const LaplacianOperator& laplacian,
                            std::span<const double> b,
                            SolveOptions options = {});

struct ConditionReport {
  double sigma_max = 0.0;  // largest singular value of the edge incidence map
  double sigma_min = 0.0;  // smallest positive one
  double kappa = 0.0;
  double kappa_bound = 0.0;    // 4 * sqrt(2) / tau^1.5
  double lambda2 = 0.0;        // algebraic connectivity of the kernel graph
  double lambda2_bound = 0.0;  // n * tau^3 / 16
  double tau_measured = 0.0;
};

// Dense reference check (n <= 500): spectrum of the kernel graph Laplacian,
// measured against the tau-driven conditioning bounds. Throws data_error if
// either bound fails; the singular values are those of the C(n,2) x n
// incidence matrix with rows sqrt(w_uv) * (chi_u - chi_v).
ConditionReport condition_number_check(const Dataset& data,
                                       const KernelSpec& spec);

}  // namespace kgraph
