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

namespace kgraph {

struct LraOptions {
  // Sketch rows. 0 picks ceil(25 * k), or ceil(k / eps) when eps > 0.
  std::size_t rows = 0;
  // Columns read when fitting V by sampled-column least squares. 0 picks k,
  // or ceil(k / eps) when eps > 0. Ignored with dense_v.
  std::size_t v_columns = 0;
  double eps = 0.0;
  // Fit V against every column (n^2 kernel evaluations). Test/oracle path:
  // gives the exact minimizer of ||K - V U||_F for the computed U.
  bool dense_v = false;
  // Above this many flops for the s x s Gram route, the row-space factor
  // comes from a seeded randomized range finder instead of a full
  // eigendecomposition. Accuracy is then subject to the sketch's usual
  // subspace-capture error; the flop ceiling keeps huge inputs tractable.
  double algebra_budget = 4e9;
};

struct LraFactors {
  Eigen::MatrixXd u;  // k x n, orthonormal rows
  Eigen::MatrixXd v;  // n x k; the rank-<=k approximation is v * u
  std::size_t k = 0;
  std::size_t rows_sampled = 0;        // draws, counting repeats
  std::vector<std::size_t> row_indices;  // distinct sampled rows, first-seen order
  // Estimated squared kernel-matrix row norms (self term included), one per
  // dataset point; the row-sampling distribution derives from these.
  std::vector<double> row_norms;
};

// Low-rank approximation with additive Frobenius error. Samples rows of the
// kernel matrix proportionally to estimated squared row norms (a degree
// table over the dataset scaled so that the kernel squares), takes the top-k
// right singular directions U of the rescaled row sketch, then fits V so
// that V*U approximates K. Costs n KDE queries plus about
// (rows + v_columns) * n kernel evaluations.
LraFactors lra_additive(const Dataset& data, const KernelSpec& spec,
                        std::size_t k, const OracleConfig& config,
                        RngStream& rng, const LraOptions& options = {});

struct EigOptions {
  double c_t = 4.0;      // submatrix size t = ceil(c_t / (eps^2 tau^2))
  double c_iters = 8.0;  // power iterations ceil(c_iters * ln(t/eps) / sqrt(eps))
  std::size_t t_override = 0;
};

struct EigEstimate {
  double lambda_hat = 0.0;
  // Unit eigenvector estimate, sparse: values[i] sits at coordinate
  // support[i] of the length-n vector, zero elsewhere.
  std::vector<std::size_t> support;
  std::vector<double> values;
  // Set when t would exceed n and the whole matrix was used instead.
  bool dense_fallback = false;
};

// Top-eigenvalue estimate from a uniform t-point principal submatrix,
// rescaled by n/t. The returned value is the better of the power-method
// Rayleigh quotient and the all-ones Rayleigh quotient on the submatrix, so
// lambda_hat >= (1 - 2 eps) * n * tau holds whenever tau is a valid floor.
EigEstimate top_eigenvalue(const Dataset& data, const KernelSpec& spec,
                           double eps, double tau, RngStream& rng,
                           EigOptions options = {});

// Monte Carlo estimates of tr(M^l)/n for l = 1..l_max, where M is the
// random-walk matrix of the self-loop-free kernel graph: each walk starts at
// a uniform vertex, runs l_max exact-neighbor steps, and scores a return
// indicator at every step. m_1 is structurally 0.
std::vector<double> spectral_moments(const MultiLevelKde& tree,
                                     const DegreeTable& table,
                                     std::size_t l_max, std::size_t walks,
                                     RngStream& rng);

struct SpectrumSummary {
  // n approximate normalized-Laplacian eigenvalues in [0, 2], descending.
  std::vector<double> lambda_tilde;
  std::vector<double> grid;     // atom positions in [-1, 1] (walk-matrix scale)
  std::vector<double> weights;  // nonnegative, sums to 1
  // l2 misfit of the matched moments after projection to the simplex; large
  // values flag noisy or inconsistent input moments.
  double residual = 0.0;
};

// Moment-matched spectrum reconstruction: finds a distribution on a uniform
// grid over [-1, 1] whose power moments fit the walk-return estimates in
// least squares under nonnegativity and total mass 1 (infeasible moment
// vectors land on the nearest feasible point), then reads off n quantiles of
// 1 - x. grid_size = 0 picks 2 * moments.size() atoms.
SpectrumSummary spectrum_emd(std::span<const double> moments, std::size_t n,
                             std::size_t grid_size = 0);

// Exact 1-D earth-mover distance between equal-size multisets: sum of
// coordinate gaps after sorting both sides; divided by size if normalized.
double emd_1d(std::span<const double> a, std::span<const double> b,
              bool normalized = false);

// Nonnegative least squares min ||a x - b|| s.t. x >= 0 (Lawson-Hanson).
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

}  // namespace kgraph
