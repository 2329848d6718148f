#include "kgraph/reference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "kgraph/common.hpp"

namespace kgraph::reference {

namespace {

void check_cap(std::size_t n, std::size_t cap, const char* what) {
  if (n > cap) {
    throw input_error(std::string(what) + ": size " + std::to_string(n) +
                      " exceeds the dense cap " + std::to_string(cap));
  }
}

}  // namespace

Eigen::MatrixXd dense_kernel_matrix(const Dataset& data,
                                    const KernelSpec& spec) {
  check_cap(data.n(), kDenseCap, "dense_kernel_matrix");
  validate_spec(spec);
  const auto n = static_cast<Eigen::Index>(data.n());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double w = kernel_eval(spec, data.point(static_cast<std::size_t>(i)),
                             data.point(static_cast<std::size_t>(j)));
      k(i, j) = w;
      k(j, i) = w;
    }
  }
  return k;
}

std::vector<double> exact_degrees(const Eigen::MatrixXd& kernel) {
  std::vector<double> deg(static_cast<std::size_t>(kernel.rows()));
  for (Eigen::Index i = 0; i < kernel.rows(); ++i) {
    deg[static_cast<std::size_t>(i)] = kernel.row(i).sum() - kernel(i, i);
  }
  return deg;
}

std::vector<double> exact_vertex_distribution(const Eigen::MatrixXd& kernel) {
  auto deg = exact_degrees(kernel);
  double total = std::accumulate(deg.begin(), deg.end(), 0.0);
  if (total <= 0.0) throw data_error("exact_vertex_distribution: zero total degree");
  for (auto& v : deg) v /= total;
  return deg;
}

std::vector<double> exact_neighbor_distribution(const Eigen::MatrixXd& kernel,
                                                std::size_t i) {
  const auto n = static_cast<std::size_t>(kernel.rows());
  if (i >= n) throw input_error("exact_neighbor_distribution: vertex out of range");
  double deg = kernel.row(static_cast<Eigen::Index>(i)).sum() -
               kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
  if (deg <= 0.0) throw data_error("exact_neighbor_distribution: isolated vertex");
  std::vector<double> out(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    out[j] = kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / deg;
  }
  return out;
}

std::vector<double> exact_edge_distribution(const Eigen::MatrixXd& kernel) {
  const auto n = kernel.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      out.push_back(kernel(i, j));
      total += kernel(i, j);
    }
  }
  if (total <= 0.0) throw data_error("exact_edge_distribution: zero total weight");
  for (auto& v : out) v /= total;
  return out;
}

Eigen::MatrixXd exact_walk_matrix(const Eigen::MatrixXd& kernel) {
  const auto n = kernel.rows();
  Eigen::MatrixXd adj = kernel;
  adj.diagonal().setZero();
  Eigen::VectorXd deg = adj.colwise().sum();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (deg(j) <= 0.0) throw data_error("exact_walk_matrix: isolated vertex");
  }
  // M = A D^{-1}; column j is the step distribution out of vertex j.
  return adj * deg.cwiseInverse().asDiagonal();
}

std::vector<double> exact_walk_distribution(const Eigen::MatrixXd& kernel,
                                            std::size_t start,
                                            std::size_t steps) {
  const auto n = static_cast<std::size_t>(kernel.rows());
  if (start >= n) throw input_error("exact_walk_distribution: start out of range");
  Eigen::MatrixXd m = exact_walk_matrix(kernel);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  p(static_cast<Eigen::Index>(start)) = 1.0;
  for (std::size_t s = 0; s < steps; ++s) p = m * p;
  return {p.data(), p.data() + p.size()};
}

std::vector<double> exact_return_moments(const Eigen::MatrixXd& kernel,
                                         std::size_t l_max) {
  const auto n = kernel.rows();
  Eigen::MatrixXd m = exact_walk_matrix(kernel);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  std::vector<double> out;
  out.reserve(l_max);
  for (std::size_t l = 1; l <= l_max; ++l) {
    power = m * power;
    out.push_back(power.trace() / static_cast<double>(n));
  }
  return out;
}

Eigen::MatrixXd dense_laplacian(const Eigen::MatrixXd& kernel) {
  Eigen::MatrixXd adj = kernel;
  adj.diagonal().setZero();
  Eigen::VectorXd deg = adj.rowwise().sum();
  Eigen::MatrixXd lap = -adj;
  lap.diagonal() = deg;
  return lap;
}

Eigen::MatrixXd dense_normalized_laplacian(const Eigen::MatrixXd& kernel) {
  Eigen::MatrixXd adj = kernel;
  adj.diagonal().setZero();
  Eigen::VectorXd deg = adj.rowwise().sum();
  for (Eigen::Index i = 0; i < deg.size(); ++i) {
    if (deg(i) <= 0.0) throw data_error("dense_normalized_laplacian: isolated vertex");
  }
  Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd norm =
      inv_sqrt.asDiagonal() * adj * inv_sqrt.asDiagonal();
  return Eigen::MatrixXd::Identity(kernel.rows(), kernel.cols()) - norm;
}

std::vector<double> dense_spectrum(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) {
    throw data_error("dense_spectrum: eigendecomposition failed");
  }
  const auto& vals = es.eigenvalues();
  return {vals.data(), vals.data() + vals.size()};
}

std::vector<double> dense_laplacian_solve(const Eigen::MatrixXd& laplacian,
                                          std::span<const double> b) {
  const auto n = laplacian.rows();
  if (static_cast<Eigen::Index>(b.size()) != n) {
    throw input_error("dense_laplacian_solve: rhs size mismatch");
  }
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), n);
  rhs.array() -= rhs.mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(laplacian);
  if (es.info() != Eigen::Success) {
    throw data_error("dense_laplacian_solve: eigendecomposition failed");
  }
  const Eigen::VectorXd& vals = es.eigenvalues();
  double scale = std::max(1.0, vals(n - 1));
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vals(i) > 1e-12 * scale) inv(i) = 1.0 / vals(i);
  }
  Eigen::VectorXd x =
      es.eigenvectors() * (inv.asDiagonal() * (es.eigenvectors().transpose() * rhs));
  x.array() -= x.mean();
  return {x.data(), x.data() + x.size()};
}

Eigen::MatrixXd incidence_matrix(const Eigen::MatrixXd& kernel) {
  const auto n = kernel.rows();
  check_cap(static_cast<std::size_t>(n), kFactorCap, "incidence_matrix");
  const auto rows = n * (n - 1) / 2;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(rows, n);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++r) {
      double s = std::sqrt(kernel(i, j));
      h(r, i) = s;
      h(r, j) = -s;
    }
  }
  return h;
}

double exact_triangle_weight(const Eigen::MatrixXd& kernel) {
  const auto n = kernel.rows();
  double total = 0.0;
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = u + 1; v < n; ++v) {
      double wuv = kernel(u, v);
      for (Eigen::Index w = v + 1; w < n; ++w) {
        total += wuv * kernel(v, w) * kernel(u, w);
      }
    }
  }
  return total;
}

Eigen::MatrixXd dense_laplacian_from_edges(std::size_t n,
                                           std::span<const WeightedEdge> edges) {
  check_cap(n, kDenseCap, "dense_laplacian_from_edges");
  Eigen::MatrixXd lap =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n || e.u == e.v) {
      throw input_error("dense_laplacian_from_edges: bad edge");
    }
    auto u = static_cast<Eigen::Index>(e.u);
    auto v = static_cast<Eigen::Index>(e.v);
    lap(u, u) += e.weight;
    lap(v, v) += e.weight;
    lap(u, v) -= e.weight;
    lap(v, u) -= e.weight;
  }
  return lap;
}

double enumerate_densest_density(std::size_t n,
                                 std::span<const WeightedEdge> edges) {
  if (n == 0 || n > 20) throw input_error("enumerate_densest_density: n must be in [1, 20]");
  double best = 0.0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double w = 0.0;
    for (const auto& e : edges) {
      if ((mask >> e.u & 1u) && (mask >> e.v & 1u)) w += e.weight;
    }
    double size = static_cast<double>(std::popcount(mask));
    best = std::max(best, w / size);
  }
  return best;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw input_error("tv_distance: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

}  // namespace kgraph::reference
