#include "kgraph/sparsify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace kgraph {

double SparsifierGraph::total_weight() const {
  double s = 0.0;
  for (const auto& e : edges) s += e.weight;
  return s;
}

SparsifierGraph spectral_sparsify(const DegreeTable& table,
                                  const MultiLevelKde& tree, double eps,
                                  double tau, RngStream& rng,
                                  SparsifyOptions options) {
  std::size_t n = tree.data().n();
  if (table.size() != n)
    throw input_error("spectral_sparsify: table does not match the tree");
  if (!(eps > 0.0) || !(eps < 1.0))
    throw input_error("spectral_sparsify: eps must lie in (0, 1)");
  if (!(tau > 0.0) || !(tau < 1.0))
    throw input_error("spectral_sparsify: tau must lie in (0, 1)");
  std::size_t t;
  if (options.t_override) {
    t = *options.t_override;
    if (t == 0) throw input_error("spectral_sparsify: t must be positive");
  } else {
    double raw = options.c_t * static_cast<double>(n) *
                 std::log(static_cast<double>(n)) /
                 (eps * eps * tau * tau * tau);
    if (!(raw < 1e15)) {
      std::ostringstream msg;
      msg << "spectral_sparsify: the draw formula asks for " << raw
          << " rounds at tau=" << tau << "; pass t_override to run anyway";
      throw input_error(msg.str());
    }
    t = static_cast<std::size_t>(std::max(1.0, std::ceil(raw)));
  }
  std::map<std::pair<std::size_t, std::size_t>, double> acc;
  const Dataset& data = tree.data();
  for (std::size_t round = 0; round < t; ++round) {
    SampledEdge e = sample_edge(table, tree, rng);
    double emission = e.emission_prob();
    if (!(emission > 0.0))
      throw data_error("spectral_sparsify: nonpositive emission probability");
    double w = kernel_eval(tree.spec(), data.point(e.u), data.point(e.v));
    double contribution = w / (static_cast<double>(t) * emission);
    auto key = std::minmax(e.u, e.v);
    acc[{key.first, key.second}] += contribution;
  }
  SparsifierGraph graph;
  graph.n = n;
  graph.draws = t;
  graph.edges.reserve(acc.size());
  for (const auto& [key, weight] : acc)
    graph.edges.push_back({key.first, key.second, weight});
  return graph;
}

LaplacianOperator LaplacianOperator::from_graph(const SparsifierGraph& graph) {
  return from_edges(graph.n, graph.edges);
}

LaplacianOperator LaplacianOperator::from_edges(std::size_t n,
                                                std::vector<WeightedEdge> edges) {
  if (n == 0) throw input_error("laplacian: empty vertex set");
  LaplacianOperator op;
  op.n_ = n;
  op.degrees_.assign(n, 0.0);
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n || e.u == e.v)
      throw input_error("laplacian: bad edge endpoints");
    if (!(e.weight >= 0.0))
      throw input_error("laplacian: negative edge weight");
    op.degrees_[e.u] += e.weight;
    op.degrees_[e.v] += e.weight;
  }
  op.edges_ = std::move(edges);
  return op;
}

void LaplacianOperator::apply(std::span<const double> x,
                              std::span<double> out) const {
  if (x.size() != n_ || out.size() != n_)
    throw input_error("laplacian apply: dimension mismatch");
  for (std::size_t i = 0; i < n_; ++i) out[i] = degrees_[i] * x[i];
  for (const auto& e : edges_) {
    out[e.u] -= e.weight * x[e.v];
    out[e.v] -= e.weight * x[e.u];
  }
}

double LaplacianOperator::quad(std::span<const double> x) const {
  if (x.size() != n_) throw input_error("laplacian quad: dimension mismatch");
  double s = 0.0;
  for (const auto& e : edges_) {
    double d = x[e.u] - x[e.v];
    s += e.weight * d * d;
  }
  return s;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void project_out_ones(std::span<double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

}  // namespace

SolveResult solve_laplacian(const LaplacianOperator& laplacian,
                            std::span<const double> b, SolveOptions options) {
  std::size_t n = laplacian.size();
  if (b.size() != n) throw input_error("solve_laplacian: dimension mismatch");
  if (!(options.alpha > 0.0))
    throw input_error("solve_laplacian: alpha must be positive");
  std::size_t max_iters = options.max_iters ? options.max_iters : 20 * n;

  SolveResult result;
  std::vector<double> rhs(b.begin(), b.end());
  double ones = 0.0;
  for (double v : rhs) ones += v;
  result.ones_component = std::fabs(ones) / std::sqrt(static_cast<double>(n));
  project_out_ones(rhs);

  double bnorm = std::sqrt(dot(rhs, rhs));
  result.x.assign(n, 0.0);
  if (bnorm == 0.0) {
    result.residual = 0.0;
    return result;
  }

  std::vector<double> r = rhs;
  std::vector<double> p = r;
  std::vector<double> lp(n, 0.0);
  double rr = dot(r, r);
  for (std::size_t it = 0; it < max_iters; ++it) {
    laplacian.apply(p, lp);
    double plp = dot(p, lp);
    if (!(plp > 0.0))
      throw convergence_error("solve_laplacian: curvature vanished");
    double step = rr / plp;
    for (std::size_t i = 0; i < n; ++i) result.x[i] += step * p[i];
    for (std::size_t i = 0; i < n; ++i) r[i] -= step * lp[i];
    double rr_next = dot(r, r);
    result.iterations = it + 1;
    if (std::sqrt(rr_next) <= options.alpha * bnorm) {
      rr = rr_next;
      break;
    }
    double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    if ((it + 1) % 64 == 0) {
      // shave accumulated drift along the kernel of L
      project_out_ones(result.x);
      project_out_ones(r);
      project_out_ones(p);
    }
    if (it + 1 == max_iters)
      throw convergence_error(
          "solve_laplacian: residual " + std::to_string(std::sqrt(rr) / bnorm) +
          " above alpha after " + std::to_string(max_iters) + " iterations");
  }
  project_out_ones(result.x);
  result.residual = std::sqrt(rr) / bnorm;
  return result;
}

ConditionReport condition_number_check(const Dataset& data,
                                       const KernelSpec& spec) {
  std::size_t n = data.n();
  if (n < 2 || n > 500)
    throw input_error("condition_number_check: dense reference capped at n in [2, 500]");
  // The incidence rows are sqrt(w_uv) (chi_u - chi_v); their Gram matrix is
  // the Laplacian, so the singular values are the square roots of its
  // eigenvalues and nothing bigger than n x n is ever formed.
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  double tau_measured = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double w = kernel_eval(spec, data.point(i), data.point(j));
      tau_measured = std::min(tau_measured, w);
      lap(i, j) -= w;
      lap(j, i) -= w;
      lap(i, i) += w;
      lap(j, j) += w;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success)
    throw convergence_error("condition_number_check: eigensolver failed");
  ConditionReport report;
  report.tau_measured = tau_measured;
  report.lambda2 = eig.eigenvalues()(1);
  double lambda_max = eig.eigenvalues()(n - 1);
  report.sigma_max = std::sqrt(std::max(0.0, lambda_max));
  report.sigma_min = std::sqrt(std::max(0.0, report.lambda2));
  report.kappa = report.sigma_max / report.sigma_min;
  report.kappa_bound = 4.0 * std::sqrt(2.0) / std::pow(tau_measured, 1.5);
  report.lambda2_bound =
      static_cast<double>(n) * std::pow(tau_measured, 3.0) / 16.0;
  if (report.kappa > report.kappa_bound * (1.0 + 1e-9))
    throw data_error("condition_number_check: condition number above bound");
  if (report.lambda2 < report.lambda2_bound * (1.0 - 1e-9))
    throw data_error("condition_number_check: lambda2 below bound");
  return report;
}

}  // namespace kgraph
