#include "kgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "kgraph/common.hpp"

namespace kgraph {

namespace {

std::size_t pair_key(std::size_t n, std::size_t u, std::size_t v) {
  if (u > v) std::swap(u, v);
  return u * n + v;
}

void check_edge_list(std::size_t n, std::span<const WeightedEdge> edges,
                     const char* who) {
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n)
      throw input_error(std::string(who) + ": edge endpoint out of range");
    if (e.u == e.v)
      throw input_error(std::string(who) + ": self loops are not allowed");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight))
      throw input_error(std::string(who) + ": edge weights must be finite and nonnegative");
  }
}

double subset_density(std::size_t n, std::span<const WeightedEdge> edges,
                      const std::vector<std::size_t>& subset) {
  if (subset.empty()) return 0.0;
  std::vector<char> in(n, 0);
  for (std::size_t v : subset) in[v] = 1;
  double w = 0.0;
  for (const auto& e : edges)
    if (in[e.u] && in[e.v]) w += e.weight;
  return w / static_cast<double>(subset.size());
}

// Dinic max-flow on doubles. Arc capacities here are O(total degree), so a
// fixed relative residual floor is enough to keep blocking flows finite.
class FlowNetwork {
 public:
  explicit FlowNetwork(int n) : graph_(n), level_(n), iter_(n) {}

  void add_edge(int a, int b, double cap_ab, double cap_ba) {
    graph_[a].push_back({b, static_cast<int>(graph_[b].size()), cap_ab});
    graph_[b].push_back({a, static_cast<int>(graph_[a].size()) - 1, cap_ba});
    floor_ = std::max(floor_, std::max(cap_ab, cap_ba));
  }

  double max_flow(int s, int t) {
    eps_ = 1e-12 * std::max(1.0, floor_);
    double total = 0.0;
    while (bfs(s, t)) {
      std::fill(iter_.begin(), iter_.end(), 0);
      double f;
      while ((f = dfs(s, t, std::numeric_limits<double>::infinity())) > eps_)
        total += f;
    }
    return total;
  }

  // Vertices reachable from s in the residual graph after max_flow.
  std::vector<char> source_side(int s) const {
    std::vector<char> seen(graph_.size(), 0);
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (const auto& a : graph_[v])
        if (!seen[a.to] && a.cap > eps_) {
          seen[a.to] = 1;
          q.push(a.to);
        }
    }
    return seen;
  }

 private:
  struct Arc {
    int to;
    int rev;
    double cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    q.push(s);
    level_[s] = 0;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (const auto& a : graph_[v])
        if (a.cap > eps_ && level_[a.to] < 0) {
          level_[a.to] = level_[v] + 1;
          q.push(a.to);
        }
    }
    return level_[t] >= 0;
  }

  double dfs(int v, int t, double f) {
    if (v == t) return f;
    for (int& i = iter_[v]; i < static_cast<int>(graph_[v].size()); ++i) {
      Arc& a = graph_[v][i];
      if (a.cap <= eps_ || level_[a.to] != level_[v] + 1) continue;
      double got = dfs(a.to, t, std::min(f, a.cap));
      if (got > eps_) {
        a.cap -= got;
        graph_[a.to][a.rev].cap += got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Arc>> graph_;
  std::vector<int> level_;
  std::vector<int> iter_;
  double floor_ = 1.0;
  double eps_ = 1e-12;
};

constexpr std::size_t kExactEdgeCap = 10000;

}  // namespace

L2TestResult l2_distance_test(std::span<const std::size_t> samples_p,
                              std::span<const std::size_t> samples_q,
                              double xi, double delta) {
  if (samples_p.size() != samples_q.size())
    throw input_error("l2_distance_test: sample arrays must have equal size");
  const std::size_t r = samples_p.size();
  if (r < 2) throw input_error("l2_distance_test: need at least two samples per side");
  if (!(xi > 0.0)) throw input_error("l2_distance_test: xi must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw input_error("l2_distance_test: delta must lie in (0, 1)");

  std::unordered_map<std::size_t, std::size_t> count_p, count_q;
  count_p.reserve(r);
  count_q.reserve(r);
  for (std::size_t v : samples_p) ++count_p[v];
  for (std::size_t v : samples_q) ++count_q[v];

  auto collision_pairs = [](const std::unordered_map<std::size_t, std::size_t>& c) {
    double s = 0.0;
    for (const auto& [value, m] : c) {
      (void)value;
      s += 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
    }
    return s;
  };
  double within = collision_pairs(count_p) + collision_pairs(count_q);
  double cross = 0.0;
  for (const auto& [value, m] : count_p) {
    auto it = count_q.find(value);
    if (it != count_q.end())
      cross += static_cast<double>(m) * static_cast<double>(it->second);
  }

  const double rd = static_cast<double>(r);
  const double pairs = 0.5 * rd * (rd - 1.0);
  L2TestResult out;
  out.statistic = within / pairs - 2.0 * cross / (rd * rd);
  out.threshold = 2.5 * xi;
  out.accept = out.statistic <= out.threshold;
  out.samples = r;
  return out;
}

ClusterVerdict local_cluster_test(const MultiLevelKde& tree,
                                  const DegreeTable& table, std::size_t u,
                                  std::size_t w, double phi_in, std::size_t k,
                                  double eps, double tau, RngStream& rng,
                                  LocalClusterOptions options) {
  const std::size_t n = tree.data().n();
  if (table.size() != n)
    throw input_error("local_cluster_test: table size does not match the tree");
  if (u >= n || w >= n) throw input_error("local_cluster_test: vertex out of range");
  if (u == w) throw input_error("local_cluster_test: the two vertices must differ");
  if (!(phi_in > 0.0 && phi_in <= 1.0))
    throw input_error("local_cluster_test: phi_in must lie in (0, 1]");
  if (k < 1 || k >= n) throw input_error("local_cluster_test: k must lie in [1, n)");
  if (!(eps > 0.0 && eps < 1.0))
    throw input_error("local_cluster_test: eps must lie in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0))
    throw input_error("local_cluster_test: tau must lie in (0, 1)");

  const double nd = static_cast<double>(n);
  std::size_t t = options.t_override;
  if (t == 0) {
    double want_t = std::ceil(3.0 * std::log(nd) / (phi_in * phi_in));
    if (!(want_t < 1e12))
      throw input_error(
          "local_cluster_test: walk length formula overflows at this phi_in; "
          "pass t_override");
    t = static_cast<std::size_t>(want_t);
  }
  if (t == 0) t = 1;

  std::size_t r = options.r_override;
  if (r == 0) {
    double want = std::ceil(std::max(
        options.c_samples *
            std::sqrt(nd * static_cast<double>(k) / (eps * tau)) *
            std::log(1.0 / eps),
        2.0));
    // compare before the integer cast; tiny tau pushes the formula past
    // anything a size_t can hold
    if (!(want <= static_cast<double>(options.max_samples))) {
      std::ostringstream msg;
      msg << "local_cluster_test: configuration needs " << want
          << " walks per vertex, above the cap of " << options.max_samples
          << "; raise max_samples or relax eps/tau";
      throw input_error(msg.str());
    }
    r = static_cast<std::size_t>(want);
  }
  if (r < 2) r = 2;
  if (r > options.max_samples) {
    std::ostringstream msg;
    msg << "local_cluster_test: configuration needs " << r
        << " walks per vertex, above the cap of " << options.max_samples
        << "; raise max_samples or relax eps/tau";
    throw input_error(msg.str());
  }

  std::vector<std::size_t> ends_u(r), ends_w(r);
  for (std::size_t i = 0; i < r; ++i)
    ends_u[i] = random_walk(tree, &table, u, t, WalkMode::exact_neighbor, rng).endpoint;
  for (std::size_t i = 0; i < r; ++i)
    ends_w[i] = random_walk(tree, &table, w, t, WalkMode::exact_neighbor, rng).endpoint;

  L2TestResult test = l2_distance_test(ends_u, ends_w, 1.0 / (7.0 * nd), eps);

  ClusterVerdict verdict;
  verdict.same_cluster = test.accept;
  verdict.statistic = test.statistic;
  verdict.threshold = test.threshold;
  verdict.samples = r;
  verdict.walk_length = t;
  return verdict;
}

namespace {

// Lloyd's with D^2 seeding on the rows of `points`; centers live in the same
// row space. Returns labels and writes the objective to `inertia`.
std::vector<std::size_t> kmeans_rows(const Eigen::MatrixXd& points,
                                     std::size_t k, std::size_t restarts,
                                     std::size_t iters, RngStream& rng,
                                     double* inertia) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  const Eigen::Index dim = points.cols();
  std::vector<std::size_t> best_labels(n, 0);
  double best_obj = std::numeric_limits<double>::infinity();

  std::vector<double> dist2(n), cumulative(n);
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(restarts, 1); ++attempt) {
    Eigen::MatrixXd centers(k, dim);
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(n)));
    for (std::size_t i = 0; i < n; ++i)
      dist2[i] = (points.row(static_cast<Eigen::Index>(i)) - centers.row(0)).squaredNorm();
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        total += dist2[i];
        cumulative[i] = total;
      }
      std::size_t pick;
      if (total > 0.0) {
        double x = rng.uniform() * total;
        pick = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), x) -
            cumulative.begin());
        if (pick >= n) pick = n - 1;
      } else {
        pick = rng.uniform_index(n);
      }
      centers.row(static_cast<Eigen::Index>(c)) =
          points.row(static_cast<Eigen::Index>(pick));
      for (std::size_t i = 0; i < n; ++i) {
        double d = (points.row(static_cast<Eigen::Index>(i)) -
                    centers.row(static_cast<Eigen::Index>(c)))
                       .squaredNorm();
        dist2[i] = std::min(dist2[i], d);
      }
    }

    std::vector<std::size_t> labels(n, 0), previous(n, k);
    for (std::size_t it = 0; it < std::max<std::size_t>(iters, 1); ++it) {
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < k; ++c) {
          double d = (points.row(static_cast<Eigen::Index>(i)) -
                      centers.row(static_cast<Eigen::Index>(c)))
                         .squaredNorm();
          if (d < best) {
            best = d;
            arg = c;
          }
        }
        labels[i] = arg;
      }
      if (labels == previous) break;
      previous = labels;

      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, dim);
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        sums.row(static_cast<Eigen::Index>(labels[i])) +=
            points.row(static_cast<Eigen::Index>(i));
        ++counts[labels[i]];
      }
      std::vector<char> taken(n, 0);
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          centers.row(static_cast<Eigen::Index>(c)) =
              sums.row(static_cast<Eigen::Index>(c)) /
              static_cast<double>(counts[c]);
          continue;
        }
        // Empty cluster: restart it at the point farthest from its center.
        double far = -1.0;
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (taken[i]) continue;
          double d = (points.row(static_cast<Eigen::Index>(i)) -
                      centers.row(static_cast<Eigen::Index>(labels[i])))
                         .squaredNorm();
          if (d > far) {
            far = d;
            arg = i;
          }
        }
        centers.row(static_cast<Eigen::Index>(c)) =
            points.row(static_cast<Eigen::Index>(arg));
        taken[arg] = 1;
      }
    }

    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      obj += (points.row(static_cast<Eigen::Index>(i)) -
              centers.row(static_cast<Eigen::Index>(labels[i])))
                 .squaredNorm();
    if (obj < best_obj) {
      best_obj = obj;
      best_labels = labels;
    }
  }
  if (inertia) *inertia = best_obj;
  return best_labels;
}

}  // namespace

ClusteringResult spectral_cluster(const Dataset& data, const KernelSpec& spec,
                                  std::size_t k, double eps, double tau,
                                  RngStream& rng,
                                  const ClusteringOptions& options) {
  validate_spec(spec);
  const std::size_t n = data.n();
  if (k < 2) throw input_error("spectral_cluster: k must be at least 2");
  if (k > n) throw input_error("spectral_cluster: k exceeds the number of points");
  if (!(eps > 0.0 && eps < 1.0))
    throw input_error("spectral_cluster: eps must lie in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0))
    throw input_error("spectral_cluster: tau must lie in (0, 1)");

  MultiLevelOptions tree_options;
  tree_options.oracle = options.oracle;
  tree_options.memoize = options.memoize;
  if (tree_options.oracle.backend == KdeBackend::sampling)
    tree_options.oracle.eps = per_level_eps(eps, n);
  MultiLevelKde tree = build_multilevel(data, spec, tree_options);

  const double table_eps = options.oracle.backend == KdeBackend::exact ? 0.0 : eps;
  DegreeTable table = approx_degrees(tree, table_eps, rng);
  SparsifierGraph sparse = spectral_sparsify(table, tree, eps, tau, rng, options.sparsify);
  LaplacianOperator laplacian = LaplacianOperator::from_graph(sparse);

  Eigen::VectorXd inv_sqrt_degree(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = laplacian.degrees()[i];
    if (!(d > 0.0)) {
      std::ostringstream msg;
      msg << "spectral_cluster: vertex " << i
          << " is isolated in the sparsifier; increase the draw budget";
      throw data_error(msg.str());
    }
    inv_sqrt_degree[static_cast<Eigen::Index>(i)] = 1.0 / std::sqrt(d);
  }

  // One application of B = 2 I - L_norm = I + D^{-1/2} A D^{-1/2}, column by
  // column. Largest eigenvalues of B are smallest of L_norm, which keeps the
  // power-type iteration aimed at the clustering subspace.
  std::vector<double> scratch_in(n), scratch_out(n);
  auto apply_b = [&](const Eigen::MatrixXd& x, Eigen::MatrixXd& out) {
    out.resize(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (std::size_t i = 0; i < n; ++i)
        scratch_in[i] = inv_sqrt_degree[static_cast<Eigen::Index>(i)] *
                        x(static_cast<Eigen::Index>(i), c);
      laplacian.apply(scratch_in, scratch_out);
      for (std::size_t i = 0; i < n; ++i)
        out(static_cast<Eigen::Index>(i), c) =
            2.0 * x(static_cast<Eigen::Index>(i), c) -
            inv_sqrt_degree[static_cast<Eigen::Index>(i)] * scratch_out[i];
    }
  };

  const std::size_t block = std::min(n, k + options.block_extra);
  Eigen::MatrixXd basis(n, static_cast<Eigen::Index>(block));
  for (Eigen::Index i = 0; i < basis.rows(); ++i)
    for (Eigen::Index j = 0; j < basis.cols(); ++j) basis(i, j) = rng.gaussian();
  {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(
                                    basis.rows(), static_cast<Eigen::Index>(block));
  }

  Eigen::MatrixXd image, ritz_vectors;
  Eigen::VectorXd ritz_values;
  double worst_residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (std::size_t it = 0; it < std::max<std::size_t>(options.max_iters, 1); ++it) {
    apply_b(basis, image);
    Eigen::MatrixXd small = basis.transpose() * image;
    small = 0.5 * (small + small.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
    if (es.info() != Eigen::Success)
      throw convergence_error("spectral_cluster: Rayleigh-Ritz eigensolve failed");
    ritz_values = es.eigenvalues();  // ascending in B
    ritz_vectors = basis * es.eigenvectors();
    Eigen::MatrixXd residual =
        image * es.eigenvectors() - ritz_vectors * ritz_values.asDiagonal();
    worst_residual = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      Eigen::Index col = static_cast<Eigen::Index>(block - 1 - j);
      worst_residual = std::max(worst_residual, residual.col(col).norm());
    }
    if (worst_residual <= options.tol) {
      converged = true;
      break;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(image);
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(
                                    image.rows(), static_cast<Eigen::Index>(block));
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "spectral_cluster: subspace iteration stalled after "
        << options.max_iters << " rounds, worst residual " << worst_residual
        << " (tol " << options.tol << ")";
    throw convergence_error(msg.str());
  }

  ClusteringResult result;
  result.embedding.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  result.eigenvalues.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    Eigen::Index col = static_cast<Eigen::Index>(block - 1 - j);
    result.embedding.col(static_cast<Eigen::Index>(j)) = ritz_vectors.col(col);
    double lambda = 2.0 - ritz_values[col];
    result.eigenvalues[j] = std::clamp(lambda, 0.0, 2.0);
  }
  result.sparsifier_edges = sparse.edges.size();
  result.sparsifier_draws = sparse.draws;

  Eigen::MatrixXd rows = result.embedding;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double norm = rows.row(i).norm();
    if (norm > 1e-12) rows.row(i) /= norm;
    // A numerically zero row stays zero and lands with whichever center is
    // nearest the origin.
  }
  result.labels = kmeans_rows(rows, k, options.kmeans_restarts,
                              options.kmeans_iters, rng, &result.inertia);
  return result;
}

DensestResult densest_subgraph_peel(std::size_t n,
                                    std::span<const WeightedEdge> edges) {
  if (n == 0) throw input_error("densest_subgraph_peel: empty vertex set");
  check_edge_list(n, edges, "densest_subgraph_peel");

  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency(n);
  std::vector<double> degree(n, 0.0);
  double total = 0.0;
  for (const auto& e : edges) {
    adjacency[e.u].push_back({e.v, e.weight});
    adjacency[e.v].push_back({e.u, e.weight});
    degree[e.u] += e.weight;
    degree[e.v] += e.weight;
    total += e.weight;
  }

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
  for (std::size_t v = 0; v < n; ++v) heap.push({degree[v], v});

  std::vector<char> alive(n, 1);
  std::vector<std::size_t> removed_at(n, n);
  double best_density = total / static_cast<double>(n);
  std::size_t best_step = 0;
  double live_weight = total;
  std::size_t remaining = n;

  for (std::size_t step = 1; step < n; ++step) {
    std::size_t v = n;
    while (!heap.empty()) {
      auto [d, cand] = heap.top();
      heap.pop();
      // Entries go stale when a neighbor's removal lowered the degree; the
      // refreshed copy is already in the heap.
      if (alive[cand] && d <= degree[cand] + 1e-9 * (1.0 + std::abs(degree[cand]))) {
        v = cand;
        break;
      }
    }
    if (v == n) break;
    alive[v] = 0;
    removed_at[v] = step;
    live_weight -= degree[v];
    --remaining;
    for (const auto& [u, w] : adjacency[v])
      if (alive[u]) {
        degree[u] -= w;
        heap.push({degree[u], u});
      }
    double density = live_weight / static_cast<double>(remaining);
    if (density > best_density) {
      best_density = density;
      best_step = step;
    }
  }

  DensestResult out;
  for (std::size_t v = 0; v < n; ++v)
    if (removed_at[v] == n || removed_at[v] > best_step) out.witness.push_back(v);
  out.density = subset_density(n, edges, out.witness);
  return out;
}

DensestResult densest_subgraph_exact(std::size_t n,
                                     std::span<const WeightedEdge> edges) {
  if (n == 0) throw input_error("densest_subgraph_exact: empty vertex set");
  check_edge_list(n, edges, "densest_subgraph_exact");
  if (edges.size() > kExactEdgeCap) {
    std::ostringstream msg;
    msg << "densest_subgraph_exact: " << edges.size() << " edges exceed the cap of "
        << kExactEdgeCap << "; use densest_subgraph_peel";
    throw input_error(msg.str());
  }

  std::vector<WeightedEdge> positive;
  positive.reserve(edges.size());
  for (const auto& e : edges)
    if (e.weight > 0.0) positive.push_back(e);
  if (positive.empty()) return {0.0, {0}};

  std::vector<double> degree(n, 0.0);
  for (const auto& e : positive) {
    degree[e.u] += e.weight;
    degree[e.v] += e.weight;
  }
  double degree_sum = 0.0, degree_max = 0.0;
  for (double d : degree) {
    degree_sum += d;
    degree_max = std::max(degree_max, d);
  }

  DensestResult warm = densest_subgraph_peel(n, positive);
  std::vector<std::size_t> witness = warm.witness;
  double lo = warm.density;
  double hi = std::max(lo, 0.5 * degree_max) + 1e-12;
  const double feasible_margin = 1e-11 * std::max(1.0, degree_sum);

  // Binary search on the density g. A subset beating g shows up as slack in
  // the cut: min cut < sum of degrees exactly when some U has
  // w(E(U)) > g |U|, and the source side of that cut is a maximizer.
  while (hi - lo > 1e-9 * std::max(1.0, lo)) {
    double g = 0.5 * (lo + hi);
    const int source = static_cast<int>(n);
    const int sink = static_cast<int>(n) + 1;
    FlowNetwork net(static_cast<int>(n) + 2);
    for (std::size_t v = 0; v < n; ++v) {
      net.add_edge(source, static_cast<int>(v), degree[v], 0.0);
      net.add_edge(static_cast<int>(v), sink, 2.0 * g, 0.0);
    }
    for (const auto& e : positive)
      net.add_edge(static_cast<int>(e.u), static_cast<int>(e.v), e.weight, e.weight);
    double flow = net.max_flow(source, sink);
    double excess = degree_sum - flow;
    if (excess > feasible_margin) {
      auto side = net.source_side(source);
      std::vector<std::size_t> subset;
      for (std::size_t v = 0; v < n; ++v)
        if (side[v]) subset.push_back(v);
      if (!subset.empty()) witness = std::move(subset);
      lo = g;
    } else {
      hi = g;
    }
  }

  DensestResult out;
  out.witness = std::move(witness);
  std::sort(out.witness.begin(), out.witness.end());
  out.density = subset_density(n, positive, out.witness);
  return out;
}

ArboricityEstimate arboricity_estimate(const DegreeTable& table,
                                       const MultiLevelKde& tree, double eps,
                                       double tau, RngStream& rng,
                                       ArboricityOptions options) {
  const std::size_t n = tree.data().n();
  if (table.size() != n)
    throw input_error("arboricity_estimate: table size does not match the tree");
  if (!(eps > 0.0 && eps < 1.0))
    throw input_error("arboricity_estimate: eps must lie in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0))
    throw input_error("arboricity_estimate: tau must lie in (0, 1)");

  const double delta =
      options.delta_override > 0.0 ? options.delta_override : 1.0 / tau;
  std::size_t m = options.m_override;
  if (m == 0) {
    double want = options.c_m * static_cast<double>(n) * delta *
                  std::log(std::max<double>(static_cast<double>(n), 3.0)) /
                  (eps * eps);
    if (!(want < 1e15)) {
      std::ostringstream msg;
      msg << "arboricity_estimate: the sample formula asks for " << want
          << " draws at Delta=" << delta
          << "; pass m_override or delta_override";
      throw input_error(msg.str());
    }
    m = static_cast<std::size_t>(std::ceil(want));
  }
  if (m == 0) m = 1;

  std::unordered_map<std::size_t, double> accumulated;
  accumulated.reserve(std::min<std::size_t>(m, n * (n - 1) / 2));
  const double md = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) {
    SampledEdge e = sample_edge(table, tree, rng);
    double p = e.emission_prob();
    if (!(p > 0.0))
      throw data_error("arboricity_estimate: sampled edge with zero emission probability");
    double w = kernel_eval(tree.spec(), tree.data().point(e.u), tree.data().point(e.v));
    accumulated[pair_key(n, e.u, e.v)] += w / (md * p);
  }

  ArboricityEstimate out;
  out.graph.n = n;
  out.graph.draws = m;
  out.graph.edges.reserve(accumulated.size());
  for (const auto& [key, weight] : accumulated)
    out.graph.edges.push_back({key / n, key % n, weight});
  std::sort(out.graph.edges.begin(), out.graph.edges.end(),
            [](const WeightedEdge& a, const WeightedEdge& b) {
              return a.u != b.u ? a.u < b.u : a.v < b.v;
            });

  DensestResult densest;
  if (out.graph.edges.size() <= options.exact_edge_cap) {
    densest = densest_subgraph_exact(n, out.graph.edges);
    out.exact_solver = true;
  } else {
    densest = densest_subgraph_peel(n, out.graph.edges);
    out.exact_solver = false;
  }
  out.alpha_hat = densest.density;
  out.witness = std::move(densest.witness);
  out.m_samples = m;
  out.delta = delta;
  return out;
}

std::vector<std::size_t> degree_ranks(const DegreeTable& table) {
  const std::size_t n = table.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (table.p[a] != table.p[b]) return table.p[a] < table.p[b];
    return a < b;
  });
  std::vector<std::size_t> ranks(n);
  for (std::size_t pos = 0; pos < n; ++pos) ranks[order[pos]] = pos;
  return ranks;
}

TriangleEstimate triangle_weight_estimate(const DegreeTable& table,
                                          const MultiLevelKde& tree,
                                          std::size_t pairs, std::size_t reps,
                                          RngStream& rng,
                                          TriangleOptions options) {
  const std::size_t n = tree.data().n();
  if (n < 3) throw input_error("triangle_weight_estimate: need at least three points");
  if (table.size() != n)
    throw input_error("triangle_weight_estimate: table size does not match the tree");
  if (pairs == 0 || reps == 0)
    throw input_error("triangle_weight_estimate: pairs and reps must be positive");

  const std::size_t boost = std::max<std::size_t>(options.boost, 1);
  const std::vector<std::size_t> ranks = degree_ranks(table);
  const double total_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const KernelSpec& spec = tree.spec();
  const Dataset& data = tree.data();

  std::vector<double> runs;
  runs.reserve(boost);
  for (std::size_t b = 0; b < boost; ++b) {
    double acc = 0.0;
    for (std::size_t s = 0; s < pairs; ++s) {
      std::size_t i = rng.uniform_index(n);
      std::size_t j = rng.uniform_index(n - 1);
      if (j >= i) ++j;
      // Orient so u is the lower-ranked endpoint; the edge owns exactly the
      // triangles whose third vertex ranks above both.
      std::size_t u = ranks[i] < ranks[j] ? i : j;
      std::size_t v = u == i ? j : i;
      double w_uv = kernel_eval(spec, data.point(u), data.point(v));
      double hits = 0.0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        std::size_t x = sample_neighbor_exact(tree, table, u, rng).index;
        if (ranks[v] < ranks[x])
          hits += w_uv * kernel_eval(spec, data.point(v), data.point(x));
      }
      acc += table.p[u] * hits / static_cast<double>(reps);
    }
    runs.push_back(acc / static_cast<double>(pairs) * total_pairs);
  }

  std::sort(runs.begin(), runs.end());
  double estimate = runs.size() % 2 == 1
                        ? runs[runs.size() / 2]
                        : 0.5 * (runs[runs.size() / 2 - 1] + runs[runs.size() / 2]);

  TriangleEstimate out;
  out.w_hat = estimate;
  out.pairs = pairs;
  out.reps_per_edge = reps;
  out.boost = boost;
  return out;
}

}  // namespace kgraph
