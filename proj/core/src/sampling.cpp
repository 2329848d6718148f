#include "kgraph/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace kgraph {

DegreeTable approx_degrees(const KdeOracle& root, double eps, RngStream& rng) {
  const Dataset& data = root.data();
  std::size_t n = data.n();
  if (n < 2) throw input_error("approx_degrees: need at least two points");
  if (root.range().begin != 0 || root.range().end != n)
    throw input_error("approx_degrees: oracle must cover the full dataset");
  if (eps < 0.0 || eps >= 1.0)
    throw input_error("approx_degrees: eps must lie in [0, 1)");
  if (root.eps() > eps)
    throw input_error(
        "approx_degrees: oracle is coarser than the requested eps");
  double tau = root.spec().tau;
  double floor = (1.0 - eps) * static_cast<double>(n - 1) * tau;
  if (!(floor > 0.0))
    throw data_error("approx_degrees: positivity floor is nonpositive");
  DegreeTable table;
  table.eps = eps;
  table.p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double self = kernel_eval(root.spec(), data.point(i), data.point(i));
    double z = root.query_index(i, rng).value;
    double p = z - (1.0 - eps) * self;
    if (!(p > 0.0)) {
      p = floor;
      ++table.clamped;
    }
    table.p[i] = p;
  }
  table.prefix.resize(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += table.p[i];
    table.prefix[i] = acc;
  }
  return table;
}

DegreeTable approx_degrees(const MultiLevelKde& tree, double eps,
                           RngStream& rng) {
  return approx_degrees(*tree.node(tree.root()).oracle, eps, rng);
}

std::size_t sample_from_array(std::span<const double> prefix, RngStream& rng) {
  if (prefix.empty()) throw input_error("sample_from_array: empty prefix");
  // spot-validate the ends; a full monotonicity scan would defeat O(log n)
  if (!(prefix.front() > 0.0) || !(prefix.back() >= prefix.front()))
    throw input_error("sample_from_array: prefix must be positive increasing");
  double total = prefix.back();
  double r = rng.uniform() * total;
  auto it = std::upper_bound(prefix.begin(), prefix.end(), r);
  if (it == prefix.end()) --it;
  return static_cast<std::size_t>(it - prefix.begin());
}

std::size_t sample_vertex(const DegreeTable& table, RngStream& rng) {
  return sample_from_array(table.prefix, rng);
}

namespace {

struct ChildMass {
  double left = 0.0;
  double right = 0.0;
};

// Estimated neighbor mass of the two children as seen from `vertex`.
// The child holding `vertex` loses (1 - eps) * k(x_v, x_v); the singleton
// {vertex} is pinned to zero so the self edge cannot be walked.
ChildMass child_masses(const MultiLevelKde& tree,
                       const MultiLevelKde::Node& node, std::size_t vertex,
                       double self_term, RngStream& rng) {
  const auto& left = tree.node(node.left);
  const auto& right = tree.node(node.right);
  ChildMass mass;
  auto eval = [&](const MultiLevelKde::Node& child,
                  std::size_t id) -> double {
    if (child.range.size() == 1 && child.range.begin == vertex) return 0.0;
    double value = tree.node_query(id, vertex, rng).value;
    if (child.range.contains(vertex)) value -= self_term;
    return std::max(value, 0.0);
  };
  mass.left = eval(left, node.left);
  mass.right = eval(right, node.right);
  return mass;
}

}  // namespace

SampledNeighbor sample_neighbor(const MultiLevelKde& tree, std::size_t vertex,
                                RngStream& rng) {
  const Dataset& data = tree.data();
  std::size_t n = data.n();
  if (n < 2) throw input_error("sample_neighbor: need at least two points");
  if (vertex >= n) throw input_error("sample_neighbor: vertex out of range");
  double self_term =
      (1.0 - tree.eps()) *
      kernel_eval(tree.spec(), data.point(vertex), data.point(vertex));
  std::size_t cur = tree.root();
  double path_prob = 1.0;
  while (!tree.node(cur).leaf()) {
    const auto& node = tree.node(cur);
    ChildMass mass = child_masses(tree, node, vertex, self_term, rng);
    double total = mass.left + mass.right;
    if (!(total > 0.0))
      throw data_error(
          "sample_neighbor: both child estimates vanished; the declared tau "
          "is inconsistent with the data");
    double r = rng.uniform() * total;
    if (r < mass.left) {
      path_prob *= mass.left / total;
      cur = node.left;
    } else {
      path_prob *= mass.right / total;
      cur = node.right;
    }
  }
  std::size_t leaf = tree.node(cur).range.begin;
  // unreachable by construction; kept as a hard guarantee
  if (leaf == vertex)
    throw data_error("sample_neighbor: descent terminated on the vertex");
  return {leaf, path_prob};
}

double neighbor_prob_replay(const MultiLevelKde& tree, std::size_t vertex,
                            std::size_t target, RngStream& rng) {
  const Dataset& data = tree.data();
  std::size_t n = data.n();
  if (n < 2) throw input_error("neighbor_prob_replay: need at least two points");
  if (vertex >= n || target >= n || vertex == target)
    throw input_error("neighbor_prob_replay: bad vertex or target");
  double self_term =
      (1.0 - tree.eps()) *
      kernel_eval(tree.spec(), data.point(vertex), data.point(vertex));
  std::size_t cur = tree.root();
  double path_prob = 1.0;
  while (!tree.node(cur).leaf()) {
    const auto& node = tree.node(cur);
    ChildMass mass = child_masses(tree, node, vertex, self_term, rng);
    double total = mass.left + mass.right;
    if (!(total > 0.0)) return 0.0;
    bool go_left = tree.node(node.left).range.contains(target);
    double branch = go_left ? mass.left : mass.right;
    if (!(branch > 0.0)) return 0.0;
    path_prob *= branch / total;
    cur = go_left ? node.left : node.right;
  }
  return path_prob;
}

SampledNeighbor sample_neighbor_exact(const MultiLevelKde& tree,
                                      const DegreeTable& table,
                                      std::size_t vertex, RngStream& rng,
                                      RejectionStats* stats,
                                      RejectionOptions options) {
  if (table.size() != tree.data().n())
    throw input_error("sample_neighbor_exact: table does not match the tree");
  double slack = options.envelope_slack;
  if (slack == 0.0) slack = tree.eps() == 0.0 ? 1.0 : 1.25;
  if (slack < 1.0)
    throw input_error("sample_neighbor_exact: envelope slack below 1");
  // Per-level error of the tree is its build eps; the path accumulates one
  // (1 +- e) ratio per level.
  double e = tree.eps();
  double levels = static_cast<double>(tree.levels());
  double ratio = e > 0.0 ? std::pow((1.0 + e) / (1.0 - e), levels) : 1.0;
  double deg_upper = table.p[vertex] / (1.0 - table.eps);
  double envelope = slack * deg_upper * ratio;
  if (!(envelope > 0.0))
    throw data_error("sample_neighbor_exact: degenerate envelope");
  RejectionStats local;
  const Dataset& data = tree.data();
  for (std::size_t round = 0; round < options.max_rounds; ++round) {
    SampledNeighbor cand = sample_neighbor(tree, vertex, rng);
    ++local.rounds;
    double w = kernel_eval(tree.spec(), data.point(vertex),
                           data.point(cand.index));
    double accept = w / (cand.path_prob * envelope);
    if (accept > 1.0 + 1e-9)
      throw data_error(
          "sample_neighbor_exact: acceptance ratio above 1; rejection "
          "envelope is miscalibrated");
    if (accept > 1.0) {
      // on an exact tree the ratio is exactly 1, so fp rounding straddles
      // it; only material excess indicates a thin envelope
      if (accept > 1.0 + 1e-12) ++local.violations;
      accept = 1.0;
    }
    if (rng.uniform() < accept) {
      if (stats) *stats = local;
      return cand;
    }
  }
  throw convergence_error(
      "sample_neighbor_exact: no acceptance within the round budget");
}

SampledEdge sample_edge(const DegreeTable& table, const MultiLevelKde& tree,
                        RngStream& rng) {
  SampledEdge edge;
  edge.u = sample_vertex(table, rng);
  SampledNeighbor nb = sample_neighbor(tree, edge.u, rng);
  edge.v = nb.index;
  edge.q_uv = nb.path_prob;
  edge.q_vu = neighbor_prob_replay(tree, edge.v, edge.u, rng);
  edge.p_u = table.prob(edge.u);
  edge.p_v = table.prob(edge.v);
  return edge;
}

WalkResult random_walk(const MultiLevelKde& tree, const DegreeTable* table,
                       std::size_t start, std::size_t steps, WalkMode mode,
                       RngStream& rng, bool record_trace) {
  if (start >= tree.data().n())
    throw input_error("random_walk: start vertex out of range");
  if (mode == WalkMode::exact_neighbor && table == nullptr)
    throw input_error("random_walk: exact_neighbor mode needs a degree table");
  WalkResult result;
  result.steps = steps;
  std::size_t cur = start;
  if (record_trace) result.trace.push_back(cur);
  for (std::size_t t = 0; t < steps; ++t) {
    cur = mode == WalkMode::approx
              ? sample_neighbor(tree, cur, rng).index
              : sample_neighbor_exact(tree, *table, cur, rng).index;
    if (record_trace) result.trace.push_back(cur);
  }
  result.endpoint = cur;
  return result;
}

}  // namespace kgraph
