#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kgraph/kde.hpp"
#include "kgraph/rng.hpp"

namespace kgraph {

// Estimated weighted degrees p_i of the kernel graph (self weight excluded),
// with prefix sums for O(log n) categorical draws. With an exact backend the
// entries are the degrees exactly; with a sampling backend each entry carries
// relative error eps plus an additive 2*eps from the self-term subtraction.
struct DegreeTable {
  std::vector<double> p;
  std::vector<double> prefix;  // prefix[i] = p_0 + ... + p_i
  double eps = 0.0;
  std::size_t clamped = 0;  // entries lifted to the positivity floor

  std::size_t size() const { return p.size(); }
  double total() const { return prefix.empty() ? 0.0 : prefix.back(); }
  // Normalized sampling probability of vertex i.
  double prob(std::size_t i) const { return p[i] / total(); }
};

// One root query per vertex: p_i = kde(x_i) - (1 - eps) * k(x_i, x_i).
// Nonpositive estimates are clamped to (1 - eps) * (n - 1) * tau and counted.
// eps is the table's advertised accuracy; the tree must be at least that
// precise (tree.eps() <= eps).
DegreeTable approx_degrees(const MultiLevelKde& tree, double eps,
                           RngStream& rng);

// Same table from a bare full-range oracle, for callers that only ever need
// the n root queries and no descent tree.
DegreeTable approx_degrees(const KdeOracle& root, double eps, RngStream& rng);

// Exact categorical draw from prefix sums of a positive array: Pr[i] is
// a_i / sum(a), found by binary search. input_error on a nonpositive or
// non-increasing prefix.
std::size_t sample_from_array(std::span<const double> prefix, RngStream& rng);

// Vertex draw proportional to the table entries.
std::size_t sample_vertex(const DegreeTable& table, RngStream& rng);

struct SampledNeighbor {
  std::size_t index = 0;
  // Product of the branch probabilities the descent actually used: the exact
  // probability of emitting this index conditioned on the realized oracle
  // estimates.
  double path_prob = 0.0;
};

// Descend the range tree from the root, querying both children at every
// level with the vertex's own point. The child range containing `vertex`
// has (1 - tree.eps()) * k(x_v, x_v) subtracted, and the singleton {vertex}
// is pinned to zero, so the walk never returns the vertex itself. With an
// exact backend the result is distributed exactly as k(x_v, .) / deg(x_v).
SampledNeighbor sample_neighbor(const MultiLevelKde& tree, std::size_t vertex,
                                RngStream& rng);

// Probability that sample_neighbor(vertex) would emit `target`, obtained by
// replaying the descent along the unique root-to-target path (fresh oracle
// estimates; deterministic for the exact backend).
double neighbor_prob_replay(const MultiLevelKde& tree, std::size_t vertex,
                            std::size_t target, RngStream& rng);

struct RejectionOptions {
  // Multiplies the acceptance envelope. 0 picks 1 for exact trees and 1.25
  // for sampling trees (headroom against estimate noise).
  double envelope_slack = 0.0;
  std::size_t max_rounds = 100000;
};

struct RejectionStats {
  std::uint64_t rounds = 0;      // proposals consumed by the last call
  std::uint64_t violations = 0;  // ratios materially above 1 (clamped)
};

// Exact neighbor draw: proposals from sample_neighbor are accepted with
// probability k(x_v, x_j) / (path_prob * M), where the envelope
// M = slack * deg_upper * ((1 + e) / (1 - e))^levels, e = per-level eps,
// deg_upper = p_v / (1 - eps) from the degree table. Acceptance ratios above
// 1 + 1e-9 raise data_error (a miscalibrated envelope must surface).
SampledNeighbor sample_neighbor_exact(const MultiLevelKde& tree,
                                      const DegreeTable& table,
                                      std::size_t vertex, RngStream& rng,
                                      RejectionStats* stats = nullptr,
                                      RejectionOptions options = {});

struct SampledEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double q_uv = 0.0;  // realized descent probability of v from u
  double q_vu = 0.0;  // replayed descent probability of u from v
  double p_u = 0.0;   // normalized vertex probability of u
  double p_v = 0.0;
  // Per-draw probability that this unordered pair is emitted.
  double emission_prob() const { return p_u * q_uv + p_v * q_vu; }
};

// u from the degree table, v by descent from u, and the reverse descent
// probability replayed deterministically toward u.
SampledEdge sample_edge(const DegreeTable& table, const MultiLevelKde& tree,
                        RngStream& rng);

enum class WalkMode { approx, exact_neighbor };

struct WalkResult {
  std::size_t endpoint = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> trace;  // filled only when requested
};

// T sequential neighbor steps from `start`. exact_neighbor mode needs the
// degree table for the rejection envelope; approx mode may pass nullptr.
WalkResult random_walk(const MultiLevelKde& tree, const DegreeTable* table,
                       std::size_t start, std::size_t steps, WalkMode mode,
                       RngStream& rng, bool record_trace = false);

}  // namespace kgraph
