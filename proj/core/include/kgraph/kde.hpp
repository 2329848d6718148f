#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kgraph/common.hpp"
#include "kgraph/dataset.hpp"
#include "kgraph/kernels.hpp"
#include "kgraph/rng.hpp"

namespace kgraph {

struct KdeEstimate {
  double value = 0.0;
  double eps = 0.0;  // the oracle's advertised relative accuracy
};

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  friend bool operator==(const IndexRange& a, const IndexRange& b) {
    return a.begin == b.begin && a.end == b.end;
  }
};

// Kernel-density oracle over a contiguous index range of a dataset: a query
// at y returns an estimate of sum_{i in range} k(x_i, y) within a (1 +- eps)
// factor. Queries are stateless; randomized backends draw fresh subsets per
// call from the supplied stream. Each call counts once on the kde_queries
// line regardless of backend.
class KdeOracle {
 public:
  virtual ~KdeOracle() = default;

  KdeEstimate query(std::span<const double> y, RngStream& rng) const {
    counters::add_kde_query();
    return do_query(y, rng);
  }

  // Query at dataset point `index` of the backing dataset. Lets the exact
  // backend memoize repeated descents; identical in value to query(point).
  KdeEstimate query_index(std::size_t index, RngStream& rng) const {
    counters::add_kde_query();
    return do_query_index(index, rng);
  }

  double eps() const { return eps_; }
  double tau() const { return spec_.tau; }
  // Exponent p in the per-query cost model cost ~ 1/tau^p. Both bundled
  // backends sit at p = 1.
  double cost_exponent() const { return cost_p_; }
  IndexRange range() const { return range_; }
  const Dataset& data() const { return *data_; }
  const KernelSpec& spec() const { return spec_; }

 protected:
  KdeOracle(const Dataset* data, const KernelSpec& spec, IndexRange range,
            double eps, double cost_p)
      : data_(data), spec_(spec), range_(range), eps_(eps), cost_p_(cost_p) {}

  virtual KdeEstimate do_query(std::span<const double> y,
                               RngStream& rng) const = 0;
  virtual KdeEstimate do_query_index(std::size_t index, RngStream& rng) const;

  const Dataset* data_;
  KernelSpec spec_;
  IndexRange range_;
  double eps_;
  double cost_p_;
};

struct SamplingKdeOptions {
  double c_subset = 4.0;  // subset size ceil(c_subset / (tau * eps^2))
  double c_reps = 8.0;    // median over ceil(c_reps * ln(1/delta)) repeats
};

// Exact summation backend, eps = 0. The dataset must outlive the oracle.
// memoize caches per-dataset-point answers (exact values only); a memoized
// oracle is not safe for concurrent queries.
std::unique_ptr<KdeOracle> build_exact_oracle(const Dataset& data,
                                              const KernelSpec& spec,
                                              bool memoize = false);

// Random-subset backend: each repetition averages the kernel over a uniform
// subset of the range (without replacement) scaled to the range size, and the
// repetitions are tamed by a median. Relative error eps with probability
// >= 1 - delta per query, assuming pairwise values >= tau. Ranges no larger
// than the subset size are summed exactly.
std::unique_ptr<KdeOracle> build_sampling_oracle(
    const Dataset& data, const KernelSpec& spec, double eps, double delta,
    SamplingKdeOptions options = {});

namespace detail {
std::unique_ptr<KdeOracle> build_exact_range_oracle(const Dataset& data,
                                                    const KernelSpec& spec,
                                                    IndexRange range,
                                                    bool memoize);
std::unique_ptr<KdeOracle> build_sampling_range_oracle(
    const Dataset& data, const KernelSpec& spec, IndexRange range, double eps,
    double delta, SamplingKdeOptions options);
}  // namespace detail

enum class KdeBackend { exact, sampling };

KdeBackend kde_backend_from_name(const std::string& name);
const char* kde_backend_name(KdeBackend backend);

struct OracleConfig {
  KdeBackend backend = KdeBackend::exact;
  double eps = 0.1;     // ignored by the exact backend (treated as 0)
  double delta = 0.05;  // per-query failure probability, sampling backend
  SamplingKdeOptions sampling = {};
};

std::unique_ptr<KdeOracle> build_oracle(const Dataset& data,
                                        const KernelSpec& spec,
                                        const OracleConfig& config,
                                        bool memoize = false);

struct MultiLevelOptions {
  OracleConfig oracle = {};
  bool memoize = false;
};

// Binary range tree with one oracle per node. The root covers [0, n); a node
// of size m splits into a left child of size floor(m/2) and a right child
// with the rest; singletons are leaves. Node ids are preorder and stable.
class MultiLevelKde {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct Node {
    IndexRange range;
    std::size_t left = npos;
    std::size_t right = npos;
    std::unique_ptr<KdeOracle> oracle;
    bool leaf() const { return left == npos; }
  };

  std::size_t root() const { return 0; }
  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }

  // Number of split levels above the leaves, ceil(log2 n).
  std::size_t levels() const { return levels_; }

  const Dataset& data() const { return *data_; }
  const KernelSpec& spec() const { return spec_; }
  double eps() const { return eps_; }
  KdeBackend backend() const { return backend_; }

  // Id of the node whose range is exactly `range`; input_error otherwise.
  std::size_t find_node(IndexRange range) const;

  // Query the node covering exactly `range`.
  KdeEstimate range_query(IndexRange range, std::span<const double> y,
                          RngStream& rng) const {
    return nodes_[find_node(range)].oracle->query(y, rng);
  }

  KdeEstimate node_query(std::size_t id, std::size_t point_index,
                         RngStream& rng) const {
    return nodes_[id].oracle->query_index(point_index, rng);
  }

 private:
  friend MultiLevelKde build_multilevel(const Dataset&, const KernelSpec&,
                                        const MultiLevelOptions&);

  std::vector<Node> nodes_;
  const Dataset* data_ = nullptr;
  KernelSpec spec_;
  double eps_ = 0.0;
  KdeBackend backend_ = KdeBackend::exact;
  std::size_t levels_ = 0;
};

MultiLevelKde build_multilevel(const Dataset& data, const KernelSpec& spec,
                               const MultiLevelOptions& options = {});

// Per-node accuracy a descent-style consumer should build the tree with so
// that log2(n) multiplicative hits still land within eps overall.
double per_level_eps(double eps, std::size_t n);

}  // namespace kgraph
