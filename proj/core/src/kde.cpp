#include "kgraph/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace kgraph {

KdeEstimate KdeOracle::do_query_index(std::size_t index, RngStream& rng) const {
  return do_query(data_->point(index), rng);
}

namespace {

class ExactKdeOracle final : public KdeOracle {
 public:
  ExactKdeOracle(const Dataset* data, const KernelSpec& spec, IndexRange range,
                 bool memoize)
      : KdeOracle(data, spec, range, 0.0, 1.0), memoize_(memoize) {}

 private:
  double sum_over_range(std::span<const double> y) const {
    double s = 0.0;
    for (std::size_t i = range_.begin; i < range_.end; ++i)
      s += detail::kernel_eval_uncounted(spec_, data_->point(i), y);
    return s;
  }

  KdeEstimate do_query(std::span<const double> y,
                       RngStream& /*rng*/) const override {
    return {sum_over_range(y), 0.0};
  }

  KdeEstimate do_query_index(std::size_t index,
                             RngStream& /*rng*/) const override {
    if (!memoize_) return {sum_over_range(data_->point(index)), 0.0};
    if (memo_.empty())
      memo_.assign(data_->n(), std::numeric_limits<double>::quiet_NaN());
    double v = memo_[index];
    if (std::isnan(v)) {
      v = sum_over_range(data_->point(index));
      memo_[index] = v;
    }
    return {v, 0.0};
  }

  bool memoize_;
  mutable std::vector<double> memo_;
};

class SamplingKdeOracle final : public KdeOracle {
 public:
  SamplingKdeOracle(const Dataset* data, const KernelSpec& spec,
                    IndexRange range, double eps, double delta,
                    SamplingKdeOptions options)
      : KdeOracle(data, spec, range, eps, 1.0) {
    if (!(eps > 0.0) || !(eps < 1.0))
      throw input_error("sampling oracle: eps must lie in (0, 1)");
    if (!(delta > 0.0) || !(delta < 1.0))
      throw input_error("sampling oracle: delta must lie in (0, 1)");
    double s = std::ceil(options.c_subset / (spec.tau * eps * eps));
    // A subset at or beyond the range size degenerates to the exact sum, so
    // clamping before the integer cast loses nothing (tiny tau would
    // otherwise overflow the cast).
    s = std::min(s, static_cast<double>(data->n()) + 1.0);
    subset_ = static_cast<std::size_t>(std::max(1.0, s));
    double r = std::ceil(options.c_reps * std::log(1.0 / delta));
    reps_ = static_cast<std::size_t>(std::max(1.0, r));
  }

 private:
  KdeEstimate do_query(std::span<const double> y, RngStream& rng) const override {
    std::size_t m = range_.size();
    if (m <= subset_) {
      double s = 0.0;
      for (std::size_t i = range_.begin; i < range_.end; ++i)
        s += detail::kernel_eval_uncounted(spec_, data_->point(i), y);
      return {s, 0.0};  // degenerated to the exact sum
    }
    std::vector<double> reps(reps_);
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(subset_ * 2);
    double scale = static_cast<double>(m) / static_cast<double>(subset_);
    for (std::size_t r = 0; r < reps_; ++r) {
      chosen.clear();
      // Floyd's without-replacement sampler over [0, m)
      for (std::size_t j = m - subset_; j < m; ++j) {
        std::size_t t = rng.uniform_index(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
      }
      double s = 0.0;
      for (std::size_t off : chosen)
        s += detail::kernel_eval_uncounted(spec_, data_->point(range_.begin + off),
                                           y);
      reps[r] = s * scale;
    }
    std::size_t mid = reps.size() / 2;
    std::nth_element(reps.begin(), reps.begin() + mid, reps.end());
    return {reps[mid], eps_};
  }

  std::size_t subset_ = 0;
  std::size_t reps_ = 0;
};

void check_range(const Dataset& data, IndexRange range) {
  if (range.begin > range.end || range.end > data.n())
    throw input_error("kde oracle: range out of bounds");
}

}  // namespace

namespace detail {

std::unique_ptr<KdeOracle> build_exact_range_oracle(const Dataset& data,
                                                    const KernelSpec& spec,
                                                    IndexRange range,
                                                    bool memoize) {
  validate_spec(spec);
  check_range(data, range);
  return std::make_unique<ExactKdeOracle>(&data, spec, range, memoize);
}

std::unique_ptr<KdeOracle> build_sampling_range_oracle(
    const Dataset& data, const KernelSpec& spec, IndexRange range, double eps,
    double delta, SamplingKdeOptions options) {
  validate_spec(spec);
  check_range(data, range);
  return std::make_unique<SamplingKdeOracle>(&data, spec, range, eps, delta,
                                             options);
}

}  // namespace detail

std::unique_ptr<KdeOracle> build_exact_oracle(const Dataset& data,
                                              const KernelSpec& spec,
                                              bool memoize) {
  return detail::build_exact_range_oracle(data, spec, {0, data.n()}, memoize);
}

std::unique_ptr<KdeOracle> build_sampling_oracle(const Dataset& data,
                                                 const KernelSpec& spec,
                                                 double eps, double delta,
                                                 SamplingKdeOptions options) {
  return detail::build_sampling_range_oracle(data, spec, {0, data.n()}, eps,
                                             delta, options);
}

KdeBackend kde_backend_from_name(const std::string& name) {
  if (name == "exact") return KdeBackend::exact;
  if (name == "sampling") return KdeBackend::sampling;
  throw input_error("unknown kde backend '" + name + "'");
}

const char* kde_backend_name(KdeBackend backend) {
  return backend == KdeBackend::exact ? "exact" : "sampling";
}

std::unique_ptr<KdeOracle> build_oracle(const Dataset& data,
                                        const KernelSpec& spec,
                                        const OracleConfig& config,
                                        bool memoize) {
  if (config.backend == KdeBackend::exact)
    return build_exact_oracle(data, spec, memoize);
  return build_sampling_oracle(data, spec, config.eps, config.delta,
                               config.sampling);
}

double per_level_eps(double eps, std::size_t n) {
  std::size_t levels = 0;
  std::size_t m = 1;
  while (m < n) {
    m *= 2;
    ++levels;
  }
  return eps / static_cast<double>(std::max<std::size_t>(1, levels));
}

std::size_t MultiLevelKde::find_node(IndexRange range) const {
  if (range.begin >= range.end)
    throw input_error("find_node: empty range is not a tree node");
  std::size_t cur = root();
  while (true) {
    const Node& nd = nodes_[cur];
    if (nd.range == range) return cur;
    if (nd.leaf())
      throw input_error("find_node: range is not a node of the tree");
    const Node& lc = nodes_[nd.left];
    if (range.begin >= lc.range.begin && range.end <= lc.range.end) {
      cur = nd.left;
      continue;
    }
    const Node& rc = nodes_[nd.right];
    if (range.begin >= rc.range.begin && range.end <= rc.range.end) {
      cur = nd.right;
      continue;
    }
    throw input_error("find_node: range is not a node of the tree");
  }
}

namespace {

std::size_t build_nodes(std::vector<MultiLevelKde::Node>& nodes,
                        IndexRange range) {
  std::size_t id = nodes.size();
  nodes.push_back({range, MultiLevelKde::npos, MultiLevelKde::npos, nullptr});
  if (range.size() > 1) {
    std::size_t mid = range.begin + range.size() / 2;
    std::size_t left = build_nodes(nodes, {range.begin, mid});
    std::size_t right = build_nodes(nodes, {mid, range.end});
    nodes[id].left = left;
    nodes[id].right = right;
  }
  return id;
}

}  // namespace

MultiLevelKde build_multilevel(const Dataset& data, const KernelSpec& spec,
                               const MultiLevelOptions& options) {
  validate_spec(spec);
  if (data.n() == 0) throw input_error("build_multilevel: empty dataset");
  MultiLevelKde tree;
  tree.data_ = &data;
  tree.spec_ = spec;
  tree.backend_ = options.oracle.backend;
  tree.eps_ =
      options.oracle.backend == KdeBackend::exact ? 0.0 : options.oracle.eps;
  std::size_t levels = 0;
  std::size_t m = 1;
  while (m < data.n()) {
    m *= 2;
    ++levels;
  }
  tree.levels_ = levels;
  build_nodes(tree.nodes_, {0, data.n()});
  for (auto& node : tree.nodes_) {
    if (options.oracle.backend == KdeBackend::exact) {
      node.oracle = detail::build_exact_range_oracle(data, spec, node.range,
                                                     options.memoize);
    } else {
      node.oracle = detail::build_sampling_range_oracle(
          data, spec, node.range, options.oracle.eps, options.oracle.delta,
          options.oracle.sampling);
    }
  }
  return tree;
}

}  // namespace kgraph
