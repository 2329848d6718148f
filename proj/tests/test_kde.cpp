#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "kgraph/common.hpp"
#include "kgraph/kde.hpp"
#include "kgraph/kernels.hpp"
#include "testutil.hpp"

using namespace kgraph;

namespace {

double brute_sum(const Dataset& data, const KernelSpec& spec, IndexRange range,
                 std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = range.begin; i < range.end; ++i)
    s += detail::kernel_eval_uncounted(spec, data.point(i), y);
  return s;
}

}  // namespace

TEST_CASE("exact oracle equals the direct sum") {
  auto data = testutil::gaussian_cloud(60, 3, 1.0, 11);
  KernelSpec spec{KernelFamily::gaussian, 1.5, 1.0, 0.01};
  auto oracle = build_exact_oracle(data, spec);
  RngStream rng(1);
  for (std::size_t i = 0; i < data.n(); i += 7) {
    double truth = brute_sum(data, spec, {0, data.n()}, data.point(i));
    auto est = oracle->query(data.point(i), rng);
    CHECK(est.eps == 0.0);
    CHECK(std::abs(est.value - truth) <= 1e-12 * truth);
  }
  double probe[3] = {0.3, -0.2, 0.9};
  double truth = brute_sum(data, spec, {0, data.n()}, probe);
  CHECK(std::abs(oracle->query(probe, rng).value - truth) <= 1e-12 * truth);
}

TEST_CASE("identical points sum to n and include the self term") {
  auto data = testutil::identical_points(9, 2);
  KernelSpec spec{KernelFamily::exponential, 1.0, 1.0, 0.9};
  auto oracle = build_exact_oracle(data, spec);
  RngStream rng(2);
  CHECK(oracle->query(data.point(0), rng).value == doctest::Approx(9.0));
  CHECK(oracle->query_index(4, rng).value == doctest::Approx(9.0));
}

TEST_CASE("empty index range sums to zero") {
  auto data = testutil::gaussian_cloud(8, 2, 1.0, 5);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  auto oracle = detail::build_exact_range_oracle(data, spec, {3, 3}, false);
  RngStream rng(3);
  CHECK(oracle->query(data.point(0), rng).value == 0.0);
}

TEST_CASE("memoized exact oracle repeats its answers") {
  auto data = testutil::gaussian_cloud(32, 2, 1.0, 6);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  auto plain = build_exact_oracle(data, spec, false);
  auto memo = build_exact_oracle(data, spec, true);
  RngStream rng(4);
  for (std::size_t i = 0; i < data.n(); ++i) {
    double a = plain->query_index(i, rng).value;
    double b = memo->query_index(i, rng).value;
    double c = memo->query_index(i, rng).value;
    CHECK(a == b);
    CHECK(b == c);
  }
}

TEST_CASE("kde queries land on their own counter") {
  auto data = testutil::gaussian_cloud(16, 2, 1.0, 8);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  auto oracle = build_exact_oracle(data, spec);
  RngStream rng(5);
  counters::reset();
  oracle->query(data.point(0), rng);
  oracle->query_index(3, rng);
  CHECK(counters::kde_queries() == 2);
  CHECK(counters::kernel_evaluations() == 0);  // internals are uncounted
}

TEST_CASE("tree shape: node counts and leaf partition") {
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  auto check_shape = [&](std::size_t n, std::size_t want_nodes) {
    auto data = testutil::gaussian_cloud(n, 2, 1.0, n);
    auto tree = build_multilevel(data, spec);
    CHECK(tree.node_count() == want_nodes);
    // leaves are exactly the singletons, each interior range splits in half
    std::set<std::size_t> leaves;
    std::size_t leaf_count = 0;
    for (std::size_t id = 0; id < tree.node_count(); ++id) {
      const auto& node = tree.node(id);
      CHECK(node.range.size() >= 1);
      if (node.leaf()) {
        CHECK(node.range.size() == 1);
        leaves.insert(node.range.begin);
        ++leaf_count;
      } else {
        const auto& l = tree.node(node.left);
        const auto& r = tree.node(node.right);
        CHECK(l.range.begin == node.range.begin);
        CHECK(l.range.end == r.range.begin);
        CHECK(r.range.end == node.range.end);
        CHECK(l.range.size() == node.range.size() / 2);
      }
    }
    CHECK(leaf_count == n);
    CHECK(leaves.size() == n);
    CHECK(*leaves.begin() == 0);
    CHECK(*leaves.rbegin() == n - 1);
  };
  check_shape(8, 15);
  check_shape(5, 9);
  check_shape(1, 1);
}

TEST_CASE("tree levels and per-level accuracy split") {
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  auto d8 = testutil::gaussian_cloud(8, 2, 1.0, 1);
  CHECK(build_multilevel(d8, spec).levels() == 3);
  auto d5 = testutil::gaussian_cloud(5, 2, 1.0, 1);
  CHECK(build_multilevel(d5, spec).levels() == 3);
  auto d1 = testutil::gaussian_cloud(1, 2, 1.0, 1);
  CHECK(build_multilevel(d1, spec).levels() == 0);

  CHECK(per_level_eps(0.3, 8) == doctest::Approx(0.1));
  CHECK(per_level_eps(0.3, 5) == doctest::Approx(0.1));
  CHECK(per_level_eps(0.3, 2) == doctest::Approx(0.3));
  CHECK(per_level_eps(0.3, 1) == doctest::Approx(0.3));
}

TEST_CASE("parent estimates are the sum of the children (exact backend)") {
  auto data = testutil::gaussian_cloud(21, 3, 1.2, 13);
  KernelSpec spec{KernelFamily::laplacian, 1.1, 1.0, 0.01};
  auto tree = build_multilevel(data, spec);
  RngStream rng(6);
  double probe[3] = {0.1, 0.2, -0.4};
  for (std::size_t id = 0; id < tree.node_count(); ++id) {
    const auto& node = tree.node(id);
    if (node.leaf()) continue;
    double parent = node.oracle->query(probe, rng).value;
    double left = tree.node(node.left).oracle->query(probe, rng).value;
    double right = tree.node(node.right).oracle->query(probe, rng).value;
    CHECK(std::abs(parent - (left + right)) <= 1e-12 * (1.0 + parent));
  }
}

TEST_CASE("find_node resolves exactly the tree ranges") {
  auto data = testutil::gaussian_cloud(10, 2, 1.0, 14);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  auto tree = build_multilevel(data, spec);
  CHECK(tree.find_node({0, 10}) == tree.root());
  CHECK(tree.find_node({0, 5}) == tree.node(tree.root()).left);
  CHECK(tree.find_node({5, 10}) == tree.node(tree.root()).right);
  CHECK_THROWS_AS(tree.find_node({1, 4}), input_error);
  CHECK_THROWS_AS(tree.find_node({2, 2}), input_error);
}

TEST_CASE("sampling oracle: small ranges degenerate to the exact sum") {
  auto data = testutil::gaussian_cloud(50, 2, 0.6, 15);
  KernelSpec spec{KernelFamily::gaussian, 2.0, 1.0, 0.3};
  // subset size 4/(tau eps^2) far exceeds n, so every query sums directly
  auto oracle = build_sampling_oracle(data, spec, 0.2, 0.05);
  RngStream rng(7);
  for (std::size_t i = 0; i < 5; ++i) {
    double truth = brute_sum(data, spec, {0, data.n()}, data.point(i));
    auto est = oracle->query(data.point(i), rng);
    CHECK(est.eps == 0.0);
    CHECK(std::abs(est.value - truth) <= 1e-12 * truth);
  }
}

TEST_CASE("sampling oracle concentration at the advertised failure rate") {
  // Big enough that the subset path actually engages: subset = ceil(4 /
  // (0.5 * 0.2^2)) = 200 < n.
  std::size_t n = 400;
  auto data = testutil::gaussian_cloud(n, 3, 0.25, 16);
  KernelSpec spec{KernelFamily::gaussian, 4.0, 1.0, 0.5};
  double tau = brute_min_pair_weight(data, spec);
  REQUIRE(tau >= 0.5);  // the instance must honor its declared floor
  double eps = 0.2;
  double delta = 0.05;
  auto oracle = build_sampling_oracle(data, spec, eps, delta);
  RngStream rng(8);
  double truth = brute_sum(data, spec, {0, data.n()}, data.point(0));
  std::size_t trials = 1000;
  std::size_t misses = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    auto est = oracle->query(data.point(0), rng);
    CHECK(est.eps == eps);
    if (std::abs(est.value - truth) > eps * truth) ++misses;
  }
  CHECK(static_cast<double>(misses) / static_cast<double>(trials) <=
        delta + 0.02);
}

TEST_CASE("oracle construction rejects broken parameters") {
  auto data = testutil::gaussian_cloud(10, 2, 1.0, 17);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  CHECK_THROWS_AS(build_sampling_oracle(data, spec, 0.0, 0.05), input_error);
  CHECK_THROWS_AS(build_sampling_oracle(data, spec, 1.0, 0.05), input_error);
  CHECK_THROWS_AS(build_sampling_oracle(data, spec, 0.1, 0.0), input_error);
  CHECK_THROWS_AS(
      detail::build_exact_range_oracle(data, spec, {0, 11}, false),
      input_error);
  CHECK_THROWS_AS(kde_backend_from_name("fft"), input_error);
  Dataset empty;
  CHECK_THROWS_AS(build_multilevel(empty, spec), input_error);
}

TEST_CASE("multi-level build wires the configured backend") {
  auto data = testutil::gaussian_cloud(12, 2, 1.0, 18);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  MultiLevelOptions opts;
  opts.oracle.backend = KdeBackend::sampling;
  opts.oracle.eps = 0.25;
  auto tree = build_multilevel(data, spec, opts);
  CHECK(tree.backend() == KdeBackend::sampling);
  CHECK(tree.eps() == 0.25);
  auto exact = build_multilevel(data, spec);
  CHECK(exact.backend() == KdeBackend::exact);
  CHECK(exact.eps() == 0.0);
}
