#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "kgraph/common.hpp"
#include "kgraph/kde.hpp"
#include "kgraph/kernels.hpp"
#include "kgraph/reference.hpp"
#include "kgraph/sampling.hpp"
#include "testutil.hpp"

using namespace kgraph;

namespace {

MultiLevelKde exact_tree(const Dataset& data, const KernelSpec& spec) {
  MultiLevelOptions opts;
  opts.memoize = true;
  return build_multilevel(data, spec, opts);
}

// index of the unordered pair (u, v), u < v, in lexicographic order
std::size_t pair_index(std::size_t n, std::size_t u, std::size_t v) {
  return u * (2 * n - u - 1) / 2 + (v - u - 1);
}

}  // namespace

TEST_CASE("degree table on identical points") {
  auto data = testutil::identical_points(3, 2);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.9};
  auto tree = exact_tree(data, spec);
  RngStream rng(1);
  auto table = approx_degrees(tree, 0.0, rng);
  REQUIRE(table.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(table.p[i] == doctest::Approx(2.0));
  CHECK(table.total() == doctest::Approx(6.0));
  CHECK(table.clamped == 0);
  CHECK(table.prob(1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("degree table matches dense row sums exactly") {
  auto data = testutil::gaussian_cloud(100, 3, 1.0, 21);
  KernelSpec spec{KernelFamily::gaussian, 1.2, 1.0, 1e-6};
  auto tree = exact_tree(data, spec);
  RngStream rng(2);
  auto table = approx_degrees(tree, 0.0, rng);
  auto kernel = reference::dense_kernel_matrix(data, spec);
  auto degs = reference::exact_degrees(kernel);
  for (std::size_t i = 0; i < data.n(); ++i)
    CHECK(std::abs(table.p[i] - degs[i]) <= 1e-10 * degs[i]);
  CHECK(table.prefix.back() == doctest::Approx(table.total()));
  CHECK(std::is_sorted(table.prefix.begin(), table.prefix.end()));
}

TEST_CASE("noisy degree table stays inside the advertised band") {
  // large enough that the subset estimator actually samples
  std::size_t n = 1000;
  auto data = testutil::gaussian_cloud(n, 3, 0.25, 22);
  KernelSpec spec{KernelFamily::gaussian, 4.0, 1.0, 0.5};
  double tau = brute_min_pair_weight(data, spec);
  REQUIRE(tau >= 0.5);
  double eps = 0.1;
  MultiLevelOptions opts;
  opts.oracle.backend = KdeBackend::sampling;
  opts.oracle.eps = eps;
  opts.oracle.delta = 0.01;
  auto tree = build_multilevel(data, spec, opts);
  RngStream rng(3);
  auto table = approx_degrees(tree, eps, rng);
  auto kernel = reference::dense_kernel_matrix(data, spec);
  auto degs = reference::exact_degrees(kernel);
  double band = eps + 2.0 * eps / (static_cast<double>(n - 1) * tau);
  std::size_t misses = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(table.p[i] / degs[i] - 1.0) > band) ++misses;
  // per-query failure budget delta=0.01 plus slack
  CHECK(static_cast<double>(misses) / static_cast<double>(n) <= 0.03);
}

TEST_CASE("degree table rejects contract violations") {
  auto data = testutil::gaussian_cloud(10, 2, 1.0, 23);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  auto tree = exact_tree(data, spec);
  RngStream rng(4);
  CHECK_THROWS_AS(approx_degrees(tree, 1.0, rng), input_error);
  CHECK_THROWS_AS(approx_degrees(tree, -0.1, rng), input_error);
  MultiLevelOptions opts;
  opts.oracle.backend = KdeBackend::sampling;
  opts.oracle.eps = 0.3;
  auto noisy = build_multilevel(data, spec, opts);
  // the tree is coarser than the requested table accuracy
  CHECK_THROWS_AS(approx_degrees(noisy, 0.1, rng), input_error);
  auto one = testutil::identical_points(1, 2);
  auto tiny = exact_tree(one, spec);
  CHECK_THROWS_AS(approx_degrees(tiny, 0.0, rng), input_error);
}

TEST_CASE("prefix-sum draws follow the array ratios") {
  RngStream rng(5);

  std::vector<double> uniform = {1.0, 2.0, 3.0, 4.0};  // prefix of [1,1,1,1]
  std::vector<std::size_t> counts(4, 0);
  std::size_t draws = 40000;
  for (std::size_t i = 0; i < draws; ++i)
    ++counts[sample_from_array(uniform, rng)];
  for (std::size_t c : counts)
    CHECK(std::abs(static_cast<double>(c) / draws - 0.25) <= 0.02);

  std::vector<double> biased = {1.0, 4.0};  // array [1, 3]
  std::vector<std::size_t> two(2, 0);
  for (std::size_t i = 0; i < 10000; ++i) ++two[sample_from_array(biased, rng)];
  CHECK(std::abs(two[0] / 10000.0 - 0.25) <= 0.02);
  CHECK(std::abs(two[1] / 10000.0 - 0.75) <= 0.02);
}

TEST_CASE("prefix-sum draws hit a random array within TV 0.02") {
  RngStream rng(6);
  std::size_t n = 64;
  std::vector<double> a(n);
  for (double& x : a) x = 0.05 + rng.uniform();
  std::vector<double> prefix(n);
  std::partial_sum(a.begin(), a.end(), prefix.begin());
  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = a[i] / prefix.back();
  std::vector<std::size_t> counts(n, 0);
  for (std::size_t i = 0; i < 100000; ++i)
    ++counts[sample_from_array(prefix, rng)];
  CHECK(testutil::empirical_tv(counts, probs) <= 0.02);
}

TEST_CASE("prefix-sum draws reject broken input") {
  RngStream rng(7);
  std::vector<double> empty;
  CHECK_THROWS_AS(sample_from_array(empty, rng), input_error);
  std::vector<double> nonpositive = {-1.0, 1.0};  // array [-1, 2]
  CHECK_THROWS_AS(sample_from_array(nonpositive, rng), input_error);
  std::vector<double> decreasing = {1.0, 0.0};  // array [1, -1]
  CHECK_THROWS_AS(sample_from_array(decreasing, rng), input_error);
}

TEST_CASE("vertex draws follow the degree distribution") {
  auto same = testutil::identical_points(12, 2);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.9};
  auto tree_same = exact_tree(same, spec);
  RngStream rng(8);
  auto table_same = approx_degrees(tree_same, 0.0, rng);
  std::vector<std::size_t> counts(12, 0);
  for (std::size_t i = 0; i < 60000; ++i)
    ++counts[sample_vertex(table_same, rng)];
  std::vector<double> uniform(12, 1.0 / 12.0);
  CHECK(testutil::empirical_tv(counts, uniform) <= 0.02);

  auto data = testutil::gaussian_cloud(200, 3, 1.0, 24);
  KernelSpec g{KernelFamily::gaussian, 0.6, 1.0, 1e-12};
  auto tree = exact_tree(data, g);
  auto table = approx_degrees(tree, 0.0, rng);
  auto kernel = reference::dense_kernel_matrix(data, g);
  auto truth = reference::exact_vertex_distribution(kernel);
  std::vector<std::size_t> hist(200, 0);
  for (std::size_t i = 0; i < 100000; ++i) ++hist[sample_vertex(table, rng)];
  CHECK(testutil::empirical_tv(hist, truth) <= 0.02);
}

TEST_CASE("two points: the neighbor is always the other one") {
  auto data = Dataset::from_rows({{0.0, 0.0}, {0.7, 0.1}});
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.3};
  auto tree = exact_tree(data, spec);
  RngStream rng(9);
  for (int i = 0; i < 50; ++i) {
    auto nb = sample_neighbor(tree, 0, rng);
    CHECK(nb.index == 1);
    CHECK(nb.path_prob == 1.0);
    auto other = sample_neighbor(tree, 1, rng);
    CHECK(other.index == 0);
    CHECK(other.path_prob == 1.0);
  }
  auto table = approx_degrees(tree, 0.0, rng);
  RejectionStats stats;
  auto nb = sample_neighbor_exact(tree, table, 0, rng, &stats);
  CHECK(nb.index == 1);
  CHECK(stats.rounds == 1);  // exact tree: first proposal accepted
}

TEST_CASE("equidistant star yields a uniform neighbor row") {
  auto data = testutil::star_points(9);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.01};
  auto tree = exact_tree(data, spec);
  RngStream rng(10);
  std::vector<std::size_t> counts(8, 0);
  for (std::size_t i = 0; i < 100000; ++i) {
    auto nb = sample_neighbor(tree, 0, rng);
    REQUIRE(nb.index >= 1);
    ++counts[nb.index - 1];
  }
  std::vector<double> uniform(8, 1.0 / 8.0);
  CHECK(testutil::empirical_tv(counts, uniform) <= 0.03);

  // rejection-exact draw: chi-square at the 1% level
  auto table = approx_degrees(tree, 0.0, rng);
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t i = 0; i < 100000; ++i)
    ++counts[sample_neighbor_exact(tree, table, 0, rng).index - 1];
  CHECK(testutil::chi_square(counts, uniform) <= testutil::chi_square_99(7.0));
}

TEST_CASE("neighbor descent matches the dense row on random data") {
  auto data = testutil::gaussian_cloud(128, 3, 1.0, 25);
  KernelSpec spec{KernelFamily::gaussian, 0.9, 1.0, 1e-15};
  auto tree = exact_tree(data, spec);
  auto kernel = reference::dense_kernel_matrix(data, spec);
  RngStream rng(11);
  std::size_t v = 17;
  auto truth = reference::exact_neighbor_distribution(kernel, v);
  std::vector<std::size_t> counts(128, 0);
  for (std::size_t i = 0; i < 100000; ++i)
    ++counts[sample_neighbor(tree, v, rng).index];
  CHECK(counts[v] == 0);  // never the vertex itself
  CHECK(testutil::empirical_tv(counts, truth) <= 0.02);
}

TEST_CASE("replayed descent probabilities reproduce the row exactly") {
  // odd n: the tree is uneven, which stresses the range bookkeeping
  auto data = testutil::gaussian_cloud(33, 3, 1.1, 26);
  KernelSpec spec{KernelFamily::laplacian, 1.4, 1.0, 1e-12};
  auto tree = exact_tree(data, spec);
  auto kernel = reference::dense_kernel_matrix(data, spec);
  RngStream rng(12);
  for (std::size_t v : {0UL, 16UL, 32UL}) {
    auto truth = reference::exact_neighbor_distribution(kernel, v);
    double sum = 0.0;
    for (std::size_t t = 0; t < data.n(); ++t) {
      if (t == v) continue;
      double q = neighbor_prob_replay(tree, v, t, rng);
      sum += q;
      CHECK(std::abs(q - truth[t]) <= 1e-12);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);  // telescoping over all targets
  }
  CHECK_THROWS_AS(neighbor_prob_replay(tree, 3, 3, rng), input_error);
}

TEST_CASE("rejection sampler is exact and cheap on an exact tree") {
  auto data = testutil::gaussian_cloud(64, 3, 1.0, 27);
  KernelSpec spec{KernelFamily::gaussian, 0.8, 1.0, 1e-15};
  auto tree = exact_tree(data, spec);
  auto kernel = reference::dense_kernel_matrix(data, spec);
  RngStream rng(13);
  auto table = approx_degrees(tree, 0.0, rng);
  std::size_t v = 40;
  auto truth = reference::exact_neighbor_distribution(kernel, v);
  std::vector<std::size_t> counts(64, 0);
  RejectionStats stats;
  std::uint64_t rounds = 0;
  for (std::size_t i = 0; i < 100000; ++i) {
    ++counts[sample_neighbor_exact(tree, table, v, rng, &stats).index];
    rounds += stats.rounds;
    CHECK(stats.violations == 0);
  }
  CHECK(testutil::empirical_tv(counts, truth) <= 0.01);
  // proposals already have the target law, so one round each
  CHECK(static_cast<double>(rounds) / 100000.0 <= 1.0 + 1e-9);
}

TEST_CASE("miscalibrated rejection envelopes surface loudly") {
  auto data = testutil::gaussian_cloud(16, 2, 1.0, 28);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.01};
  auto tree = exact_tree(data, spec);
  RngStream rng(14);
  auto table = approx_degrees(tree, 0.0, rng);

  // a degree estimate that undershoots the truth makes acceptance exceed 1
  auto broken = table;
  broken.p[5] *= 0.4;
  std::partial_sum(broken.p.begin(), broken.p.end(), broken.prefix.begin());
  CHECK_THROWS_AS(sample_neighbor_exact(tree, broken, 5, rng), data_error);

  // slack below 1 is rejected outright
  RejectionOptions bad;
  bad.envelope_slack = 0.5;
  CHECK_THROWS_AS(sample_neighbor_exact(tree, table, 0, rng, nullptr, bad),
                  input_error);

  // an absurd envelope burns the round budget
  RejectionOptions huge;
  huge.envelope_slack = 1e9;
  huge.max_rounds = 5;
  CHECK_THROWS_AS(sample_neighbor_exact(tree, table, 0, rng, nullptr, huge),
                  convergence_error);
}

TEST_CASE("edge draws are uniform on an equilateral triangle") {
  double h = std::sqrt(3.0) / 2.0;
  auto data = Dataset::from_rows({{0.0, 0.0}, {1.0, 0.0}, {0.5, h}});
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.3};
  auto tree = exact_tree(data, spec);
  RngStream rng(15);
  auto table = approx_degrees(tree, 0.0, rng);
  std::vector<std::size_t> counts(3, 0);
  for (std::size_t i = 0; i < 100000; ++i) {
    auto e = sample_edge(table, tree, rng);
    REQUIRE(e.u != e.v);
    std::size_t u = std::min(e.u, e.v);
    std::size_t v = std::max(e.u, e.v);
    ++counts[pair_index(3, u, v)];
  }
  std::vector<double> uniform(3, 1.0 / 3.0);
  CHECK(testutil::empirical_tv(counts, uniform) <= 0.03);
}

TEST_CASE("edge draws follow the weight distribution on random data") {
  auto data = testutil::gaussian_cloud(32, 3, 1.0, 29);
  KernelSpec spec{KernelFamily::gaussian, 0.8, 1.0, 1e-12};
  auto tree = exact_tree(data, spec);
  auto kernel = reference::dense_kernel_matrix(data, spec);
  auto truth = reference::exact_edge_distribution(kernel);
  RngStream rng(16);
  auto table = approx_degrees(tree, 0.0, rng);
  std::vector<std::size_t> counts(truth.size(), 0);
  for (std::size_t i = 0; i < 100000; ++i) {
    auto e = sample_edge(table, tree, rng);
    std::size_t u = std::min(e.u, e.v);
    std::size_t v = std::max(e.u, e.v);
    ++counts[pair_index(32, u, v)];
    CHECK(e.q_uv > 0.0);
    CHECK(e.q_uv <= 1.0);
    CHECK(e.q_vu > 0.0);
    CHECK(e.q_vu <= 1.0);
  }
  CHECK(testutil::empirical_tv(counts, truth) <= 0.03);
}

TEST_CASE("reverse descent probabilities replay deterministically") {
  auto data = testutil::gaussian_cloud(48, 2, 1.0, 30);
  KernelSpec spec{KernelFamily::exponential, 1.3, 1.0, 1e-9};
  auto tree = exact_tree(data, spec);
  RngStream rng(17);
  auto table = approx_degrees(tree, 0.0, rng);
  for (int i = 0; i < 200; ++i) {
    auto e = sample_edge(table, tree, rng);
    double again = neighbor_prob_replay(tree, e.v, e.u, rng);
    CHECK(std::abs(e.q_vu - again) <= 1e-12);
    CHECK(e.p_u == doctest::Approx(table.prob(e.u)));
    CHECK(e.p_v == doctest::Approx(table.prob(e.v)));
    CHECK(e.emission_prob() ==
          doctest::Approx(e.p_u * e.q_uv + e.p_v * e.q_vu));
  }
}

TEST_CASE("walks: degenerate cases") {
  auto pair = Dataset::from_rows({{0.0}, {1.0}});
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 0.3};
  auto tree = exact_tree(pair, spec);
  RngStream rng(18);
  auto table = approx_degrees(tree, 0.0, rng);

  auto stay = random_walk(tree, &table, 1, 0, WalkMode::approx, rng);
  CHECK(stay.endpoint == 1);
  CHECK(stay.steps == 0);

  // two vertices alternate forever
  CHECK(random_walk(tree, &table, 0, 3, WalkMode::approx, rng).endpoint == 1);
  CHECK(random_walk(tree, &table, 0, 4, WalkMode::exact_neighbor, rng)
            .endpoint == 0);

  CHECK_THROWS_AS(random_walk(tree, nullptr, 0, 2, WalkMode::exact_neighbor,
                              rng),
                  input_error);
  CHECK_THROWS_AS(random_walk(tree, &table, 7, 2, WalkMode::approx, rng),
                  input_error);
}

TEST_CASE("walk traces never linger on a vertex") {
  auto data = testutil::gaussian_cloud(20, 2, 1.0, 31);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 1e-9};
  auto tree = exact_tree(data, spec);
  RngStream rng(19);
  auto table = approx_degrees(tree, 0.0, rng);
  for (int i = 0; i < 30; ++i) {
    auto res = random_walk(tree, &table, i % 20, 6, WalkMode::exact_neighbor,
                           rng, true);
    REQUIRE(res.trace.size() == 7);
    CHECK(res.trace.front() == static_cast<std::size_t>(i % 20));
    CHECK(res.trace.back() == res.endpoint);
    for (std::size_t s = 1; s < res.trace.size(); ++s)
      CHECK(res.trace[s] != res.trace[s - 1]);
  }
}

TEST_CASE("walk endpoints match the dense walk operator") {
  auto data = testutil::gaussian_cloud(32, 3, 1.0, 32);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 1e-12};
  auto tree = exact_tree(data, spec);
  auto kernel = reference::dense_kernel_matrix(data, spec);
  RngStream rng(20);
  auto table = approx_degrees(tree, 0.0, rng);
  std::size_t start = 5;
  std::size_t walks = 100000;

  auto truth4 = reference::exact_walk_distribution(kernel, start, 4);
  std::vector<std::size_t> counts(32, 0);
  for (std::size_t i = 0; i < walks; ++i)
    ++counts[random_walk(tree, &table, start, 4, WalkMode::exact_neighbor, rng)
                 .endpoint];
  CHECK(testutil::empirical_tv(counts, truth4) <= 0.03);

  // approx mode coincides in law on an exact tree
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t i = 0; i < walks; ++i)
    ++counts[random_walk(tree, nullptr, start, 4, WalkMode::approx, rng)
                 .endpoint];
  CHECK(testutil::empirical_tv(counts, truth4) <= 0.03);
}

TEST_CASE("walks compose: one more exact step lands on the pushed law") {
  auto data = testutil::gaussian_cloud(24, 2, 1.0, 33);
  KernelSpec spec{KernelFamily::gaussian, 1.0, 1.0, 1e-12};
  auto tree = exact_tree(data, spec);
  auto kernel = reference::dense_kernel_matrix(data, spec);
  RngStream rng(21);
  auto table = approx_degrees(tree, 0.0, rng);
  std::size_t start = 3;
  auto truth3 = reference::exact_walk_distribution(kernel, start, 3);
  std::vector<std::size_t> counts(24, 0);
  for (std::size_t i = 0; i < 40000; ++i) {
    std::size_t mid =
        random_walk(tree, &table, start, 2, WalkMode::exact_neighbor, rng)
            .endpoint;
    ++counts[sample_neighbor_exact(tree, table, mid, rng).index];
  }
  CHECK(testutil::empirical_tv(counts, truth3) <= 0.03);
}
