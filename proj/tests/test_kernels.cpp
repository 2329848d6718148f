#include <cmath>
#include <vector>

#include "doctest.h"
#include "kgraph/common.hpp"
#include "kgraph/kernels.hpp"
#include "testutil.hpp"

using namespace kgraph;

namespace {

double eval1d(const KernelSpec& spec, double a, double b) {
  double x[1] = {a};
  double y[1] = {b};
  return kernel_eval(spec, x, y);
}

}  // namespace

TEST_CASE("kernel values at hand-checked points") {
  KernelSpec g{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  CHECK(eval1d(g, 0.7, 0.7) == 1.0);
  CHECK(eval1d(g, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  KernelSpec g2{KernelFamily::gaussian, 2.0, 1.0, 0.5};
  CHECK(eval1d(g2, 0.0, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  KernelSpec l{KernelFamily::laplacian, 1.0, 1.0, 0.5};
  CHECK(eval1d(l, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  KernelSpec e{KernelFamily::exponential, 1.0, 1.0, 0.5};
  CHECK(eval1d(e, 0.0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

  KernelSpec rq{KernelFamily::rational_quadratic, 1.0, 1.0, 0.5};
  CHECK(eval1d(rq, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));

  // l1 vs l2 diverge only beyond one dimension
  KernelSpec l2d{KernelFamily::laplacian, 1.0, 1.0, 0.5};
  KernelSpec e2d{KernelFamily::exponential, 1.0, 1.0, 0.5};
  double x[2] = {0.0, 0.0};
  double y[2] = {1.0, 1.0};
  CHECK(kernel_eval(l2d, x, y) == doctest::Approx(std::exp(-2.0)));
  CHECK(kernel_eval(e2d, x, y) == doctest::Approx(std::exp(-std::sqrt(2.0))));
}

TEST_CASE("kernels are symmetric, land in (0,1], and fix the diagonal") {
  auto data = testutil::gaussian_cloud(24, 3, 1.5, 42);
  std::vector<KernelSpec> specs = {
      {KernelFamily::gaussian, 0.8, 1.0, 0.1},
      {KernelFamily::exponential, 1.3, 1.0, 0.1},
      {KernelFamily::laplacian, 2.0, 1.0, 0.1},
      {KernelFamily::rational_quadratic, 1.1, 2.5, 0.1},
  };
  for (const auto& spec : specs) {
    for (std::size_t i = 0; i < data.n(); ++i) {
      CHECK(kernel_eval(spec, data.point(i), data.point(i)) == 1.0);
      for (std::size_t j = i + 1; j < data.n(); ++j) {
        double a = kernel_eval(spec, data.point(i), data.point(j));
        double b = kernel_eval(spec, data.point(j), data.point(i));
        CHECK(a == b);  // bitwise: same arithmetic both ways
        CHECK(a > 0.0);
        CHECK(a <= 1.0);
      }
    }
  }
}

TEST_CASE("squared-kernel point scaling") {
  auto data = testutil::gaussian_cloud(16, 4, 1.0, 7);
  std::vector<KernelSpec> specs = {
      {KernelFamily::gaussian, 1.4, 1.0, 0.3},
      {KernelFamily::exponential, 0.9, 1.0, 0.3},
      {KernelFamily::laplacian, 1.0, 1.0, 0.3},
  };
  for (const auto& spec : specs) {
    double c = squared_kernel_scale(spec);
    if (spec.family == KernelFamily::gaussian) {
      CHECK(c == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    } else {
      CHECK(c == 2.0);
    }
    for (std::size_t i = 0; i < data.n(); ++i) {
      for (std::size_t j = 0; j < data.n(); ++j) {
        double k = kernel_eval(spec, data.point(i), data.point(j));
        std::vector<double> xi(data.point(i).begin(), data.point(i).end());
        std::vector<double> xj(data.point(j).begin(), data.point(j).end());
        for (double& v : xi) v *= c;
        for (double& v : xj) v *= c;
        double ks = kernel_eval(spec, xi, xj);
        CHECK(std::abs(k * k - ks) <= 1e-12);
      }
    }
  }

  KernelSpec sq = squared_spec(specs[0]);
  CHECK(sq.family == specs[0].family);
  CHECK(sq.sigma == specs[0].sigma);
  CHECK(sq.tau == doctest::Approx(0.09).epsilon(1e-15));

  KernelSpec rq{KernelFamily::rational_quadratic, 1.0, 1.0, 0.3};
  CHECK_THROWS_AS(squared_kernel_scale(rq), input_error);
}

TEST_CASE("spec validation rejects out-of-range parameters") {
  CHECK_THROWS_AS(validate_spec({KernelFamily::gaussian, 0.0, 1.0, 0.5}),
                  input_error);
  CHECK_THROWS_AS(validate_spec({KernelFamily::gaussian, -1.0, 1.0, 0.5}),
                  input_error);
  CHECK_THROWS_AS(
      validate_spec({KernelFamily::rational_quadratic, 1.0, 0.0, 0.5}),
      input_error);
  CHECK_THROWS_AS(validate_spec({KernelFamily::gaussian, 1.0, 1.0, 0.0}),
                  input_error);
  CHECK_THROWS_AS(validate_spec({KernelFamily::gaussian, 1.0, 1.0, 1.0}),
                  input_error);
  CHECK_THROWS_AS(kernel_family_from_name("triangular"), input_error);
  CHECK(kernel_family_from_name("gaussian") == KernelFamily::gaussian);
  CHECK(std::string(kernel_family_name(KernelFamily::laplacian)) ==
        "laplacian");
}

TEST_CASE("dimension mismatch is rejected") {
  KernelSpec g{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  double x[2] = {0.0, 1.0};
  double y[3] = {0.0, 1.0, 2.0};
  CHECK_THROWS_AS(kernel_eval(g, x, y), input_error);
}

TEST_CASE("minimum pairwise weight by brute force") {
  auto same = testutil::identical_points(5, 3);
  KernelSpec g{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  CHECK(brute_min_pair_weight(same, g) == 1.0);

  auto line = Dataset::from_rows({{0.0}, {1.0}, {2.0}});
  KernelSpec l{KernelFamily::laplacian, 1.0, 1.0, 0.01};
  CHECK(brute_min_pair_weight(line, l) ==
        doctest::Approx(std::exp(-2.0)).epsilon(1e-15));

  auto one = testutil::identical_points(1, 2);
  CHECK_THROWS_AS(brute_min_pair_weight(one, g), input_error);
}

TEST_CASE("median bandwidth over pairwise distances") {
  RngStream rng(3);
  auto a = Dataset::from_rows({{0.0}, {1.0}, {3.0}});
  // pair distances 1, 2, 3; upper median by rank
  CHECK(median_bandwidth(a, KernelFamily::gaussian, rng) ==
        doctest::Approx(2.0).epsilon(1e-12));

  auto b = Dataset::from_rows({{0.0, 0.0}, {3.0, 4.0}});
  CHECK(median_bandwidth(b, KernelFamily::exponential, rng) ==
        doctest::Approx(5.0).epsilon(1e-12));
  CHECK(median_bandwidth(b, KernelFamily::laplacian, rng) ==
        doctest::Approx(7.0).epsilon(1e-12));

  auto same = testutil::identical_points(4, 2);
  CHECK_THROWS_AS(median_bandwidth(same, KernelFamily::gaussian, rng),
                  data_error);
}

TEST_CASE("public evaluations are counted, oracle internals are not") {
  KernelSpec g{KernelFamily::gaussian, 1.0, 1.0, 0.5};
  double x[1] = {0.0};
  double y[1] = {1.0};
  counters::reset();
  kernel_eval(g, x, y);
  kernel_eval(g, x, y);
  kernel_eval(g, y, x);
  CHECK(counters::kernel_evaluations() == 3);
  detail::kernel_eval_uncounted(g, x, y);
  CHECK(counters::kernel_evaluations() == 3);
  CHECK(counters::kde_queries() == 0);
}
