#include "kgraph/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace kgraph {

const char* kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::exponential: return "exponential";
    case KernelFamily::laplacian: return "laplacian";
    case KernelFamily::rational_quadratic: return "rational_quadratic";
  }
  return "?";
}

KernelFamily kernel_family_from_name(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "exponential") return KernelFamily::exponential;
  if (name == "laplacian") return KernelFamily::laplacian;
  if (name == "rational_quadratic") return KernelFamily::rational_quadratic;
  throw input_error("unknown kernel family '" + name + "'");
}

void validate_spec(const KernelSpec& spec) {
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma))
    throw input_error("kernel spec: sigma must be positive and finite");
  if (spec.family == KernelFamily::rational_quadratic &&
      (!(spec.beta > 0.0) || !std::isfinite(spec.beta)))
    throw input_error("kernel spec: beta must be positive and finite");
  if (!(spec.tau > 0.0) || !(spec.tau < 1.0))
    throw input_error("kernel spec: tau must lie in (0, 1)");
}

namespace {

double sq_l2(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

double l1(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
  return s;
}

}  // namespace

namespace detail {

double kernel_eval_uncounted(const KernelSpec& spec, std::span<const double> x,
                             std::span<const double> y) {
  if (x.size() != y.size())
    throw input_error("kernel_eval: dimension mismatch");
  switch (spec.family) {
    case KernelFamily::gaussian:
      return std::exp(-sq_l2(x, y) / (spec.sigma * spec.sigma));
    case KernelFamily::exponential:
      return std::exp(-std::sqrt(sq_l2(x, y)) / spec.sigma);
    case KernelFamily::laplacian:
      return std::exp(-l1(x, y) / spec.sigma);
    case KernelFamily::rational_quadratic:
      return std::pow(1.0 + sq_l2(x, y) / (spec.sigma * spec.sigma),
                      -spec.beta);
  }
  throw input_error("kernel_eval: unknown family");
}

}  // namespace detail

double kernel_eval(const KernelSpec& spec, std::span<const double> x,
                   std::span<const double> y) {
  counters::add_kernel_evaluations();
  return detail::kernel_eval_uncounted(spec, x, y);
}

double squared_kernel_scale(const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::laplacian:
    case KernelFamily::exponential:
      // distance enters linearly, so doubling the points squares the value
      return 2.0;
    case KernelFamily::gaussian:
      // the exponent is quadratic in the scale: c^2 = 2
      return std::sqrt(2.0);
    case KernelFamily::rational_quadratic:
      throw input_error(
          "squared_kernel_scale: rational_quadratic admits no point scaling "
          "with k(x,y)^2 == k(cx,cy)");
  }
  throw input_error("squared_kernel_scale: unknown family");
}

KernelSpec squared_spec(const KernelSpec& spec) {
  KernelSpec out = spec;
  out.tau = spec.tau * spec.tau;
  return out;
}

double brute_min_pair_weight(const Dataset& data, const KernelSpec& spec) {
  if (data.n() < 2)
    throw input_error("brute_min_pair_weight: need at least two points");
  double best = 1.0;
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t j = i + 1; j < data.n(); ++j)
      best = std::min(best,
                      kernel_eval(spec, data.point(i), data.point(j)));
  return best;
}

namespace {

double pair_distance(const Dataset& data, KernelFamily family, std::size_t i,
                     std::size_t j) {
  if (family == KernelFamily::laplacian)
    return l1(data.point(i), data.point(j));
  return std::sqrt(sq_l2(data.point(i), data.point(j)));
}

}  // namespace

double median_bandwidth(const Dataset& data, KernelFamily family,
                        RngStream& rng) {
  std::size_t n = data.n();
  if (n < 2) throw input_error("median_bandwidth: need at least two points");
  std::vector<double> dists;
  if (n <= 10000) {
    if (n <= 4096) {
      dists.reserve(n * (n - 1) / 2);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          dists.push_back(pair_distance(data, family, i, j));
    } else {
      // exact median by value bisection, constant memory
      double lo = 0.0;
      double hi = 0.0;
      for (std::size_t i = 1; i < n; ++i)
        hi = std::max(hi, pair_distance(data, family, 0, i));
      hi *= 2.0 + 1e-9;
      std::size_t total = n * (n - 1) / 2;
      std::size_t target = (total + 1) / 2;
      for (int it = 0; it < 60 && hi - lo > 1e-12 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        std::size_t below = 0;
        for (std::size_t i = 0; i < n && below < total; ++i)
          for (std::size_t j = i + 1; j < n; ++j)
            if (pair_distance(data, family, i, j) <= mid) ++below;
        if (below >= target)
          hi = mid;
        else
          lo = mid;
      }
      double m = 0.5 * (lo + hi);
      if (!(m > 0.0)) throw data_error("median_bandwidth: zero median distance");
      return m;
    }
  } else {
    dists.reserve(100000);
    for (std::size_t k = 0; k < 100000; ++k) {
      std::size_t i = rng.uniform_index(n);
      std::size_t j = rng.uniform_index(n - 1);
      if (j >= i) ++j;
      dists.push_back(pair_distance(data, family, i, j));
    }
  }
  std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  double m = dists[mid];
  if (!(m > 0.0)) throw data_error("median_bandwidth: zero median distance");
  return m;
}

}  // namespace kgraph
