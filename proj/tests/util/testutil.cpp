#include "testutil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kgraph/common.hpp"

namespace testutil {

using kgraph::Dataset;
using kgraph::RngStream;

Dataset gaussian_cloud(std::size_t n, std::size_t d, double spread,
                       std::uint64_t seed) {
  RngStream rng(seed, 101);
  std::vector<double> coords(n * d);
  for (double& c : coords) c = spread * rng.gaussian();
  return Dataset(std::move(coords), n, d);
}

Dataset two_blobs(std::size_t n_per, std::size_t d, double separation,
                  double noise, std::uint64_t seed,
                  std::vector<std::size_t>* labels) {
  RngStream rng(seed, 102);
  std::vector<double> coords;
  coords.reserve(2 * n_per * d);
  if (labels) labels->clear();
  for (std::size_t b = 0; b < 2; ++b) {
    double cx = (b == 0 ? -0.5 : 0.5) * separation;
    for (std::size_t i = 0; i < n_per; ++i) {
      coords.push_back(cx + noise * rng.gaussian());
      for (std::size_t j = 1; j < d; ++j)
        coords.push_back(noise * rng.gaussian());
      if (labels) labels->push_back(b);
    }
  }
  return Dataset(std::move(coords), 2 * n_per, d);
}

Dataset nested_circle(std::size_t n_center, std::size_t n_ring, double radius,
                      double center_spread, double ring_noise,
                      std::uint64_t seed, std::vector<std::size_t>* labels) {
  RngStream rng(seed, 103);
  std::vector<double> coords;
  coords.reserve(2 * (n_center + n_ring));
  if (labels) labels->clear();
  for (std::size_t i = 0; i < n_center; ++i) {
    coords.push_back(center_spread * rng.gaussian());
    coords.push_back(center_spread * rng.gaussian());
    if (labels) labels->push_back(0);
  }
  for (std::size_t i = 0; i < n_ring; ++i) {
    double a = 2.0 * M_PI * (static_cast<double>(i) + rng.uniform()) /
               static_cast<double>(n_ring);
    double r = radius + ring_noise * rng.gaussian();
    coords.push_back(r * std::cos(a));
    coords.push_back(r * std::sin(a));
    if (labels) labels->push_back(1);
  }
  return Dataset(std::move(coords), n_center + n_ring, 2);
}

Dataset identical_points(std::size_t n, std::size_t d, double value) {
  return Dataset(std::vector<double>(n * d, value), n, d);
}

Dataset star_points(std::size_t n, double radius) {
  std::vector<double> coords(2 * n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    double a = 2.0 * M_PI * static_cast<double>(i - 1) /
               static_cast<double>(n - 1);
    coords[2 * i] = radius * std::cos(a);
    coords[2 * i + 1] = radius * std::sin(a);
  }
  return Dataset(std::move(coords), n, 2);
}

double empirical_tv(std::span<const std::size_t> counts,
                    std::span<const double> probs) {
  if (counts.size() != probs.size())
    throw kgraph::input_error("empirical_tv: size mismatch");
  double total = 0.0;
  for (std::size_t c : counts) total += static_cast<double>(c);
  double sum = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    sum += std::abs(static_cast<double>(counts[i]) / total - probs[i]);
  return 0.5 * sum;
}

double tv_noise_floor(std::span<const double> probs, std::size_t draws,
                      std::size_t reps, RngStream& rng) {
  std::vector<double> prefix(probs.size());
  std::partial_sum(probs.begin(), probs.end(), prefix.begin());
  double total = prefix.back();
  double acc = 0.0;
  std::vector<std::size_t> counts(probs.size());
  for (std::size_t r = 0; r < reps; ++r) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t k = 0; k < draws; ++k) {
      double x = rng.uniform() * total;
      auto it = std::upper_bound(prefix.begin(), prefix.end(), x);
      if (it == prefix.end()) --it;
      ++counts[static_cast<std::size_t>(it - prefix.begin())];
    }
    acc += empirical_tv(counts, probs);
  }
  return acc / static_cast<double>(reps);
}

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_sd(std::span<const double> xs) {
  double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double chi_square(std::span<const std::size_t> counts,
                  std::span<const double> probs) {
  double total = 0.0;
  for (std::size_t c : counts) total += static_cast<double>(c);
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double expect = total * probs[i];
    if (expect <= 0.0) continue;
    double diff = static_cast<double>(counts[i]) - expect;
    stat += diff * diff / expect;
  }
  return stat;
}

double chi_square_99(double df) {
  const double z99 = 2.3263478740408408;
  double a = 2.0 / (9.0 * df);
  double c = 1.0 - a + z99 * std::sqrt(a);
  return df * c * c * c;
}

std::size_t permuted_mismatch(std::span<const std::size_t> labels,
                              std::span<const std::size_t> truth,
                              std::size_t k) {
  if (labels.size() != truth.size())
    throw kgraph::input_error("permuted_mismatch: size mismatch");
  if (k > 8) throw kgraph::input_error("permuted_mismatch: k too large");
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = labels.size();
  do {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (perm[labels[i]] != truth[i]) ++bad;
    best = std::min(best, bad);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace testutil
