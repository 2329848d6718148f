#include "kgraph/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgraph/common.hpp"

namespace kgraph {

namespace {

// Row i of the kernel matrix against every point. Diagonal is 1 by the
// kernel definition; no evaluation is spent on it.
void fill_kernel_row(const Dataset& data, const KernelSpec& spec,
                     std::size_t i, Eigen::VectorXd& out) {
  const std::size_t n = data.n();
  for (std::size_t j = 0; j < n; ++j) {
    out(static_cast<Eigen::Index>(j)) =
        j == i ? 1.0 : kernel_eval(spec, data.point(i), data.point(j));
  }
}

// Distinct uniform indices, Floyd's algorithm, returned sorted.
std::vector<std::size_t> distinct_uniform(std::size_t count, std::size_t n,
                                          RngStream& rng) {
  std::unordered_set<std::size_t> picked;
  picked.reserve(count * 2);
  for (std::size_t j = n - count; j < n; ++j) {
    std::size_t t = rng.uniform_index(j + 1);
    if (!picked.insert(t).second) picked.insert(j);
  }
  std::vector<std::size_t> out(picked.begin(), picked.end());
  std::sort(out.begin(), out.end());
  return out;
}

// Orthonormal n x k basis whose leading columns keep the span order of the
// given ones; rank deficits are padded with random directions so the result
// always has exactly k orthonormal columns.
Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& y, std::size_t k,
                                    RngStream& rng) {
  const Eigen::Index n = y.rows();
  Eigen::MatrixXd q(n, static_cast<Eigen::Index>(k));
  Eigen::Index filled = 0;
  Eigen::Index src = 0;
  int stalls = 0;
  while (filled < static_cast<Eigen::Index>(k)) {
    Eigen::VectorXd v;
    if (src < y.cols()) {
      v = y.col(src++);
    } else {
      v = Eigen::VectorXd::NullaryExpr(
          n, [&](Eigen::Index) { return rng.gaussian(); });
    }
    // two Gram-Schmidt passes keep orthogonality at machine precision
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < filled; ++j) {
        v -= q.col(j).dot(v) * q.col(j);
      }
    }
    double norm = v.norm();
    if (norm < 1e-10) {
      if (++stalls > 64)
        throw data_error("orthonormal_columns: cannot complete a basis");
      continue;
    }
    stalls = 0;
    q.col(filled++) = v / norm;
  }
  return q;
}

// Top-k right singular directions of the sketch, as n x k columns. Small
// problems get the exact Gram eigendecomposition; larger ones a seeded
// randomized range finder with two power passes.
Eigen::MatrixXd sketch_row_space(const Eigen::MatrixXd& sketch, std::size_t k,
                                 double algebra_budget, RngStream& rng) {
  const Eigen::Index s = sketch.rows();
  const Eigen::Index n = sketch.cols();
  double gram_flops = static_cast<double>(s) * static_cast<double>(s) *
                      static_cast<double>(n);
  if (gram_flops <= algebra_budget) {
    Eigen::MatrixXd gram = sketch * sketch.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    if (es.info() != Eigen::Success)
      throw data_error("lra_additive: Gram eigendecomposition failed");
    const Eigen::VectorXd& vals = es.eigenvalues();  // ascending
    double top = std::max(vals(s - 1), 0.0);
    Eigen::MatrixXd lifted(n, static_cast<Eigen::Index>(k));
    Eigen::Index got = 0;
    for (Eigen::Index t = 0; t < static_cast<Eigen::Index>(k) && t < s; ++t) {
      double lam = vals(s - 1 - t);
      if (lam <= 1e-12 * top || lam <= 0.0) break;
      lifted.col(got++) =
          sketch.transpose() * es.eigenvectors().col(s - 1 - t) /
          std::sqrt(lam);
    }
    return orthonormal_columns(lifted.leftCols(got), k, rng);
  }

  Eigen::Index l = std::min<Eigen::Index>(s, static_cast<Eigen::Index>(k) + 10);
  Eigen::MatrixXd omega = Eigen::MatrixXd::NullaryExpr(
      s, l, [&](Eigen::Index, Eigen::Index) { return rng.gaussian(); });
  Eigen::MatrixXd y = sketch.transpose() * omega;  // n x l
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, l);
    y = sketch.transpose() * (sketch * q);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, l);
  Eigen::MatrixXd b = sketch * q;  // s x l
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.transpose() * b);
  if (es.info() != Eigen::Success)
    throw data_error("lra_additive: projected eigendecomposition failed");
  Eigen::Index take = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), l);
  Eigen::MatrixXd lifted(n, take);
  for (Eigen::Index t = 0; t < take; ++t) {
    lifted.col(t) = q * es.eigenvectors().col(l - 1 - t);
  }
  return orthonormal_columns(lifted, k, rng);
}

}  // namespace

LraFactors lra_additive(const Dataset& data, const KernelSpec& spec,
                        std::size_t k, const OracleConfig& config,
                        RngStream& rng, const LraOptions& options) {
  validate_spec(spec);
  const std::size_t n = data.n();
  if (k == 0) throw input_error("lra_additive: rank must be positive");
  if (n < 2) throw input_error("lra_additive: need at least two points");
  if (k > n) throw input_error("lra_additive: rank exceeds the point count");

  // ||K_i||^2 = sum_j k(x_i,x_j)^2, and squaring the kernel is the same
  // family on a rescaled dataset, so one KDE pass over that dataset prices
  // the whole row-norm table at n queries.
  double scale = squared_kernel_scale(spec);
  Dataset scaled = scale_dataset(data, scale);
  KernelSpec sq = squared_spec(spec);
  double table_eps = config.backend == KdeBackend::exact ? 0.0 : config.eps;
  auto oracle = build_oracle(scaled, sq, config);
  DegreeTable table = approx_degrees(*oracle, table_eps, rng);

  LraFactors out;
  out.k = k;
  out.row_norms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    // put back the self term the degree table removed
    out.row_norms[i] = table.p[i] + (1.0 - table_eps);
  }

  std::size_t s = options.rows;
  if (s == 0) {
    if (options.eps > 0.0) {
      double want = std::ceil(static_cast<double>(k) / options.eps);
      if (!(want < 1e12))
        throw input_error(
            "lra_additive: row formula overflows at this eps; pass rows");
      s = static_cast<std::size_t>(want);
    } else {
      s = 25 * k;
    }
  }
  if (s == 0) s = 1;
  out.rows_sampled = s;

  // i.i.d. row draws; repeats of one row collapse into a single scaled row
  // (multiplicity folds into the scale), which is what saves evaluations.
  std::unordered_map<std::size_t, std::size_t> mult;
  mult.reserve(2 * s);
  for (std::size_t t = 0; t < s; ++t) {
    std::size_t i = sample_vertex(table, rng);
    auto [it, fresh] = mult.try_emplace(i, 0);
    it->second += 1;
    if (fresh) out.row_indices.push_back(i);
  }

  const auto distinct = static_cast<Eigen::Index>(out.row_indices.size());
  Eigen::MatrixXd sketch(distinct, static_cast<Eigen::Index>(n));
  Eigen::VectorXd row(static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < distinct; ++r) {
    std::size_t i = out.row_indices[static_cast<std::size_t>(r)];
    fill_kernel_row(data, spec, i, row);
    double w = std::sqrt(static_cast<double>(mult[i]) /
                         (static_cast<double>(s) * table.prob(i)));
    sketch.row(r) = w * row.transpose();
  }

  Eigen::MatrixXd basis =
      sketch_row_space(sketch, k, options.algebra_budget, rng);  // n x k
  out.u = basis.transpose();

  const auto ke = static_cast<Eigen::Index>(k);
  out.v.resize(static_cast<Eigen::Index>(n), ke);
  if (options.dense_v) {
    // exact minimizer of ||K - V U||_F for orthonormal U: V = K U^T
    for (std::size_t i = 0; i < n; ++i) {
      fill_kernel_row(data, spec, i, row);
      out.v.row(static_cast<Eigen::Index>(i)) =
          (basis.transpose() * row).transpose();
    }
  } else {
    std::size_t cols = options.v_columns;
    if (cols == 0) {
      cols = options.eps > 0.0
                 ? static_cast<std::size_t>(
                       std::ceil(static_cast<double>(k) / options.eps))
                 : k;
    }
    cols = std::min(std::max<std::size_t>(cols, 1), n);
    std::vector<std::size_t> picked = distinct_uniform(cols, n, rng);
    const auto ce = static_cast<Eigen::Index>(cols);
    Eigen::MatrixXd kc(static_cast<Eigen::Index>(n), ce);
    Eigen::MatrixXd uc(ke, ce);
    for (Eigen::Index c = 0; c < ce; ++c) {
      std::size_t j = picked[static_cast<std::size_t>(c)];
      fill_kernel_row(data, spec, j, row);  // column j of K, by symmetry
      kc.col(c) = row;
      uc.col(c) = out.u.col(static_cast<Eigen::Index>(j));
    }
    // ridge keeps the normal matrix invertible when sampled columns of U
    // happen to be nearly dependent
    Eigen::MatrixXd normal = uc * uc.transpose();
    double ridge = 1e-12 * std::max(1.0, normal.trace());
    normal += ridge * Eigen::MatrixXd::Identity(ke, ke);
    out.v = kc * uc.transpose() * normal.ldlt().solve(
                                      Eigen::MatrixXd::Identity(ke, ke));
  }
  return out;
}

EigEstimate top_eigenvalue(const Dataset& data, const KernelSpec& spec,
                           double eps, double tau, RngStream& rng,
                           EigOptions options) {
  validate_spec(spec);
  const std::size_t n = data.n();
  if (n == 0) throw input_error("top_eigenvalue: empty dataset");
  if (!(eps > 0.0 && eps < 1.0))
    throw input_error("top_eigenvalue: eps must lie in (0, 1)");
  if (!(tau > 0.0 && tau < 1.0))
    throw input_error("top_eigenvalue: tau must lie in (0, 1)");

  EigEstimate out;
  std::size_t t = options.t_override;
  if (t == 0) {
    double want = std::ceil(options.c_t / (eps * eps * tau * tau));
    // decide the fallback in double space; tiny tau overflows the cast
    t = want >= static_cast<double>(n) ? n
                                       : static_cast<std::size_t>(want);
  }
  if (t >= n) {
    t = n;
    out.dense_fallback = true;
  }
  if (t == 0) throw input_error("top_eigenvalue: submatrix size is zero");

  if (out.dense_fallback) {
    out.support.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.support[i] = i;
  } else {
    out.support = distinct_uniform(t, n, rng);
  }

  const auto te = static_cast<Eigen::Index>(t);
  Eigen::MatrixXd ks(te, te);
  for (Eigen::Index i = 0; i < te; ++i) {
    ks(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < te; ++j) {
      double w = kernel_eval(spec,
                             data.point(out.support[static_cast<std::size_t>(i)]),
                             data.point(out.support[static_cast<std::size_t>(j)]));
      ks(i, j) = w;
      ks(j, i) = w;
    }
  }

  // gap-independent power method: enough iterations to push the Rayleigh
  // quotient within (1 - eps) of the top eigenvalue regardless of spectrum
  double iters_want = std::ceil(options.c_iters *
                                std::log(static_cast<double>(t) / eps) /
                                std::sqrt(eps));
  if (!(iters_want < 1e9))
    throw input_error(
        "top_eigenvalue: iteration formula overflows at this eps");
  auto iters = static_cast<std::size_t>(iters_want);
  Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(
      te, [&](Eigen::Index) { return rng.gaussian(); });
  v.normalize();
  for (std::size_t it = 0; it < iters; ++it) {
    Eigen::VectorXd w = ks * v;
    double norm = w.norm();
    if (!(norm > 0.0)) {
      v = Eigen::VectorXd::NullaryExpr(
          te, [&](Eigen::Index) { return rng.gaussian(); });
      v.normalize();
      continue;
    }
    v = w / norm;
  }
  double rayleigh_pm = v.dot(ks * v);

  // the all-ones direction certifies lambda_hat >= n * tau + n(1-tau)/t on
  // any dataset honoring the tau floor
  double rayleigh_ones = ks.sum() / static_cast<double>(t);
  if (rayleigh_ones > rayleigh_pm) {
    v = Eigen::VectorXd::Constant(te, 1.0 / std::sqrt(static_cast<double>(t)));
  }
  double rayleigh = std::max(rayleigh_pm, rayleigh_ones);

  Eigen::Index peak = 0;
  v.cwiseAbs().maxCoeff(&peak);
  if (v(peak) < 0.0) v = -v;

  out.lambda_hat = rayleigh * static_cast<double>(n) / static_cast<double>(t);
  out.values.assign(v.data(), v.data() + v.size());
  return out;
}

std::vector<double> spectral_moments(const MultiLevelKde& tree,
                                     const DegreeTable& table,
                                     std::size_t l_max, std::size_t walks,
                                     RngStream& rng) {
  if (l_max == 0)
    throw input_error("spectral_moments: need at least one moment");
  if (walks == 0) throw input_error("spectral_moments: need at least one walk");
  const std::size_t n = tree.data().n();
  if (n < 2) throw input_error("spectral_moments: need at least two points");
  std::vector<double> hits(l_max, 0.0);
  for (std::size_t w = 0; w < walks; ++w) {
    std::size_t start = rng.uniform_index(n);
    std::size_t cur = start;
    for (std::size_t step = 0; step < l_max; ++step) {
      cur = sample_neighbor_exact(tree, table, cur, rng).index;
      if (cur == start) hits[step] += 1.0;
    }
  }
  for (auto& h : hits) h /= static_cast<double>(walks);
  return hits;
}

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (b.size() != m) throw input_error("nnls: dimension mismatch");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (n == 0) return x;
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> pset;
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  double tol = 1e-12 * scale * std::max(1.0, b.cwiseAbs().maxCoeff());

  auto solve_passive = [&]() -> Eigen::VectorXd {
    Eigen::MatrixXd ap(m, static_cast<Eigen::Index>(pset.size()));
    for (std::size_t c = 0; c < pset.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = a.col(pset[c]);
    return ap.colPivHouseholderQr().solve(b);
  };

  const int max_outer = static_cast<int>(3 * n + 16);
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::VectorXd grad = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && grad(j) > best_w) {
        best_w = grad(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    pset.push_back(best);

    for (std::size_t inner = 0; inner <= pset.size() + 2; ++inner) {
      Eigen::VectorXd z = solve_passive();
      bool feasible = true;
      for (std::size_t c = 0; c < pset.size(); ++c) {
        if (z(static_cast<Eigen::Index>(c)) <= 0.0) {
          feasible = false;
          break;
        }
      }
      if (feasible) {
        x.setZero();
        for (std::size_t c = 0; c < pset.size(); ++c)
          x(pset[c]) = z(static_cast<Eigen::Index>(c));
        break;
      }
      double alpha = 1.0;
      for (std::size_t c = 0; c < pset.size(); ++c) {
        double zc = z(static_cast<Eigen::Index>(c));
        if (zc <= 0.0) {
          double xc = x(pset[c]);
          double step = xc / (xc - zc);
          alpha = std::min(alpha, step);
        }
      }
      for (std::size_t c = 0; c < pset.size(); ++c) {
        double xc = x(pset[c]);
        x(pset[c]) = xc + alpha * (z(static_cast<Eigen::Index>(c)) - xc);
      }
      std::vector<Eigen::Index> keep;
      for (auto j : pset) {
        if (x(j) > 1e-14) {
          keep.push_back(j);
        } else {
          x(j) = 0.0;
          passive[static_cast<std::size_t>(j)] = false;
        }
      }
      pset = std::move(keep);
      if (pset.empty()) break;
    }
  }
  return x;
}

SpectrumSummary spectrum_emd(std::span<const double> moments, std::size_t n,
                             std::size_t grid_size) {
  if (moments.empty())
    throw input_error("spectrum_emd: need at least one moment");
  if (n == 0) throw input_error("spectrum_emd: n must be positive");
  std::size_t g = grid_size ? grid_size : 2 * moments.size();
  if (g < 2) g = 2;
  const auto length = static_cast<Eigen::Index>(moments.size());
  const auto ge = static_cast<Eigen::Index>(g);

  SpectrumSummary out;
  out.grid.resize(g);
  for (std::size_t j = 0; j < g; ++j) {
    out.grid[j] = -1.0 + 2.0 * static_cast<double>(j) /
                             static_cast<double>(g - 1);
  }

  // heavily weighted first row pins total mass near 1; renormalized exactly
  // afterwards so infeasible (noisy) moments land on the closest distribution
  const double mass_weight = 100.0;
  Eigen::MatrixXd a(length + 1, ge);
  Eigen::VectorXd b(length + 1);
  for (Eigen::Index j = 0; j < ge; ++j) a(0, j) = mass_weight;
  b(0) = mass_weight;
  for (Eigen::Index l = 1; l <= length; ++l) {
    for (Eigen::Index j = 0; j < ge; ++j) {
      a(l, j) = std::pow(out.grid[static_cast<std::size_t>(j)],
                         static_cast<double>(l));
    }
    b(l) = moments[static_cast<std::size_t>(l - 1)];
  }

  Eigen::VectorXd rho = nnls(a, b);
  double total = rho.sum();
  if (!(total > 0.0)) {
    rho.setConstant(1.0 / static_cast<double>(g));
    total = 1.0;
  } else {
    rho /= total;
  }
  out.weights.assign(rho.data(), rho.data() + rho.size());

  double misfit = 0.0;
  for (Eigen::Index l = 1; l <= length; ++l) {
    double got = 0.0;
    for (Eigen::Index j = 0; j < ge; ++j) got += a(l, j) * rho(j);
    double d = got - b(l);
    misfit += d * d;
  }
  out.residual = std::sqrt(misfit);

  // quantiles of 1 - x: iterate atoms with x descending so the Laplacian
  // values come out ascending, then flip to the advertised descending order
  out.lambda_tilde.resize(n);
  std::size_t ptr = g;  // walks from the largest x down
  double acc = 0.0;
  auto advance = [&]() {
    while (ptr > 0 && acc <= 0.0) {
      --ptr;
      acc += rho(static_cast<Eigen::Index>(ptr));
    }
  };
  advance();
  std::vector<double> ascending(n);
  double consumed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    while (consumed + acc < q && ptr > 0) {
      consumed += acc;
      acc = 0.0;
      advance();
    }
    double lam = 1.0 - out.grid[ptr];
    ascending[i] = std::min(2.0, std::max(0.0, lam));
  }
  for (std::size_t i = 0; i < n; ++i) out.lambda_tilde[i] = ascending[n - 1 - i];
  return out;
}

double emd_1d(std::span<const double> a, std::span<const double> b,
              bool normalized) {
  if (a.size() != b.size()) throw input_error("emd_1d: size mismatch");
  if (a.empty()) return 0.0;
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) sum += std::abs(sa[i] - sb[i]);
  return normalized ? sum / static_cast<double>(sa.size()) : sum;
}

}  // namespace kgraph
