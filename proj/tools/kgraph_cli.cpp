// Command line driver: wires datasets and kernel configs to the library
// operations and prints one JSON object per run on standard output.
// Exit codes: 0 ok, 2 bad input, 3 data error, 4 convergence failure.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgraph/common.hpp"
#include "kgraph/dataset.hpp"
#include "kgraph/graph.hpp"
#include "kgraph/kde.hpp"
#include "kgraph/kernels.hpp"
#include "kgraph/linalg.hpp"
#include "kgraph/reference.hpp"
#include "kgraph/rng.hpp"
#include "kgraph/sampling.hpp"
#include "kgraph/sparsify.hpp"

using json = nlohmann::ordered_json;

namespace {

struct GlobalConfig {
  std::string data_path;
  std::string format = "auto";  // csv | binary | auto (by extension)
  std::string kernel = "gaussian";
  std::string sigma = "1";  // number or "median"
  double beta = 1.0;
  double tau = 0.5;
  std::string backend = "exact";  // exact | sampling
  double eps = 0.1;
  double delta = 0.05;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = KG_THREADS or 1
  bool reference = false;
};

int resolve_threads(const GlobalConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("KG_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

kgraph::Dataset load_data(const GlobalConfig& cfg) {
  if (cfg.data_path.empty())
    throw kgraph::input_error("--data is required for this command");
  kgraph::DataFormat format = kgraph::DataFormat::csv;
  if (cfg.format == "csv") {
    format = kgraph::DataFormat::csv;
  } else if (cfg.format == "binary" || cfg.format == "bin") {
    format = kgraph::DataFormat::binary_f64;
  } else if (cfg.format == "auto") {
    auto ext = std::filesystem::path(cfg.data_path).extension().string();
    format = (ext == ".bin" || ext == ".kgd")
                 ? kgraph::DataFormat::binary_f64
                 : kgraph::DataFormat::csv;
  } else {
    throw kgraph::input_error("--format must be csv, binary or auto");
  }
  return kgraph::load_dataset(cfg.data_path, format);
}

kgraph::KernelSpec resolve_spec(const GlobalConfig& cfg,
                                const kgraph::Dataset& data, kgraph::RngStream& rng) {
  kgraph::KernelSpec spec;
  spec.family = kgraph::kernel_family_from_name(cfg.kernel);
  spec.beta = cfg.beta;
  spec.tau = cfg.tau;
  if (cfg.sigma == "median") {
    spec.sigma = kgraph::median_bandwidth(data, spec.family, rng);
  } else {
    char* end = nullptr;
    spec.sigma = std::strtod(cfg.sigma.c_str(), &end);
    if (end == cfg.sigma.c_str() || *end != '\0')
      throw kgraph::input_error("--sigma expects a number or 'median'");
  }
  kgraph::validate_spec(spec);
  return spec;
}

kgraph::OracleConfig oracle_config(const GlobalConfig& cfg) {
  kgraph::OracleConfig config;
  config.backend = kgraph::kde_backend_from_name(cfg.backend);
  config.eps = cfg.eps;
  config.delta = cfg.delta;
  return config;
}

// Exact trees at desk scale cache per-node answers; the cache is ~16 n^2
// bytes when every node gets touched, so cap it.
bool memoize_tree(const kgraph::OracleConfig& config, std::size_t n) {
  return config.backend == kgraph::KdeBackend::exact && n <= 2048;
}

kgraph::MultiLevelKde make_tree(const kgraph::Dataset& data,
                                const kgraph::KernelSpec& spec,
                                const GlobalConfig& cfg) {
  kgraph::MultiLevelOptions options;
  options.oracle = oracle_config(cfg);
  if (options.oracle.backend == kgraph::KdeBackend::sampling)
    options.oracle.eps = kgraph::per_level_eps(cfg.eps, data.n());
  options.memoize = memoize_tree(options.oracle, data.n());
  return kgraph::build_multilevel(data, spec, options);
}

double table_eps(const GlobalConfig& cfg) {
  return oracle_config(cfg).backend == kgraph::KdeBackend::exact ? 0.0 : cfg.eps;
}

std::vector<double> load_column_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kgraph::data_error("cannot open vector file: " + path);
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    char* end = nullptr;
    double v = std::strtod(line.c_str(), &end);
    if (end == line.c_str())
      throw kgraph::data_error(path + ": line " + std::to_string(line_no) +
                               " is not a number");
    out.push_back(v);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_edges_csv(const std::string& path, const kgraph::SparsifierGraph& graph) {
  std::ofstream out(path);
  if (!out) throw kgraph::input_error("cannot write to " + path);
  for (const auto& e : graph.edges)
    out << e.u << ',' << e.v << ',' << format_double(e.weight) << '\n';
}

void write_column_csv(const std::string& path, std::span<const double> values) {
  std::ofstream out(path);
  if (!out) throw kgraph::input_error("cannot write to " + path);
  for (double v : values) out << format_double(v) << '\n';
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw kgraph::input_error("cannot write to " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

json params_json(const GlobalConfig& cfg, const kgraph::Dataset& data,
                 const kgraph::KernelSpec& spec) {
  json p;
  p["data"] = cfg.data_path;
  p["n"] = data.n();
  p["dim"] = data.dim();
  p["kernel"] = kgraph::kernel_family_name(spec.family);
  p["sigma"] = spec.sigma;
  if (spec.family == kgraph::KernelFamily::rational_quadratic) p["beta"] = spec.beta;
  p["tau"] = spec.tau;
  p["kde"] = cfg.backend;
  p["eps"] = cfg.eps;
  p["delta"] = cfg.delta;
  p["seed"] = cfg.seed;
  p["threads"] = resolve_threads(cfg);
  return p;
}

struct CommandIO {
  json params;
  json result;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit kernel graph toolkit: sampling, sparsification and "
               "spectral estimation through KDE oracles"};
  app.require_subcommand(1);

  GlobalConfig cfg;
  app.add_option("--data", cfg.data_path, "Dataset file (CSV rows or KGD1 binary)");
  app.add_option("--format", cfg.format, "Dataset format: csv, binary or auto");
  app.add_option("--kernel", cfg.kernel,
                 "gaussian | exponential | laplacian | rational_quadratic");
  app.add_option("--sigma", cfg.sigma, "Bandwidth, a number or 'median'");
  app.add_option("--beta", cfg.beta, "rational_quadratic exponent");
  app.add_option("--tau", cfg.tau, "Promised minimum pairwise kernel value");
  app.add_option("--kde", cfg.backend, "KDE backend: exact | sampling");
  app.add_option("--eps", cfg.eps, "Accuracy knob (KDE / estimators)");
  app.add_option("--delta", cfg.delta, "KDE per-query failure probability");
  app.add_option("--seed", cfg.seed, "RNG seed; same seed, same output");
  app.add_option("--threads", cfg.threads, "Worker threads (or KG_THREADS); default 1");
  app.add_flag("--reference", cfg.reference)->group("");  // dense cross-checks

  // degrees
  auto* cmd_degrees = app.add_subcommand("degrees", "Approximate weighted degree table");

  // sample-vertex
  std::size_t sv_count = 1;
  auto* cmd_sv = app.add_subcommand("sample-vertex", "Draw vertices proportional to degree");
  cmd_sv->add_option("--count", sv_count, "Number of draws");

  // sample-edge
  std::size_t se_count = 1;
  auto* cmd_se = app.add_subcommand("sample-edge", "Draw edges via vertex+neighbor sampling");
  cmd_se->add_option("--count", se_count, "Number of draws");

  // walk
  std::size_t walk_start = 0, walk_steps = 1, walk_count = 1;
  std::string walk_mode = "exact";
  bool walk_trace = false;
  auto* cmd_walk = app.add_subcommand("walk", "Random walk on the kernel graph");
  cmd_walk->add_option("--start", walk_start, "Start vertex")->required();
  cmd_walk->add_option("--steps", walk_steps, "Number of steps")->required();
  cmd_walk->add_option("--count", walk_count, "Number of walks");
  cmd_walk->add_option("--mode", walk_mode, "approx | exact");
  cmd_walk->add_flag("--trace", walk_trace, "Record the full trajectory (count=1)");

  // sparsify
  std::size_t sp_edges = 0;
  double sp_ct = 1.0;
  std::string sp_out;
  auto* cmd_sparsify = app.add_subcommand("sparsify", "Spectral sparsifier of the kernel graph");
  cmd_sparsify->add_option("--edges", sp_edges, "Override the number of sampling rounds t");
  cmd_sparsify->add_option("--c-t", sp_ct, "Multiplier in t = ceil(c_t n ln n / (eps^2 tau^3))");
  cmd_sparsify->add_option("--out", sp_out, "Write u,v,weight CSV here");

  // solve
  std::string solve_b, solve_out = "x.csv";
  double solve_alpha = 1e-6;
  std::size_t solve_edges = 0;
  double solve_ct = 1.0;
  auto* cmd_solve = app.add_subcommand("solve", "Laplacian solve on the sparsifier");
  cmd_solve->add_option("--b", solve_b, "Right-hand side, one value per line")->required();
  cmd_solve->add_option("--alpha", solve_alpha, "Relative residual target");
  cmd_solve->add_option("--edges", solve_edges, "Override sparsifier rounds t");
  cmd_solve->add_option("--c-t", solve_ct, "Sparsifier draw multiplier");
  cmd_solve->add_option("--out", solve_out, "Where to write the solution CSV");

  // lra
  std::size_t lra_rank = 0, lra_rows = 0, lra_cols = 0;
  double lra_eps = 0.0;
  bool lra_dense_v = false;
  std::string lra_out_u, lra_out_v;
  auto* cmd_lra = app.add_subcommand("lra", "Additive-error low-rank approximation");
  cmd_lra->add_option("--rank", lra_rank, "Target rank k")->required();
  cmd_lra->add_option("--rows", lra_rows, "Sampled rows (default 25k, or k/eps)");
  cmd_lra->add_option("--cols", lra_cols, "Sampled columns for the V fit (default k)");
  cmd_lra->add_option("--lra-eps", lra_eps, "Additive error target; sets rows to k/eps");
  cmd_lra->add_flag("--dense-v", lra_dense_v, "Exact projection coefficients (n k evals)");
  cmd_lra->add_option("--out-u", lra_out_u, "Write the k x n row-space factor CSV");
  cmd_lra->add_option("--out-v", lra_out_v, "Write the n x k coefficient factor CSV");

  // eig1
  std::size_t eig_subset = 0;
  double eig_ct = 4.0;
  auto* cmd_eig = app.add_subcommand("eig1", "Top eigenvalue of the kernel matrix");
  cmd_eig->add_option("--subset", eig_subset, "Override the sampled submatrix size");
  cmd_eig->add_option("--c-t", eig_ct, "Multiplier in t = ceil(c_t / (eps^2 tau^2))");

  // spectrum
  std::size_t spec_moments = 6, spec_walks = 100000, spec_grid = 0;
  auto* cmd_spectrum = app.add_subcommand("spectrum", "Spectral density of the normalized Laplacian");
  cmd_spectrum->add_option("--moments", spec_moments, "Highest return moment");
  cmd_spectrum->add_option("--walks", spec_walks, "Walks per moment pass");
  cmd_spectrum->add_option("--grid", spec_grid, "Reconstruction atoms (default 2L)");

  // local-cluster
  std::size_t lc_u = 0, lc_w = 0, lc_k = 2, lc_r = 0, lc_t = 0, lc_max = 200000;
  double lc_phi = 0.0, lc_cs = 2.0;
  auto* cmd_local = app.add_subcommand("local-cluster", "Same-cluster test for two vertices");
  cmd_local->add_option("--u", lc_u, "First vertex")->required();
  cmd_local->add_option("--w", lc_w, "Second vertex")->required();
  cmd_local->add_option("--phi-in", lc_phi, "Inner conductance lower bound")->required();
  cmd_local->add_option("--k", lc_k, "Number of clusters");
  cmd_local->add_option("--c-samples", lc_cs, "Walk-count multiplier");
  cmd_local->add_option("--r", lc_r, "Override walks per vertex");
  cmd_local->add_option("--t", lc_t, "Override walk length");
  cmd_local->add_option("--max-samples", lc_max, "Budget cap on walks per vertex");

  // spectral-cluster
  std::size_t sc_k = 2, sc_edges = 0, sc_restarts = 5;
  double sc_ct = 1.0;
  std::string sc_out;
  auto* cmd_cluster = app.add_subcommand("spectral-cluster", "k-way spectral clustering via the sparsifier");
  cmd_cluster->add_option("--k", sc_k, "Number of clusters")->required();
  cmd_cluster->add_option("--edges", sc_edges, "Override sparsifier rounds t");
  cmd_cluster->add_option("--c-t", sc_ct, "Sparsifier draw multiplier");
  cmd_cluster->add_option("--restarts", sc_restarts, "k-means restarts");
  cmd_cluster->add_option("--out", sc_out, "Write one label per line here");

  // arboricity
  std::size_t arb_samples = 0;
  double arb_cm = 1.0, arb_delta = 0.0;
  auto* cmd_arb = app.add_subcommand("arboricity", "Densest-subgraph density estimate");
  cmd_arb->add_option("--samples", arb_samples, "Override the edge sample count m");
  cmd_arb->add_option("--c-m", arb_cm, "Multiplier in m = ceil(c_m n Delta ln n / eps^2)");
  cmd_arb->add_option("--delta-cap", arb_delta, "Weight-ratio bound Delta (default 1/tau)");

  // triangles
  std::size_t tri_edges = 0, tri_reps = 1, tri_boost = 1;
  auto* cmd_tri = app.add_subcommand("triangles", "Total triangle weight estimate");
  cmd_tri->add_option("--edges", tri_edges, "Uniform vertex pairs per run")->required();
  cmd_tri->add_option("--reps", tri_reps, "Neighbor draws per pair");
  cmd_tri->add_option("--boost", tri_boost, "Median over this many runs");

  // bench
  std::size_t bench_ops = 1000;
  auto* cmd_bench = app.add_subcommand("bench", "Micro pipeline; counters and checksums");
  cmd_bench->add_option("--ops", bench_ops, "Operations per phase");

  // Global options may appear after the subcommand name.
  for (CLI::App* sc : app.get_subcommands([](const CLI::App*) { return true; }))
    sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto started = std::chrono::steady_clock::now();
  std::string command;
  CommandIO io;

  try {
    kgraph::counters::reset();
    kgraph::RngStream rng(cfg.seed);
    kgraph::Dataset data = load_data(cfg);
    kgraph::KernelSpec spec = resolve_spec(cfg, data, rng);
    io.params = params_json(cfg, data, spec);
    const std::size_t n = data.n();

    if (cmd_degrees->parsed()) {
      command = "degrees";
      auto root = kgraph::build_oracle(data, spec, oracle_config(cfg));
      kgraph::DegreeTable table = kgraph::approx_degrees(*root, table_eps(cfg), rng);
      io.result["n"] = n;
      io.result["eps"] = table.eps;
      io.result["total"] = table.total();
      io.result["clamped"] = table.clamped;
      io.result["p"] = table.p;
      if (cfg.reference) {
        auto kernel = kgraph::reference::dense_kernel_matrix(data, spec);
        auto exact = kgraph::reference::exact_degrees(kernel);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          worst = std::max(worst, std::abs(table.p[i] - exact[i]) /
                                      std::max(exact[i], 1e-300));
        io.result["reference"]["max_rel_deviation"] = worst;
      }
    } else if (cmd_sv->parsed()) {
      command = "sample-vertex";
      io.params["count"] = sv_count;
      auto root = kgraph::build_oracle(data, spec, oracle_config(cfg));
      kgraph::DegreeTable table = kgraph::approx_degrees(*root, table_eps(cfg), rng);
      std::vector<std::size_t> draws(sv_count);
      for (auto& d : draws) d = kgraph::sample_vertex(table, rng);
      io.result["count"] = sv_count;
      io.result["indices"] = draws;
    } else if (cmd_se->parsed()) {
      command = "sample-edge";
      io.params["count"] = se_count;
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      json edges = json::array();
      for (std::size_t i = 0; i < se_count; ++i) {
        kgraph::SampledEdge e = kgraph::sample_edge(table, tree, rng);
        json row;
        row["u"] = e.u;
        row["v"] = e.v;
        row["q_uv"] = e.q_uv;
        row["q_vu"] = e.q_vu;
        row["p_u"] = e.p_u;
        row["p_v"] = e.p_v;
        row["emission"] = e.emission_prob();
        edges.push_back(std::move(row));
      }
      io.result["count"] = se_count;
      io.result["edges"] = std::move(edges);
    } else if (cmd_walk->parsed()) {
      command = "walk";
      io.params["start"] = walk_start;
      io.params["steps"] = walk_steps;
      io.params["count"] = walk_count;
      io.params["mode"] = walk_mode;
      kgraph::WalkMode mode;
      if (walk_mode == "approx")
        mode = kgraph::WalkMode::approx;
      else if (walk_mode == "exact")
        mode = kgraph::WalkMode::exact_neighbor;
      else
        throw kgraph::input_error("--mode must be approx or exact");
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      std::vector<std::size_t> endpoints(walk_count);
      json trace;
      for (std::size_t i = 0; i < walk_count; ++i) {
        bool want_trace = walk_trace && walk_count == 1;
        kgraph::WalkResult res = kgraph::random_walk(tree, &table, walk_start,
                                                     walk_steps, mode, rng, want_trace);
        endpoints[i] = res.endpoint;
        if (want_trace) trace = res.trace;
      }
      io.result["endpoints"] = endpoints;
      if (!trace.is_null()) io.result["trace"] = std::move(trace);
    } else if (cmd_sparsify->parsed()) {
      command = "sparsify";
      io.params["c_t"] = sp_ct;
      if (sp_edges > 0) io.params["edges"] = sp_edges;
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      kgraph::SparsifyOptions options;
      options.c_t = sp_ct;
      if (sp_edges > 0) options.t_override = sp_edges;
      kgraph::SparsifierGraph graph =
          kgraph::spectral_sparsify(table, tree, cfg.eps, cfg.tau, rng, options);
      if (!sp_out.empty()) {
        write_edges_csv(sp_out, graph);
        io.result["out"] = sp_out;
      }
      io.result["n"] = graph.n;
      io.result["draws"] = graph.draws;
      io.result["distinct_edges"] = graph.edges.size();
      io.result["total_weight"] = graph.total_weight();
      if (cfg.reference) {
        auto kernel = kgraph::reference::dense_kernel_matrix(data, spec);
        Eigen::MatrixXd lap = kgraph::reference::dense_laplacian(kernel);
        kgraph::LaplacianOperator sparse_op = kgraph::LaplacianOperator::from_graph(graph);
        json errs = json::array();
        for (int trial = 0; trial < 5; ++trial) {
          Eigen::VectorXd x(n);
          for (std::size_t i = 0; i < n; ++i)
            x[static_cast<Eigen::Index>(i)] = rng.gaussian();
          x.array() -= x.mean();
          x.normalize();
          double dense_quad = x.dot(lap * x);
          double sparse_quad = sparse_op.quad({x.data(), static_cast<std::size_t>(x.size())});
          errs.push_back(std::abs(sparse_quad / dense_quad - 1.0));
        }
        io.result["reference"]["quad_errors"] = std::move(errs);
      }
    } else if (cmd_solve->parsed()) {
      command = "solve";
      io.params["b"] = solve_b;
      io.params["alpha"] = solve_alpha;
      io.params["c_t"] = solve_ct;
      if (solve_edges > 0) io.params["edges"] = solve_edges;
      std::vector<double> b = load_column_vector(solve_b);
      if (b.size() != n)
        throw kgraph::data_error("right-hand side has " + std::to_string(b.size()) +
                                 " entries for " + std::to_string(n) + " points");
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      kgraph::SparsifyOptions sparsify_options;
      sparsify_options.c_t = solve_ct;
      if (solve_edges > 0) sparsify_options.t_override = solve_edges;
      kgraph::SparsifierGraph graph =
          kgraph::spectral_sparsify(table, tree, cfg.eps, cfg.tau, rng, sparsify_options);
      kgraph::LaplacianOperator laplacian = kgraph::LaplacianOperator::from_graph(graph);
      kgraph::SolveOptions solve_options;
      solve_options.alpha = solve_alpha;
      kgraph::SolveResult sol = kgraph::solve_laplacian(laplacian, b, solve_options);
      write_column_csv(solve_out, sol.x);
      io.result["out"] = solve_out;
      io.result["residual"] = sol.residual;
      io.result["iterations"] = sol.iterations;
      io.result["ones_component"] = sol.ones_component;
      io.result["sparsifier_edges"] = graph.edges.size();
      if (cfg.reference) {
        auto kernel = kgraph::reference::dense_kernel_matrix(data, spec);
        Eigen::MatrixXd lap = kgraph::reference::dense_laplacian(kernel);
        std::vector<double> truth_raw = kgraph::reference::dense_laplacian_solve(lap, b);
        Eigen::VectorXd truth =
            Eigen::Map<const Eigen::VectorXd>(truth_raw.data(), truth_raw.size());
        Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(sol.x.data(), sol.x.size());
        Eigen::VectorXd diff = xv - truth;
        double err = std::sqrt(diff.dot(lap * diff));
        double scale = std::sqrt(truth.dot(lap * truth));
        io.result["reference"]["lg_error"] = err;
        io.result["reference"]["lg_norm_truth"] = scale;
      }
    } else if (cmd_lra->parsed()) {
      command = "lra";
      io.params["rank"] = lra_rank;
      if (lra_rows > 0) io.params["rows"] = lra_rows;
      if (lra_cols > 0) io.params["cols"] = lra_cols;
      if (lra_eps > 0) io.params["lra_eps"] = lra_eps;
      io.params["dense_v"] = lra_dense_v;
      kgraph::LraOptions options;
      options.rows = lra_rows;
      options.v_columns = lra_cols;
      options.eps = lra_eps;
      options.dense_v = lra_dense_v;
      kgraph::LraFactors factors =
          kgraph::lra_additive(data, spec, lra_rank, oracle_config(cfg), rng, options);
      io.result["k"] = factors.k;
      io.result["rows_sampled"] = factors.rows_sampled;
      io.result["distinct_rows"] = factors.row_indices.size();
      Eigen::MatrixXd gram = factors.u * factors.u.transpose();
      gram -= Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
      io.result["u_orthonormality"] = gram.cwiseAbs().maxCoeff();
      if (!lra_out_u.empty()) {
        write_matrix_csv(lra_out_u, factors.u);
        io.result["out_u"] = lra_out_u;
      }
      if (!lra_out_v.empty()) {
        write_matrix_csv(lra_out_v, factors.v);
        io.result["out_v"] = lra_out_v;
      }
      if (cfg.reference) {
        auto kernel = kgraph::reference::dense_kernel_matrix(data, spec);
        Eigen::MatrixXd approx = factors.v * factors.u;
        double total = kernel.squaredNorm();
        double err = (kernel - approx).squaredNorm();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel);
        double best = 0.0;
        for (Eigen::Index i = 0; i + static_cast<Eigen::Index>(factors.k) < es.eigenvalues().size(); ++i)
          best += es.eigenvalues()[i] * es.eigenvalues()[i];
        io.result["reference"]["rel_err"] = err / total;
        io.result["reference"]["best_rel_err"] = best / total;
      }
    } else if (cmd_eig->parsed()) {
      command = "eig1";
      io.params["c_t"] = eig_ct;
      if (eig_subset > 0) io.params["subset"] = eig_subset;
      kgraph::EigOptions options;
      options.c_t = eig_ct;
      options.t_override = eig_subset;
      kgraph::EigEstimate est =
          kgraph::top_eigenvalue(data, spec, cfg.eps, cfg.tau, rng, options);
      io.result["lambda_hat"] = est.lambda_hat;
      io.result["subset"] = est.support.size();
      io.result["dense_fallback"] = est.dense_fallback;
      if (cfg.reference) {
        auto kernel = kgraph::reference::dense_kernel_matrix(data, spec);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel);
        double lambda1 = es.eigenvalues().maxCoeff();
        io.result["reference"]["lambda1"] = lambda1;
        io.result["reference"]["ratio"] = est.lambda_hat / lambda1;
      }
    } else if (cmd_spectrum->parsed()) {
      command = "spectrum";
      io.params["moments"] = spec_moments;
      io.params["walks"] = spec_walks;
      if (spec_grid > 0) io.params["grid"] = spec_grid;
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      std::vector<double> moments =
          kgraph::spectral_moments(tree, table, spec_moments, spec_walks, rng);
      kgraph::SpectrumSummary summary = kgraph::spectrum_emd(moments, n, spec_grid);
      io.result["moments"] = moments;
      io.result["residual"] = summary.residual;
      io.result["grid"] = summary.grid;
      io.result["weights"] = summary.weights;
      io.result["lambda_tilde"] = summary.lambda_tilde;
      if (cfg.reference) {
        auto kernel = kgraph::reference::dense_kernel_matrix(data, spec);
        std::vector<double> exact =
            kgraph::reference::exact_return_moments(kernel, spec_moments);
        double worst = 0.0;
        for (std::size_t l = 0; l < exact.size(); ++l)
          worst = std::max(worst, std::abs(moments[l] - exact[l]));
        Eigen::MatrixXd norm_lap = kgraph::reference::dense_normalized_laplacian(kernel);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(norm_lap);
        std::vector<double> dense(es.eigenvalues().data(),
                                  es.eigenvalues().data() + es.eigenvalues().size());
        std::sort(dense.rbegin(), dense.rend());
        io.result["reference"]["moment_err_max"] = worst;
        io.result["reference"]["emd_normalized"] =
            kgraph::emd_1d(summary.lambda_tilde, dense, true);
      }
    } else if (cmd_local->parsed()) {
      command = "local-cluster";
      io.params["u"] = lc_u;
      io.params["w"] = lc_w;
      io.params["phi_in"] = lc_phi;
      io.params["k"] = lc_k;
      io.params["c_samples"] = lc_cs;
      if (lc_r > 0) io.params["r"] = lc_r;
      if (lc_t > 0) io.params["t"] = lc_t;
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      kgraph::LocalClusterOptions options;
      options.c_samples = lc_cs;
      options.r_override = lc_r;
      options.t_override = lc_t;
      options.max_samples = lc_max;
      kgraph::ClusterVerdict verdict = kgraph::local_cluster_test(
          tree, table, lc_u, lc_w, lc_phi, lc_k, cfg.eps, cfg.tau, rng, options);
      io.result["same_cluster"] = verdict.same_cluster;
      io.result["statistic"] = verdict.statistic;
      io.result["threshold"] = verdict.threshold;
      io.result["samples"] = verdict.samples;
      io.result["walk_length"] = verdict.walk_length;
    } else if (cmd_cluster->parsed()) {
      command = "spectral-cluster";
      io.params["k"] = sc_k;
      io.params["c_t"] = sc_ct;
      if (sc_edges > 0) io.params["edges"] = sc_edges;
      io.params["restarts"] = sc_restarts;
      kgraph::ClusteringOptions options;
      options.oracle = oracle_config(cfg);
      options.sparsify.c_t = sc_ct;
      if (sc_edges > 0) options.sparsify.t_override = sc_edges;
      options.memoize = memoize_tree(options.oracle, n);
      options.kmeans_restarts = sc_restarts;
      kgraph::ClusteringResult res =
          kgraph::spectral_cluster(data, spec, sc_k, cfg.eps, cfg.tau, rng, options);
      if (!sc_out.empty()) {
        std::ofstream out(sc_out);
        if (!out) throw kgraph::input_error("cannot write to " + sc_out);
        for (std::size_t label : res.labels) out << label << '\n';
        io.result["out"] = sc_out;
      }
      io.result["k"] = sc_k;
      io.result["labels"] = res.labels;
      io.result["eigenvalues"] = res.eigenvalues;
      io.result["inertia"] = res.inertia;
      io.result["sparsifier_edges"] = res.sparsifier_edges;
      io.result["sparsifier_draws"] = res.sparsifier_draws;
    } else if (cmd_arb->parsed()) {
      command = "arboricity";
      io.params["c_m"] = arb_cm;
      if (arb_samples > 0) io.params["samples"] = arb_samples;
      if (arb_delta > 0) io.params["delta_cap"] = arb_delta;
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      kgraph::ArboricityOptions options;
      options.c_m = arb_cm;
      options.m_override = arb_samples;
      options.delta_override = arb_delta;
      kgraph::ArboricityEstimate est =
          kgraph::arboricity_estimate(table, tree, cfg.eps, cfg.tau, rng, options);
      io.result["alpha_hat"] = est.alpha_hat;
      io.result["witness_size"] = est.witness.size();
      io.result["witness"] = est.witness;
      io.result["m_samples"] = est.m_samples;
      io.result["delta"] = est.delta;
      io.result["exact_solver"] = est.exact_solver;
      io.result["distinct_edges"] = est.graph.edges.size();
      if (cfg.reference) {
        auto kernel = kgraph::reference::dense_kernel_matrix(data, spec);
        std::vector<kgraph::WeightedEdge> all;
        all.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j)
            all.push_back({i, j, kernel(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j))});
        kgraph::DensestResult exact = kgraph::densest_subgraph_exact(n, all);
        io.result["reference"]["alpha_exact"] = exact.density;
        io.result["reference"]["ratio"] = est.alpha_hat / exact.density;
      }
    } else if (cmd_tri->parsed()) {
      command = "triangles";
      io.params["edges"] = tri_edges;
      io.params["reps"] = tri_reps;
      io.params["boost"] = tri_boost;
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      kgraph::TriangleOptions options;
      options.boost = tri_boost;
      kgraph::TriangleEstimate est =
          kgraph::triangle_weight_estimate(table, tree, tri_edges, tri_reps, rng, options);
      io.result["w_hat"] = est.w_hat;
      io.result["pairs"] = est.pairs;
      io.result["reps"] = est.reps_per_edge;
      io.result["boost"] = est.boost;
      if (cfg.reference) {
        auto kernel = kgraph::reference::dense_kernel_matrix(data, spec);
        double exact = kgraph::reference::exact_triangle_weight(kernel);
        io.result["reference"]["w_exact"] = exact;
        io.result["reference"]["ratio"] = est.w_hat / exact;
      }
    } else if (cmd_bench->parsed()) {
      command = "bench";
      io.params["ops"] = bench_ops;
      kgraph::MultiLevelKde tree = make_tree(data, spec, cfg);
      kgraph::DegreeTable table = kgraph::approx_degrees(tree, table_eps(cfg), rng);
      auto phase_start = std::chrono::steady_clock::now();
      auto lap = [&phase_start](const char* name) {
        auto now = std::chrono::steady_clock::now();
        double ms = std::chrono::duration<double, std::milli>(now - phase_start).count();
        std::cerr << "bench: " << name << " " << ms << " ms\n";
        phase_start = now;
      };
      std::uint64_t vertex_sum = 0;
      for (std::size_t i = 0; i < bench_ops; ++i)
        vertex_sum += kgraph::sample_vertex(table, rng);
      lap("vertex draws");
      std::uint64_t neighbor_sum = 0;
      for (std::size_t i = 0; i < bench_ops; ++i)
        neighbor_sum += kgraph::sample_neighbor_exact(tree, table, i % n, rng).index;
      lap("neighbor draws");
      kgraph::WalkResult walk = kgraph::random_walk(
          tree, &table, 0, bench_ops, kgraph::WalkMode::exact_neighbor, rng);
      lap("walk steps");
      double kde_sum = 0.0;
      for (std::size_t i = 0; i < bench_ops; ++i)
        kde_sum += tree.node_query(tree.root(), i % n, rng).value;
      lap("root kde queries");
      io.result["ops"] = bench_ops;
      io.result["vertex_checksum"] = vertex_sum;
      io.result["neighbor_checksum"] = neighbor_sum;
      io.result["walk_endpoint"] = walk.endpoint;
      io.result["kde_checksum"] = kde_sum;
    }
  } catch (const kgraph::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const kgraph::data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const kgraph::convergence_error& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  const auto finished = std::chrono::steady_clock::now();
  json out;
  out["command"] = command;
  out["params"] = std::move(io.params);
  out["result"] = std::move(io.result);
  out["kernel_evaluations"] = kgraph::counters::kernel_evaluations();
  out["kde_queries"] = kgraph::counters::kde_queries();
  out["wall_ms"] = std::chrono::duration<double, std::milli>(finished - started).count();
  std::cout << out.dump(2) << "\n";
  return 0;
}
