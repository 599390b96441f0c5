#include "sparsenmf/cli.hpp"

#include "sparsenmf/benchmark.hpp"
#include "sparsenmf/io.hpp"
#include "sparsenmf/solver.hpp"
#include "sparsenmf/sparseness.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <sstream>

namespace sparsenmf::cli {

namespace {

namespace fs = std::filesystem;

// Wraps a library error with the flag or file it came from.
struct ContextError : std::runtime_error {
  ContextError(const std::string& context, const std::exception& cause, int code)
      : std::runtime_error(context + ": " + cause.what()), exit_code(code) {}
  int exit_code;
};

template <typename F>
auto with_context(const std::string& context, F&& body) {
  try {
    return body();
  } catch (const io::IoError& e) {
    throw ContextError(context, e, kIoError);
  } catch (const ContextError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw ContextError(context, e, kDataError);
  }
}

// A single-column file holds one vector; otherwise every row is a vector.
std::vector<VectorXd> vectors_of(const MatrixXd& m) {
  std::vector<VectorXd> out;
  if (m.cols() == 1 && m.rows() > 1) {
    out.emplace_back(m.col(0));
  } else {
    for (Index i = 0; i < m.rows(); ++i) out.emplace_back(m.row(i).transpose());
  }
  return out;
}

std::string join(const VectorXd& v) {
  std::string s;
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) s.push_back(' ');
    s += io::format_double(v[i]);
  }
  return s;
}

fs::path sparseness_report_path(const fs::path& report) {
  fs::path p = report;
  return p.replace_extension(".sparseness.csv");
}

struct FitArgs {
  std::string data, out_w, out_h, report;
  Index components = 1;
  double sw = 0.0, sh = 0.0;
  CLI::Option* sw_opt = nullptr;
  CLI::Option* sh_opt = nullptr;
  std::size_t max_iter = SolverConfig{}.max_iterations;
  double tol = SolverConfig{}.objective_rel_tolerance;
  std::uint64_t seed = 0;
};

int run_fit(const FitArgs& a, std::ostream& out) {
  const DataMatrix<double> data = with_context("--data " + a.data, [&] { return io::read_matrix(a.data); });

  ConstraintSpec spec;
  spec.components = a.components;
  if (a.sw_opt->count() > 0) spec.basis_sparseness = a.sw;
  if (a.sh_opt->count() > 0) spec.coeff_sparseness = a.sh;
  SolverConfig config;
  config.max_iterations = a.max_iter;
  config.objective_rel_tolerance = a.tol;
  config.rng_seed = a.seed;

  const FitResult<double> result =
      with_context("fit on " + a.data, [&] { return fit(data, spec, config); });
  const FitReport& report = result.report;

  with_context("--out-w " + a.out_w, [&] { io::write_matrix(result.model.basis, a.out_w); });
  with_context("--out-h " + a.out_h, [&] { io::write_matrix(result.model.coefficients, a.out_h); });

  if (!a.report.empty()) {
    std::string trace = "iteration,objective,stepsize_w,stepsize_h\n";
    for (std::size_t i = 0; i < report.objective_trace.size(); ++i)
      trace += std::to_string(i + 1) + ',' + io::format_double(report.objective_trace[i]) + ',' +
               io::format_double(report.stepsize_trace[i].first) + ',' +
               io::format_double(report.stepsize_trace[i].second) + '\n';
    std::string sparse = "component,basis_sparseness,coeff_sparseness\n";
    for (std::size_t i = 0; i < report.final_basis_sparseness.size(); ++i)
      sparse += std::to_string(i + 1) + ',' + io::format_double(report.final_basis_sparseness[i]) + ',' +
                io::format_double(report.final_coeff_sparseness[i]) + '\n';
    with_context("--report " + a.report, [&] {
      io::write_text(a.report, trace);
      io::write_text(sparseness_report_path(a.report), sparse);
    });
  }

  const double final_obj = report.objective_trace.empty() ? 0.0 : report.objective_trace.back();
  out << "iterations " << report.iterations_run << '\n'
      << "converged " << (report.converged ? "yes" : "no") << '\n'
      << "objective " << io::format_double(final_obj) << '\n'
      << "relative_objective " << io::format_double(final_obj / data.values().squaredNorm()) << '\n';
  for (std::size_t i = 0; i < report.final_basis_sparseness.size(); ++i)
    out << "component " << i + 1 << " basis_sparseness "
        << io::format_double(report.final_basis_sparseness[i]) << " coeff_sparseness "
        << io::format_double(report.final_coeff_sparseness[i]) << '\n';
  return kSuccess;
}

int run_project(const std::string& in, double target_sparseness, double l2, std::ostream& out) {
  const MatrixXd m = with_context("--in " + in, [&] { return io::read_matrix_file(in); });
  std::vector<std::size_t> iterations;
  for (const VectorXd& v : vectors_of(m)) {
    const auto projected = with_context("--in " + in, [&] {
      const auto t = ProjectionTarget<double>::from_sparseness(target_sparseness, l2, v.size());
      return project_nonneg(v, t);
    });
    out << join(projected.vector) << '\n';
    iterations.push_back(projected.trace.iterations);
  }
  out << "iterations";
  for (auto k : iterations) out << ' ' << k;
  out << '\n';
  return kSuccess;
}

int run_sparseness(const std::string& in, std::ostream& out) {
  const MatrixXd m = with_context("--in " + in, [&] { return io::read_matrix_file(in); });
  for (const VectorXd& v : vectors_of(m))
    out << io::format_double(with_context("--in " + in, [&] { return sparseness(v); })) << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-negative matrix factorization with explicit sparseness constraints", "sparsenmf"};
  app.require_subcommand(1);

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Factorize a non-negative data matrix V ~ W H");
  fit_cmd->add_option("--data", fa.data, "Data matrix (.csv or whitespace text)")->required();
  fit_cmd->add_option("--components", fa.components, "Number of components M")
      ->required()
      ->check(CLI::PositiveNumber);
  fa.sw_opt = fit_cmd->add_option("--sw", fa.sw, "Sparseness of each basis column")->check(CLI::Range(0.0, 1.0));
  fa.sh_opt = fit_cmd->add_option("--sh", fa.sh, "Sparseness of each coefficient row")->check(CLI::Range(0.0, 1.0));
  fit_cmd->add_option("--max-iter", fa.max_iter, "Iteration limit")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--tol", fa.tol, "Relative objective decrease treated as converged")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--seed", fa.seed, "Random seed for initialization");
  fit_cmd->add_option("--out-w", fa.out_w, "Output path for W")->required();
  fit_cmd->add_option("--out-h", fa.out_h, "Output path for H")->required();
  fit_cmd->add_option("--report", fa.report, "Objective trace CSV (final sparseness goes to <stem>.sparseness.csv)");

  std::string project_in;
  double project_s = 0.0;
  double project_l2 = 1.0;
  auto* project_cmd = app.add_subcommand("project", "Project vectors onto a sparseness level");
  project_cmd->add_option("--in", project_in, "Vector file; one vector per row, or a single column")->required();
  project_cmd->add_option("--sparseness", project_s, "Target sparseness")->required()->check(CLI::Range(0.0, 1.0));
  project_cmd->add_option("--l2", project_l2, "Target L2 norm")->check(CLI::PositiveNumber);

  std::string sparse_in;
  auto* sparse_cmd = app.add_subcommand("sparseness", "Print the sparseness of each vector");
  sparse_cmd->add_option("--in", sparse_in, "Vector file; one vector per row, or a single column")->required();

  std::string export_w, export_out, export_norm = "per-image";
  io::ImageGridSpec grid;
  auto* export_cmd = app.add_subcommand("export-basis", "Render basis columns as a PGM image grid");
  export_cmd->add_option("--w", export_w, "Basis matrix W (N x M)")->required();
  export_cmd->add_option("--patch-h", grid.patch_height, "Patch height")->required()->check(CLI::PositiveNumber);
  export_cmd->add_option("--patch-w", grid.patch_width, "Patch width")->required()->check(CLI::PositiveNumber);
  export_cmd->add_option("--cols", grid.grid_cols, "Patches per grid row")->required()->check(CLI::PositiveNumber);
  export_cmd->add_option("--out", export_out, "Output .pgm path")->required();
  export_cmd->add_option("--normalization", export_norm, "per-image or global")
      ->check(CLI::IsMember({"per-image", "global"}));

  std::vector<Index> bench_dims = bench::kDefaultDimensions;
  std::vector<double> bench_levels = bench::kDefaultSparseness;
  std::size_t bench_trials = bench::kDefaultTrials;
  std::uint64_t bench_seed = 0;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench-projection", "Projection convergence study");
  bench_cmd->add_option("--dims", bench_dims, "Comma-separated dimensions")->delimiter(',');
  bench_cmd->add_option("--sparseness-grid", bench_levels, "Comma-separated sparseness levels")
      ->delimiter(',');
  bench_cmd->add_option("--trials", bench_trials, "Trials per cell");
  bench_cmd->add_option("--seed", bench_seed, "Random seed");
  bench_cmd->add_option("--out", bench_out, "Output CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fa, out);
    if (project_cmd->parsed()) return run_project(project_in, project_s, project_l2, out);
    if (sparse_cmd->parsed()) return run_sparseness(sparse_in, out);
    if (export_cmd->parsed()) {
      grid.normalization = export_norm == "global" ? io::Normalization::global : io::Normalization::per_image;
      const DataMatrix<double> w = with_context("--w " + export_w, [&] { return io::read_matrix(export_w); });
      with_context("--patch-h/--patch-w for " + export_w, [&] { (void)io::render_basis_grid(w.values(), grid); });
      with_context("--out " + export_out, [&] { io::export_basis_grid(w.values(), grid, export_out); });
      return kSuccess;
    }
    if (bench_cmd->parsed()) {
      const bench::GridReport report = bench::run_grid(bench_dims, bench_levels, bench_trials, bench_seed);
      with_context("--out " + bench_out, [&] { bench::write_csv(report, bench_out); });
      for (const auto& s : report.skipped)
        err << "skipped cell dim=" << s.dimension << " s_init=" << s.initial_sparseness
            << " s_target=" << s.target_sparseness << ": " << s.reason << '\n';
      std::size_t worst = 0;
      for (const auto& c : report.cells) worst = std::max(worst, c.iterations_max);
      out << "cells " << report.cells.size() << '\n' << "max_iterations " << worst << '\n';
      return kSuccess;
    }
  } catch (const ContextError& e) {
    err << "sparsenmf: " << e.what() << '\n';
    return e.exit_code;
  } catch (const std::exception& e) {
    err << "sparsenmf: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace sparsenmf::cli
