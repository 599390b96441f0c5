#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sparsenmf/solver.hpp"

#include <random>

using namespace sparsenmf;

namespace {

DataMatrix<double> uniform_data(Index n, Index t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return DataMatrix<double>(MatrixXd::NullaryExpr(n, t, [&] { return u(rng); }));
}

ConstraintSpec make_spec(Index m, std::optional<double> sw, std::optional<double> sh) {
  ConstraintSpec s;
  s.components = m;
  s.basis_sparseness = sw;
  s.coeff_sparseness = sh;
  return s;
}

}  // namespace

TEST_CASE("initialize without constraints gives positive factors") {
  const auto data = uniform_data(6, 9, 1);
  const auto state = initialize(data, make_spec(3, {}, {}), SolverConfig{});
  CHECK(state.model.basis.rows() == 6);
  CHECK(state.model.basis.cols() == 3);
  CHECK(state.model.coefficients.rows() == 3);
  CHECK(state.model.coefficients.cols() == 9);
  CHECK((state.model.basis.array() > 0.0).all());
  CHECK((state.model.coefficients.array() > 0.0).all());
  CHECK((state.model.basis.array() <= 1.0).all());
  CHECK(state.last_objective == objective(data, state.model));
}

TEST_CASE("initialize projects onto coefficient sparseness") {
  const auto data = uniform_data(20, 100, 2);
  const auto state = initialize(data, make_spec(5, {}, 0.8), SolverConfig{});
  for (Index i = 0; i < 5; ++i) {
    CHECK(std::abs(state.model.coefficients.row(i).norm() - 1.0) < 1e-9);
    CHECK(std::abs(sparseness(state.model.coefficients.row(i)) - 0.8) < 1e-9);
  }
}

TEST_CASE("initialize keeps basis column norms when projecting") {
  const auto data = uniform_data(12, 7, 3);
  SolverConfig cfg;
  cfg.rng_seed = 17;
  const auto raw = initialize(data, make_spec(4, {}, {}), cfg);
  const auto proj = initialize(data, make_spec(4, 0.6, {}), cfg);
  for (Index i = 0; i < 4; ++i) {
    CHECK(std::abs(proj.model.basis.col(i).norm() - raw.model.basis.col(i).norm()) < 1e-12);
    CHECK(std::abs(sparseness(proj.model.basis.col(i)) - 0.6) < 1e-9);
  }
  CHECK(proj.model.coefficients == raw.model.coefficients);
}

TEST_CASE("initialize is deterministic per seed") {
  const auto data = uniform_data(8, 8, 4);
  SolverConfig cfg;
  cfg.rng_seed = 123;
  const auto a = initialize(data, make_spec(3, 0.5, 0.5), cfg);
  const auto b = initialize(data, make_spec(3, 0.5, 0.5), cfg);
  CHECK(a.model.basis == b.model.basis);
  CHECK(a.model.coefficients == b.model.coefficients);
  cfg.rng_seed = 124;
  CHECK(initialize(data, make_spec(3, 0.5, 0.5), cfg).model.basis != a.model.basis);
}

TEST_CASE("initialize rejects constraints on one-dimensional vectors") {
  CHECK_THROWS_AS(initialize(uniform_data(1, 5, 5), make_spec(2, 0.5, {}), SolverConfig{}), FeasibilityError);
  CHECK_THROWS_AS(initialize(uniform_data(5, 1, 5), make_spec(2, {}, 0.5), SolverConfig{}), FeasibilityError);
  CHECK_NOTHROW(initialize(uniform_data(1, 5, 5), make_spec(2, {}, 0.5), SolverConfig{}));
}

TEST_CASE("multiplicative steps keep an exact factorization fixed") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  SolverState<double> state;
  state.model.basis = MatrixXd::NullaryExpr(5, 2, [&] { return u(rng); });
  state.model.coefficients = MatrixXd::NullaryExpr(2, 4, [&] { return u(rng); });
  const DataMatrix<double> data(state.model.basis * state.model.coefficients);
  state.last_objective = objective(data, state.model);
  const auto spec = make_spec(2, {}, {});

  const auto after_w = step_w(state, data, spec, SolverConfig{});
  CHECK((after_w.model.basis - state.model.basis).cwiseAbs().maxCoeff() < 1e-12);
  const auto after_h = step_h(state, data, spec, SolverConfig{});
  CHECK((after_h.model.coefficients - state.model.coefficients).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("projected steps reduce the objective and hold the constraints") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = uniform_data(10, 12, 50 + seed);
    const auto spec = make_spec(3, 0.4, 0.6);
    SolverConfig cfg;
    cfg.rng_seed = seed;
    auto state = initialize(data, spec, cfg);
    for (int k = 0; k < 20; ++k) {
      const double before = state.last_objective;
      state = step_w(std::move(state), data, spec, cfg);
      CHECK(state.last_objective <= before);
      CHECK(state.last_objective == objective(data, state.model));
      for (Index i = 0; i < 3; ++i) CHECK(std::abs(sparseness(state.model.basis.col(i)) - 0.4) < 1e-9);

      const double mid = state.last_objective;
      state = step_h(std::move(state), data, spec, cfg);
      CHECK(state.last_objective <= mid);
      for (Index i = 0; i < 3; ++i) {
        CHECK(std::abs(state.model.coefficients.row(i).norm() - 1.0) < 1e-9);
        CHECK(std::abs(sparseness(state.model.coefficients.row(i)) - 0.6) < 1e-9);
      }
      CHECK((state.model.basis.array() >= 0.0).all());
      CHECK((state.model.coefficients.array() >= 0.0).all());
      CHECK(state.stepsize_w >= cfg.min_stepsize);
      CHECK(state.stepsize_h >= cfg.min_stepsize);
    }
  }
}

TEST_CASE("a projected step that cannot improve stalls without moving") {
  // Exact factorization whose coefficients already satisfy the constraint:
  // the objective is zero and cannot strictly decrease.
  SolverState<double> state;
  state.model.basis = MatrixXd::Constant(3, 1, 0.5);
  Eigen::RowVectorXd h(4);
  h << 1.0, 0.0, 0.0, 0.0;
  state.model.coefficients = h;
  const DataMatrix<double> data(state.model.basis * state.model.coefficients);
  state.last_objective = 0.0;
  const auto spec = make_spec(1, {}, 1.0);
  SolverConfig cfg;
  const auto after = step_h(state, data, spec, cfg);
  CHECK(after.stalled_h);
  CHECK(after.stepsize_h == cfg.min_stepsize);
  CHECK(after.model.coefficients == state.model.coefficients);
  CHECK(after.last_objective == 0.0);
}

TEST_CASE("half gradients match central finite differences") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const DataMatrix<double> data(MatrixXd::NullaryExpr(5, 5, [&] { return u(rng); }));
    FactorModel<double> m{MatrixXd::NullaryExpr(5, 5, [&] { return u(rng); }),
                          MatrixXd::NullaryExpr(5, 5, [&] { return u(rng); })};
    const MatrixXd gw = 2.0 * basis_half_gradient(data, m);
    const MatrixXd gh = 2.0 * coefficient_half_gradient(data, m);
    MatrixXd fw(5, 5), fh(5, 5);
    for (Index i = 0; i < 5; ++i) {
      for (Index j = 0; j < 5; ++j) {
        FactorModel<double> p = m, q = m;
        p.basis(i, j) += h;
        q.basis(i, j) -= h;
        fw(i, j) = (objective(data, p) - objective(data, q)) / (2 * h);
        p = m;
        q = m;
        p.coefficients(i, j) += h;
        q.coefficients(i, j) -= h;
        fh(i, j) = (objective(data, p) - objective(data, q)) / (2 * h);
      }
    }
    CHECK((gw - fw).norm() / fw.norm() < 1e-4);
    CHECK((gh - fh).norm() / fh.norm() < 1e-4);
  }
}

TEST_CASE("unconstrained fit recovers a rank-one matrix") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const VectorXd a = VectorXd::NullaryExpr(7, [&] { return u(rng); });
  const VectorXd b = VectorXd::NullaryExpr(9, [&] { return u(rng); });
  const DataMatrix<double> data(a * b.transpose());
  SolverConfig cfg;
  cfg.max_iterations = 2000;
  const auto result = fit(data, make_spec(1, {}, {}), cfg);
  CHECK(result.report.objective_trace.back() / data.values().squaredNorm() < 1e-12);
}

TEST_CASE("fit trace is monotone and constraints hold at every iteration") {
  const auto data = uniform_data(15, 20, 9);
  const auto spec = make_spec(4, 0.5, 0.7);
  SolverConfig cfg;
  cfg.max_iterations = 300;
  std::size_t observed = 0;
  const auto result = fit<double>(data, spec, cfg, [&](const SolverState<double>& s) {
    ++observed;
    for (Index i = 0; i < 4; ++i) {
      CHECK(std::abs(sparseness(s.model.basis.col(i)) - 0.5) < 1e-9);
      CHECK(std::abs(sparseness(s.model.coefficients.row(i)) - 0.7) < 1e-9);
      CHECK(std::abs(s.model.coefficients.row(i).norm() - 1.0) < 1e-9);
    }
  });
  const auto& trace = result.report.objective_trace;
  CHECK(observed == trace.size());
  CHECK(result.report.iterations_run == trace.size());
  CHECK(result.report.stepsize_trace.size() == trace.size());
  for (std::size_t k = 1; k < trace.size(); ++k) CHECK(trace[k] <= trace[k - 1]);
  REQUIRE(result.report.final_basis_sparseness.size() == 4);
  for (double s : result.report.final_coeff_sparseness) CHECK(std::abs(s - 0.7) < 1e-9);
}

TEST_CASE("fit recovers planted sparse coefficients") {
  std::mt19937_64 rng(100);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  const MatrixXd w0 = MatrixXd::NullaryExpr(20, 5, [&] { return u(rng); });
  MatrixXd h0(5, 100);
  const auto t = ProjectionTarget<double>::from_sparseness(0.8, 1.0, 100);
  for (Index i = 0; i < 5; ++i)
    h0.row(i) = project_nonneg(VectorXd::NullaryExpr(100, [&] { return e(rng); }), t).vector.transpose();
  const DataMatrix<double> data(w0 * h0);
  SolverConfig cfg;
  cfg.max_iterations = 2000;
  cfg.rng_seed = 1;
  const auto result = fit(data, make_spec(5, {}, 0.8), cfg);
  CHECK(result.report.objective_trace.back() / data.values().squaredNorm() <= 1e-2);
}

TEST_CASE("fit is deterministic") {
  const auto data = uniform_data(10, 10, 10);
  SolverConfig cfg;
  cfg.max_iterations = 100;
  cfg.rng_seed = 42;
  const auto a = fit(data, make_spec(3, {}, 0.5), cfg);
  const auto b = fit(data, make_spec(3, {}, 0.5), cfg);
  CHECK(a.report.objective_trace == b.report.objective_trace);
  CHECK(a.model.basis == b.model.basis);
  CHECK(a.model.coefficients == b.model.coefficients);
}

TEST_CASE("fit stops on the relative tolerance") {
  const auto data = uniform_data(6, 6, 11);
  SolverConfig cfg;
  cfg.max_iterations = 100000;
  cfg.objective_rel_tolerance = 1e-3;
  const auto result = fit(data, make_spec(2, {}, {}), cfg);
  CHECK(result.report.converged);
  CHECK(result.report.iterations_run < cfg.max_iterations);
  CHECK(result.report.iterations_run >= cfg.tolerance_window);
}

TEST_CASE("W-only constraint leaves H rows unnormalized") {
  const auto data = uniform_data(8, 10, 12);
  SolverConfig cfg;
  cfg.max_iterations = 50;
  const auto result = fit(data, make_spec(2, 0.5, {}), cfg);
  for (Index i = 0; i < 2; ++i) CHECK(std::abs(sparseness(result.model.basis.col(i)) - 0.5) < 1e-9);
  CHECK(std::abs(result.model.coefficients.row(0).norm() - 1.0) > 1e-6);
}
