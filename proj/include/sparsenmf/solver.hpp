#pragma once

#include "sparsenmf/sparseness.hpp"
#include "sparsenmf/types.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace sparsenmf {

template <typename Scalar>
struct SolverState {
  FactorModel<Scalar> model;
  Scalar stepsize_w = Scalar(1);
  Scalar stepsize_h = Scalar(1);
  std::size_t iteration = 0;
  Scalar last_objective = Scalar(0);
  // Set when the last projected step could not reduce the objective before
  // the step size fell below the configured floor.
  bool stalled_w = false;
  bool stalled_h = false;
};

namespace detail {

// Uniform on (0, 1] from the top 53 bits; avoids the implementation-defined
// std::uniform_real_distribution so seeds reproduce across standard libraries.
inline double unit_open_closed(std::mt19937_64& rng) {
  return (double(rng() >> 11) + 1.0) * 0x1.0p-53;
}

template <typename Scalar>
Matrix<Scalar> random_positive(Index rows, Index cols, std::mt19937_64& rng) {
  Matrix<Scalar> out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = Scalar(unit_open_closed(rng));
  return out;
}

// Column of W: keep its L2 norm, set L1 for the target sparseness.
template <typename Derived>
void project_keep_norm(Eigen::MatrixBase<Derived>&& column, double target) {
  using Scalar = typename Derived::Scalar;
  const Scalar norm = column.norm();
  if (!(norm > Scalar(0))) throw NumericalError("cannot project a zero basis column");
  const auto t = ProjectionTarget<Scalar>::from_sparseness(Scalar(target), norm, column.size());
  column = project_nonneg(column, t).vector;
}

// Row of H: unit L2 norm, L1 for the target sparseness.
template <typename Derived>
void project_unit_norm(Eigen::MatrixBase<Derived>&& row, double target) {
  using Scalar = typename Derived::Scalar;
  const auto t = ProjectionTarget<Scalar>::from_sparseness(Scalar(target), Scalar(1), row.size());
  row = project_nonneg(row.transpose(), t).vector.transpose();
}

inline void require_dimension(Index n, const char* what) {
  if (n < 2)
    throw FeasibilityError(std::string("sparseness constraint on ") + what +
                           " needs dimension >= 2, got " + std::to_string(n));
}

template <typename Scalar>
void check_shapes(const DataMatrix<Scalar>& data, const FactorModel<Scalar>& model) {
  if (model.basis.rows() != data.rows() || model.coefficients.cols() != data.cols() ||
      model.basis.cols() != model.coefficients.rows())
    throw DimensionError("factor shapes do not match the data matrix");
}

}  // namespace detail

/// Half of the gradient of ||V - WH||^2 with respect to W: (WH - V) H^T.
template <typename Scalar>
Matrix<Scalar> basis_half_gradient(const DataMatrix<Scalar>& data, const FactorModel<Scalar>& model) {
  detail::check_shapes(data, model);
  return (model.basis * model.coefficients - data.values()) * model.coefficients.transpose();
}

/// Half of the gradient of ||V - WH||^2 with respect to H: W^T (WH - V).
template <typename Scalar>
Matrix<Scalar> coefficient_half_gradient(const DataMatrix<Scalar>& data,
                                         const FactorModel<Scalar>& model) {
  detail::check_shapes(data, model);
  return model.basis.transpose() * (model.basis * model.coefficients - data.values());
}

/// Random strictly positive factors, projected onto any active sparseness
/// constraints (W columns keep their L2 norm, H rows get unit L2 norm).
template <typename Scalar>
SolverState<Scalar> initialize(const DataMatrix<Scalar>& data, const ConstraintSpec& spec,
                               const SolverConfig& config) {
  spec.validate();
  config.validate();
  if (spec.basis_sparseness) detail::require_dimension(data.rows(), "basis columns");
  if (spec.coeff_sparseness) detail::require_dimension(data.cols(), "coefficient rows");

  std::mt19937_64 rng(config.rng_seed);
  SolverState<Scalar> state;
  state.model.basis = detail::random_positive<Scalar>(data.rows(), spec.components, rng);
  state.model.coefficients = detail::random_positive<Scalar>(spec.components, data.cols(), rng);

  if (spec.basis_sparseness)
    for (Index i = 0; i < spec.components; ++i)
      detail::project_keep_norm(state.model.basis.col(i), *spec.basis_sparseness);
  if (spec.coeff_sparseness)
    for (Index i = 0; i < spec.components; ++i)
      detail::project_unit_norm(state.model.coefficients.row(i), *spec.coeff_sparseness);

  state.stepsize_w = state.stepsize_h = Scalar(config.initial_stepsize);
  state.last_objective = objective(data, state.model);
  return state;
}

/// One update of W. Constrained: projected gradient step with backtracking
/// on mu_W until the objective strictly decreases. Unconstrained: the
/// multiplicative rule W <- W * (V H^T) / (W H H^T).
template <typename Scalar>
SolverState<Scalar> step_w(SolverState<Scalar> state, const DataMatrix<Scalar>& data,
                           const ConstraintSpec& spec, const SolverConfig& config) {
  auto& W = state.model.basis;
  const auto& H = state.model.coefficients;

  if (!spec.basis_sparseness) {
    const Matrix<Scalar> numer = data.values() * H.transpose();
    const Matrix<Scalar> denom =
        (W * (H * H.transpose())).cwiseMax(Scalar(config.denominator_floor));
    W = W.cwiseProduct(numer).cwiseQuotient(denom);
    state.last_objective = objective(data, state.model);
    state.stalled_w = false;
    return state;
  }

  if (state.stalled_w) state.stepsize_w = Scalar(config.initial_stepsize);
  state.stalled_w = false;
  const Matrix<Scalar> grad = basis_half_gradient(data, state.model);
  FactorModel<Scalar> candidate = state.model;
  while (true) {
    candidate.basis = W - state.stepsize_w * grad;
    bool valid = true;
    for (Index i = 0; i < candidate.basis.cols() && valid; ++i) {
      if (candidate.basis.col(i).norm() > Scalar(0))
        detail::project_keep_norm(candidate.basis.col(i), *spec.basis_sparseness);
      else
        valid = false;
    }
    if (valid) {
      const Scalar obj = objective(data, candidate);
      if (obj < state.last_objective) {
        W = std::move(candidate.basis);
        state.last_objective = obj;
        state.stepsize_w *= Scalar(config.stepsize_increase);
        return state;
      }
    }
    state.stepsize_w *= Scalar(config.stepsize_decrease);
    if (state.stepsize_w < Scalar(config.min_stepsize)) {
      state.stepsize_w = Scalar(config.min_stepsize);
      state.stalled_w = true;
      return state;
    }
  }
}

/// Mirror of step_w for H; projected rows have unit L2 norm.
template <typename Scalar>
SolverState<Scalar> step_h(SolverState<Scalar> state, const DataMatrix<Scalar>& data,
                           const ConstraintSpec& spec, const SolverConfig& config) {
  const auto& W = state.model.basis;
  auto& H = state.model.coefficients;

  if (!spec.coeff_sparseness) {
    const Matrix<Scalar> numer = W.transpose() * data.values();
    const Matrix<Scalar> denom =
        ((W.transpose() * W) * H).cwiseMax(Scalar(config.denominator_floor));
    H = H.cwiseProduct(numer).cwiseQuotient(denom);
    state.last_objective = objective(data, state.model);
    state.stalled_h = false;
    return state;
  }

  if (state.stalled_h) state.stepsize_h = Scalar(config.initial_stepsize);
  state.stalled_h = false;
  const Matrix<Scalar> grad = coefficient_half_gradient(data, state.model);
  FactorModel<Scalar> candidate = state.model;
  while (true) {
    candidate.coefficients = H - state.stepsize_h * grad;
    for (Index i = 0; i < candidate.coefficients.rows(); ++i)
      detail::project_unit_norm(candidate.coefficients.row(i), *spec.coeff_sparseness);
    const Scalar obj = objective(data, candidate);
    if (obj < state.last_objective) {
      H = std::move(candidate.coefficients);
      state.last_objective = obj;
      state.stepsize_h *= Scalar(config.stepsize_increase);
      return state;
    }
    state.stepsize_h *= Scalar(config.stepsize_decrease);
    if (state.stepsize_h < Scalar(config.min_stepsize)) {
      state.stepsize_h = Scalar(config.min_stepsize);
      state.stalled_h = true;
      return state;
    }
  }
}

/// Per-column sparseness of W (or per-row of H via the transpose). NaN for
/// vectors where the measure is undefined.
template <typename Derived>
std::vector<double> column_sparseness(const Eigen::MatrixBase<Derived>& m) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m.cols()));
  for (Index i = 0; i < m.cols(); ++i) {
    if (m.rows() < 2 || !(m.col(i).norm() > 0))
      out.push_back(std::numeric_limits<double>::quiet_NaN());
    else
      out.push_back(double(sparseness(m.col(i))));
  }
  return out;
}

/// Called after every outer iteration with the current state; lets callers
/// audit the constraints along the trajectory.
template <typename Scalar>
using IterationObserver = std::function<void(const SolverState<Scalar>&)>;

template <typename Scalar>
struct FitResult {
  FactorModel<Scalar> model;
  FitReport report;
};

/// Alternates step_w and step_h until max_iterations, until the relative
/// objective decrease stays below the tolerance for `tolerance_window`
/// consecutive iterations, or until every constrained factor has stalled.
template <typename Scalar>
FitResult<Scalar> fit(const DataMatrix<Scalar>& data, const ConstraintSpec& spec,
                      const SolverConfig& config, const IterationObserver<Scalar>& observer = {}) {
  SolverState<Scalar> state = initialize(data, spec, config);
  FitReport report;
  const bool any_constrained = spec.basis_sparseness || spec.coeff_sparseness;
  std::size_t quiet_iterations = 0;

  while (state.iteration < config.max_iterations) {
    const Scalar previous = state.last_objective;
    state = step_w(std::move(state), data, spec, config);
    state = step_h(std::move(state), data, spec, config);
    ++state.iteration;

    report.objective_trace.push_back(double(state.last_objective));
    report.stepsize_trace.emplace_back(double(state.stepsize_w), double(state.stepsize_h));
    if (observer) observer(state);

    if (state.last_objective == Scalar(0)) {
      report.converged = true;
      break;
    }
    const Scalar rel_decrease = (previous - state.last_objective) / previous;
    quiet_iterations = rel_decrease < Scalar(config.objective_rel_tolerance) ? quiet_iterations + 1 : 0;
    if (quiet_iterations >= config.tolerance_window) {
      report.converged = true;
      break;
    }
    const bool w_done = !spec.basis_sparseness || state.stalled_w;
    const bool h_done = !spec.coeff_sparseness || state.stalled_h;
    if (any_constrained && w_done && h_done) {
      report.converged = true;
      break;
    }
  }

  report.iterations_run = state.iteration;
  report.final_basis_sparseness = column_sparseness(state.model.basis);
  report.final_coeff_sparseness = column_sparseness(state.model.coefficients.transpose());
  return {std::move(state.model), std::move(report)};
}

}  // namespace sparsenmf
