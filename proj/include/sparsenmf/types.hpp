#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sparsenmf {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using Index = Eigen::Index;

// Error hierarchy. Everything derives from std::runtime_error so callers
// that do not care about the category can catch one type.
struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FeasibilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-negative N x T data matrix (rows are variables, columns are
/// measurements). Validated on construction.
template <typename Scalar>
class DataMatrix {
 public:
  explicit DataMatrix(Matrix<Scalar> values) : values_(std::move(values)) {
    if (values_.rows() < 1 || values_.cols() < 1)
      throw DimensionError("data matrix must have at least one row and one column");
    for (Index j = 0; j < values_.cols(); ++j)
      for (Index i = 0; i < values_.rows(); ++i)
        if (!(values_(i, j) >= Scalar(0)))
          throw InvalidValueError("data matrix entry (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") is negative or NaN");
  }

  const Matrix<Scalar>& values() const { return values_; }
  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }

 private:
  Matrix<Scalar> values_;
};

/// Factor pair V ~ W H with W: N x M (basis columns) and H: M x T
/// (coefficient rows).
template <typename Scalar>
struct FactorModel {
  Matrix<Scalar> basis;
  Matrix<Scalar> coefficients;

  Index components() const { return basis.cols(); }

  void validate() const {
    if (basis.cols() < 1 || basis.cols() != coefficients.rows())
      throw DimensionError("basis has " + std::to_string(basis.cols()) +
                           " columns but coefficients have " +
                           std::to_string(coefficients.rows()) + " rows");
    if ((basis.array() < Scalar(0)).any() || (coefficients.array() < Scalar(0)).any())
      throw InvalidValueError("factor matrices must be non-negative");
  }
};

struct ConstraintSpec {
  Index components = 1;
  std::optional<double> basis_sparseness;  // S_w
  std::optional<double> coeff_sparseness;  // S_h

  void validate() const {
    if (components < 1) throw InvalidValueError("component count must be >= 1");
    auto in_unit = [](const std::optional<double>& s) { return !s || (*s >= 0.0 && *s <= 1.0); };
    if (!in_unit(basis_sparseness) || !in_unit(coeff_sparseness))
      throw InvalidValueError("sparseness targets must lie in [0, 1]");
  }
};

struct SolverConfig {
  std::size_t max_iterations = 5000;
  double objective_rel_tolerance = 1e-9;
  std::size_t tolerance_window = 10;
  double initial_stepsize = 1.0;
  double stepsize_decrease = 0.5;
  double stepsize_increase = 1.2;
  double min_stepsize = 1e-20;
  double denominator_floor = 1e-9;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (max_iterations == 0 || tolerance_window == 0)
      throw InvalidValueError("iteration counts must be positive");
    if (!(objective_rel_tolerance >= 0.0) || !(initial_stepsize > 0.0) ||
        !(min_stepsize > 0.0) || !(denominator_floor > 0.0))
      throw InvalidValueError("tolerances and step sizes must be positive");
    if (!(stepsize_decrease > 0.0 && stepsize_decrease < 1.0 && stepsize_increase > 1.0))
      throw InvalidValueError("require 0 < stepsize_decrease < 1 < stepsize_increase");
  }
};

struct FitReport {
  std::vector<double> objective_trace;
  std::size_t iterations_run = 0;
  std::vector<double> final_basis_sparseness;
  std::vector<double> final_coeff_sparseness;
  std::vector<std::pair<double, double>> stepsize_trace;  // (mu_W, mu_H)
  bool converged = false;
};

template <typename Scalar>
Matrix<Scalar> reconstruct(const FactorModel<Scalar>& model) {
  if (model.basis.cols() != model.coefficients.rows())
    throw DimensionError("basis/coefficient inner dimensions disagree");
  return model.basis * model.coefficients;
}

/// Squared Frobenius reconstruction error ||V - W H||^2.
template <typename Scalar>
Scalar objective(const DataMatrix<Scalar>& data, const FactorModel<Scalar>& model) {
  if (model.basis.rows() != data.rows() || model.coefficients.cols() != data.cols() ||
      model.basis.cols() != model.coefficients.rows())
    throw DimensionError("model of shape " + std::to_string(model.basis.rows()) + "x" +
                         std::to_string(model.coefficients.cols()) +
                         " does not match data of shape " + std::to_string(data.rows()) +
                         "x" + std::to_string(data.cols()));
  return (data.values() - model.basis * model.coefficients).squaredNorm();
}

}  // namespace sparsenmf
