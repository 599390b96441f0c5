#pragma once

#include "sparsenmf/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace sparsenmf {

/// Normalized L1/L2 sparseness of a vector:
///
///   (sqrt(n) - |x|_1 / |x|_2) / (sqrt(n) - 1)
///
/// 1 for a single non-zero component, 0 when all |x_i| are equal.
/// Throws DimensionError for n < 2 and InvalidValueError for the zero vector.
template <typename Derived>
typename Derived::Scalar sparseness(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.size();
  if (n < 2) throw DimensionError("sparseness needs dimension >= 2, got " + std::to_string(n));
  const Scalar l2 = x.norm();
  if (!(l2 > Scalar(0))) throw InvalidValueError("sparseness is undefined for the zero vector");
  const Scalar l1 = x.template lpNorm<1>();
  const Scalar root_n = std::sqrt(Scalar(n));
  const Scalar value = (root_n - l1 / l2) / (root_n - Scalar(1));
  // Rounding can push the ratio a hair outside [1, sqrt(n)].
  return std::clamp(value, Scalar(0), Scalar(1));
}

/// L1 norm that gives a vector of dimension n and the given L2 norm the
/// requested sparseness.
template <typename Scalar>
Scalar l1_for_sparseness(Scalar target_sparseness, Scalar l2, Index n) {
  if (n < 2) throw DimensionError("dimension must be >= 2, got " + std::to_string(n));
  if (!(target_sparseness >= Scalar(0) && target_sparseness <= Scalar(1)))
    throw FeasibilityError("sparseness " + std::to_string(double(target_sparseness)) +
                           " is outside [0, 1]");
  if (!(l2 > Scalar(0))) throw FeasibilityError("L2 norm must be positive");
  const Scalar root_n = std::sqrt(Scalar(n));
  return l2 * (root_n - target_sparseness * (root_n - Scalar(1)));
}

/// Prescribed norms for the joint L1/L2 projection. A non-negative vector
/// with both norms exists iff l2 <= l1 <= sqrt(n) l2.
template <typename Scalar>
class ProjectionTarget {
 public:
  static constexpr double kBoundarySlack = 1e-12;

  ProjectionTarget(Scalar l1, Scalar l2, Index dimension) : l1_(l1), l2_(l2), dim_(dimension) {
    if (dim_ < 2) throw DimensionError("projection dimension must be >= 2");
    if (!(l1_ > Scalar(0)) || !(l2_ > Scalar(0)))
      throw FeasibilityError("projection norms must be positive (l1=" + std::to_string(double(l1_)) +
                             ", l2=" + std::to_string(double(l2_)) + ")");
    const Scalar upper = std::sqrt(Scalar(dim_)) * l2_;
    const Scalar slack = Scalar(kBoundarySlack);
    if (l1_ < l2_) {
      if (l1_ < l2_ * (Scalar(1) - slack)) throw infeasible();
      l1_ = l2_;
    } else if (l1_ > upper) {
      if (l1_ > upper * (Scalar(1) + slack)) throw infeasible();
      l1_ = upper;
    }
  }

  /// Target whose norms give sparseness `s` at the given L2 norm.
  static ProjectionTarget from_sparseness(Scalar s, Scalar l2, Index dimension) {
    return ProjectionTarget(l1_for_sparseness(s, l2, dimension), l2, dimension);
  }

  Scalar l1() const { return l1_; }
  Scalar l2() const { return l2_; }
  Index dimension() const { return dim_; }

 private:
  FeasibilityError infeasible() const {
    return FeasibilityError("infeasible projection target: need l2 <= l1 <= sqrt(n)*l2, got l1=" +
                            std::to_string(double(l1_)) + " l2=" + std::to_string(double(l2_)) +
                            " n=" + std::to_string(dim_));
  }

  Scalar l1_;
  Scalar l2_;
  Index dim_;
};

struct ProjectionTrace {
  std::size_t iterations = 0;
  std::vector<Index> zero_set_sizes;  // |Z| at the start of each pass
};

template <typename Scalar>
struct Projection {
  Vector<Scalar> vector;
  ProjectionTrace trace;
};

/// Closest non-negative vector (Euclidean) to `x` with the target's L1 and
/// L2 norms.
///
/// The input is first shifted onto the hyperplane sum(s) = l1. Each pass
/// then moves radially outward from the centre m of the current feasible
/// sphere (equal entries on the free coordinates, zeros on the zero set Z)
/// until the L2 constraint holds. If any entry comes out negative, those
/// entries join Z, are pinned at zero, and the free entries are shifted back
/// onto the hyperplane. Every pass that does not return grows Z, so at most
/// n passes are needed.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Projection<Scalar> project_nonneg(const Eigen::MatrixBase<Derived>& x,
                                  const ProjectionTarget<Scalar>& target) {
  const Index n = x.size();
  if (n != target.dimension())
    throw DimensionError("vector of dimension " + std::to_string(n) +
                         " does not match projection target of dimension " +
                         std::to_string(target.dimension()));
  const Scalar l1 = target.l1();
  const Scalar l2sq = target.l2() * target.l2();
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();

  Projection<Scalar> out;
  Vector<Scalar> s = x.template cast<Scalar>();
  s.array() += (l1 - s.sum()) / Scalar(n);

  std::vector<bool> zeroed(static_cast<std::size_t>(n), false);
  Index zero_count = 0;
  Vector<Scalar> m(n);
  Vector<Scalar> d(n);

  while (true) {
    out.trace.zero_set_sizes.push_back(zero_count);
    ++out.trace.iterations;
    if (out.trace.iterations > static_cast<std::size_t>(n))
      throw NumericalError("projection failed to terminate within dim(x) passes");

    const Index free_count = n - zero_count;
    const Scalar centre = l1 / Scalar(free_count);
    for (Index i = 0; i < n; ++i) m[i] = zeroed[i] ? Scalar(0) : centre;
    d = s - m;

    Scalar a = d.squaredNorm();
    Scalar c = m.squaredNorm() - l2sq;
    // Centre on the sphere up to rounding (sparseness-0 boundary). Left
    // alone, the rounding residue would come back through the square root.
    if (std::abs(c) <= Scalar(8) * eps * l2sq) c = Scalar(0);
    if (a <= eps * eps * l2sq) {
      // s sits on the centre: either the centre already satisfies the L2
      // constraint, or every radial direction is equally close and we pick
      // the first free coordinate.
      if (std::abs(c) <= Scalar(ProjectionTarget<Scalar>::kBoundarySlack) * l2sq * Scalar(4)) {
        s = m;
        break;
      }
      if (free_count == 1)
        throw NumericalError("projection reached a single free coordinate with mismatched norms");
      Index first = 0;
      while (zeroed[first]) ++first;
      for (Index i = 0; i < n; ++i) d[i] = zeroed[i] ? Scalar(0) : -Scalar(1) / Scalar(free_count);
      d[first] += Scalar(1);
      a = d.squaredNorm();
    }
    const Scalar b = Scalar(2) * m.dot(d);

    // a*alpha^2 + b*alpha + c = 0, larger root.
    Scalar disc = b * b - Scalar(4) * a * c;
    if (disc < Scalar(0)) {
      const Scalar scale = std::max(b * b, std::abs(Scalar(4) * a * c));
      if (disc < -Scalar(1e-12) * scale)
        throw NumericalError("projection quadratic has no real root (discriminant " +
                             std::to_string(double(disc)) + ")");
      disc = Scalar(0);
    }
    const Scalar root = std::sqrt(disc);
    Scalar alpha;
    if (b >= Scalar(0)) {
      const Scalar q = -(b + root) / Scalar(2);
      alpha = q != Scalar(0) ? c / q : Scalar(0);
    } else {
      alpha = (-b + root) / (Scalar(2) * a);
    }
    s = m + alpha * d;

    // Entries within rounding distance of zero count as zero: an exact
    // landing on a face of the orthant must not cost an extra pass.
    const Scalar rounding = Scalar(16) * eps * (centre + std::abs(alpha) * d.cwiseAbs().maxCoeff());
    bool any_negative = false;
    for (Index i = 0; i < n; ++i) {
      if (!zeroed[i] && s[i] < -rounding) {
        zeroed[i] = true;
        ++zero_count;
        any_negative = true;
      }
    }
    if (!any_negative) {
      s = (s.array() < rounding).select(Scalar(0), s);
      break;
    }
    if (zero_count >= n) throw NumericalError("projection zeroed every coordinate");

    for (Index i = 0; i < n; ++i)
      if (zeroed[i]) s[i] = Scalar(0);
    const Scalar shift = (s.sum() - l1) / Scalar(n - zero_count);
    for (Index i = 0; i < n; ++i)
      if (!zeroed[i]) s[i] -= shift;
  }

  out.vector = std::move(s);
  return out;
}

/// Signed variant: project |x| in the first orthant and restore the signs.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Projection<Scalar> project_signed(const Eigen::MatrixBase<Derived>& x,
                                  const ProjectionTarget<Scalar>& target) {
  const Vector<Scalar> magnitudes = x.template cast<Scalar>().cwiseAbs();
  Projection<Scalar> out = project_nonneg(magnitudes, target);
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] < Scalar(0)) out.vector[i] = -out.vector[i];
  return out;
}

}  // namespace sparsenmf
