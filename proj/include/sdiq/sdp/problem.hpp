#pragma once

// Small dense semidefinite programs in one of two shapes.
//
// Matrix form:  optimise  sum_j <C_j, X_j> + offset
//               s.t.      sum_j <A_ij, X_j> = b_i,   X_j symmetric PSD.
//
// LMI form:     optimise  c^T y + offset
//               s.t.      F0_k + sum_i y_i F_ik <= 0 (negative semidefinite),
//               y free.
//
// The two shapes are each other's conic duals, so a solver for one standard
// pair handles both. All coefficient matrices are real symmetric; complex
// Hermitian data is handled by the caller through the real embedding
// [[Re, -Im], [Im, Re]].

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sdiq/errors.hpp"

namespace sdiq::sdp {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Sense { maximize, minimize };

struct MatrixVar {
  std::string name;
  Eigen::Index side = 0;
};

/// <coefficient, X_var> contribution of one matrix variable.
template <typename Scalar>
struct MatrixTerm {
  std::size_t var = 0;
  Matrix<Scalar> coefficient;
};

template <typename Scalar>
struct Equality {
  std::string label;
  std::vector<MatrixTerm<Scalar>> terms;
  Scalar rhs = 0;
};

/// y_var * coefficient contribution to an LMI.
template <typename Scalar>
struct ScalarTerm {
  std::size_t var = 0;
  Matrix<Scalar> coefficient;
};

/// Membership F0 + sum_i y_i F_i in the negative semidefinite cone.
template <typename Scalar>
struct Lmi {
  std::string label;
  Matrix<Scalar> constant;
  std::vector<ScalarTerm<Scalar>> terms;
};

template <typename Scalar>
struct Problem {
  Sense sense = Sense::minimize;
  Scalar objective_offset = 0;

  // Matrix form.
  std::vector<MatrixVar> matrix_vars;
  std::vector<MatrixTerm<Scalar>> objective;
  std::vector<Equality<Scalar>> equalities;

  // LMI form.
  std::vector<std::string> scalar_vars;
  Vector<Scalar> scalar_objective;
  std::vector<Lmi<Scalar>> lmis;

  bool is_matrix_form() const { return !matrix_vars.empty(); }

  std::size_t add_matrix_var(std::string name, Eigen::Index side) {
    matrix_vars.push_back({std::move(name), side});
    return matrix_vars.size() - 1;
  }

  std::size_t add_scalar_var(std::string name) {
    scalar_vars.push_back(std::move(name));
    scalar_objective.conservativeResize(static_cast<Eigen::Index>(scalar_vars.size()));
    scalar_objective(scalar_objective.size() - 1) = 0;
    return scalar_vars.size() - 1;
  }

  /// Throws UsageError unless exactly one form is populated and every
  /// reference and dimension is consistent.
  void validate() const {
    const bool matrix = !matrix_vars.empty();
    const bool lmi = !scalar_vars.empty() || !lmis.empty();
    if (matrix == lmi) throw UsageError("sdp: problem must use exactly one of matrix or LMI form");
    auto check_term = [&](std::size_t var, const Matrix<Scalar>& c) {
      if (var >= matrix_vars.size()) throw UsageError("sdp: undeclared matrix variable");
      const auto side = matrix_vars[var].side;
      if (c.rows() != side || c.cols() != side) throw UsageError("sdp: coefficient dimension mismatch");
    };
    if (matrix) {
      for (const auto& v : matrix_vars)
        if (v.side < 1) throw UsageError("sdp: matrix variable side must be >= 1");
      for (const auto& t : objective) check_term(t.var, t.coefficient);
      for (const auto& e : equalities)
        for (const auto& t : e.terms) check_term(t.var, t.coefficient);
      return;
    }
    if (scalar_objective.size() != static_cast<Eigen::Index>(scalar_vars.size()))
      throw UsageError("sdp: objective length does not match scalar variables");
    if (lmis.empty()) throw UsageError("sdp: LMI form needs at least one cone membership");
    for (const auto& l : lmis) {
      if (l.constant.rows() < 1 || l.constant.rows() != l.constant.cols())
        throw UsageError("sdp: LMI constant must be square");
      for (const auto& t : l.terms) {
        if (t.var >= scalar_vars.size()) throw UsageError("sdp: undeclared scalar variable");
        if (t.coefficient.rows() != l.constant.rows() || t.coefficient.cols() != l.constant.cols())
          throw UsageError("sdp: LMI coefficient dimension mismatch");
      }
    }
  }
};

/// F0 + sum_i y_i F_i for one LMI.
template <typename Scalar>
Matrix<Scalar> evaluate(const Lmi<Scalar>& lmi, const Vector<Scalar>& y) {
  Matrix<Scalar> value = lmi.constant;
  for (const auto& t : lmi.terms) value += y(static_cast<Eigen::Index>(t.var)) * t.coefficient;
  return value;
}

enum class Status { optimal, infeasible, unbounded, max_iterations, numerical_failure };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::max_iterations: return "max_iterations";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

template <typename Scalar>
struct Solution {
  Status status = Status::numerical_failure;
  /// Problem objective at the returned point.
  Scalar objective = 0;
  /// Conic-dual objective: an upper bound when maximising, a lower bound when
  /// minimising (up to the reported infeasibilities).
  Scalar bound = 0;
  Scalar gap = 0;
  Scalar primal_infeasibility = 0;
  Scalar dual_infeasibility = 0;
  int iterations = 0;
  /// Matrix form: the X_j. LMI form: one multiplier per LMI.
  std::vector<Matrix<Scalar>> matrices;
  /// LMI form: the y_i. Matrix form: one multiplier per equality.
  Vector<Scalar> scalars;
};

}  // namespace sdiq::sdp
