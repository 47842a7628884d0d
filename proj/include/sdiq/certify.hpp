#pragma once

// Guessing-probability bounds for the prepare-and-measure protocol with an
// energy bound.
//
// The adversary's shared randomness is resolved into four deterministic guess
// labels lambda = (l0, l1): under label lambda the adversary guesses b = l_x
// for input x. With the prepared states fixed up to unitaries as
//   psi0 = |0>,  psi1 = L|0> + sqrt(1 - L^2)|1>,  L = 1 - 2 mu,
// the optimal guessing probability is an SDP over the sub-normalised POVM
// elements M_b^lambda = p_lambda Pi_b^lambda. The dual of that program gives
// multipliers nu_bx whose value -sum nu_bx p(b|x) upper-bounds Pg for every
// table p, which is what certification relies on.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "sdiq/phase_space.hpp"
#include "sdiq/sdp/solver.hpp"

namespace sdiq {

struct ConditionalCounts;

/// Conditional probabilities p(b|x), indexed (b, x), and optional per-input
/// sample sizes.
struct ProbTable {
  Eigen::Matrix2d p_bx = Eigen::Matrix2d::Constant(0.5);
  std::optional<std::array<double, 2>> n_x;

  static ProbTable from_counts(const ConditionalCounts& counts);
  static ProbTable from_matrix(const Eigen::Matrix2d& p) { return ProbTable{p, std::nullopt}; }

  /// Throws UsageError unless entries lie in [0, 1] and columns sum to 1.
  void validate() const;
  /// Relabels outcomes b <-> 1 - b.
  ProbTable swapped_outcomes() const;
};

/// Overlap lower bound lambda = 1 - 2 mu, 0 <= mu <= 0.5.
struct OverlapConstraint {
  double lambda = 1.0;
  double mu = 0.0;

  static OverlapConstraint from_mu(double mu);
  /// Direct overlap, used for monotonicity studies; mu is back-filled.
  static OverlapConstraint from_lambda(double lambda);
};

/// Real-symmetric restriction or the full self-adjoint (complex) model, the
/// latter solved through the doubled real embedding.
enum class Field { real, complex };

template <typename Scalar>
using Matrix2 = Eigen::Matrix<Scalar, 2, 2>;

/// rho_0 = |0><0| and rho_1 = |psi1><psi1| with <psi0|psi1> = lambda.
template <typename Scalar>
std::array<Matrix2<Scalar>, 2> embed_states(Scalar lambda) {
  using std::sqrt;
  if (!(lambda >= Scalar(0) && lambda <= Scalar(1)))
    throw UsageError("embed_states: overlap must lie in [0, 1]");
  Matrix2<Scalar> rho0 = Matrix2<Scalar>::Zero();
  rho0(0, 0) = 1;
  Eigen::Matrix<Scalar, 2, 1> psi1(lambda, sqrt(std::max(Scalar(0), Scalar(1) - lambda * lambda)));
  return {rho0, psi1 * psi1.transpose()};
}

namespace detail {

/// Hermitian 2x2 -> real symmetric 4x4 [[Re, -Im], [Im, Re]].
inline Eigen::Matrix4d realify(const Eigen::Matrix2cd& a) {
  Eigen::Matrix4d out;
  out << a.real(), -a.imag(),
         a.imag(), a.real();
  return out;
}

/// Traceless Hermitian basis used for the proportional-to-identity
/// constraints: sigma_z, sigma_x and, for the complex model, sigma_y.
inline std::vector<Eigen::Matrix2cd> traceless_basis(Field field) {
  using C = std::complex<double>;
  Eigen::Matrix2cd z, x, y;
  z << 1, 0, 0, -1;
  x << 0, 1, 1, 0;
  y << 0, C(0, -1), C(0, 1), 0;
  if (field == Field::real) return {z, x};
  return {z, x, y};
}

/// Coefficient representing tr(A M) on the solver's variable for M.
template <typename Scalar>
sdp::Matrix<Scalar> primal_coefficient(const Eigen::Matrix2cd& a, Field field) {
  if (field == Field::real) return a.real().template cast<Scalar>();
  return (0.5 * realify(a)).template cast<Scalar>();
}

/// Coefficient of a 2x2 Hermitian block inside an LMI.
template <typename Scalar>
sdp::Matrix<Scalar> lmi_coefficient(const Eigen::Matrix2cd& a, Field field) {
  if (field == Field::real) return a.real().template cast<Scalar>();
  return realify(a).template cast<Scalar>();
}

inline int label_index(int l0, int l1) { return 2 * l0 + l1; }
inline int guess(int label, int x) { return x == 0 ? label / 2 : label % 2; }
inline std::string label_name(int label) {
  return std::to_string(label / 2) + std::to_string(label % 2);
}

}  // namespace detail

/// Variable index of M_b^{l0 l1} in problems built by build_primal.
inline std::size_t primal_var(int label, int b) { return static_cast<std::size_t>(2 * label + b); }

/// Primal program: maximise Pg over the M_b^lambda (lower bound on Pg).
template <typename Scalar = double>
sdp::Problem<Scalar> build_primal(const ProbTable& pt, const OverlapConstraint& oc,
                                  Field field = Field::real) {
  const auto rho = embed_states<double>(oc.lambda);
  const Eigen::Index side = field == Field::real ? 2 : 4;
  sdp::Problem<Scalar> prob;
  prob.sense = sdp::Sense::maximize;
  for (int label = 0; label < 4; ++label)
    for (int b = 0; b < 2; ++b)
      prob.add_matrix_var("M[b=" + std::to_string(b) + ",l=" + detail::label_name(label) + "]", side);

  for (int label = 0; label < 4; ++label)
    for (int x = 0; x < 2; ++x)
      prob.objective.push_back({primal_var(label, detail::guess(label, x)),
                                detail::primal_coefficient<Scalar>(0.5 * rho[x].cast<std::complex<double>>(), field)});

  for (int label = 0; label < 4; ++label)
    for (const auto& t : detail::traceless_basis(field)) {
      sdp::Equality<Scalar> eq;
      eq.label = "unital[l=" + detail::label_name(label) + "]";
      for (int b = 0; b < 2; ++b) eq.terms.push_back({primal_var(label, b), detail::primal_coefficient<Scalar>(t, field)});
      prob.equalities.push_back(std::move(eq));
    }

  for (int b = 0; b < 2; ++b)
    for (int x = 0; x < 2; ++x) {
      sdp::Equality<Scalar> eq;
      eq.label = "data[b=" + std::to_string(b) + ",x=" + std::to_string(x) + "]";
      for (int label = 0; label < 4; ++label)
        eq.terms.push_back({primal_var(label, b),
                            detail::primal_coefficient<Scalar>(rho[x].cast<std::complex<double>>(), field)});
      eq.rhs = static_cast<Scalar>(pt.p_bx(b, x));
      prob.equalities.push_back(std::move(eq));
    }
  return prob;
}

/// Phase-one program: minimise s >= 0 such that the data table blended as
/// (1 - s) p + s/2 is reproducible. The table itself is feasible iff s* = 0.
template <typename Scalar = double>
sdp::Problem<Scalar> build_feasibility(const ProbTable& pt, const OverlapConstraint& oc,
                                       Field field = Field::real) {
  sdp::Problem<Scalar> prob = build_primal<Scalar>(pt, oc, field);
  prob.sense = sdp::Sense::minimize;
  prob.objective.clear();
  const std::size_t s = prob.add_matrix_var("s", 1);
  prob.objective.push_back({s, sdp::Matrix<Scalar>::Ones(1, 1)});
  for (auto& eq : prob.equalities) {
    if (eq.label.rfind("data", 0) != 0) continue;
    eq.terms.push_back({s, sdp::Matrix<Scalar>::Constant(1, 1, eq.rhs - Scalar(0.5))});
  }
  return prob;
}

/// Scalar layout of problems built by build_dual.
struct DualLayout {
  Field field = Field::real;
  bool finite_size = false;

  static std::size_t nu(int b, int x) { return static_cast<std::size_t>(2 * b + x); }
  std::size_t h_params() const { return field == Field::real ? 3 : 4; }
  /// First scalar of H^lambda: h11, h22, Re h12 [, Im h12].
  std::size_t h(int label) const { return 4 + static_cast<std::size_t>(label) * h_params(); }
  std::size_t abs_nu(int b, int x) const { return 4 + 4 * h_params() + nu(b, x); }
};

/// Dual program: minimise -sum nu_bx p(b|x) subject to, for every (b, lambda),
///   sum_x rho_x (1/2 [l_x == b] + nu_bx) + H^lambda - tr(H^lambda)/2 I <= 0.
/// With `delta` (one half-width per input x), epigraph variables
/// t_bx >= |nu_bx| are added and the objective gains + sum delta_x t_bx, the
/// worst case over the confidence box around p.
template <typename Scalar = double>
sdp::Problem<Scalar> build_dual(const ProbTable& pt, const OverlapConstraint& oc,
                                Field field = Field::real,
                                std::optional<Eigen::Vector2d> delta = std::nullopt) {
  using C = std::complex<double>;
  const auto rho = embed_states<double>(oc.lambda);
  const DualLayout layout{field, delta.has_value()};
  sdp::Problem<Scalar> prob;
  prob.sense = sdp::Sense::minimize;

  for (int b = 0; b < 2; ++b)
    for (int x = 0; x < 2; ++x) {
      prob.add_scalar_var("nu[b=" + std::to_string(b) + ",x=" + std::to_string(x) + "]");
      prob.scalar_objective(static_cast<Eigen::Index>(DualLayout::nu(b, x))) = static_cast<Scalar>(-pt.p_bx(b, x));
    }

  Eigen::Matrix2cd e11, e22, sx, sy;
  e11 << 0.5, 0, 0, -0.5;  // E11 - tr(E11)/2 I
  e22 << -0.5, 0, 0, 0.5;
  sx << 0, 1, 1, 0;
  sy << 0, C(0, 1), C(0, -1), 0;
  std::vector<Eigen::Matrix2cd> h_basis{e11, e22, sx};
  if (field == Field::complex) h_basis.push_back(sy);
  const std::vector<std::string> h_names{"h11", "h22", "re_h12", "im_h12"};
  for (int label = 0; label < 4; ++label)
    for (std::size_t k = 0; k < h_basis.size(); ++k)
      prob.add_scalar_var("H[l=" + detail::label_name(label) + "]." + h_names[k]);

  for (int label = 0; label < 4; ++label)
    for (int b = 0; b < 2; ++b) {
      sdp::Lmi<Scalar> lmi;
      lmi.label = "dual[b=" + std::to_string(b) + ",l=" + detail::label_name(label) + "]";
      Eigen::Matrix2cd constant = Eigen::Matrix2cd::Zero();
      for (int x = 0; x < 2; ++x)
        if (detail::guess(label, x) == b) constant += 0.5 * rho[x].cast<C>();
      lmi.constant = detail::lmi_coefficient<Scalar>(constant, field);
      for (int x = 0; x < 2; ++x)
        lmi.terms.push_back({DualLayout::nu(b, x), detail::lmi_coefficient<Scalar>(rho[x].cast<C>(), field)});
      for (std::size_t k = 0; k < h_basis.size(); ++k)
        lmi.terms.push_back({layout.h(label) + k, detail::lmi_coefficient<Scalar>(h_basis[k], field)});
      prob.lmis.push_back(std::move(lmi));
    }

  if (delta) {
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x) {
        const std::size_t t = prob.add_scalar_var("t[b=" + std::to_string(b) + ",x=" + std::to_string(x) + "]");
        prob.scalar_objective(static_cast<Eigen::Index>(t)) = static_cast<Scalar>((*delta)(x));
        for (Scalar sign : {Scalar(1), Scalar(-1)}) {
          sdp::Lmi<Scalar> bound;
          bound.label = "abs_nu";
          bound.constant = sdp::Matrix<Scalar>::Zero(1, 1);
          bound.terms.push_back({DualLayout::nu(b, x), sdp::Matrix<Scalar>::Constant(1, 1, sign)});
          bound.terms.push_back({t, sdp::Matrix<Scalar>::Constant(1, 1, Scalar(-1))});
          prob.lmis.push_back(std::move(bound));
        }
      }
  }
  return prob;
}

/// Fixed dual multipliers; any such point that satisfies the dual
/// constraints bounds Pg for every table via dual_objective.
struct DualPoint {
  Eigen::Matrix2d nu = Eigen::Matrix2d::Zero();  // (b, x)
  std::array<Eigen::Matrix2cd, 4> h{};           // H^lambda, lambda = 2 l0 + l1
};

DualPoint dual_point(const sdp::Solution<double>& solution, Field field);

/// Largest eigenvalue over the eight dual constraints; <= 0 iff feasible.
double max_constraint_eigenvalue(const DualPoint& dp, const OverlapConstraint& oc);

/// Shifts every nu_bx down by the amount needed to make the point exactly
/// feasible (uses lambda_min(rho0 + rho1) = 1 - lambda). Returns the shift,
/// or nullopt if the states coincide and no shift can help.
std::optional<double> make_feasible(DualPoint& dp, const OverlapConstraint& oc);

/// -sum_bx nu_bx p(b|x).
double dual_objective(const DualPoint& dp, const ProbTable& pt);

/// Chernoff-Hoeffding half width sqrt(-log2(eps) / (2 n)).
double confidence_halfwidth(double epsilon, double n);

/// -sum_bx (nu_bx p(b|x) - |nu_bx| Delta(eps, n_x)); requires pt.n_x.
double finite_size_objective(const DualPoint& dp, const ProbTable& pt, double epsilon);

struct CertifyOptions {
  double epsilon = 1e-10;     // confidence of the probability estimates
  bool finite_size = false;
  double epsilon_re = 1e-10;  // extractor parameter, reported alongside
  double mu_inflation = 1.0;  // applied to the declared mu before use
  Field field = Field::real;
  double feasibility_threshold = 1e-6;
  sdp::SolverOptions<double> solver{};
};

struct SolverReport {
  std::string status;
  int iterations = 0;
  double gap = 0;
  double primal_infeasibility = 0;
  double dual_infeasibility = 0;
  double max_constraint_eigenvalue = 0;
  double feasibility_shift = 0;
  double phase_one_value = 0;
};

struct Certificate {
  double pg_upper = 1.0;
  double hmin_rate = 0.0;
  double pg_asymptotic = 1.0;
  double epsilon = 1e-10;
  double epsilon_re = 1e-10;
  bool finite_size = false;
  double duality_gap = 0.0;
  ProbTable table;
  OverlapConstraint overlap;
  double mu_declared = 0.0;
  double mu_inflation = 1.0;
  Field field = Field::real;
  DualPoint dual;
  SolverReport solver;
  std::string table_digest;
  std::string overlap_digest;
};

/// Upper-bounds the guessing probability of `pt` under the declared energy
/// bound `mu` and converts it to a min-entropy rate.
/// Throws AssumptionViolation for mu > 0.5, InfeasibleData when the table is
/// incompatible with the overlap bound and SolverFailure otherwise.
Certificate certify(const ProbTable& pt, double mu, const CertifyOptions& options = {});

/// Convenience for sweeps: asymptotic min-entropy of a table.
double hmin_rate(const ProbTable& pt, double mu, const CertifyOptions& options = {});

std::string digest(const ProbTable& pt);
std::string digest(const OverlapConstraint& oc);

/// Single JSON document: inputs, bounds, epsilons, solver diagnostics and the
/// dual multipliers nu_bx.
std::string to_json(const Certificate& cert);
Certificate certificate_from_json(const std::string& text);

}  // namespace sdiq
