#include "sdiq/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace sdiq {
namespace {

struct LpResult {
  bool feasible = false;
  double value = 0.0;
  Eigen::VectorXd x;
};

constexpr double kPivotTol = 1e-12;

// Two-phase dense tableau simplex for min c^T x, A x = b, x >= 0, using
// Bland's rule so that degenerate vertices cannot cycle.
class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
      : m_(a.rows()), n_(a.cols()), t_(Eigen::MatrixXd::Zero(a.rows(), a.cols() + a.rows() + 1)) {
    for (Eigen::Index i = 0; i < m_; ++i) {
      const double sign = b(i) < 0 ? -1.0 : 1.0;
      t_.row(i).head(n_) = sign * a.row(i);
      t_(i, n_ + i) = 1.0;
      t_(i, rhs()) = sign * b(i);
      basis_.push_back(n_ + i);
    }
  }

  LpResult minimize(const Eigen::VectorXd& c) {
    Eigen::VectorXd phase_one = Eigen::VectorXd::Zero(n_ + m_);
    phase_one.tail(m_).setOnes();
    run(phase_one, n_ + m_);
    if (objective(phase_one) > 1e-9) return {};
    drive_out_artificials();
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_ + m_);
    cost.head(n_) = c;
    run(cost, n_);
    LpResult res;
    res.feasible = true;
    res.value = objective(cost);
    res.x = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index i = 0; i < m_; ++i)
      if (basis_[static_cast<std::size_t>(i)] < n_) res.x(basis_[static_cast<std::size_t>(i)]) = t_(i, rhs());
    return res;
  }

 private:
  Eigen::Index rhs() const { return n_ + m_; }

  double objective(const Eigen::VectorXd& cost) const {
    double v = 0;
    for (Eigen::Index i = 0; i < m_; ++i) v += cost(basis_[static_cast<std::size_t>(i)]) * t_(i, rhs());
    return v;
  }

  void pivot(Eigen::Index row, Eigen::Index col) {
    t_.row(row) /= t_(row, col);
    for (Eigen::Index i = 0; i < m_; ++i)
      if (i != row && t_(i, col) != 0.0) t_.row(i) -= t_(i, col) * t_.row(row);
    basis_[static_cast<std::size_t>(row)] = col;
  }

  // Columns >= allowed never enter.
  void run(const Eigen::VectorXd& cost, Eigen::Index allowed) {
    for (int guard = 0; guard < 100000; ++guard) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < allowed && entering < 0; ++j) {
        double reduced = cost(j);
        for (Eigen::Index i = 0; i < m_; ++i) reduced -= cost(basis_[static_cast<std::size_t>(i)]) * t_(i, j);
        if (reduced < -1e-11) entering = j;
      }
      if (entering < 0) return;
      Eigen::Index leaving = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (t_(i, entering) <= kPivotTol) continue;
        const double ratio = t_(i, rhs()) / t_(i, entering);
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leaving)])) {
          best = ratio;
          leaving = i;
        }
      }
      if (leaving < 0) return;  // unbounded direction; cannot happen for the bounded oracle programs
      pivot(leaving, entering);
    }
  }

  void drive_out_artificials() {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      for (Eigen::Index j = 0; j < n_; ++j)
        if (std::abs(t_(i, j)) > 1e-9) {
          pivot(i, j);
          break;
        }
    }
  }

  Eigen::Index m_, n_;
  Eigen::MatrixXd t_;
  std::vector<Eigen::Index> basis_;
};

struct Column {
  double p00;  // p(0|0)
  double p01;  // p(0|1)
  double pg;   // guessing success of this (label, measurement)
};

}  // namespace

std::optional<double> oracle_pg(const ProbTable& pt, const OverlapConstraint& oc, double angle_step,
                                double tolerance) {
  pt.validate();
  if (!(angle_step > 0)) throw UsageError("oracle_pg: angle step must be positive");
  const double lambda = oc.lambda;
  const double ortho = std::sqrt(std::max(0.0, 1.0 - lambda * lambda));

  // Outcome-0 probabilities of each candidate measurement for the two states.
  std::vector<std::pair<double, double>> measurements{{1.0, 1.0}, {0.0, 0.0}};
  const auto steps = static_cast<int>(std::ceil(std::numbers::pi / angle_step));
  for (int k = 0; k < steps; ++k) {
    const double theta = k * angle_step;
    const double c = std::cos(theta), s = std::sin(theta);
    const double overlap1 = lambda * c + ortho * s;
    measurements.emplace_back(c * c, overlap1 * overlap1);
  }

  std::vector<Column> columns;
  for (int label = 0; label < 4; ++label)
    for (const auto& [q0, q1] : measurements) {
      const double hit0 = detail::guess(label, 0) == 0 ? q0 : 1.0 - q0;
      const double hit1 = detail::guess(label, 1) == 0 ? q1 : 1.0 - q1;
      columns.push_back({q0, q1, 0.5 * (hit0 + hit1)});
    }

  // Variables: w_k, then deviation slacks u0+, u0-, u1+, u1-, then one slack v
  // for the deviation budget in stage two.
  const auto k = static_cast<Eigen::Index>(columns.size());
  const Eigen::Index n = k + 5;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, n);
  for (Eigen::Index j = 0; j < k; ++j) {
    a(0, j) = columns[static_cast<std::size_t>(j)].p00;
    a(1, j) = columns[static_cast<std::size_t>(j)].p01;
    a(2, j) = 1.0;
  }
  a(0, k) = 1.0;
  a(0, k + 1) = -1.0;
  a(1, k + 2) = 1.0;
  a(1, k + 3) = -1.0;
  a.block(3, k, 1, 4).setOnes();
  a(3, k + 4) = 1.0;

  Eigen::VectorXd b(4);
  b << pt.p_bx(0, 0), pt.p_bx(0, 1), 1.0, 4.0;  // loose budget in stage one

  Eigen::VectorXd deviation_cost = Eigen::VectorXd::Zero(n);
  deviation_cost.segment(k, 4).setOnes();
  const LpResult stage_one = Tableau(a, b).minimize(deviation_cost);
  if (!stage_one.feasible || stage_one.value > tolerance) return std::nullopt;

  b(3) = stage_one.value + 1e-12;
  Eigen::VectorXd guess_cost = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < k; ++j) guess_cost(j) = -columns[static_cast<std::size_t>(j)].pg;
  const LpResult stage_two = Tableau(a, b).minimize(guess_cost);
  if (!stage_two.feasible) return std::nullopt;
  return -stage_two.value;
}

}  // namespace sdiq
