#pragma once

// Primal-dual interior-point method for small dense SDPs.
//
// Internally every problem is mapped to the standard pair
//   (P)  min <C, X>   s.t. <A_i, X> = b_i,  X >= 0 (block diagonal)
//   (D)  max b^T y    s.t. Z = C - sum_i y_i A_i >= 0
// and solved with the HKM search direction and Mehrotra's
// predictor-corrector from an infeasible starting point. Linearly dependent
// constraints are removed up front; an inconsistent dependent row is reported
// as infeasibility without iterating.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sdiq/sdp/problem.hpp"

namespace sdiq::sdp {

template <typename Scalar>
struct SolverOptions {
  Scalar feasibility_tol = Scalar(1e-8);
  Scalar gap_tol = Scalar(1e-8);
  int max_iterations = 100;
  Scalar step_fraction = Scalar(0.95);
  /// Relative pivot threshold for discarding dependent constraints.
  Scalar rank_tol = Scalar(1e-10);
  Scalar divergence = Scalar(1e12);
};

namespace detail {

template <typename Scalar>
using Blocks = std::vector<Matrix<Scalar>>;

template <typename Scalar>
Scalar inner(const Blocks<Scalar>& a, const Blocks<Scalar>& b) {
  Scalar s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j].cwiseProduct(b[j]).sum();
  return s;
}

template <typename Scalar>
Scalar frobenius(const Blocks<Scalar>& a) {
  Scalar s = 0;
  for (const auto& m : a) s += m.squaredNorm();
  return std::sqrt(s);
}

template <typename Scalar>
Blocks<Scalar> zeros(const std::vector<Eigen::Index>& sides) {
  Blocks<Scalar> out;
  out.reserve(sides.size());
  for (auto n : sides) out.push_back(Matrix<Scalar>::Zero(n, n));
  return out;
}

template <typename Scalar>
Blocks<Scalar> identity(const std::vector<Eigen::Index>& sides, Scalar scale) {
  Blocks<Scalar> out;
  for (auto n : sides) out.push_back(scale * Matrix<Scalar>::Identity(n, n));
  return out;
}

template <typename Scalar>
Matrix<Scalar> sym(const Matrix<Scalar>& m) {
  return Scalar(0.5) * (m + m.transpose());
}

template <typename Scalar>
struct StandardForm {
  std::vector<Eigen::Index> sides;
  Blocks<Scalar> c;
  std::vector<Blocks<Scalar>> a;
  Vector<Scalar> b;
};

template <typename Scalar>
struct StandardResult {
  Status status = Status::numerical_failure;
  Blocks<Scalar> x;
  Vector<Scalar> y;
  Blocks<Scalar> z;
  Scalar pobj = 0;
  Scalar dobj = 0;
  Scalar pinf = 0;
  Scalar dinf = 0;
  int iterations = 0;
};

template <typename Scalar>
Vector<Scalar> apply_a(const StandardForm<Scalar>& sf, const Blocks<Scalar>& x) {
  Vector<Scalar> out(static_cast<Eigen::Index>(sf.a.size()));
  for (std::size_t i = 0; i < sf.a.size(); ++i) out(static_cast<Eigen::Index>(i)) = inner(sf.a[i], x);
  return out;
}

template <typename Scalar>
Blocks<Scalar> apply_at(const StandardForm<Scalar>& sf, const Vector<Scalar>& y) {
  Blocks<Scalar> out = zeros<Scalar>(sf.sides);
  for (std::size_t i = 0; i < sf.a.size(); ++i) {
    const Scalar yi = y(static_cast<Eigen::Index>(i));
    if (yi == 0) continue;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += yi * sf.a[i][j];
  }
  return out;
}

/// Largest alpha (possibly infinite) with X + alpha D still PSD; -1 if X is
/// not positive definite.
template <typename Scalar>
Scalar max_step(const Blocks<Scalar>& x, const Blocks<Scalar>& d) {
  Scalar alpha = std::numeric_limits<Scalar>::infinity();
  for (std::size_t j = 0; j < x.size(); ++j) {
    Eigen::LLT<Matrix<Scalar>> llt(x[j]);
    if (llt.info() != Eigen::Success) return Scalar(-1);
    const Matrix<Scalar> left = llt.matrixL().solve(d[j]);
    const Matrix<Scalar> scaled = llt.matrixL().solve(left.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sym<Scalar>(scaled), Eigen::EigenvaluesOnly);
    const Scalar lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0) alpha = std::min(alpha, Scalar(-1) / lmin);
  }
  return alpha;
}

/// Drops linearly dependent constraints. Returns false when a dropped row's
/// right-hand side is inconsistent with the rows it depends on.
template <typename Scalar>
bool presolve(StandardForm<Scalar>& sf, std::vector<std::size_t>& kept, Scalar rank_tol) {
  const auto m = static_cast<Eigen::Index>(sf.a.size());
  kept.clear();
  if (m == 0) return true;
  Eigen::Index n = 0;
  for (auto s : sf.sides) n += s * s;
  Matrix<Scalar> at(n, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    Eigen::Index offset = 0;
    for (const auto& block : sf.a[static_cast<std::size_t>(i)]) {
      at.col(i).segment(offset, block.size()) = Eigen::Map<const Vector<Scalar>>(block.data(), block.size());
      offset += block.size();
    }
  }
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> qr(at);
  qr.setThreshold(rank_tol);
  const Eigen::Index rank = qr.rank();
  for (Eigen::Index k = 0; k < rank; ++k) kept.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()(k)));
  std::sort(kept.begin(), kept.end());
  if (rank == m) return true;

  const Scalar b_scale = Scalar(1) + sf.b.template lpNorm<Eigen::Infinity>();
  if (rank == 0) {
    const bool zero_rhs = sf.b.template lpNorm<Eigen::Infinity>() <= std::sqrt(rank_tol) * b_scale;
    sf.a.clear();
    sf.b.resize(0);
    return zero_rhs;
  }

  Matrix<Scalar> basis(n, rank);
  Vector<Scalar> b_kept(rank);
  for (Eigen::Index k = 0; k < rank; ++k) {
    basis.col(k) = at.col(static_cast<Eigen::Index>(kept[static_cast<std::size_t>(k)]));
    b_kept(k) = sf.b(static_cast<Eigen::Index>(kept[static_cast<std::size_t>(k)]));
  }
  Eigen::ColPivHouseholderQR<Matrix<Scalar>> basis_qr(basis);
  bool consistent = true;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::binary_search(kept.begin(), kept.end(), static_cast<std::size_t>(i))) continue;
    const Vector<Scalar> coef = basis_qr.solve(at.col(i));
    const Scalar mismatch = std::abs(sf.b(i) - coef.dot(b_kept));
    if (mismatch > std::sqrt(rank_tol) * b_scale) consistent = false;
  }

  StandardForm<Scalar> reduced;
  reduced.sides = sf.sides;
  reduced.c = sf.c;
  reduced.b.resize(rank);
  for (Eigen::Index k = 0; k < rank; ++k) {
    reduced.a.push_back(sf.a[kept[static_cast<std::size_t>(k)]]);
    reduced.b(k) = b_kept(k);
  }
  sf = std::move(reduced);
  return consistent;
}

template <typename Scalar>
StandardResult<Scalar> solve_standard(const StandardForm<Scalar>& sf, const SolverOptions<Scalar>& opt) {
  using std::abs, std::max, std::min, std::pow, std::sqrt;
  StandardResult<Scalar> res;
  const auto m = static_cast<Eigen::Index>(sf.a.size());
  Eigen::Index dim = 0;
  for (auto s : sf.sides) dim += s;
  const Scalar n = static_cast<Scalar>(dim);

  Scalar a_norm_max = 0, xi_p = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar an = frobenius(sf.a[static_cast<std::size_t>(i)]);
    a_norm_max = max(a_norm_max, an);
    xi_p = max(xi_p, (Scalar(1) + abs(sf.b(i))) / (Scalar(1) + an));
  }
  const Scalar c_norm = frobenius(sf.c);
  const Scalar b_norm = sf.b.norm();
  xi_p = max({Scalar(10), sqrt(n), n * xi_p});
  const Scalar xi_d = max({Scalar(10), sqrt(n), c_norm, a_norm_max});

  Blocks<Scalar> x = identity<Scalar>(sf.sides, xi_p);
  Blocks<Scalar> z = identity<Scalar>(sf.sides, xi_d);
  Vector<Scalar> y = Vector<Scalar>::Zero(m);

  auto finish = [&](Status status, int iter) {
    res.status = status;
    res.x = x;
    res.y = y;
    res.z = z;
    res.pobj = inner(sf.c, x);
    res.dobj = sf.b.dot(y);
    res.iterations = iter;
    return res;
  };

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    const Vector<Scalar> rp = sf.b - apply_a(sf, x);
    Blocks<Scalar> rd = apply_at(sf, y);
    for (std::size_t j = 0; j < rd.size(); ++j) rd[j] = sf.c[j] - z[j] - rd[j];

    const Scalar mu = inner(x, z) / n;
    const Scalar pobj = inner(sf.c, x);
    const Scalar dobj = sf.b.dot(y);
    res.pinf = rp.norm() / (Scalar(1) + b_norm);
    res.dinf = frobenius(rd) / (Scalar(1) + c_norm);
    const Scalar rel_gap = abs(pobj - dobj) / (Scalar(1) + abs(pobj) + abs(dobj));
    const Scalar complementarity = inner(x, z) / (Scalar(1) + abs(pobj) + abs(dobj));

    if (res.pinf <= opt.feasibility_tol && res.dinf <= opt.feasibility_tol &&
        rel_gap <= opt.gap_tol && complementarity <= opt.gap_tol)
      return finish(Status::optimal, iter);
    if (y.template lpNorm<Eigen::Infinity>() > opt.divergence) return finish(Status::infeasible, iter);
    if (frobenius(x) > opt.divergence) return finish(Status::unbounded, iter);
    if (iter == opt.max_iterations) break;

    Blocks<Scalar> zinv(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
      Eigen::LLT<Matrix<Scalar>> llt(z[j]);
      if (llt.info() != Eigen::Success) return finish(Status::numerical_failure, iter);
      zinv[j] = llt.solve(Matrix<Scalar>::Identity(z[j].rows(), z[j].cols()));
    }

    // Schur complement M_ij = tr(A_i X A_j Z^-1).
    std::vector<Blocks<Scalar>> xaz(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
      auto& w = xaz[static_cast<std::size_t>(i)];
      w.resize(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) w[j] = x[j] * sf.a[static_cast<std::size_t>(i)][j] * zinv[j];
    }
    Matrix<Scalar> schur(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index k = 0; k < m; ++k) {
        Scalar s = 0;
        for (std::size_t j = 0; j < x.size(); ++j)
          s += sf.a[static_cast<std::size_t>(i)][j].cwiseProduct(xaz[static_cast<std::size_t>(k)][j].transpose()).sum();
        schur(i, k) = s;
      }
    schur = sym<Scalar>(schur);
    Eigen::LDLT<Matrix<Scalar>> schur_ldlt(schur);
    if (schur_ldlt.info() != Eigen::Success) return finish(Status::numerical_failure, iter);

    Blocks<Scalar> x_rd_zinv(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) x_rd_zinv[j] = x[j] * rd[j] * zinv[j];
    const Vector<Scalar> a_x_rd_zinv = apply_a(sf, x_rd_zinv);

    // Solves for the direction given the complementarity target G, where
    // dX = G - X dZ Z^-1.
    auto direction = [&](const Blocks<Scalar>& g, Blocks<Scalar>& dx, Vector<Scalar>& dy, Blocks<Scalar>& dz) {
      const Vector<Scalar> rhs = rp - apply_a(sf, g) + a_x_rd_zinv;
      dy = schur_ldlt.solve(rhs);
      dz = apply_at(sf, dy);
      dx.resize(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) {
        dz[j] = rd[j] - dz[j];
        dx[j] = sym<Scalar>(g[j] - x[j] * dz[j] * zinv[j]);
      }
    };

    Blocks<Scalar> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) g[j] = -x[j];
    Blocks<Scalar> dx_aff, dz_aff;
    Vector<Scalar> dy_aff;
    direction(g, dx_aff, dy_aff, dz_aff);
    const Scalar ap_aff = min(Scalar(1), max_step(x, dx_aff));
    const Scalar ad_aff = min(Scalar(1), max_step(z, dz_aff));
    if (ap_aff < 0 || ad_aff < 0) return finish(Status::numerical_failure, iter);
    Scalar mu_aff = 0;
    for (std::size_t j = 0; j < x.size(); ++j)
      mu_aff += (x[j] + ap_aff * dx_aff[j]).cwiseProduct(z[j] + ad_aff * dz_aff[j]).sum();
    mu_aff /= n;
    const Scalar sigma = min(Scalar(1), pow(max(Scalar(0), mu_aff / mu), 3));

    for (std::size_t j = 0; j < x.size(); ++j)
      g[j] = sigma * mu * zinv[j] - x[j] - dx_aff[j] * dz_aff[j] * zinv[j];
    Blocks<Scalar> dx, dz;
    Vector<Scalar> dy;
    direction(g, dx, dy, dz);

    const Scalar ap = min(Scalar(1), opt.step_fraction * max_step(x, dx));
    const Scalar ad = min(Scalar(1), opt.step_fraction * max_step(z, dz));
    if (!(ap > 0) || !(ad > 0)) return finish(Status::numerical_failure, iter);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = sym<Scalar>(x[j] + ap * dx[j]);
      z[j] = sym<Scalar>(z[j] + ad * dz[j]);
    }
    y += ad * dy;
  }
  return finish(Status::max_iterations, opt.max_iterations);
}

template <typename Scalar>
Matrix<Scalar> symmetric_copy(const Matrix<Scalar>& m) {
  return sym<Scalar>(m);
}

}  // namespace detail

/// Solves a problem in either form. The returned status is phrased in terms
/// of the caller's problem: `infeasible` means no point satisfies its
/// constraints, `unbounded` means its objective is unbounded in the
/// optimisation direction.
template <typename Scalar>
Solution<Scalar> solve(const Problem<Scalar>& problem, const SolverOptions<Scalar>& opt = {}) {
  problem.validate();
  detail::StandardForm<Scalar> sf;
  Solution<Scalar> sol;
  const bool matrix_form = problem.is_matrix_form();
  const Scalar sign = problem.sense == Sense::minimize ? Scalar(1) : Scalar(-1);
  std::size_t original_rows = 0;

  if (matrix_form) {
    for (const auto& v : problem.matrix_vars) sf.sides.push_back(v.side);
    sf.c = detail::zeros<Scalar>(sf.sides);
    for (const auto& t : problem.objective) sf.c[t.var] += sign * detail::symmetric_copy(t.coefficient);
    original_rows = problem.equalities.size();
    sf.b.resize(static_cast<Eigen::Index>(original_rows));
    for (std::size_t i = 0; i < original_rows; ++i) {
      auto blocks = detail::zeros<Scalar>(sf.sides);
      for (const auto& t : problem.equalities[i].terms) blocks[t.var] += detail::symmetric_copy(t.coefficient);
      sf.a.push_back(std::move(blocks));
      sf.b(static_cast<Eigen::Index>(i)) = problem.equalities[i].rhs;
    }
  } else {
    for (const auto& l : problem.lmis) sf.sides.push_back(l.constant.rows());
    for (const auto& l : problem.lmis) sf.c.push_back(-detail::symmetric_copy(l.constant));
    original_rows = problem.scalar_vars.size();
    for (std::size_t i = 0; i < original_rows; ++i) sf.a.push_back(detail::zeros<Scalar>(sf.sides));
    for (std::size_t k = 0; k < problem.lmis.size(); ++k)
      for (const auto& t : problem.lmis[k].terms) sf.a[t.var][k] += detail::symmetric_copy(t.coefficient);
    sf.b = -sign * problem.scalar_objective;
  }

  std::vector<std::size_t> kept;
  const bool consistent = detail::presolve(sf, kept, opt.rank_tol);
  if (!consistent) {
    sol.status = matrix_form ? Status::infeasible : Status::unbounded;
    return sol;
  }

  const auto raw = detail::solve_standard(sf, opt);
  Vector<Scalar> y_full = Vector<Scalar>::Zero(static_cast<Eigen::Index>(original_rows));
  for (std::size_t k = 0; k < kept.size(); ++k) y_full(static_cast<Eigen::Index>(kept[k])) = raw.y(static_cast<Eigen::Index>(k));

  sol.status = raw.status;
  if (!matrix_form) {
    if (raw.status == Status::infeasible) sol.status = Status::unbounded;
    else if (raw.status == Status::unbounded) sol.status = Status::infeasible;
  }
  sol.iterations = raw.iterations;
  sol.primal_infeasibility = matrix_form ? raw.pinf : raw.dinf;
  sol.dual_infeasibility = matrix_form ? raw.dinf : raw.pinf;
  sol.matrices = raw.x;
  sol.scalars = y_full;
  if (matrix_form) {
    sol.objective = sign * raw.pobj + problem.objective_offset;
    sol.bound = sign * raw.dobj + problem.objective_offset;
  } else {
    sol.objective = -sign * raw.dobj + problem.objective_offset;
    sol.bound = -sign * raw.pobj + problem.objective_offset;
  }
  sol.gap = std::abs(sol.objective - sol.bound);
  return sol;
}

}  // namespace sdiq::sdp
