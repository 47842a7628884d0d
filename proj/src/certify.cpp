#include "sdiq/certify.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "sdiq/digest.hpp"
#include "sdiq/tracking.hpp"

namespace sdiq {

using nlohmann::json;

ProbTable ProbTable::from_counts(const ConditionalCounts& counts) {
  ProbTable pt;
  pt.p_bx = counts.probabilities();
  pt.n_x = std::array<double, 2>{static_cast<double>(counts.n_x(0)), static_cast<double>(counts.n_x(1))};
  return pt;
}

void ProbTable::validate() const {
  for (int x = 0; x < 2; ++x) {
    for (int b = 0; b < 2; ++b)
      if (!(p_bx(b, x) >= 0.0 && p_bx(b, x) <= 1.0))
        throw UsageError("probability table entries must lie in [0, 1]");
    if (std::abs(p_bx(0, x) + p_bx(1, x) - 1.0) > 1e-9)
      throw UsageError("probability table columns must sum to 1");
  }
  if (n_x)
    for (double n : *n_x)
      if (!(n > 0)) throw UsageError("sample sizes must be positive");
}

ProbTable ProbTable::swapped_outcomes() const {
  ProbTable out = *this;
  out.p_bx.row(0) = p_bx.row(1);
  out.p_bx.row(1) = p_bx.row(0);
  return out;
}

OverlapConstraint OverlapConstraint::from_mu(double mu) {
  return OverlapConstraint{overlap_from_energy(mu), mu};
}

OverlapConstraint OverlapConstraint::from_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("overlap must lie in [0, 1]");
  return OverlapConstraint{lambda, (1.0 - lambda) / 2.0};
}

DualPoint dual_point(const sdp::Solution<double>& solution, Field field) {
  const DualLayout layout{field, false};
  const auto& y = solution.scalars;
  DualPoint dp;
  for (int b = 0; b < 2; ++b)
    for (int x = 0; x < 2; ++x) dp.nu(b, x) = y(static_cast<Eigen::Index>(DualLayout::nu(b, x)));
  for (int label = 0; label < 4; ++label) {
    const auto base = static_cast<Eigen::Index>(layout.h(label));
    const double im = field == Field::complex ? y(base + 3) : 0.0;
    Eigen::Matrix2cd h;
    h << y(base), std::complex<double>(y(base + 2), im),
         std::complex<double>(y(base + 2), -im), y(base + 1);
    dp.h[static_cast<std::size_t>(label)] = h;
  }
  return dp;
}

double max_constraint_eigenvalue(const DualPoint& dp, const OverlapConstraint& oc) {
  const auto rho = embed_states<double>(oc.lambda);
  double worst = -std::numeric_limits<double>::infinity();
  for (int label = 0; label < 4; ++label) {
    const Eigen::Matrix2cd& h = dp.h[static_cast<std::size_t>(label)];
    const Eigen::Matrix2cd traceless = h - 0.5 * h.trace() * Eigen::Matrix2cd::Identity();
    for (int b = 0; b < 2; ++b) {
      Eigen::Matrix2cd g = traceless;
      for (int x = 0; x < 2; ++x) {
        const double weight = (detail::guess(label, x) == b ? 0.5 : 0.0) + dp.nu(b, x);
        g += weight * rho[x].cast<std::complex<double>>();
      }
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> eig(g, Eigen::EigenvaluesOnly);
      worst = std::max(worst, eig.eigenvalues().maxCoeff());
    }
  }
  return worst;
}

std::optional<double> make_feasible(DualPoint& dp, const OverlapConstraint& oc) {
  const double excess = max_constraint_eigenvalue(dp, oc);
  if (excess <= 0) return 0.0;
  const double floor_eig = 1.0 - oc.lambda;
  if (floor_eig < 1e-12) return std::nullopt;
  // Weyl: shifting every nu by -t lowers each constraint by t (rho0 + rho1) >= t (1 - lambda).
  const double shift = excess / floor_eig * (1.0 + 1e-9) + 1e-15;
  dp.nu.array() -= shift;
  return shift;
}

double dual_objective(const DualPoint& dp, const ProbTable& pt) {
  return -(dp.nu.array() * pt.p_bx.array()).sum();
}

double confidence_halfwidth(double epsilon, double n) {
  if (!(epsilon > 0 && epsilon < 1)) throw UsageError("epsilon must lie in (0, 1)");
  if (!(n > 0)) throw UsageError("sample size must be positive");
  return std::sqrt(-std::log2(epsilon) / (2.0 * n));
}

double finite_size_objective(const DualPoint& dp, const ProbTable& pt, double epsilon) {
  if (!pt.n_x) throw UsageError("finite-size objective needs per-input sample sizes");
  double value = dual_objective(dp, pt);
  for (int x = 0; x < 2; ++x) {
    const double delta = confidence_halfwidth(epsilon, (*pt.n_x)[static_cast<std::size_t>(x)]);
    value += delta * (std::abs(dp.nu(0, x)) + std::abs(dp.nu(1, x)));
  }
  return value;
}

std::string digest(const ProbTable& pt) {
  json j;
  j["p_bx"] = {{pt.p_bx(0, 0), pt.p_bx(0, 1)}, {pt.p_bx(1, 0), pt.p_bx(1, 1)}};
  j["n_x"] = pt.n_x ? json(*pt.n_x) : json(nullptr);
  return sha256_hex(j.dump());
}

std::string digest(const OverlapConstraint& oc) {
  json j;
  j["lambda"] = oc.lambda;
  j["mu"] = oc.mu;
  return sha256_hex(j.dump());
}

Certificate certify(const ProbTable& pt, double mu, const CertifyOptions& options) {
  pt.validate();
  if (!std::isfinite(mu) || mu < 0) throw UsageError("mu must be a finite value >= 0");
  if (!(options.mu_inflation >= 1.0)) throw UsageError("mu inflation factor must be >= 1");
  const double mu_used = mu * options.mu_inflation;
  if (mu_used > 0.5)
    throw AssumptionViolation("energy bound mu = " + std::to_string(mu_used) +
                              " exceeds 0.5; the overlap bound 1 - 2 mu does not apply");
  if (options.finite_size && !pt.n_x)
    throw UsageError("finite-size certification needs per-input sample sizes");
  if (!(options.epsilon > 0 && options.epsilon < 1)) throw UsageError("epsilon must lie in (0, 1)");

  Certificate cert;
  cert.table = pt;
  cert.overlap = OverlapConstraint::from_mu(mu_used);
  cert.mu_declared = mu;
  cert.mu_inflation = options.mu_inflation;
  cert.epsilon = options.epsilon;
  cert.epsilon_re = options.epsilon_re;
  cert.finite_size = options.finite_size;
  cert.field = options.field;
  cert.table_digest = digest(pt);
  cert.overlap_digest = digest(cert.overlap);

  const auto phase_one = sdp::solve(build_feasibility(pt, cert.overlap, options.field), options.solver);
  if (phase_one.status != sdp::Status::optimal)
    throw SolverFailure(std::string("feasibility program did not converge: ") + sdp::to_string(phase_one.status));
  cert.solver.phase_one_value = phase_one.objective;
  if (phase_one.objective > options.feasibility_threshold)
    throw InfeasibleData("data inconsistent with energy bound: observed p(b|x) cannot be produced by states "
                         "with overlap >= " + std::to_string(cert.overlap.lambda));

  std::optional<Eigen::Vector2d> delta;
  if (options.finite_size)
    delta = Eigen::Vector2d(confidence_halfwidth(options.epsilon, (*pt.n_x)[0]),
                            confidence_halfwidth(options.epsilon, (*pt.n_x)[1]));
  const auto dual = sdp::solve(build_dual(pt, cert.overlap, options.field, delta), options.solver);
  if (dual.status != sdp::Status::optimal)
    throw SolverFailure(std::string("dual program did not converge: ") + sdp::to_string(dual.status));

  cert.solver.status = sdp::to_string(dual.status);
  cert.solver.iterations = dual.iterations;
  cert.solver.gap = dual.gap;
  cert.solver.primal_infeasibility = dual.primal_infeasibility;
  cert.solver.dual_infeasibility = dual.dual_infeasibility;
  cert.duality_gap = dual.gap;

  cert.dual = dual_point(dual, options.field);
  cert.solver.max_constraint_eigenvalue = max_constraint_eigenvalue(cert.dual, cert.overlap);
  const auto shift = make_feasible(cert.dual, cert.overlap);
  cert.solver.feasibility_shift = shift.value_or(0.0);

  double pg = options.finite_size ? finite_size_objective(cert.dual, pt, options.epsilon)
                                  : dual_objective(cert.dual, pt);
  cert.pg_asymptotic = std::min(1.0, dual_objective(cert.dual, pt));
  if (!shift) pg = 1.0;  // coincident states and an unrepairable point: fall back to the trivial bound
  if (pg < 0.5 - 1e-6) throw SolverFailure("dual bound below 1/2; solver returned an invalid point");
  cert.pg_upper = std::clamp(pg, 0.5, 1.0);
  cert.hmin_rate = cert.pg_upper >= 1.0 ? 0.0 : -std::log2(cert.pg_upper);
  return cert;
}

double hmin_rate(const ProbTable& pt, double mu, const CertifyOptions& options) {
  return certify(pt, mu, options).hmin_rate;
}

namespace {

json matrix_json(const Eigen::Matrix2d& m) { return {{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}; }

Eigen::Matrix2d matrix_from(const json& j) {
  Eigen::Matrix2d m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = j.at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

}  // namespace

std::string to_json(const Certificate& cert) {
  json j;
  j["pg_upper"] = cert.pg_upper;
  j["hmin_rate"] = cert.hmin_rate;
  j["pg_asymptotic"] = cert.pg_asymptotic;
  j["finite_size"] = cert.finite_size;
  j["epsilon"] = cert.epsilon;
  j["epsilon_re"] = cert.epsilon_re;
  j["duality_gap"] = cert.duality_gap;
  j["field"] = cert.field == Field::real ? "real" : "complex";
  j["inputs"] = {
      {"p_bx", matrix_json(cert.table.p_bx)},
      {"n_x", cert.table.n_x ? json(*cert.table.n_x) : json(nullptr)},
      {"mu_declared", cert.mu_declared},
      {"mu_inflation", cert.mu_inflation},
      {"mu", cert.overlap.mu},
      {"lambda", cert.overlap.lambda},
      {"table_digest", cert.table_digest},
      {"overlap_digest", cert.overlap_digest},
  };
  j["solver"] = {
      {"status", cert.solver.status},
      {"iterations", cert.solver.iterations},
      {"gap", cert.solver.gap},
      {"primal_infeasibility", cert.solver.primal_infeasibility},
      {"dual_infeasibility", cert.solver.dual_infeasibility},
      {"max_constraint_eigenvalue", cert.solver.max_constraint_eigenvalue},
      {"feasibility_shift", cert.solver.feasibility_shift},
      {"phase_one_value", cert.solver.phase_one_value},
  };
  j["dual"] = {{"nu", matrix_json(cert.dual.nu)}};
  return j.dump(2) + "\n";
}

Certificate certificate_from_json(const std::string& text) {
  Certificate cert;
  try {
    const json j = json::parse(text);
    cert.pg_upper = j.at("pg_upper").get<double>();
    cert.hmin_rate = j.at("hmin_rate").get<double>();
    cert.pg_asymptotic = j.at("pg_asymptotic").get<double>();
    cert.finite_size = j.at("finite_size").get<bool>();
    cert.epsilon = j.at("epsilon").get<double>();
    cert.epsilon_re = j.at("epsilon_re").get<double>();
    cert.duality_gap = j.at("duality_gap").get<double>();
    cert.field = j.at("field").get<std::string>() == "complex" ? Field::complex : Field::real;
    const json& in = j.at("inputs");
    cert.table.p_bx = matrix_from(in.at("p_bx"));
    if (!in.at("n_x").is_null()) cert.table.n_x = in.at("n_x").get<std::array<double, 2>>();
    cert.mu_declared = in.at("mu_declared").get<double>();
    cert.mu_inflation = in.at("mu_inflation").get<double>();
    cert.overlap = {in.at("lambda").get<double>(), in.at("mu").get<double>()};
    cert.table_digest = in.at("table_digest").get<std::string>();
    cert.overlap_digest = in.at("overlap_digest").get<std::string>();
    const json& s = j.at("solver");
    cert.solver.status = s.at("status").get<std::string>();
    cert.solver.iterations = s.at("iterations").get<int>();
    cert.solver.gap = s.at("gap").get<double>();
    cert.solver.primal_infeasibility = s.at("primal_infeasibility").get<double>();
    cert.solver.dual_infeasibility = s.at("dual_infeasibility").get<double>();
    cert.solver.max_constraint_eigenvalue = s.at("max_constraint_eigenvalue").get<double>();
    cert.solver.feasibility_shift = s.at("feasibility_shift").get<double>();
    cert.solver.phase_one_value = s.at("phase_one_value").get<double>();
    cert.dual.nu = matrix_from(j.at("dual").at("nu"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed certificate: ") + e.what());
  }
  if (!(cert.pg_upper >= 0.5 && cert.pg_upper <= 1.0)) throw FormatError("certificate pg_upper out of range");
  return cert;
}

}  // namespace sdiq
