#include <doctest.h>

#include <cmath>
#include <random>

#include "sdiq/certify.hpp"
#include "sdiq/efficiency.hpp"
#include "sdiq/oracle.hpp"
#include "sdiq/phase_space.hpp"

using namespace sdiq;

namespace {

ProbTable ideal(double mu, double eta = 1.0) {
  return ProbTable::from_matrix(prob_heterodyne(std::sqrt(eta * mu)));
}

ProbTable symmetric(double error_sum) {
  Eigen::Matrix2d p;
  p << 1 - error_sum / 2, error_sum / 2, error_sum / 2, 1 - error_sum / 2;
  return ProbTable::from_matrix(p);
}

double primal_value(const ProbTable& pt, double mu, Field field = Field::real) {
  const auto sol = sdp::solve(build_primal(pt, OverlapConstraint::from_mu(mu), field));
  REQUIRE(sol.status == sdp::Status::optimal);
  return sol.objective;
}

}  // namespace

TEST_SUITE("certify") {
  TEST_CASE("state embedding") {
    const auto r = embed_states(0.8);
    CHECK((r[0] * r[1]).trace() == doctest::Approx(0.64).epsilon(1e-14));
    CHECK(r[0].trace() == doctest::Approx(1.0));
    CHECK(r[1].trace() == doctest::Approx(1.0));
    CHECK((r[1] * r[1] - r[1]).norm() <= 1e-15);
    const auto same = embed_states(1.0);
    CHECK((same[0] - same[1]).norm() <= 1e-15);
    const auto orth = embed_states(0.0);
    CHECK((orth[0] * orth[1]).norm() <= 1e-15);
    CHECK_THROWS_AS(embed_states(1.2), UsageError);
    CHECK_THROWS_AS(embed_states(-0.1), UsageError);
  }

  TEST_CASE("overlap constraint") {
    CHECK(OverlapConstraint::from_mu(0.2).lambda == doctest::Approx(0.6));
    CHECK_THROWS_AS(OverlapConstraint::from_mu(0.6), AssumptionViolation);
    CHECK(OverlapConstraint::from_lambda(0.4).mu == doctest::Approx(0.3));
  }

  TEST_CASE("table validation") {
    Eigen::Matrix2d p;
    p << 0.7, 0.2, 0.2, 0.8;
    CHECK_THROWS_AS(ProbTable::from_matrix(p).validate(), UsageError);
    p << 1.1, 0.5, -0.1, 0.5;
    CHECK_THROWS_AS(ProbTable::from_matrix(p).validate(), UsageError);
  }

  TEST_CASE("ideal heterodyne curve") {
    const std::tuple<double, double, double> frozen[] = {{0.05, 0.8699453911770554, 0.20100325294983284},
                                                         {0.1, 0.8849069486728691, 0.17640233658000062},
                                                         {0.2, 0.9408861571082039, 0.08790792082962956},
                                                         {0.3, 0.9744301902576582, 0.03736926268963415},
                                                         {0.45, 0.9983445278378118, 0.0023903205796671646}};
    for (auto [mu, pg, h] : frozen) {
      const auto cert = certify(ideal(mu), mu);
      CHECK(std::abs(cert.pg_upper - pg) <= 1e-6);
      CHECK(std::abs(cert.hmin_rate - h) <= 2e-6);
      CHECK(cert.hmin_rate == doctest::Approx(-std::log2(cert.pg_upper)));
      CHECK(cert.pg_upper >= pg - 1e-9);
      CHECK(std::abs(cert.pg_upper - primal_value(ideal(mu), mu)) <= 1e-6);
    }
  }

  TEST_CASE("lossy heterodyne curve") {
    const std::tuple<double, double> frozen[] = {
        {0.05, 0.9476782399166848}, {0.1, 0.9508121097690785}, {0.2, 0.9740631449283921}};
    for (auto [mu, pg] : frozen) CHECK(std::abs(certify(ideal(mu, 0.173), mu).pg_upper - pg) <= 1e-6);
  }

  TEST_CASE("optimal multipliers at mu = 0.2") {
    // The optimal face is not a single point: the tabulated multipliers
    // below and the ones returned here differ but have the same value.
    const auto cert = certify(ideal(0.2), 0.2);
    Eigen::Matrix2d tabulated;
    tabulated << -0.4375, -0.5625, -0.5625, -0.4375;
    const double value = -(tabulated.array() * cert.table.p_bx.array()).sum();
    CHECK(value == doctest::Approx(0.9408861571082039).epsilon(1e-12));
    CHECK(max_constraint_eigenvalue(cert.dual, cert.overlap) <= 1e-12);
    CHECK(dual_objective(cert.dual, cert.table) == doctest::Approx(cert.pg_asymptotic).epsilon(1e-12));
    CHECK(std::abs(dual_objective(cert.dual, cert.table) - value) <= 1e-6);
    for (int b = 0; b < 2; ++b) CHECK(std::abs(cert.dual.nu(b, 0)) + std::abs(cert.dual.nu(b, 1)) >= 1 - 1e-9);
  }

  TEST_CASE("trivial instances") {
    CHECK(certify(symmetric(1.0), 0.0).hmin_rate == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(primal_value(symmetric(1.0), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(certify(symmetric(1.0), 0.3).hmin_rate <= 1e-7);
  }

  TEST_CASE("refusals") {
    CHECK_THROWS_AS(certify(ideal(0.2), 0.6), AssumptionViolation);
    CHECK_THROWS_AS(certify(ideal(0.2), -0.1), UsageError);
    CHECK_THROWS_AS(certify(ProbTable::from_matrix(prob_heterodyne(10.0)), 0.01), InfeasibleData);
    const double bound = discrimination_bound(0.2);
    CHECK_THROWS_AS(certify(symmetric(bound - 2e-3), 0.2), InfeasibleData);
    CHECK_NOTHROW(certify(symmetric(bound + 2e-3), 0.2));
    CertifyOptions fs;
    fs.finite_size = true;
    CHECK_THROWS_AS(certify(ideal(0.2), 0.2, fs), UsageError);
    CertifyOptions inflate;
    inflate.mu_inflation = 0.9;
    CHECK_THROWS_AS(certify(ideal(0.2), 0.2, inflate), UsageError);
  }

  TEST_CASE("fixed multipliers still bound perturbed tables") {
    const auto cert = certify(ideal(0.15), 0.15);
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> d(-0.03, 0.03);
    for (int k = 0; k < 10; ++k) {
      ProbTable pt = cert.table;
      const double e0 = d(eng), e1 = d(eng);
      pt.p_bx(0, 0) += e0;
      pt.p_bx(1, 0) -= e0;
      pt.p_bx(0, 1) += e1;
      pt.p_bx(1, 1) -= e1;
      CHECK(dual_objective(cert.dual, pt) >= certify(pt, 0.15).pg_upper - 1e-7);
    }
  }

  TEST_CASE("repair makes an infeasible point feasible") {
    auto cert = certify(ideal(0.2), 0.2);
    DualPoint dp = cert.dual;
    dp.nu.array() += 0.05;
    CHECK(max_constraint_eigenvalue(dp, cert.overlap) > 0);
    const auto shift = make_feasible(dp, cert.overlap);
    REQUIRE(shift);
    CHECK(*shift > 0);
    CHECK(max_constraint_eigenvalue(dp, cert.overlap) <= 1e-12);
  }

  TEST_CASE("finite-size correction") {
    CHECK(std::abs(confidence_halfwidth(1e-10, 1e6) - 0.00407549266646829) <= 1e-12);
    CHECK(confidence_halfwidth(1e-10, 4e6) == doctest::Approx(confidence_halfwidth(1e-10, 1e6) / 2));
    CHECK(confidence_halfwidth(1e-20, 1e6) == doctest::Approx(confidence_halfwidth(1e-10, 1e6) * std::sqrt(2.0)));

    ProbTable pt = ideal(0.1);
    pt.n_x = std::array<double, 2>{1e6, 1e6};
    CertifyOptions fs;
    fs.finite_size = true;
    const auto cert = certify(pt, 0.1, fs);
    CHECK(std::abs(cert.pg_upper - 0.8930579340057618) <= 1e-6);
    CHECK(std::abs(cert.hmin_rate - 0.1631743267169704) <= 2e-6);
    CHECK(cert.pg_upper > cert.pg_asymptotic);
    CHECK(cert.hmin_rate < hmin_rate(pt, 0.1));
    CHECK(cert.dual.nu.cwiseAbs().sum() >= 2 - 1e-9);

    // Re-bounding through the multipliers alone.
    const auto asym = certify(ideal(0.1), 0.1);
    CHECK(finite_size_objective(asym.dual, pt, 1e-10) >= cert.pg_upper - 1e-9);
    pt.n_x = std::array<double, 2>{1e18, 1e18};
    CHECK(finite_size_objective(asym.dual, pt, 1e-10) == doctest::Approx(asym.pg_asymptotic).epsilon(1e-7));
    CHECK(certify(pt, 0.1, fs).pg_upper == doctest::Approx(asym.pg_upper).epsilon(1e-6));
    CHECK_THROWS_AS(finite_size_objective(asym.dual, ideal(0.1), 1e-10), UsageError);
  }

  TEST_CASE("monotone in the overlap") {
    // A larger guaranteed overlap leaves the adversary less room.
    const ProbTable pt = ideal(0.05);
    double previous = 0.0;
    for (double lambda = 0.40; lambda <= 0.8001; lambda += 0.05) {
      const auto oc = OverlapConstraint::from_lambda(lambda);
      const double h = certify(pt, oc.mu).hmin_rate;
      CHECK(h >= previous - 1e-7);
      previous = h;
    }
  }

  TEST_CASE("outcome relabelling symmetry") {
    for (double mu : {0.07, 0.2, 0.33}) {
      ProbTable pt = ideal(mu);
      pt.p_bx(0, 0) -= 0.01;
      pt.p_bx(1, 0) += 0.01;
      CHECK(hmin_rate(pt, mu) == doctest::Approx(hmin_rate(pt.swapped_outcomes(), mu)).epsilon(1e-6));
    }
  }

  TEST_CASE("real restriction equals the self-adjoint model") {
    std::mt19937_64 eng(20);
    std::uniform_real_distribution<double> mu_d(0.05, 0.45), e_d(-0.02, 0.02);
    CertifyOptions complex;
    complex.field = Field::complex;
    for (int k = 0; k < 20; ++k) {
      const double mu = mu_d(eng);
      ProbTable pt = ideal(mu);
      const double e0 = e_d(eng), e1 = e_d(eng);
      pt.p_bx(0, 0) += e0;
      pt.p_bx(1, 0) -= e0;
      pt.p_bx(0, 1) += e1;
      pt.p_bx(1, 1) -= e1;
      const double real = certify(pt, mu).pg_upper;
      CHECK(std::abs(real - certify(pt, mu, complex).pg_upper) <= 1e-6);
      CHECK(std::abs(real - primal_value(pt, mu, Field::complex)) <= 1e-6);
    }
  }

  TEST_CASE("oracle") {
    CHECK(*oracle_pg(symmetric(1.0), OverlapConstraint::from_lambda(1.0)) == doctest::Approx(1.0));
    CHECK(*oracle_pg(symmetric(0.0), OverlapConstraint::from_lambda(0.0)) == doctest::Approx(1.0));
    const auto o = oracle_pg(ideal(0.1), OverlapConstraint::from_mu(0.1));
    REQUIRE(o);
    const double dual = certify(ideal(0.1), 0.1).pg_upper;
    CHECK(*o <= dual + 1e-6);
    CHECK(*o >= dual - 0.02);
    // The oracle has no strategy for tables below the discrimination bound.
    CHECK_FALSE(oracle_pg(ProbTable::from_matrix(prob_heterodyne(10.0)), OverlapConstraint::from_mu(0.01)));
  }

  TEST_CASE("certificate JSON round trip") {
    ProbTable pt = ideal(0.2);
    pt.n_x = std::array<double, 2>{5e5, 5e5};
    CertifyOptions fs;
    fs.finite_size = true;
    const auto cert = certify(pt, 0.2, fs);
    const auto text = to_json(cert);
    const auto back = certificate_from_json(text);
    CHECK(back.pg_upper == cert.pg_upper);
    CHECK(back.hmin_rate == cert.hmin_rate);
    CHECK(back.dual.nu == cert.dual.nu);
    CHECK(back.table_digest == cert.table_digest);
    CHECK(to_json(back) == text);
    CHECK(text.find("\"nu\"") != std::string::npos);
    CHECK_THROWS_AS(certificate_from_json("{"), FormatError);
    CHECK(digest(pt) != digest(ideal(0.21)));
  }

  TEST_CASE("efficiency fit") {
    const double alphas[] = {0.3, 0.5, 0.7, 0.9, 1.1};
    std::vector<EfficiencySample> s;
    for (int k = 0; k < 5; ++k) s.push_back({alphas[k], synthetic_table(alphas[k], 0.173, 500000, 100 + k)});
    const auto fit = fit_efficiency(s);
    CHECK(std::abs(fit.eta - 0.173) <= 3 * fit.sigma);
    CHECK(fit.sigma > 0);
    CHECK(fit.sigma < 0.002);

    std::vector<EfficiencySample> full;
    for (int k = 0; k < 5; ++k) full.push_back({alphas[k], synthetic_table(alphas[k], 1.0, 500000, 200 + k)});
    CHECK(fit_efficiency(full).eta == doctest::Approx(1.0).epsilon(0.01));

    std::vector<EfficiencySample> single{{0.0, synthetic_table(0.0, 0.5, 1000, 1)}};
    CHECK_THROWS_AS(fit_efficiency(single), UsageError);
    std::vector<EfficiencySample> blind{{0.0, synthetic_table(0.0, 0.5, 1000, 1)}, {0.0, synthetic_table(0.0, 0.5, 1000, 2)}};
    CHECK_THROWS(fit_efficiency(blind));
    std::vector<EfficiencySample> uncounted{{0.3, ideal(0.1)}, {0.5, ideal(0.2)}};
    CHECK_THROWS_AS(fit_efficiency(uncounted), UsageError);
  }
}
