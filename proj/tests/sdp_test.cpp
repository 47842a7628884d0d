#include <doctest.h>

#include <cmath>

#include "sdiq/sdp/solver.hpp"

using namespace sdiq::sdp;

namespace {

template <typename Scalar>
Problem<Scalar> trace_one(const Matrix<Scalar>& c, Sense sense) {
  Problem<Scalar> p;
  p.sense = sense;
  const auto x = p.add_matrix_var("X", c.rows());
  p.objective.push_back({x, c});
  p.equalities.push_back({"trace", {{x, Matrix<Scalar>::Identity(c.rows(), c.rows())}}, Scalar(1)});
  return p;
}

Eigen::MatrixXd sample() {
  Eigen::MatrixXd c(2, 2);
  c << 2, 1, 1, 3;
  return c;
}

}  // namespace

TEST_SUITE("sdp") {
  TEST_CASE("matrix form: extreme eigenvalues") {
    const auto lo = solve(trace_one<double>(sample(), Sense::minimize));
    REQUIRE(lo.status == Status::optimal);
    CHECK(lo.objective == doctest::Approx((5 - std::sqrt(5.0)) / 2).epsilon(1e-7));
    CHECK(lo.gap <= 1e-7);
    CHECK(lo.bound <= lo.objective + 1e-7);
    const auto hi = solve(trace_one<double>(sample(), Sense::maximize));
    REQUIRE(hi.status == Status::optimal);
    CHECK(hi.objective == doctest::Approx((5 + std::sqrt(5.0)) / 2).epsilon(1e-7));
    CHECK(hi.bound >= hi.objective - 1e-7);
    CHECK(hi.matrices[0].trace() == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("long double instantiation") {
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> c = sample().cast<long double>();
    SolverOptions<long double> opt;
    opt.gap_tol = 1e-12L;
    opt.feasibility_tol = 1e-12L;
    const auto lo = solve(trace_one<long double>(c, Sense::minimize), opt);
    REQUIRE(lo.status == Status::optimal);
    CHECK(std::abs(static_cast<double>(lo.objective) - (5 - std::sqrt(5.0)) / 2) <= 1e-10);
  }

  TEST_CASE("several blocks") {
    Problem<double> p;
    p.sense = Sense::maximize;
    const auto x1 = p.add_matrix_var("X1", 2);
    const auto x2 = p.add_matrix_var("x2", 1);
    p.objective.push_back({x1, sample()});
    p.objective.push_back({x2, Eigen::MatrixXd::Constant(1, 1, 5.0)});
    p.equalities.push_back({"budget", {{x1, Eigen::MatrixXd::Identity(2, 2)}, {x2, Eigen::MatrixXd::Ones(1, 1)}}, 1.0});
    const auto s = solve(p);
    REQUIRE(s.status == Status::optimal);
    CHECK(s.objective == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(s.matrices[1](0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("LMI form: largest eigenvalue") {
    Problem<double> p;
    const auto t = p.add_scalar_var("t");
    p.scalar_objective(static_cast<Eigen::Index>(t)) = 1.0;
    p.lmis.push_back({"C - tI <= 0", sample(), {{t, -Eigen::MatrixXd::Identity(2, 2)}}});
    const auto s = solve(p);
    REQUIRE(s.status == Status::optimal);
    CHECK(s.objective == doctest::Approx((5 + std::sqrt(5.0)) / 2).epsilon(1e-7));
    CHECK(evaluate(p.lmis[0], s.scalars).selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff() <= 1e-7);
    // The multiplier of the LMI is the maximising eigenprojector.
    CHECK(s.matrices[0].trace() == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("infeasible and unbounded problems") {
    Problem<double> neg;
    const auto x = neg.add_matrix_var("x", 1);
    neg.objective.push_back({x, Eigen::MatrixXd::Ones(1, 1)});
    neg.equalities.push_back({"x = -1", {{x, Eigen::MatrixXd::Ones(1, 1)}}, -1.0});
    CHECK(solve(neg).status == Status::infeasible);

    Problem<double> clash;
    const auto y = clash.add_matrix_var("X", 2);
    Eigen::MatrixXd e11 = Eigen::MatrixXd::Zero(2, 2);
    e11(0, 0) = 1;
    clash.equalities.push_back({"a", {{y, e11}}, 1.0});
    clash.equalities.push_back({"b", {{y, e11}}, 2.0});
    CHECK(solve(clash).status == Status::infeasible);

    Problem<double> free;
    const auto v = free.add_scalar_var("v");
    free.scalar_objective(0) = 1.0;
    free.lmis.push_back({"-1 <= 0", -Eigen::MatrixXd::Ones(1, 1), {{v, Eigen::MatrixXd::Zero(1, 1)}}});
    CHECK(solve(free).status == Status::unbounded);

    Problem<double> split;
    const auto w = split.add_scalar_var("w");
    Eigen::MatrixXd f1 = Eigen::MatrixXd::Zero(2, 2);
    f1(0, 0) = 1;
    f1(1, 1) = -1;
    split.lmis.push_back({"diag(1+w, 1-w) <= 0", Eigen::MatrixXd::Identity(2, 2), {{w, f1}}});
    CHECK(solve(split).status == Status::infeasible);
  }

  TEST_CASE("dependent but consistent rows are tolerated") {
    auto p = trace_one<double>(sample(), Sense::minimize);
    p.equalities.push_back({"trace again", {{0, 2 * Eigen::MatrixXd::Identity(2, 2)}}, 2.0});
    const auto s = solve(p);
    REQUIRE(s.status == Status::optimal);
    CHECK(s.objective == doctest::Approx((5 - std::sqrt(5.0)) / 2).epsilon(1e-7));
  }

  TEST_CASE("validation") {
    Problem<double> empty;
    CHECK_THROWS_AS(empty.validate(), sdiq::UsageError);
    auto both = trace_one<double>(sample(), Sense::minimize);
    both.add_scalar_var("t");
    CHECK_THROWS_AS(solve(both), sdiq::UsageError);
    auto bad = trace_one<double>(sample(), Sense::minimize);
    bad.equalities[0].terms[0].coefficient = Eigen::MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(solve(bad), sdiq::UsageError);
    auto undeclared = trace_one<double>(sample(), Sense::minimize);
    undeclared.objective[0].var = 4;
    CHECK_THROWS_AS(solve(undeclared), sdiq::UsageError);
    CHECK(std::string(to_string(Status::optimal)) == "optimal");
  }
}
