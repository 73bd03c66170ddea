#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "rkreco/errors.hpp"
#include "rkreco/kernels.hpp"
#include "rkreco/oracle.hpp"
#include "rkreco/solvers.hpp"
#include "rkreco/uncertainty.hpp"
#include "testutil.hpp"

using namespace rkreco;

namespace {

Eigen::VectorXd vec2(double a, double b) { return Eigen::Vector2d(a, b); }

const GramMatrix kIdentity2 = GramMatrix::from_matrix(Eigen::MatrixXd::Identity(2, 2));

}  // namespace

TEST_CASE("box oracle on hand instances") {
  SUBCASE("both coordinates pinned") {
    // z = (3, -4), deltas = 1: pulling toward the origin pins coordinate 0
    // at its lower bound 2 and coordinate 1 at its upper bound -3.
    const OracleResult r = box_active_set_oracle(kIdentity2, vec2(3.0, -4.0), vec2(1.0, 1.0));
    CHECK(r.x_star(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.x_star(1) == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(r.norm_sq == doctest::Approx(13.0).epsilon(1e-12));
    REQUIRE(r.pattern.size() == 2);
    CHECK(r.pattern[0] == BoundSide::Lower);
    CHECK(r.pattern[1] == BoundSide::Upper);
  }
  SUBCASE("one coordinate released") {
    // z = (0.5, 2), deltas = 1: coordinate 0's interval [-0.5, 1.5] admits
    // the unconstrained value 0, coordinate 1 stops at its lower bound 1.
    const OracleResult r = box_active_set_oracle(kIdentity2, vec2(0.5, 2.0), vec2(1.0, 1.0));
    CHECK(std::abs(r.x_star(0)) <= 1e-12);
    CHECK(r.x_star(1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.pattern[0] == BoundSide::Free);
    CHECK(r.pattern[1] == BoundSide::Lower);
  }
  SUBCASE("size cap") {
    const GramMatrix big = GramMatrix::from_matrix(Eigen::MatrixXd::Identity(9, 9));
    CHECK_THROWS_AS(
        box_active_set_oracle(big, Eigen::VectorXd::Ones(9), Eigen::VectorXd::Ones(9)),
        InstanceTooLargeError);
  }
  SUBCASE("oracle outputs are feasible and self-certified") {
    auto gen = testutil::rng(701);
    for (int trial = 0; trial < 15; ++trial) {
      const int n = 2 + trial % 5;
      const GramMatrix gram = GramMatrix::from_matrix(testutil::random_spd(n, 500.0, gen));
      const Eigen::VectorXd z = testutil::random_vector(n, gen, 2.0);
      const Eigen::VectorXd d = testutil::random_vector(n, gen).cwiseAbs();
      const OracleResult r = box_active_set_oracle(gram, z, d);
      const auto spec = UncertaintySpec::box(z, d);
      CHECK(spec.contains(r.x_star, gram, 1e-9));
      CHECK(verify_optimality(gram, r.x_star, spec) <= 1e-7);
      // The pattern labels agree with where x_star actually sits.
      for (int i = 0; i < n; ++i) {
        if (r.pattern[static_cast<std::size_t>(i)] == BoundSide::Lower)
          CHECK(r.x_star(i) == doctest::Approx(z(i) - d(i)).epsilon(1e-10));
        if (r.pattern[static_cast<std::size_t>(i)] == BoundSide::Upper)
          CHECK(r.x_star(i) == doctest::Approx(z(i) + d(i)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("fixed-step reference gradient descent") {
  SUBCASE("point sets return the center without iterating") {
    const Eigen::VectorXd c = vec2(2.0, -1.0);
    const OracleResult r = reference_pgd(kIdentity2, UncertaintySpec::point(c), 1000000);
    CHECK(r.x_star == c);
  }
  SUBCASE("matches the l2 closed form") {
    auto gen = testutil::rng(719);
    const GramMatrix gram = GramMatrix::from_matrix(testutil::random_spd(5, 20.0, gen));
    const Eigen::VectorXd y = testutil::random_vector(5, gen);
    const double delta = 0.35 * y.norm();
    const FittedSolution closed = solve_l2ball(gram, y, delta);
    const OracleResult r = reference_pgd(gram, UncertaintySpec::l2_ball(y, delta), 200000);
    CHECK((r.x_star - closed.x_hat).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(r.norm_sq == doctest::Approx(closed.norm_sq).epsilon(1e-6));
  }
  SUBCASE("matches the box oracle") {
    auto gen = testutil::rng(727);
    const GramMatrix gram = GramMatrix::from_matrix(testutil::random_spd(4, 30.0, gen));
    const Eigen::VectorXd z = testutil::random_vector(4, gen, 2.0);
    const Eigen::VectorXd d = Eigen::VectorXd::Constant(4, 0.4);
    const OracleResult slow = reference_pgd(gram, UncertaintySpec::box(z, d), 200000);
    const OracleResult exact = box_active_set_oracle(gram, z, d);
    CHECK((slow.x_star - exact.x_star).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("feasible sampler") {
  auto gen = testutil::rng(733);
  const GramMatrix gram = GramMatrix::from_matrix(testutil::random_spd(4, 50.0, gen));
  const Eigen::VectorXd center = testutil::random_vector(4, gen);

  SUBCASE("every sample is admissible, for every variant") {
    const UncertaintySpec specs[] = {
        UncertaintySpec::point(center),
        UncertaintySpec::box(center, Eigen::VectorXd::Constant(4, 0.7)),
        UncertaintySpec::l2_ball(center, 1.2),
        UncertaintySpec::l1_ball(center, 0.9),
        UncertaintySpec::eigen_box(center, Eigen::VectorXd::Constant(4, -0.3),
                                   Eigen::VectorXd::Constant(4, 0.8)),
    };
    for (const auto& spec : specs) {
      const auto samples = feasible_sampler(spec, gram, 100, 42);
      REQUIRE(samples.size() == 100);
      for (const auto& s : samples) {
        REQUIRE(s.size() == 4);
        CHECK(spec.contains(s, gram, 1e-9));
      }
    }
  }
  SUBCASE("samples actually spread over the set") {
    const auto spec = UncertaintySpec::box(center, Eigen::VectorXd::Constant(4, 1.0));
    const auto samples = feasible_sampler(spec, gram, 200, 5);
    Eigen::VectorXd lo = samples[0], hi = samples[0];
    for (const auto& s : samples) {
      lo = lo.cwiseMin(s);
      hi = hi.cwiseMax(s);
    }
    // The empirical range covers most of each 2-wide interval.
    CHECK(((hi - lo).array() > 1.5).all());
  }
  SUBCASE("fixed seed reproduces the sequence, new seed changes it") {
    const auto spec = UncertaintySpec::l2_ball(center, 1.0);
    const auto a = feasible_sampler(spec, gram, 10, 987);
    const auto b = feasible_sampler(spec, gram, 10, 987);
    const auto c = feasible_sampler(spec, gram, 10, 988);
    for (int i = 0; i < 10; ++i)
      CHECK((a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)])
                .cwiseAbs()
                .maxCoeff() == 0.0);
    CHECK((a[0] - c[0]).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("count zero gives an empty set") {
    const auto spec = UncertaintySpec::point(center);
    CHECK(feasible_sampler(spec, gram, 0, 1).empty());
  }
}
