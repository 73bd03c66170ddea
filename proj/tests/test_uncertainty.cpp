#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "rkreco/kernels.hpp"
#include "rkreco/oracle.hpp"
#include "rkreco/uncertainty.hpp"
#include "testutil.hpp"

using namespace rkreco;

namespace {

Eigen::VectorXd vec2(double a, double b) { return Eigen::Vector2d(a, b); }

const GramMatrix kIdentity2 = GramMatrix::from_matrix(Eigen::MatrixXd::Identity(2, 2));

}  // namespace

TEST_CASE("kind names") {
  CHECK(to_string(UncertaintyKind::Point) == "point");
  CHECK(to_string(UncertaintyKind::Box) == "box");
  CHECK(to_string(UncertaintyKind::L2Ball) == "l2");
  CHECK(to_string(UncertaintyKind::L1Ball) == "l1");
  CHECK(to_string(UncertaintyKind::EigenBox) == "eigenbox");
}

TEST_CASE("factories validate their inputs") {
  const Eigen::VectorXd c = vec2(1.0, 2.0);
  const double inf = std::numeric_limits<double>::infinity();

  SUBCASE("non-finite centers are rejected everywhere") {
    CHECK_THROWS_AS(UncertaintySpec::point(vec2(inf, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(UncertaintySpec::box(vec2(std::nan(""), 0.0), vec2(1.0, 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(UncertaintySpec::l2_ball(vec2(inf, 0.0), 1.0), std::invalid_argument);
  }
  SUBCASE("box deltas must be nonnegative, finite, and size-matched") {
    CHECK_THROWS_AS(UncertaintySpec::box(c, vec2(1.0, -0.5)), std::invalid_argument);
    CHECK_THROWS_AS(UncertaintySpec::box(c, vec2(1.0, inf)), std::invalid_argument);
    CHECK_THROWS_AS(UncertaintySpec::box(c, Eigen::VectorXd::Ones(3)), std::invalid_argument);
    CHECK_NOTHROW(UncertaintySpec::box(c, vec2(0.0, 0.0)));  // degenerate box is a point
  }
  SUBCASE("ball radii must be nonnegative and finite") {
    CHECK_THROWS_AS(UncertaintySpec::l2_ball(c, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(UncertaintySpec::l2_ball(c, inf), std::invalid_argument);
    CHECK_THROWS_AS(UncertaintySpec::l1_ball(c, std::nan("")), std::invalid_argument);
    CHECK_NOTHROW(UncertaintySpec::l2_ball(c, 0.0));
  }
  SUBCASE("eigen-box intervals must be ordered and size-matched") {
    CHECK_THROWS_AS(UncertaintySpec::eigen_box(c, vec2(1.0, 0.0), vec2(0.5, 1.0)),
                    std::invalid_argument);
    CHECK_THROWS_AS(UncertaintySpec::eigen_box(c, Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(2)),
                    std::invalid_argument);
    CHECK_NOTHROW(UncertaintySpec::eigen_box(c, vec2(0.0, -1.0), vec2(0.0, 1.0)));
  }
  SUBCASE("accessors echo the construction") {
    const auto spec = UncertaintySpec::box(c, vec2(0.5, 1.5));
    CHECK(spec.kind() == UncertaintyKind::Box);
    CHECK(spec.dimension() == 2);
    CHECK(spec.center() == c);
    CHECK(spec.deltas() == vec2(0.5, 1.5));
    const auto ball = UncertaintySpec::l2_ball(c, 2.5);
    CHECK(ball.radius() == 2.5);
  }
}

TEST_CASE("origin membership is exact") {
  const GramMatrix& g = kIdentity2;

  SUBCASE("point") {
    CHECK(UncertaintySpec::point(vec2(0.0, 0.0)).contains_origin(g));
    CHECK_FALSE(UncertaintySpec::point(vec2(1e-300, 0.0)).contains_origin(g));
  }
  SUBCASE("box boundary counts as inside") {
    CHECK(UncertaintySpec::box(vec2(1.0, -1.0), vec2(1.0, 1.0)).contains_origin(g));
    CHECK_FALSE(UncertaintySpec::box(vec2(1.0, -1.0), vec2(0.999, 1.0)).contains_origin(g));
  }
  SUBCASE("l2 ball boundary counts as inside") {
    CHECK(UncertaintySpec::l2_ball(vec2(3.0, 4.0), 5.0).contains_origin(g));
    CHECK_FALSE(UncertaintySpec::l2_ball(vec2(3.0, 4.0), 4.999999).contains_origin(g));
  }
  SUBCASE("l1 ball uses the 1-norm of the center") {
    CHECK(UncertaintySpec::l1_ball(vec2(3.0, -4.0), 7.0).contains_origin(g));
    CHECK_FALSE(UncertaintySpec::l1_ball(vec2(3.0, -4.0), 6.9).contains_origin(g));
  }
  SUBCASE("eigen-box needs every interval to straddle zero") {
    CHECK(UncertaintySpec::eigen_box(vec2(0.0, 0.0), vec2(-1.0, 0.0), vec2(1.0, 0.0))
              .contains_origin(g));
    CHECK_FALSE(UncertaintySpec::eigen_box(vec2(0.0, 0.0), vec2(-1.0, 0.5), vec2(1.0, 1.0))
                    .contains_origin(g));
  }
}

TEST_CASE("membership tolerance is additive") {
  const GramMatrix& g = kIdentity2;
  const auto box = UncertaintySpec::box(vec2(0.0, 0.0), vec2(1.0, 1.0));
  CHECK(box.contains(vec2(1.0, 1.0), g));
  CHECK(box.contains(vec2(1.0 + 5e-10, 1.0), g));          // within the default 1e-9
  CHECK_FALSE(box.contains(vec2(1.0 + 1e-8, 1.0), g));     // beyond it
  CHECK(box.contains(vec2(1.0 + 1e-8, 1.0), g, 1e-7));     // widened tolerance

  const auto ball = UncertaintySpec::l2_ball(vec2(0.0, 0.0), 1.0);
  CHECK(ball.contains(vec2(1.0 + 5e-10, 0.0), g));
  CHECK_FALSE(ball.contains(vec2(1.0 + 1e-8, 0.0), g));

  const auto point = UncertaintySpec::point(vec2(2.0, 3.0));
  CHECK(point.contains(vec2(2.0 + 1e-10, 3.0), g));
  CHECK_FALSE(point.contains(vec2(2.1, 3.0), g));

  SUBCASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(box.contains(Eigen::VectorXd::Zero(3), g), std::invalid_argument);
  }
}

TEST_CASE("projection onto each set") {
  const GramMatrix& g = kIdentity2;

  SUBCASE("point projects everything to the center") {
    const auto spec = UncertaintySpec::point(vec2(1.0, 2.0));
    CHECK(spec.project(vec2(100.0, -3.0), g) == vec2(1.0, 2.0));
  }
  SUBCASE("box clamps per coordinate") {
    const auto spec = UncertaintySpec::box(vec2(0.0, 0.0), vec2(1.0, 2.0));
    CHECK(spec.project(vec2(3.0, -5.0), g) == vec2(1.0, -2.0));
    CHECK(spec.project(vec2(0.5, 1.0), g) == vec2(0.5, 1.0));  // interior is fixed
  }
  SUBCASE("l2 ball projects radially") {
    const auto spec = UncertaintySpec::l2_ball(vec2(0.0, 0.0), 2.5);
    // (3,4) has norm 5; scaling by 1/2 lands on the radius-2.5 sphere.
    const Eigen::VectorXd p = spec.project(vec2(3.0, 4.0), g);
    CHECK(p(0) == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(p(1) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(spec.project(vec2(1.0, 1.0), g) == vec2(1.0, 1.0));
  }
  SUBCASE("l1 ball soft-thresholds") {
    const auto spec = UncertaintySpec::l1_ball(vec2(0.0, 0.0), 2.0);
    // Euclidean projection of (3, 1) onto the l1 ball of radius 2 shifts
    // both coordinates toward zero by theta with (3-theta) + (1-theta) = 2,
    // so theta = 1 and the projection is (2, 0).
    const Eigen::VectorXd p = spec.project(vec2(3.0, 1.0), g);
    CHECK(p(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(p(1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(std::abs(p.lpNorm<1>() - 2.0) <= 1e-12);
    // Interior points are untouched.
    CHECK(spec.project(vec2(0.5, -0.5), g) == vec2(0.5, -0.5));
    // Off-center set: translation invariance of the projection.
    const auto shifted = UncertaintySpec::l1_ball(vec2(10.0, 10.0), 2.0);
    const Eigen::VectorXd q = shifted.project(vec2(13.0, 11.0), g);
    CHECK(q(0) == doctest::Approx(12.0).epsilon(1e-13));
    CHECK(q(1) == doctest::Approx(10.0).epsilon(1e-13));
  }
  SUBCASE("eigen-box clamps in the eigenbasis") {
    // Gram = diag(4, 1): the canonical eigenbasis is the standard basis with
    // eigenvalue order (4, 1), so rotation is the identity here.
    const GramMatrix diag = GramMatrix::from_matrix(Eigen::Vector2d(4.0, 1.0).asDiagonal());
    const auto spec =
        UncertaintySpec::eigen_box(vec2(0.0, 0.0), vec2(-1.0, 2.0), vec2(1.0, 3.0));
    const Eigen::VectorXd p = spec.project(vec2(5.0, 0.0), diag);
    CHECK(p(0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(p(1) == doctest::Approx(2.0).epsilon(1e-13));
  }
  SUBCASE("projection is idempotent and lands inside") {
    auto gen = testutil::rng(301);
    const Eigen::MatrixXd k = testutil::random_spd(5, 50.0, gen);
    const GramMatrix gram = GramMatrix::from_matrix(k);
    const Eigen::VectorXd center = testutil::random_vector(5, gen);
    const UncertaintySpec specs[] = {
        UncertaintySpec::box(center, testutil::random_vector(5, gen).cwiseAbs()),
        UncertaintySpec::l2_ball(center, 0.7),
        UncertaintySpec::l1_ball(center, 1.3),
        UncertaintySpec::eigen_box(center, Eigen::VectorXd::Constant(5, -0.4),
                                   Eigen::VectorXd::Constant(5, 0.9)),
    };
    for (const auto& spec : specs) {
      for (int trial = 0; trial < 25; ++trial) {
        const Eigen::VectorXd x = testutil::random_vector(5, gen, 3.0);
        const Eigen::VectorXd p = spec.project(x, gram);
        CHECK(spec.contains(p, gram, 1e-9));
        CHECK((spec.project(p, gram) - p).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("closed-form linear minima") {
  const GramMatrix& g = kIdentity2;
  const Eigen::VectorXd h = vec2(1.0, -2.0);

  SUBCASE("point") {
    CHECK(UncertaintySpec::point(vec2(3.0, 5.0)).linear_minimum(h, g) ==
          doctest::Approx(3.0 - 10.0).epsilon(1e-14));
  }
  SUBCASE("box: center term minus delta-weighted 1-norm of h") {
    // min over |x_i - z_i| <= d_i of h'x = h'z - sum d_i |h_i|
    //   = (1*1 + (-2)*2) - (0.5*1 + 1.5*2) = -3 - 3.5 = -6.5.
    const auto spec = UncertaintySpec::box(vec2(1.0, 2.0), vec2(0.5, 1.5));
    CHECK(spec.linear_minimum(h, g) == doctest::Approx(-6.5).epsilon(1e-14));
  }
  SUBCASE("l2 ball: center term minus radius times 2-norm") {
    // h'y - delta ||h||_2 = 0 - 2 * sqrt(5).
    const auto spec = UncertaintySpec::l2_ball(vec2(0.0, 0.0), 2.0);
    CHECK(spec.linear_minimum(h, g) == doctest::Approx(-2.0 * std::sqrt(5.0)).epsilon(1e-14));
  }
  SUBCASE("l1 ball: center term minus radius times max-norm") {
    // h'y - delta ||h||_inf = (1 - 2) - 3 * 2 = -7.
    const auto spec = UncertaintySpec::l1_ball(vec2(1.0, 1.0), 3.0);
    CHECK(spec.linear_minimum(h, g) == doctest::Approx(-7.0).epsilon(1e-14));
  }
  SUBCASE("eigen-box: per-mode best endpoint") {
    // Gram = diag(4, 1): distinct eigenvalues pin the mode order, so mode 0
    // is the first standard basis vector and the rotated gradient is h.
    // mode 0: h=1, interval [-1, 2] -> min at -1 giving -1.
    // mode 1: h=-2, interval [0.5, 3] -> min at 3 giving -6.
    const GramMatrix diag = GramMatrix::from_matrix(Eigen::Vector2d(4.0, 1.0).asDiagonal());
    const auto spec =
        UncertaintySpec::eigen_box(vec2(0.0, 0.0), vec2(-1.0, 0.5), vec2(2.0, 3.0));
    CHECK(spec.linear_minimum(h, diag) == doctest::Approx(-7.0).epsilon(1e-13));
  }
  SUBCASE("sampled points never beat the closed form") {
    auto gen = testutil::rng(733);
    const Eigen::MatrixXd k = testutil::random_spd(4, 100.0, gen);
    const GramMatrix gram = GramMatrix::from_matrix(k);
    const Eigen::VectorXd center = testutil::random_vector(4, gen);
    const Eigen::VectorXd grad = testutil::random_vector(4, gen);
    const UncertaintySpec specs[] = {
        UncertaintySpec::box(center, vec2(0.3, 0.8).replicate(2, 1)),
        UncertaintySpec::l2_ball(center, 1.1),
        UncertaintySpec::l1_ball(center, 0.9),
        UncertaintySpec::eigen_box(center, Eigen::VectorXd::Constant(4, -1.0),
                                   Eigen::VectorXd::Constant(4, 0.25)),
    };
    for (const auto& spec : specs) {
      const double lo = spec.linear_minimum(grad, gram);
      const auto samples = feasible_sampler(spec, gram, 400, 99);
      for (const auto& s : samples) CHECK(grad.dot(s) >= lo - 1e-9);
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    const auto spec = UncertaintySpec::box(vec2(0.0, 0.0), vec2(1.0, 1.0));
    CHECK_THROWS_AS(spec.linear_minimum(Eigen::VectorXd::Zero(3), g), std::invalid_argument);
    CHECK_THROWS_AS(spec.project(Eigen::VectorXd::Zero(3), g), std::invalid_argument);
  }
}
