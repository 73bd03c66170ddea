#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "rkreco/kernels.hpp"
#include "rkreco/reconstruction.hpp"
#include "rkreco/solvers.hpp"
#include "rkreco/uncertainty.hpp"
#include "testutil.hpp"

using namespace rkreco;

namespace {

// A fitted thin-plate interpolant over seeded random points, reused across
// the cases below.
struct Fixture {
  KernelBasis kernel;
  std::vector<Point2> points;
  GramMatrix gram;
  Eigen::VectorXd values;
  Reconstruction recon;
};

Fixture make_fixture(std::uint64_t seed, int n) {
  auto gen = testutil::rng(seed);
  auto points = testutil::random_points(n, gen, 0.08);
  const std::array<Point2, 3> anchors{points[0], points[1], points[2]};
  KernelBasis kernel = KernelBasis::thin_plate_spline(cardinal_polynomials(anchors));
  GramMatrix gram = GramMatrix::from_points(points, kernel);
  Eigen::VectorXd values = testutil::random_vector(n, gen);
  const FittedSolution sol = solve(gram, UncertaintySpec::point(values));
  Reconstruction recon{kernel, points, sol.h_hat, sol.x_hat, sol.norm_sq};
  return Fixture{std::move(kernel), std::move(points), std::move(gram), std::move(values),
                 std::move(recon)};
}

}  // namespace

TEST_CASE("reconstruction reproduces its node values") {
  const Fixture f = make_fixture(601, 12);
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    const double v = evaluate(f.recon, f.points[i]);
    CHECK(std::abs(v - f.values(static_cast<Eigen::Index>(i))) <= 1e-8);
  }
}

TEST_CASE("evaluation is the plain kernel expansion") {
  const Fixture f = make_fixture(607, 9);
  auto gen = testutil::rng(613);
  std::uniform_real_distribution<double> coord(-0.5, 1.5);
  for (int trial = 0; trial < 30; ++trial) {
    const Point2 v{coord(gen), coord(gen)};
    // Reference sum in the same node order.
    double expected = 0.0;
    for (std::size_t n = 0; n < f.points.size(); ++n)
      expected += f.recon.coeffs(static_cast<Eigen::Index>(n)) * f.kernel(v, f.points[n]);
    CHECK(evaluate(f.recon, v) == doctest::Approx(expected).epsilon(1e-13));
  }

  SUBCASE("zero coefficients give the zero function") {
    Reconstruction zero = f.recon;
    zero.coeffs.setZero();
    CHECK(evaluate(zero, Point2{0.3, 0.4}) == 0.0);
  }
  SUBCASE("coefficient count must match the nodes") {
    Reconstruction bad = f.recon;
    bad.coeffs = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(evaluate(bad, Point2{0.0, 0.0}), std::invalid_argument);
  }
  SUBCASE("query point must be finite") {
    CHECK_THROWS_AS(evaluate(f.recon, Point2{std::nan(""), 0.0}), std::invalid_argument);
  }
}

TEST_CASE("grid evaluation") {
  const Fixture f = make_fixture(617, 8);

  SUBCASE("2x2 grid hits the corners") {
    const GridSpec spec{0.0, 1.0, 2, 0.0, 1.0, 2};
    const Eigen::MatrixXd g = evaluate_grid(f.recon, spec);
    REQUIRE(g.rows() == 2);
    REQUIRE(g.cols() == 2);
    // Row follows y, column follows x.
    CHECK(g(0, 0) == evaluate(f.recon, Point2{0.0, 0.0}));
    CHECK(g(0, 1) == evaluate(f.recon, Point2{1.0, 0.0}));
    CHECK(g(1, 0) == evaluate(f.recon, Point2{0.0, 1.0}));
    CHECK(g(1, 1) == evaluate(f.recon, Point2{1.0, 1.0}));
  }
  SUBCASE("interior lattice points match direct evaluation") {
    const GridSpec spec{-0.2, 1.2, 5, 0.1, 0.9, 4};
    const Eigen::MatrixXd g = evaluate_grid(f.recon, spec);
    const double dx = (spec.x1 - spec.x0) / (spec.nx - 1);
    const double dy = (spec.y1 - spec.y0) / (spec.ny - 1);
    for (int i = 0; i < spec.ny; ++i)
      for (int j = 0; j < spec.nx; ++j) {
        const Point2 v{spec.x0 + j * dx, spec.y0 + i * dy};
        CHECK(g(i, j) == evaluate(f.recon, v));
      }
  }
  SUBCASE("parallel and serial passes agree bit for bit") {
    const GridSpec spec{0.0, 1.0, 64, 0.0, 1.0, 96};  // enough rows to split
    const Eigen::MatrixXd serial = evaluate_grid(f.recon, spec, /*deterministic=*/true);
    const Eigen::MatrixXd parallel = evaluate_grid(f.recon, spec, /*deterministic=*/false);
    CHECK((serial - parallel).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("grid validation") {
    CHECK_THROWS_AS((GridSpec{0.0, 1.0, 1, 0.0, 1.0, 2}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((GridSpec{1.0, 0.0, 2, 0.0, 1.0, 2}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((GridSpec{0.0, 1.0, 2, 0.5, 0.5, 2}.validate()), std::invalid_argument);
    CHECK_NOTHROW((GridSpec{0.0, 1.0, 2, 0.0, 1.0, 2}.validate()));
  }
}

TEST_CASE("rkhs norm") {
  SUBCASE("zero coefficients have zero norm") {
    const GramMatrix gram = GramMatrix::from_matrix(Eigen::MatrixXd::Identity(3, 3));
    CHECK(rkhs_norm_sq(Eigen::VectorXd::Zero(3), gram) == 0.0);
  }
  SUBCASE("identity gram is the euclidean norm") {
    const GramMatrix gram = GramMatrix::from_matrix(Eigen::MatrixXd::Identity(2, 2));
    CHECK(rkhs_norm_sq(Eigen::Vector2d(3.0, 4.0), gram) == doctest::Approx(25.0).epsilon(1e-14));
  }
  SUBCASE("agrees with the solver's h dot x form") {
    const Fixture f = make_fixture(619, 10);
    const double quad = rkhs_norm_sq(f.recon.coeffs, f.gram);
    CHECK(quad == doctest::Approx(f.recon.norm_sq).epsilon(1e-8));
  }
  SUBCASE("dimension mismatch is rejected") {
    const GramMatrix gram = GramMatrix::from_matrix(Eigen::MatrixXd::Identity(3, 3));
    CHECK_THROWS_AS(rkhs_norm_sq(Eigen::VectorXd::Zero(2), gram), std::invalid_argument);
  }
}
