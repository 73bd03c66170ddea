#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "rkreco/errors.hpp"
#include "rkreco/kernels.hpp"
#include "rkreco/uncertainty.hpp"

namespace rkreco {

struct SolveOptions {
  double tol = 1e-8;        // optimality-gap target for convergence
  double feas_tol = 1e-9;   // membership tolerance for x_hat in C
  long max_iter = 1000000;  // iteration cap for gradient paths
  std::optional<double> norm_bound;  // M; enables worst_case_error reporting
  bool momentum = false;    // accelerated gradient variant (off: plain PGD)
};

struct SolveReport {
  double gap = 0.0;  // certified optimality gap
  std::optional<double> lambda;         // implied smoothing parameter (l2 / smoothing paths)
  std::optional<double> tau;            // clipping threshold (diagonal l1 path)
  std::optional<double> implied_delta;  // uncertainty radius implied by lambda
  long iterations = 0;
  bool converged = false;
  bool trivial = false;   // origin was admissible, x_hat = 0 returned
  double residual = 0.0;  // ||K h_hat - x_hat||_2
  std::optional<double> worst_case_error;     // M - norm_sq when a norm bound was supplied
  std::optional<bool> small_delta_condition;  // box: interpolant sign pattern provably optimal
};

struct FittedSolution {
  Eigen::VectorXd x_hat;  // fitted observation values, x_hat in C
  Eigen::VectorXd h_hat;  // coefficients, K h_hat = x_hat
  double norm_sq = 0.0;   // h_hat' K h_hat = h_hat' x_hat
  SolveReport report;
};

// Iterative path exhausted its budget; carries the best iterate found.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, FittedSolution best)
      : Error(what), best_(std::move(best)) {}
  const FittedSolution& best() const { return best_; }

 private:
  FittedSolution best_;
};

// Minimum-K-norm element of the admissible set: dispatches to the closed-form
// sub-solver for the variant, certifies the result, and flags the trivial
// case (origin admissible -> x_hat = 0).
FittedSolution solve(const GramMatrix& gram, const UncertaintySpec& spec,
                     const SolveOptions& opts = {});

// Per-coordinate intervals [center - deltas, center + deltas]; primal-dual
// active-set refinement seeded from the interpolant sign pattern, gradient
// fallback on cycling.
FittedSolution solve_box(const GramMatrix& gram, const Eigen::VectorXd& center,
                         const Eigen::VectorXd& deltas, const SolveOptions& opts = {});

// Euclidean ball of radius delta about y; closed form through the smoothing
// parameter lambda solving delta = lambda ||(K + lambda I)^-1 y||_2.
FittedSolution solve_l2ball(const GramMatrix& gram, const Eigen::VectorXd& y, double delta,
                            const SolveOptions& opts = {});

// Classical smoothing with fixed lambda: h = (K + lambda I)^-1 y; reports the
// implied uncertainty radius. lambda = 0 is plain interpolation.
FittedSolution smoothing_spline(const GramMatrix& gram, const Eigen::VectorXd& y, double lambda);

// Radius of the l2 ball equivalent to smoothing with the given lambda:
// lambda ||(K + lambda I)^-1 y||_2. Strictly increasing, 0 at lambda = 0,
// -> ||y||_2 as lambda -> infinity.
double implied_delta(const GramMatrix& gram, const Eigen::VectorXd& y, double lambda);

// l1 ball of radius delta about y. Diagonal gram: exact coefficient clipping
// at a threshold tau found on the piecewise-linear radius curve. Otherwise
// delegates to the projected-gradient path.
FittedSolution solve_l1ball(const GramMatrix& gram, const Eigen::VectorXd& y, double delta,
                            const SolveOptions& opts = {});

// Per-coordinate intervals in the gram eigenbasis (absolute coordinates):
// separable clamp of 0 into each interval. y is the nominal vector echoed as
// the set's center.
FittedSolution solve_eigenbox(const GramMatrix& gram, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const SolveOptions& opts = {});

// Projected gradient on x' K^-1 x over the admissible set, step 1/L with
// L = 2/lambda_min(K); stops when the certified gap drops below opts.tol.
FittedSolution solve_pgd(const GramMatrix& gram, const UncertaintySpec& spec,
                         const SolveOptions& opts = {});

// Certified optimality gap h'x_hat - min_{x in C} h'x with h recomputed as
// K^-1 x_hat, independent of how x_hat was produced. Nonnegative up to
// rounding; <= tol certifies optimality.
double verify_optimality(const GramMatrix& gram, const Eigen::VectorXd& x_hat,
                         const UncertaintySpec& spec);

// Coefficients through the truncated eigendecomposition: modes with
// eigenvalue < rel_threshold * lambda_max are dropped; x_hat is the projection
// of y onto the retained eigenspace.
FittedSolution pseudo_inverse_reconstruct(const GramMatrix& gram, const Eigen::VectorXd& y,
                                          double rel_threshold);

// Game value M - norm_sq: the worst-case squared reconstruction error over
// all admissible functions with norm bound M.
double worst_case_error(double norm_sq, double M);

}  // namespace rkreco
