#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rkreco/errors.hpp"
#include "rkreco/kernels.hpp"
#include "rkreco/uncertainty.hpp"

namespace rkreco {

enum class BoundSide : unsigned char { Free = 0, Lower = 1, Upper = 2 };

struct OracleResult {
  Eigen::VectorXd x_star;
  double norm_sq = 0.0;
  std::vector<BoundSide> pattern;  // per-coordinate activity (box oracle only)
};

// Exhaustive reference for the box problem: enumerates every lower/upper/free
// activity pattern (3^N, capped at N = 8), solves each candidate system,
// filters by feasibility and multiplier signs, and returns the minimum-norm
// survivor. Ties resolve to the lexicographically first pattern.
OracleResult box_active_set_oracle(const GramMatrix& gram, const Eigen::VectorXd& center,
                                   const Eigen::VectorXd& deltas);

// Slow independent reference: fixed-count projected gradient with a
// conservative step of 0.1 lambda_min(K). No convergence logic on purpose.
OracleResult reference_pgd(const GramMatrix& gram, const UncertaintySpec& spec,
                           long iterations = 1000000);

// Deterministic pseudo-random points inside the admissible set; fixed seed
// gives an identical sequence.
std::vector<Eigen::VectorXd> feasible_sampler(const UncertaintySpec& spec, const GramMatrix& gram,
                                              int count, std::uint64_t seed);

}  // namespace rkreco
