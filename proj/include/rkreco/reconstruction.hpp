#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rkreco/kernels.hpp"

namespace rkreco {

// Evaluable function f(v) = sum_n coeffs_n K(v, nodes_n) assembled from a
// fitted coefficient vector.
struct Reconstruction {
  KernelBasis kernel;
  std::vector<Point2> nodes;
  Eigen::VectorXd coeffs;  // h
  Eigen::VectorXd fitted;  // values at the nodes, K h
  double norm_sq = 0.0;
};

// Rectangular evaluation lattice: nx columns spanning [x0, x1], ny rows
// spanning [y0, y1].
struct GridSpec {
  double x0 = 0.0;
  double x1 = 1.0;
  int nx = 2;
  double y0 = 0.0;
  double y1 = 1.0;
  int ny = 2;

  void validate() const;  // x0 < x1, y0 < y1, nx >= 2, ny >= 2
};

double evaluate(const Reconstruction& recon, const Point2& v);

// Row index i follows y, column index j follows x:
// entry (i, j) = f(x0 + j (x1-x0)/(nx-1), y0 + i (y1-y0)/(ny-1)).
// Rows may be evaluated concurrently; deterministic forces the serial path
// (identical values either way).
Eigen::MatrixXd evaluate_grid(const Reconstruction& recon, const GridSpec& grid,
                              bool deterministic = false);

// h' K h, the squared RKHS norm of the function with coefficients h.
double rkhs_norm_sq(const Eigen::VectorXd& coeffs, const GramMatrix& gram);

}  // namespace rkreco
