#pragma once

#include <Eigen/Core>

#include <string>

#include "rkreco/kernels.hpp"

namespace rkreco {

enum class UncertaintyKind { Point, Box, L2Ball, L1Ball, EigenBox };

std::string to_string(UncertaintyKind kind);

// The convex set C of admissible observation vectors. Box deltas are
// per-coordinate half-widths around the center; ball radii are measured
// from the center in the corresponding norm; eigen-box intervals are
// absolute closed intervals in the gram eigenbasis (descending-eigenvalue
// coordinate order).
class UncertaintySpec {
 public:
  static UncertaintySpec point(Eigen::VectorXd center);
  static UncertaintySpec box(Eigen::VectorXd center, Eigen::VectorXd deltas);
  static UncertaintySpec l2_ball(Eigen::VectorXd center, double radius);
  static UncertaintySpec l1_ball(Eigen::VectorXd center, double radius);
  static UncertaintySpec eigen_box(Eigen::VectorXd center, Eigen::VectorXd lower,
                                   Eigen::VectorXd upper);

  UncertaintyKind kind() const { return kind_; }
  Eigen::Index dimension() const { return center_.size(); }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::VectorXd& deltas() const { return deltas_; }
  double radius() const { return radius_; }
  const Eigen::VectorXd& lower() const { return lower_; }
  const Eigen::VectorXd& upper() const { return upper_; }

  // Exact membership of the origin (no tolerance); this is the trivial
  // x_hat = 0 case.
  bool contains_origin(const GramMatrix& gram) const;

  // Membership within an absolute feasibility tolerance.
  bool contains(const Eigen::VectorXd& x, const GramMatrix& gram, double tol = 1e-9) const;

  // Euclidean projection onto C.
  Eigen::VectorXd project(const Eigen::VectorXd& x, const GramMatrix& gram) const;

  // min over x in C of h^T x, evaluated in closed form per variant.
  double linear_minimum(const Eigen::VectorXd& h, const GramMatrix& gram) const;

 private:
  UncertaintySpec() = default;
  void require_dimension(Eigen::Index n, const char* what) const;

  UncertaintyKind kind_ = UncertaintyKind::Point;
  Eigen::VectorXd center_;
  Eigen::VectorXd deltas_;        // Box
  double radius_ = 0.0;           // L1Ball / L2Ball
  Eigen::VectorXd lower_, upper_; // EigenBox
};

}  // namespace rkreco
