#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rkreco/errors.hpp"

namespace rkreco {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool is_finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline bool same_location(const Point2& a, const Point2& b, double tol = 1e-12) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol;
}

// r^2 * ln r over the separation (dx, dy), with the limit value 0 at the
// origin. Separations below 1e-150 are treated as zero to keep log() away
// from the underflow range.
inline double tps_radial_term(double dx, double dy) {
  const double r2 = dx * dx + dy * dy;
  if (r2 < 1e-300) return 0.0;
  return 0.5 * r2 * std::log(r2);
}

// Three unisolvent anchor points and the affine cardinal basis they
// determine: polys[i] = (a, b, c) with p_i(x, y) = a + b*x + c*y and
// p_i(v_j) = delta_ij.
struct AnchorBasis {
  std::array<Point2, 3> anchors;
  std::array<std::array<double, 3>, 3> polys;
  // Cached r^2 ln r terms between anchor pairs.
  std::array<std::array<double, 3>, 3> anchor_terms;

  double poly(int i, const Point2& v) const {
    return polys[i][0] + polys[i][1] * v.x + polys[i][2] * v.y;
  }
};

// Solves the 3x3 affine interpolation system for the cardinal basis.
// Throws UnisolvencyError when the anchors are collinear: |det| of the
// system (twice the triangle area) must exceed 1e-9 times the squared
// bounding-box extent of the anchors.
AnchorBasis cardinal_polynomials(const std::array<Point2, 3>& anchors);

// True when the three anchors pass the same non-collinearity gate that
// cardinal_polynomials enforces; lets callers vet a candidate triangle
// without paying for (or catching) a failed basis construction.
bool anchors_unisolvent(const std::array<Point2, 3>& anchors);

// The Beppo-Levi reproducing kernel over the plane: cardinal-polynomial
// products plus 1/(8*pi)-weighted r^2 ln r terms between the query points
// and the anchors.
double tps_kernel(const Point2& u, const Point2& v, const AnchorBasis& basis);

enum class KernelKind { ThinPlateSpline, Gaussian };

// A pluggable kernel: the thin-plate-spline kernel (carries its anchor
// basis) or an isotropic gaussian used to exercise solver generality.
class KernelBasis {
 public:
  static KernelBasis thin_plate_spline(AnchorBasis basis) {
    KernelBasis k;
    k.kind_ = KernelKind::ThinPlateSpline;
    k.anchor_basis_ = std::move(basis);
    return k;
  }

  static KernelBasis gaussian(double width) {
    if (!(width > 0.0) || !std::isfinite(width))
      throw std::invalid_argument("gaussian kernel width must be positive and finite");
    KernelBasis k;
    k.kind_ = KernelKind::Gaussian;
    k.width_ = width;
    return k;
  }

  double operator()(const Point2& u, const Point2& v) const {
    if (kind_ == KernelKind::ThinPlateSpline) return tps_kernel(u, v, *anchor_basis_);
    const double dx = u.x - v.x;
    const double dy = u.y - v.y;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * width_ * width_));
  }

  KernelKind kind() const { return kind_; }
  const AnchorBasis& anchor_basis() const { return *anchor_basis_; }
  bool has_anchor_basis() const { return anchor_basis_.has_value(); }
  double width() const { return width_; }

 private:
  KernelBasis() = default;
  KernelKind kind_ = KernelKind::ThinPlateSpline;
  std::optional<AnchorBasis> anchor_basis_;
  double width_ = 1.0;
};

// Symmetric positive-definite kernel matrix with a cached Cholesky factor
// and an on-demand eigendecomposition (eigenvalues descending, eigenvector
// signs canonicalized). Immutable after construction; copies share the
// spectral cache.
class GramMatrix {
 public:
  // Assembles K[i][j] = kernel(points[i], points[j]). Rejects coincident
  // points up front; throws SingularError if the factorization fails.
  static GramMatrix from_points(std::vector<Point2> points, const KernelBasis& kernel,
                                bool deterministic = false);

  // Wraps an explicit symmetric positive-definite matrix (no points
  // attached); used for synthetic solver instances.
  static GramMatrix from_matrix(Eigen::MatrixXd entries);

  Eigen::Index size() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const std::vector<Point2>& points() const { return points_; }
  const Eigen::LLT<Eigen::MatrixXd>& llt() const { return chol_; }

  // Solves K w = rhs through the cached factor with iterative refinement.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  // Eigenvalues in descending order; computed once on first use.
  const Eigen::VectorXd& eigenvalues() const { return spectral().values; }
  // Columns are orthonormal eigenvectors matching eigenvalues().
  const Eigen::MatrixXd& eigenvectors() const { return spectral().vectors; }

  double lambda_max() const { return eigenvalues()(0); }
  double lambda_min() const { return eigenvalues()(size() - 1); }
  double condition_number() const { return lambda_max() / lambda_min(); }

 private:
  struct Spectral {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
  };
  struct SpectralBox {
    std::once_flag once;
    Spectral data;
  };

  GramMatrix() = default;
  void factorize();
  const Spectral& spectral() const;

  Eigen::MatrixXd entries_;
  std::vector<Point2> points_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  std::shared_ptr<SpectralBox> spectral_box_ = std::make_shared<SpectralBox>();
};

// Free-function spellings of the two gram operations.
GramMatrix gram_matrix(std::vector<Point2> points, const KernelBasis& kernel,
                       bool deterministic = false);
Eigen::VectorXd gram_solve(const GramMatrix& gram, const Eigen::VectorXd& rhs);

// Dense symmetric-positive-definite solve (Cholesky plus one refinement
// pass). Deterministic: identical inputs give identical bits, which lets
// independent solver paths agree exactly on shared subproblems.
Eigen::VectorXd solve_spd_refined(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs);

}  // namespace rkreco
