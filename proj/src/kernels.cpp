#include "rkreco/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numbers>
#include <sstream>

#include "rkreco/parallel.hpp"

namespace rkreco {

namespace {

constexpr double kInv8Pi = 1.0 / (8.0 * std::numbers::pi);

long double radial_ld(long double dx, long double dy) {
  const long double r2 = dx * dx + dy * dy;
  if (r2 < 1e-300L) return 0.0L;
  return 0.5L * r2 * std::log(r2);
}

}  // namespace

bool anchors_unisolvent(const std::array<Point2, 3>& anchors) {
  const long double x0 = anchors[0].x, y0 = anchors[0].y;
  const long double x1 = anchors[1].x, y1 = anchors[1].y;
  const long double x2 = anchors[2].x, y2 = anchors[2].y;
  const long double det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
  const double sx = static_cast<double>(std::max({x0, x1, x2}) - std::min({x0, x1, x2}));
  const double sy = static_cast<double>(std::max({y0, y1, y2}) - std::min({y0, y1, y2}));
  const double scale = std::max(sx, sy);
  return std::abs(static_cast<double>(det)) > 1e-9 * scale * scale;
}

AnchorBasis cardinal_polynomials(const std::array<Point2, 3>& anchors) {
  for (const auto& a : anchors) {
    if (!a.is_finite()) throw std::invalid_argument("anchor coordinates must be finite");
  }
  const long double x0 = anchors[0].x, y0 = anchors[0].y;
  const long double x1 = anchors[1].x, y1 = anchors[1].y;
  const long double x2 = anchors[2].x, y2 = anchors[2].y;

  // Twice the signed triangle area.
  const long double det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);

  if (!anchors_unisolvent(anchors)) {
    const double sx = static_cast<double>(std::max({x0, x1, x2}) - std::min({x0, x1, x2}));
    const double sy = static_cast<double>(std::max({y0, y1, y2}) - std::min({y0, y1, y2}));
    const double scale = std::max(sx, sy);
    std::ostringstream msg;
    msg << "anchors are collinear or coincident (twice-area " << static_cast<double>(det)
        << ", bounding-box scale " << scale << ")";
    throw UnisolvencyError(msg.str());
  }

  // Rows of inv([[1,x0,y0],[1,x1,y1],[1,x2,y2]])^T by cofactor expansion;
  // extended precision keeps p_i(v_j) - delta_ij at round-off even for
  // thin triangles.
  AnchorBasis basis;
  basis.anchors = anchors;
  const long double inv = 1.0L / det;
  basis.polys[0] = {static_cast<double>((x1 * y2 - x2 * y1) * inv),
                    static_cast<double>((y1 - y2) * inv),
                    static_cast<double>((x2 - x1) * inv)};
  basis.polys[1] = {static_cast<double>((x2 * y0 - x0 * y2) * inv),
                    static_cast<double>((y2 - y0) * inv),
                    static_cast<double>((x0 - x2) * inv)};
  basis.polys[2] = {static_cast<double>((x0 * y1 - x1 * y0) * inv),
                    static_cast<double>((y0 - y1) * inv),
                    static_cast<double>((x1 - x0) * inv)};

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      basis.anchor_terms[i][j] = static_cast<double>(
          radial_ld(anchors[i].x - anchors[j].x, anchors[i].y - anchors[j].y));
    }
  }
  return basis;
}

double tps_kernel(const Point2& u, const Point2& v, const AnchorBasis& basis) {
  if (!u.is_finite() || !v.is_finite())
    throw std::invalid_argument("tps_kernel: non-finite query point");

  double pu[3], pv[3];
  for (int i = 0; i < 3; ++i) {
    pu[i] = basis.poly(i, u);
    pv[i] = basis.poly(i, v);
  }

  double poly_part = 0.0;
  for (int i = 0; i < 3; ++i) poly_part += pu[i] * pv[i];

  const double direct = tps_radial_term(u.x - v.x, u.y - v.y);

  double anchor_v = 0.0;  // sum_i p_i(u) E(v_i, v)
  double anchor_u = 0.0;  // sum_i p_i(v) E(v_i, u)
  double cross = 0.0;     // sum_ij p_i(u) p_j(v) E(v_i, v_j)
  for (int i = 0; i < 3; ++i) {
    anchor_v += pu[i] * tps_radial_term(basis.anchors[i].x - v.x, basis.anchors[i].y - v.y);
    anchor_u += pv[i] * tps_radial_term(basis.anchors[i].x - u.x, basis.anchors[i].y - u.y);
    for (int j = 0; j < 3; ++j) {
      cross += pu[i] * pv[j] * basis.anchor_terms[i][j];
    }
  }

  return poly_part + kInv8Pi * (direct - anchor_v - anchor_u + cross);
}

GramMatrix GramMatrix::from_points(std::vector<Point2> points, const KernelBasis& kernel,
                                   bool deterministic) {
  const auto n = static_cast<Eigen::Index>(points.size());
  if (n < 1) throw std::invalid_argument("gram_matrix: need at least one point");
  if (kernel.kind() == KernelKind::ThinPlateSpline && n < 3)
    throw std::invalid_argument("gram_matrix: thin-plate spline needs at least three points");
  for (const auto& p : points) {
    if (!p.is_finite()) throw std::invalid_argument("gram_matrix: non-finite point");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (same_location(points[i], points[j])) {
        std::ostringstream msg;
        msg << "coincident points at indices " << i << " and " << j;
        throw SingularError(msg.str());
      }
    }
  }

  GramMatrix g;
  g.points_ = std::move(points);
  g.entries_.resize(n, n);
  parallel_for(
      static_cast<int>(n),
      [&](int i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
          const double kij = kernel(g.points_[i], g.points_[j]);
          g.entries_(i, j) = kij;
          g.entries_(j, i) = kij;
        }
      },
      deterministic);
  g.factorize();
  return g;
}

GramMatrix GramMatrix::from_matrix(Eigen::MatrixXd entries) {
  if (entries.rows() != entries.cols() || entries.rows() < 1)
    throw std::invalid_argument("gram matrix must be square and non-empty");
  const double scale = entries.cwiseAbs().maxCoeff();
  const double asym = (entries - entries.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1e-300))
    throw std::invalid_argument("gram matrix must be symmetric");

  GramMatrix g;
  g.entries_ = 0.5 * (entries + entries.transpose());
  g.factorize();
  return g;
}

void GramMatrix::factorize() {
  chol_.compute(entries_);
  if (chol_.info() != Eigen::Success)
    throw SingularError("gram matrix is not positive definite (Cholesky failed)");
}

Eigen::VectorXd GramMatrix::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != size()) throw std::invalid_argument("gram_solve: dimension mismatch");
  Eigen::VectorXd w = chol_.solve(rhs);
  const double target = 1e-14 * std::max(rhs.norm(), 1e-300);
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd r = rhs - entries_ * w;
    if (r.norm() <= target) break;
    w += chol_.solve(r);
  }
  return w;
}

const GramMatrix::Spectral& GramMatrix::spectral() const {
  std::call_once(spectral_box_->once, [this] {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries_);
    if (eig.info() != Eigen::Success)
      throw SingularError("eigendecomposition of gram matrix failed");
    const Eigen::Index n = size();
    Spectral s;
    s.values.resize(n);
    s.vectors.resize(n, n);
    // Eigen reports ascending eigenvalues; store them descending with a
    // canonical sign (largest-magnitude component positive).
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Index src = n - 1 - k;
      s.values(k) = eig.eigenvalues()(src);
      Eigen::VectorXd v = eig.eigenvectors().col(src);
      Eigen::Index imax = 0;
      v.cwiseAbs().maxCoeff(&imax);
      if (v(imax) < 0.0) v = -v;
      s.vectors.col(k) = v;
    }
    spectral_box_->data = std::move(s);
  });
  return spectral_box_->data;
}

GramMatrix gram_matrix(std::vector<Point2> points, const KernelBasis& kernel,
                       bool deterministic) {
  return GramMatrix::from_points(std::move(points), kernel, deterministic);
}

Eigen::VectorXd gram_solve(const GramMatrix& gram, const Eigen::VectorXd& rhs) {
  return gram.solve(rhs);
}

Eigen::VectorXd solve_spd_refined(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& rhs) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size())
    throw std::invalid_argument("solve_spd_refined: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> chol(matrix);
  if (chol.info() != Eigen::Success)
    throw SingularError("symmetric solve failed: matrix is not positive definite");
  Eigen::VectorXd w = chol.solve(rhs);
  w += chol.solve(rhs - matrix * w);
  return w;
}

}  // namespace rkreco
