#include "rkreco/uncertainty.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace rkreco {

namespace {

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " must be finite");
}

// Euclidean projection of u onto the l1 ball of the given radius centered
// at the origin: soft-thresholding with the exact sort-based threshold.
Eigen::VectorXd project_l1(const Eigen::VectorXd& u, double radius) {
  const double l1 = u.lpNorm<1>();
  if (l1 <= radius) return u;
  Eigen::VectorXd mag = u.cwiseAbs();
  std::vector<double> sorted(mag.data(), mag.data() + mag.size());
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
    const double next = (k + 1 < sorted.size()) ? sorted[k + 1] : 0.0;
    if (candidate >= next) {
      theta = candidate;
      break;
    }
  }
  Eigen::VectorXd out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double shrunk = std::max(0.0, mag(i) - theta);
    out(i) = (u(i) >= 0.0 ? shrunk : -shrunk);
  }
  return out;
}

}  // namespace

std::string to_string(UncertaintyKind kind) {
  switch (kind) {
    case UncertaintyKind::Point: return "point";
    case UncertaintyKind::Box: return "box";
    case UncertaintyKind::L2Ball: return "l2";
    case UncertaintyKind::L1Ball: return "l1";
    case UncertaintyKind::EigenBox: return "eigenbox";
  }
  return "unknown";
}

UncertaintySpec UncertaintySpec::point(Eigen::VectorXd center) {
  require_finite(center, "center");
  UncertaintySpec s;
  s.kind_ = UncertaintyKind::Point;
  s.center_ = std::move(center);
  return s;
}

UncertaintySpec UncertaintySpec::box(Eigen::VectorXd center, Eigen::VectorXd deltas) {
  require_finite(center, "center");
  require_finite(deltas, "deltas");
  if (deltas.size() != center.size())
    throw std::invalid_argument("box deltas must match center dimension");
  if ((deltas.array() < 0.0).any())
    throw std::invalid_argument("box deltas must be nonnegative");
  UncertaintySpec s;
  s.kind_ = UncertaintyKind::Box;
  s.center_ = std::move(center);
  s.deltas_ = std::move(deltas);
  return s;
}

UncertaintySpec UncertaintySpec::l2_ball(Eigen::VectorXd center, double radius) {
  require_finite(center, "center");
  if (!std::isfinite(radius) || radius < 0.0)
    throw std::invalid_argument("l2 radius must be finite and nonnegative");
  UncertaintySpec s;
  s.kind_ = UncertaintyKind::L2Ball;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

UncertaintySpec UncertaintySpec::l1_ball(Eigen::VectorXd center, double radius) {
  require_finite(center, "center");
  if (!std::isfinite(radius) || radius < 0.0)
    throw std::invalid_argument("l1 radius must be finite and nonnegative");
  UncertaintySpec s;
  s.kind_ = UncertaintyKind::L1Ball;
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

UncertaintySpec UncertaintySpec::eigen_box(Eigen::VectorXd center, Eigen::VectorXd lower,
                                           Eigen::VectorXd upper) {
  require_finite(center, "center");
  require_finite(lower, "interval lower bounds");
  require_finite(upper, "interval upper bounds");
  if (lower.size() != center.size() || upper.size() != center.size())
    throw std::invalid_argument("eigen-box intervals must match center dimension");
  if ((lower.array() > upper.array()).any())
    throw std::invalid_argument("eigen-box intervals must have lower <= upper");
  UncertaintySpec s;
  s.kind_ = UncertaintyKind::EigenBox;
  s.center_ = std::move(center);
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

void UncertaintySpec::require_dimension(Eigen::Index n, const char* what) const {
  if (n != dimension())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch with uncertainty set");
}

bool UncertaintySpec::contains_origin(const GramMatrix& gram) const {
  switch (kind_) {
    case UncertaintyKind::Point:
      return (center_.array() == 0.0).all();
    case UncertaintyKind::Box:
      return (center_.cwiseAbs().array() <= deltas_.array()).all();
    case UncertaintyKind::L2Ball:
      return center_.norm() <= radius_;
    case UncertaintyKind::L1Ball:
      return center_.lpNorm<1>() <= radius_;
    case UncertaintyKind::EigenBox:
      (void)gram;
      return (lower_.array() <= 0.0).all() && (upper_.array() >= 0.0).all();
  }
  return false;
}

bool UncertaintySpec::contains(const Eigen::VectorXd& x, const GramMatrix& gram,
                               double tol) const {
  require_dimension(x.size(), "contains");
  switch (kind_) {
    case UncertaintyKind::Point:
      return (x - center_).lpNorm<Eigen::Infinity>() <= tol;
    case UncertaintyKind::Box:
      return ((x - center_).cwiseAbs().array() <= deltas_.array() + tol).all();
    case UncertaintyKind::L2Ball:
      return (x - center_).norm() <= radius_ + tol;
    case UncertaintyKind::L1Ball:
      return (x - center_).lpNorm<1>() <= radius_ + tol;
    case UncertaintyKind::EigenBox: {
      const Eigen::VectorXd w = gram.eigenvectors().transpose() * x;
      return (w.array() >= lower_.array() - tol).all() &&
             (w.array() <= upper_.array() + tol).all();
    }
  }
  return false;
}

Eigen::VectorXd UncertaintySpec::project(const Eigen::VectorXd& x, const GramMatrix& gram) const {
  require_dimension(x.size(), "project");
  switch (kind_) {
    case UncertaintyKind::Point:
      return center_;
    case UncertaintyKind::Box:
      return x.cwiseMax(center_ - deltas_).cwiseMin(center_ + deltas_);
    case UncertaintyKind::L2Ball: {
      const Eigen::VectorXd u = x - center_;
      const double norm = u.norm();
      if (norm <= radius_) return x;
      return center_ + (radius_ / norm) * u;
    }
    case UncertaintyKind::L1Ball:
      return center_ + project_l1(x - center_, radius_);
    case UncertaintyKind::EigenBox: {
      const Eigen::MatrixXd& v = gram.eigenvectors();
      Eigen::VectorXd w = v.transpose() * x;
      w = w.cwiseMax(lower_).cwiseMin(upper_);
      return v * w;
    }
  }
  return x;
}

double UncertaintySpec::linear_minimum(const Eigen::VectorXd& h, const GramMatrix& gram) const {
  require_dimension(h.size(), "linear_minimum");
  switch (kind_) {
    case UncertaintyKind::Point:
      return h.dot(center_);
    case UncertaintyKind::Box:
      return h.dot(center_) - h.cwiseAbs().dot(deltas_);
    case UncertaintyKind::L2Ball:
      return h.dot(center_) - radius_ * h.norm();
    case UncertaintyKind::L1Ball:
      return h.dot(center_) - radius_ * h.lpNorm<Eigen::Infinity>();
    case UncertaintyKind::EigenBox: {
      const Eigen::VectorXd g = gram.eigenvectors().transpose() * h;
      double total = 0.0;
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        total += std::min(g(i) * lower_(i), g(i) * upper_(i));
      }
      return total;
    }
  }
  return 0.0;
}

}  // namespace rkreco
