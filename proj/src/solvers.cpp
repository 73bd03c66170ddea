#include "rkreco/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace rkreco {

namespace {

void require_same_dimension(const GramMatrix& gram, const UncertaintySpec& spec) {
  if (spec.dimension() != gram.size())
    throw std::invalid_argument("uncertainty set dimension does not match gram size");
}

// Assemble the common fields of a finished solution: coefficients (computed
// as K^-1 x_hat unless the solver supplied a better-conditioned vector), the
// norm identity h'x, the lifting residual, and the certified gap.
FittedSolution finalize(const GramMatrix& gram, Eigen::VectorXd x_hat,
                        std::optional<Eigen::VectorXd> h_hat, const UncertaintySpec& spec,
                        SolveReport report, const SolveOptions& opts) {
  FittedSolution sol;
  sol.x_hat = std::move(x_hat);
  sol.h_hat = h_hat ? std::move(*h_hat) : gram.solve(sol.x_hat);
  sol.norm_sq = sol.h_hat.dot(sol.x_hat);
  report.residual = (gram.entries() * sol.h_hat - sol.x_hat).norm();
  report.gap = verify_optimality(gram, sol.x_hat, spec);
  report.converged = report.gap <= opts.tol;
  if (opts.norm_bound) report.worst_case_error = worst_case_error(sol.norm_sq, *opts.norm_bound);
  sol.report = std::move(report);
  return sol;
}

// The origin being admissible makes x_hat = 0 the exact answer; flagged, not
// an error.
std::optional<FittedSolution> trivial_if_origin(const GramMatrix& gram,
                                                const UncertaintySpec& spec,
                                                const SolveOptions& opts) {
  if (!spec.contains_origin(gram)) return std::nullopt;
  SolveReport report;
  report.trivial = true;
  return finalize(gram, Eigen::VectorXd::Zero(gram.size()), Eigen::VectorXd::Zero(gram.size()),
                  spec, std::move(report), opts);
}

enum class Activity : unsigned char { Free = 0, Lower = 1, Upper = 2, Pinned = 3 };

struct PatternSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd h;
};

// Equality-constrained solve for a fixed activity pattern: bound coordinates
// sit at their endpoints, free coordinates carry zero coefficient, and their
// values follow from x_F = K_FB h_B.
PatternSolution solve_box_pattern(const Eigen::MatrixXd& kmat, const std::vector<Activity>& act,
                                  const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  const Eigen::Index n = kmat.rows();
  std::vector<Eigen::Index> bound;
  bound.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    if (act[static_cast<std::size_t>(i)] != Activity::Free) bound.push_back(i);
  PatternSolution out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  const Eigen::Index nb = static_cast<Eigen::Index>(bound.size());
  if (nb == 0) return out;
  Eigen::VectorXd xb(nb);
  Eigen::MatrixXd kbb(nb, nb);
  for (Eigen::Index a = 0; a < nb; ++a) {
    const Eigen::Index i = bound[static_cast<std::size_t>(a)];
    xb(a) = act[static_cast<std::size_t>(i)] == Activity::Upper ? upper(i) : lower(i);
    for (Eigen::Index b = 0; b < nb; ++b) kbb(a, b) = kmat(i, bound[static_cast<std::size_t>(b)]);
  }
  const Eigen::VectorXd hb = solve_spd_refined(kbb, xb);
  for (Eigen::Index a = 0; a < nb; ++a) {
    out.x(bound[static_cast<std::size_t>(a)]) = xb(a);
    out.h(bound[static_cast<std::size_t>(a)]) = hb(a);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (act[static_cast<std::size_t>(i)] != Activity::Free) continue;
    double acc = 0.0;
    for (Eigen::Index a = 0; a < nb; ++a) acc += kmat(i, bound[static_cast<std::size_t>(a)]) * hb(a);
    out.x(i) = acc;
  }
  return out;
}

bool box_kkt_ok(const std::vector<Activity>& act, const PatternSolution& sol,
                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper, double feas_eps,
                double sign_eps) {
  for (Eigen::Index i = 0; i < sol.x.size(); ++i) {
    switch (act[static_cast<std::size_t>(i)]) {
      case Activity::Free:
        if (sol.x(i) < lower(i) - feas_eps || sol.x(i) > upper(i) + feas_eps) return false;
        break;
      case Activity::Lower:
        if (sol.h(i) < -sign_eps) return false;
        break;
      case Activity::Upper:
        if (sol.h(i) > sign_eps) return false;
        break;
      case Activity::Pinned:
        break;
    }
  }
  return true;
}

std::string encode_pattern(const std::vector<Activity>& act) {
  std::string code(act.size(), '0');
  for (std::size_t i = 0; i < act.size(); ++i)
    code[i] = static_cast<char>('0' + static_cast<int>(act[i]));
  return code;
}

}  // namespace

double verify_optimality(const GramMatrix& gram, const Eigen::VectorXd& x_hat,
                         const UncertaintySpec& spec) {
  if (x_hat.size() != gram.size())
    throw std::invalid_argument("verify_optimality: x_hat dimension does not match gram size");
  if (!x_hat.allFinite()) throw std::invalid_argument("verify_optimality: x_hat must be finite");
  const Eigen::VectorXd h = gram.solve(x_hat);
  return h.dot(x_hat) - spec.linear_minimum(h, gram);
}

double worst_case_error(double norm_sq, double M) {
  if (!std::isfinite(norm_sq) || !std::isfinite(M))
    throw std::invalid_argument("worst_case_error: arguments must be finite");
  if (M < norm_sq) {
    std::ostringstream msg;
    msg << "norm bound " << M << " is below the solution norm " << norm_sq
        << "; no admissible function attains the fitted observations";
    throw BoundTooSmallError(msg.str());
  }
  return M - norm_sq;
}

FittedSolution solve(const GramMatrix& gram, const UncertaintySpec& spec,
                     const SolveOptions& opts) {
  require_same_dimension(gram, spec);
  switch (spec.kind()) {
    case UncertaintyKind::Point: {
      if (auto trivial = trivial_if_origin(gram, spec, opts)) return *std::move(trivial);
      return finalize(gram, spec.center(), std::nullopt, spec, SolveReport{}, opts);
    }
    case UncertaintyKind::Box:
      return solve_box(gram, spec.center(), spec.deltas(), opts);
    case UncertaintyKind::L2Ball:
      return solve_l2ball(gram, spec.center(), spec.radius(), opts);
    case UncertaintyKind::L1Ball:
      return solve_l1ball(gram, spec.center(), spec.radius(), opts);
    case UncertaintyKind::EigenBox:
      return solve_eigenbox(gram, spec.center(), spec.lower(), spec.upper(), opts);
  }
  throw std::logic_error("solve: unknown uncertainty variant");
}

FittedSolution solve_box(const GramMatrix& gram, const Eigen::VectorXd& center,
                         const Eigen::VectorXd& deltas, const SolveOptions& opts) {
  UncertaintySpec spec = UncertaintySpec::box(center, deltas);
  require_same_dimension(gram, spec);
  if (auto trivial = trivial_if_origin(gram, spec, opts)) return *std::move(trivial);

  const Eigen::Index n = gram.size();
  const Eigen::MatrixXd& kmat = gram.entries();
  const Eigen::VectorXd lower = center - deltas;
  const Eigen::VectorXd upper = center + deltas;
  const Eigen::VectorXd h_tilde = gram.solve(center);

  SolveReport report;
  {
    // Sufficient condition for the interpolant sign pattern to be optimal
    // outright: max_j sum_n |K^-1_jn| delta_n <= min_i |h~_i|.
    const Eigen::MatrixXd inv = gram.eigenvectors() *
                                gram.eigenvalues().cwiseInverse().asDiagonal() *
                                gram.eigenvectors().transpose();
    report.small_delta_condition =
        (inv.cwiseAbs() * deltas).maxCoeff() <= h_tilde.cwiseAbs().minCoeff();
  }

  // Seed: every elastic coordinate active on the side its interpolant
  // coefficient points to.
  std::vector<Activity> act(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& slot = act[static_cast<std::size_t>(i)];
    if (deltas(i) == 0.0)
      slot = Activity::Pinned;
    else if (h_tilde(i) > 0.0)
      slot = Activity::Lower;
    else if (h_tilde(i) < 0.0)
      slot = Activity::Upper;
    else
      slot = Activity::Free;
  }

  const double scale_c = kmat.trace() / static_cast<double>(n);
  const double bound_scale =
      std::max(1.0, std::max(lower.cwiseAbs().maxCoeff(), upper.cwiseAbs().maxCoeff()));
  const double feas_eps = 1e-10 * bound_scale;

  std::set<std::string> visited{encode_pattern(act)};
  const long pdas_cap = 60 + 2 * static_cast<long>(n);
  PatternSolution current;
  bool accepted = false;
  long steps = 0;
  while (steps < pdas_cap) {
    ++steps;
    current = solve_box_pattern(kmat, act, lower, upper);
    const double h_scale = std::max(current.h.cwiseAbs().maxCoeff(), 1e-300);
    if (box_kkt_ok(act, current, lower, upper, feas_eps, 1e-12 * h_scale)) {
      accepted = true;
      break;
    }
    std::vector<Activity> next(act.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (act[static_cast<std::size_t>(i)] == Activity::Pinned) {
        next[static_cast<std::size_t>(i)] = Activity::Pinned;
        continue;
      }
      const double probe = current.x(i) - scale_c * current.h(i);
      next[static_cast<std::size_t>(i)] = probe < lower(i)   ? Activity::Lower
                                          : probe > upper(i) ? Activity::Upper
                                                             : Activity::Free;
    }
    if (next == act) {  // stationary pattern satisfies the sign conditions strictly
      accepted = true;
      break;
    }
    act = std::move(next);
    if (!visited.insert(encode_pattern(act)).second) break;  // cycle
  }

  if (accepted) {
    report.iterations = steps;
    return finalize(gram, std::move(current.x), std::move(current.h), spec, std::move(report),
                    opts);
  }

  // Active-set refinement cycled or ran out of budget: gradient fallback,
  // then one polish solve on the activity pattern read off the iterate.
  FittedSolution fallback = solve_pgd(gram, spec, opts);
  const double snap = std::max(1e-6 * bound_scale, 10.0 * opts.feas_tol);
  std::vector<Activity> polish(act.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& slot = polish[static_cast<std::size_t>(i)];
    if (deltas(i) == 0.0)
      slot = Activity::Pinned;
    else if (fallback.x_hat(i) <= lower(i) + snap)
      slot = Activity::Lower;
    else if (fallback.x_hat(i) >= upper(i) - snap)
      slot = Activity::Upper;
    else
      slot = Activity::Free;
  }
  PatternSolution polished = solve_box_pattern(kmat, polish, lower, upper);
  const double h_scale = std::max(polished.h.cwiseAbs().maxCoeff(), 1e-300);
  if (box_kkt_ok(polish, polished, lower, upper, feas_eps, 1e-9 * h_scale)) {
    report.iterations = steps + fallback.report.iterations;
    return finalize(gram, std::move(polished.x), std::move(polished.h), spec, std::move(report),
                    opts);
  }
  fallback.report.small_delta_condition = report.small_delta_condition;
  fallback.report.iterations += steps;
  return fallback;
}

FittedSolution solve_l2ball(const GramMatrix& gram, const Eigen::VectorXd& y, double delta,
                            const SolveOptions& opts) {
  UncertaintySpec spec = UncertaintySpec::l2_ball(y, delta);
  require_same_dimension(gram, spec);
  if (auto trivial = trivial_if_origin(gram, spec, opts)) return *std::move(trivial);

  SolveReport report;
  if (delta == 0.0) {
    report.lambda = 0.0;
    report.implied_delta = 0.0;
    return finalize(gram, y, std::nullopt, spec, std::move(report), opts);
  }

  // Radius curve evaluated through the eigen-decomposition: each mode
  // contributes (lambda/(lambda_i + lambda))^2 y_i^2, monotone in lambda.
  const Eigen::VectorXd& vals = gram.eigenvalues();
  const Eigen::VectorXd yt = gram.eigenvectors().transpose() * y;
  auto radius_at = [&](double lam) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
      const double f = lam / (vals(i) + lam);
      acc += f * f * yt(i) * yt(i);
    }
    return std::sqrt(acc);
  };

  double lo = 0.0;
  double hi = 1.0;
  long iters = 1;
  if (radius_at(1.0) < delta) {
    lo = 1.0;
    hi = 2.0;
    while (radius_at(hi) < delta) {
      ++iters;
      lo = hi;
      hi *= 2.0;
      if (hi > 1e306) {
        FittedSolution best = finalize(gram, y, std::nullopt, spec, SolveReport{}, opts);
        throw NoConvergenceError("smoothing-parameter bracketing diverged", std::move(best));
      }
    }
  } else {
    hi = 1.0;
    lo = 0.5;
    while (radius_at(lo) >= delta) {
      ++iters;
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-306) {
        lo = 0.0;
        break;
      }
    }
  }
  // Bisect until the bracket collapses to adjacent doubles; the radius match
  // ends up far tighter than the 1e-12 relative target.
  for (int k = 0; k < 300; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    ++iters;
    if (radius_at(mid) < delta)
      lo = mid;
    else
      hi = mid;
  }
  const double lam = 0.5 * (lo + hi);

  Eigen::MatrixXd shifted = gram.entries();
  shifted.diagonal().array() += lam;
  Eigen::VectorXd h = solve_spd_refined(shifted, y);
  Eigen::VectorXd x = y - lam * h;
  report.lambda = lam;
  report.implied_delta = lam * h.norm();
  report.iterations = iters;
  return finalize(gram, std::move(x), std::move(h), spec, std::move(report), opts);
}

FittedSolution smoothing_spline(const GramMatrix& gram, const Eigen::VectorXd& y, double lambda) {
  if (y.size() != gram.size())
    throw std::invalid_argument("smoothing_spline: dimension mismatch");
  if (!y.allFinite()) throw std::invalid_argument("smoothing_spline: y must be finite");
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw std::invalid_argument("smoothing_spline: lambda must be finite and nonnegative");

  SolveReport report;
  report.lambda = lambda;
  Eigen::VectorXd h;
  if (lambda == 0.0) {
    h = gram.solve(y);
    report.implied_delta = 0.0;
  } else {
    Eigen::MatrixXd shifted = gram.entries();
    shifted.diagonal().array() += lambda;
    h = solve_spd_refined(shifted, y);
    report.implied_delta = lambda * h.norm();
  }
  Eigen::VectorXd x = y - lambda * h;
  UncertaintySpec spec = UncertaintySpec::l2_ball(y, *report.implied_delta);
  return finalize(gram, std::move(x), std::move(h), spec, std::move(report), SolveOptions{});
}

double implied_delta(const GramMatrix& gram, const Eigen::VectorXd& y, double lambda) {
  if (y.size() != gram.size()) throw std::invalid_argument("implied_delta: dimension mismatch");
  if (!y.allFinite()) throw std::invalid_argument("implied_delta: y must be finite");
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw std::invalid_argument("implied_delta: lambda must be finite and nonnegative");
  if (lambda == 0.0) return 0.0;
  Eigen::MatrixXd shifted = gram.entries();
  shifted.diagonal().array() += lambda;
  return lambda * solve_spd_refined(shifted, y).norm();
}

FittedSolution solve_l1ball(const GramMatrix& gram, const Eigen::VectorXd& y, double delta,
                            const SolveOptions& opts) {
  UncertaintySpec spec = UncertaintySpec::l1_ball(y, delta);
  require_same_dimension(gram, spec);
  if (auto trivial = trivial_if_origin(gram, spec, opts)) return *std::move(trivial);

  const Eigen::Index n = gram.size();
  const Eigen::MatrixXd& kmat = gram.entries();
  bool diagonal = true;
  for (Eigen::Index i = 0; i < n && diagonal; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && kmat(i, j) != 0.0) {
        diagonal = false;
        break;
      }
  if (!diagonal) return solve_pgd(gram, spec, opts);

  // Diagonal gram: clip the interpolant coefficients at the threshold tau
  // where the l1 budget sum_i d_i (|h~_i| - tau)+ is spent exactly. The
  // budget curve is piecewise linear and decreasing, so walk its breakpoints.
  const Eigen::VectorXd diag = kmat.diagonal();
  Eigen::VectorXd h_tilde(n);
  for (Eigen::Index i = 0; i < n; ++i) h_tilde(i) = y(i) / diag(i);

  SolveReport report;
  if (delta == 0.0) {
    report.tau = h_tilde.cwiseAbs().maxCoeff();
    return finalize(gram, y, std::move(h_tilde), spec, std::move(report), opts);
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(h_tilde(a)) > std::abs(h_tilde(b));
  });

  double tau = 0.0;
  double budget_sum = 0.0;  // sum of |y_i| over the active prefix
  double weight_sum = 0.0;  // sum of d_i over the active prefix
  long segments = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    ++segments;
    const Eigen::Index i = order[static_cast<std::size_t>(k)];
    budget_sum += std::abs(y(i));
    weight_sum += diag(i);
    const double next_break =
        k + 1 < n ? std::abs(h_tilde(order[static_cast<std::size_t>(k + 1)])) : 0.0;
    if (budget_sum - next_break * weight_sum >= delta) {
      tau = (budget_sum - delta) / weight_sum;
      break;
    }
  }

  Eigen::VectorXd h(n), x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double clipped = std::min(std::abs(h_tilde(i)), tau);
    h(i) = h_tilde(i) >= 0.0 ? clipped : -clipped;
    x(i) = diag(i) * h(i);
  }
  report.tau = tau;
  report.iterations = segments;
  return finalize(gram, std::move(x), std::move(h), spec, std::move(report), opts);
}

FittedSolution solve_eigenbox(const GramMatrix& gram, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const SolveOptions& opts) {
  UncertaintySpec spec = UncertaintySpec::eigen_box(y, lower, upper);
  require_same_dimension(gram, spec);
  if (auto trivial = trivial_if_origin(gram, spec, opts)) return *std::move(trivial);

  // The K-norm is separable in eigen-coordinates, so each coordinate takes
  // the interval point nearest zero.
  const Eigen::Index n = gram.size();
  const Eigen::VectorXd& vals = gram.eigenvalues();
  Eigen::VectorXd w(n), g(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    w(i) = std::clamp(0.0, lower(i), upper(i));
    g(i) = w(i) / vals(i);
  }
  Eigen::VectorXd x = gram.eigenvectors() * w;
  Eigen::VectorXd h = gram.eigenvectors() * g;
  return finalize(gram, std::move(x), std::move(h), spec, SolveReport{}, opts);
}

FittedSolution solve_pgd(const GramMatrix& gram, const UncertaintySpec& spec,
                         const SolveOptions& opts) {
  require_same_dimension(gram, spec);
  if (auto trivial = trivial_if_origin(gram, spec, opts)) return *std::move(trivial);

  // Step 1/L against the gradient 2 K^-1 x, L = 2/lambda_min(K): the update
  // is x <- P(x - lambda_min K^-1 x).
  const double step = gram.lambda_min();
  Eigen::VectorXd x = spec.project(spec.center(), gram);
  Eigen::VectorXd x_prev = x;
  double t_prev = 1.0;
  Eigen::VectorXd best_x = x;
  double best_gap = std::numeric_limits<double>::infinity();
  bool converged = false;
  long k = 0;
  for (; k < opts.max_iter; ++k) {
    const Eigen::VectorXd h = gram.solve(x);
    const double gap = h.dot(x) - spec.linear_minimum(h, gram);
    if (gap < best_gap) {
      best_gap = gap;
      best_x = x;
    }
    if (gap <= opts.tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd point = x;
    Eigen::VectorXd grad = h;
    if (opts.momentum && k > 0) {
      const double t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
      point = x + ((t_prev - 1.0) / t) * (x - x_prev);
      t_prev = t;
      grad = gram.solve(point);
    }
    x_prev = x;
    x = spec.project(point - step * grad, gram);
  }

  SolveReport report;
  report.iterations = k;
  if (converged) return finalize(gram, std::move(x), std::nullopt, spec, std::move(report), opts);

  FittedSolution best = finalize(gram, std::move(best_x), std::nullopt, spec, std::move(report),
                                 opts);
  std::ostringstream msg;
  msg << "projected gradient stalled at gap " << best.report.gap << " after " << opts.max_iter
      << " iterations (target " << opts.tol << ")";
  throw NoConvergenceError(msg.str(), std::move(best));
}

FittedSolution pseudo_inverse_reconstruct(const GramMatrix& gram, const Eigen::VectorXd& y,
                                          double rel_threshold) {
  if (y.size() != gram.size())
    throw std::invalid_argument("pseudo_inverse_reconstruct: dimension mismatch");
  if (!y.allFinite()) throw std::invalid_argument("pseudo_inverse_reconstruct: y must be finite");
  if (!std::isfinite(rel_threshold) || rel_threshold < 0.0 || rel_threshold >= 1.0)
    throw std::invalid_argument("pseudo_inverse_reconstruct: rel_threshold must lie in [0, 1)");

  const Eigen::Index n = gram.size();
  const Eigen::VectorXd& vals = gram.eigenvalues();
  const Eigen::MatrixXd& vecs = gram.eigenvectors();
  const double cutoff = rel_threshold * vals(0);
  const Eigen::VectorXd yt = vecs.transpose() * y;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd lo(n), hi(n);
  const double wide = 1e6 * std::max(1.0, yt.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vals(i) >= cutoff) {
      w(i) = yt(i);
      g(i) = yt(i) / vals(i);
      lo(i) = hi(i) = yt(i);
    } else {  // truncated mode: certified against a wide interval straddling 0
      lo(i) = -wide;
      hi(i) = wide;
    }
  }
  Eigen::VectorXd x = vecs * w;
  Eigen::VectorXd h = vecs * g;
  UncertaintySpec spec = UncertaintySpec::eigen_box(y, lo, hi);
  return finalize(gram, std::move(x), std::move(h), spec, SolveReport{}, SolveOptions{});
}

}  // namespace rkreco
