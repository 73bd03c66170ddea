#include "rkreco/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace rkreco {

namespace {

// 53-bit uniforms drawn directly from the generator's output so the sample
// stream is identical on every platform.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_open0(std::mt19937_64& rng) {  // in (0, 1], safe under log
  return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::VectorXd g(n);
  for (Eigen::Index i = 0; i < n; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform_open0(rng)));
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    g(i) = r * std::cos(phi);
    if (i + 1 < n) g(i + 1) = r * std::sin(phi);
  }
  return g;
}

}  // namespace

OracleResult box_active_set_oracle(const GramMatrix& gram, const Eigen::VectorXd& center,
                                   const Eigen::VectorXd& deltas) {
  const Eigen::Index n = gram.size();
  if (n > 8) throw InstanceTooLargeError("box oracle enumerates 3^N patterns; N must be <= 8");
  if (center.size() != n || deltas.size() != n)
    throw std::invalid_argument("box oracle: dimension mismatch");

  const Eigen::MatrixXd& kmat = gram.entries();
  const Eigen::VectorXd lower = center - deltas;
  const Eigen::VectorXd upper = center + deltas;
  const double bound_scale =
      std::max(1.0, std::max(lower.cwiseAbs().maxCoeff(), upper.cwiseAbs().maxCoeff()));
  const double feas_eps = 1e-10 * bound_scale;

  long pow3 = 1;
  for (Eigen::Index i = 0; i < n; ++i) pow3 *= 3;

  OracleResult best;
  double best_norm = std::numeric_limits<double>::infinity();
  bool best_kkt = false;

  std::vector<BoundSide> sides(static_cast<std::size_t>(n));
  for (long code = 0; code < pow3; ++code) {
    // Decode with coordinate 0 as the most significant digit so ascending
    // codes enumerate patterns lexicographically (Free < Lower < Upper).
    long rem = code;
    long place = pow3 / 3;
    for (Eigen::Index i = 0; i < n; ++i) {
      sides[static_cast<std::size_t>(i)] = static_cast<BoundSide>(rem / place);
      rem %= place;
      place = place == 1 ? 1 : place / 3;
    }

    std::vector<Eigen::Index> bound;
    bound.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
      if (sides[static_cast<std::size_t>(i)] != BoundSide::Free) bound.push_back(i);
    const Eigen::Index nb = static_cast<Eigen::Index>(bound.size());

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
    if (nb > 0) {
      Eigen::VectorXd xb(nb);
      Eigen::MatrixXd kbb(nb, nb);
      for (Eigen::Index a = 0; a < nb; ++a) {
        const Eigen::Index i = bound[static_cast<std::size_t>(a)];
        xb(a) = sides[static_cast<std::size_t>(i)] == BoundSide::Upper ? upper(i) : lower(i);
        for (Eigen::Index b = 0; b < nb; ++b)
          kbb(a, b) = kmat(i, bound[static_cast<std::size_t>(b)]);
      }
      const Eigen::VectorXd hb = solve_spd_refined(kbb, xb);
      for (Eigen::Index a = 0; a < nb; ++a) {
        x(bound[static_cast<std::size_t>(a)]) = xb(a);
        h(bound[static_cast<std::size_t>(a)]) = hb(a);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sides[static_cast<std::size_t>(i)] != BoundSide::Free) continue;
        double acc = 0.0;
        for (Eigen::Index a = 0; a < nb; ++a)
          acc += kmat(i, bound[static_cast<std::size_t>(a)]) * hb(a);
        x(i) = acc;
      }
    }

    bool feasible = true;
    for (Eigen::Index i = 0; i < n && feasible; ++i)
      if (sides[static_cast<std::size_t>(i)] == BoundSide::Free)
        feasible = x(i) >= lower(i) - feas_eps && x(i) <= upper(i) + feas_eps;
    if (!feasible) continue;

    const double h_scale = std::max(h.cwiseAbs().maxCoeff(), 1e-300);
    const double sign_eps = 1e-12 * h_scale;
    bool kkt = true;
    for (Eigen::Index i = 0; i < n && kkt; ++i) {
      if (deltas(i) == 0.0) continue;  // pinned coordinate: multiplier sign is unconstrained
      const BoundSide s = sides[static_cast<std::size_t>(i)];
      if (s == BoundSide::Lower) kkt = h(i) >= -sign_eps;
      if (s == BoundSide::Upper) kkt = h(i) <= sign_eps;
    }

    const double norm = h.dot(x);
    // KKT-consistent candidates take precedence; within the same class the
    // first (lexicographically least) pattern of minimum norm wins.
    const bool better = (kkt && !best_kkt) || (kkt == best_kkt && norm < best_norm);
    if (better) {
      best.x_star = x;
      best.norm_sq = norm;
      best.pattern = sides;
      best_norm = norm;
      best_kkt = kkt;
    }
  }

  if (!best_kkt && !std::isfinite(best_norm))
    throw SingularError("box oracle: no feasible activity pattern survived");
  return best;
}

OracleResult reference_pgd(const GramMatrix& gram, const UncertaintySpec& spec, long iterations) {
  if (spec.dimension() != gram.size())
    throw std::invalid_argument("reference_pgd: dimension mismatch");
  OracleResult out;
  if (spec.kind() == UncertaintyKind::Point) {
    out.x_star = spec.center();
    out.norm_sq = gram.solve(out.x_star).dot(out.x_star);
    return out;
  }
  const double step = 0.1 * gram.lambda_min();
  Eigen::VectorXd x = spec.project(spec.center(), gram);
  for (long k = 0; k < iterations; ++k) {
    const Eigen::VectorXd h = gram.solve(x);
    x = spec.project(x - step * h, gram);
  }
  out.x_star = std::move(x);
  out.norm_sq = gram.solve(out.x_star).dot(out.x_star);
  return out;
}

std::vector<Eigen::VectorXd> feasible_sampler(const UncertaintySpec& spec, const GramMatrix& gram,
                                              int count, std::uint64_t seed) {
  if (spec.dimension() != gram.size())
    throw std::invalid_argument("feasible_sampler: dimension mismatch");
  const Eigen::Index n = spec.dimension();
  std::mt19937_64 rng(seed);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));

  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd x(n);
    switch (spec.kind()) {
      case UncertaintyKind::Point:
        x = spec.center();
        break;
      case UncertaintyKind::Box:
        for (Eigen::Index i = 0; i < n; ++i)
          x(i) = spec.center()(i) + spec.deltas()(i) * (2.0 * uniform01(rng) - 1.0);
        break;
      case UncertaintyKind::L2Ball: {
        Eigen::VectorXd dir = gaussian_vector(rng, n);
        const double len = dir.norm();
        if (len > 0.0) dir /= len;
        const double radius =
            spec.radius() * std::pow(uniform01(rng), 1.0 / static_cast<double>(n));
        x = spec.center() + radius * dir;
        break;
      }
      case UncertaintyKind::L1Ball: {
        // Signed exponentials normalized to the simplex give a uniform point
        // on the l1 sphere; scale by U^(1/N) for the ball interior.
        Eigen::VectorXd e(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double mag = -std::log(uniform_open0(rng));
          e(i) = uniform01(rng) < 0.5 ? -mag : mag;
        }
        const double total = e.lpNorm<1>();
        const double radius =
            spec.radius() * std::pow(uniform01(rng), 1.0 / static_cast<double>(n));
        x = spec.center();
        if (total > 0.0) x += (radius / total) * e;
        break;
      }
      case UncertaintyKind::EigenBox: {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
          const double span = spec.upper()(i) - spec.lower()(i);
          w(i) = spec.lower()(i) + span * uniform01(rng);
        }
        x = gram.eigenvectors() * w;
        break;
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace rkreco
