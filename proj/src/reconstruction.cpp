#include "rkreco/reconstruction.hpp"

#include <stdexcept>

#include "rkreco/parallel.hpp"

namespace rkreco {

void GridSpec::validate() const {
  if (!(x0 < x1) || !(y0 < y1))
    throw std::invalid_argument("grid: require x0 < x1 and y0 < y1");
  if (nx < 2 || ny < 2) throw std::invalid_argument("grid: require nx >= 2 and ny >= 2");
}

double evaluate(const Reconstruction& recon, const Point2& v) {
  if (recon.coeffs.size() != static_cast<Eigen::Index>(recon.nodes.size()))
    throw std::invalid_argument("reconstruction: coefficient/node count mismatch");
  double acc = 0.0;
  for (std::size_t n = 0; n < recon.nodes.size(); ++n)
    acc += recon.coeffs(static_cast<Eigen::Index>(n)) * recon.kernel(v, recon.nodes[n]);
  return acc;
}

Eigen::MatrixXd evaluate_grid(const Reconstruction& recon, const GridSpec& grid,
                              bool deterministic) {
  grid.validate();
  const double dx = (grid.x1 - grid.x0) / static_cast<double>(grid.nx - 1);
  const double dy = (grid.y1 - grid.y0) / static_cast<double>(grid.ny - 1);
  Eigen::MatrixXd out(grid.ny, grid.nx);
  parallel_for(
      grid.ny,
      [&](int i) {
        const double py = grid.y0 + static_cast<double>(i) * dy;
        for (int j = 0; j < grid.nx; ++j) {
          const double px = grid.x0 + static_cast<double>(j) * dx;
          out(i, j) = evaluate(recon, Point2{px, py});
        }
      },
      deterministic);
  return out;
}

double rkhs_norm_sq(const Eigen::VectorXd& coeffs, const GramMatrix& gram) {
  if (coeffs.size() != gram.size())
    throw std::invalid_argument("rkhs_norm_sq: dimension mismatch");
  return coeffs.dot(gram.entries() * coeffs);
}

}  // namespace rkreco
