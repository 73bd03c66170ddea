#pragma once

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rkreco/kernels.hpp"
#include "rkreco/reconstruction.hpp"
#include "rkreco/solvers.hpp"
#include "rkreco/uncertainty.hpp"

namespace rkreco {

// Aggregated scattered observations: one entry per distinct location
// (coincidence tolerance 1e-12), in first-appearance order.
struct ObservationSet {
  std::vector<Point2> locations;
  Eigen::VectorXd values;    // per-location sample means
  Eigen::VectorXd stds;      // sample standard deviations (n - 1 form; 0 when count = 1)
  std::vector<long> counts;  // samples per location, >= 1

  Eigen::Index size() const { return values.size(); }
};

// Parses `x,y,value` CSV (header required, case-insensitive; UTF-8 with
// optional BOM; LF or CRLF) and aggregates rows sharing a location into
// sample means and standard deviations. Throws ParseError with row/column
// diagnostics, NonFiniteValueError for inf/nan payloads, EmptyInputError
// when there is no header or no data row.
ObservationSet ingest_csv(std::istream& in);
ObservationSet ingest_csv_file(const std::string& path);

enum class AnchorStrategy { MinStd, MaxArea };

// Picks three unisolvent anchor locations, returned as ascending indices
// into obs. MinStd prefers the three smallest-std locations (ties broken by
// lowest index) and, when those fail the collinearity gate, greedily swaps
// the next-smallest-std candidate into the position that maximizes triangle
// area. MaxArea takes the maximum-area triangle over the convex hull.
// Throws UnisolvencyError when every candidate triple is degenerate.
std::array<int, 3> select_anchors(const ObservationSet& obs, AnchorStrategy strategy);

// Persistent model: kernel description, nodes, solution, uncertainty echo,
// and the solve report. Stored as line-oriented text (schema_version 1)
// with shortest-round-trip decimal numbers, so save -> load reproduces the
// numeric payload bit for bit.
struct ModelFile {
  int schema_version = 1;
  KernelKind kernel_kind = KernelKind::ThinPlateSpline;
  std::array<Point2, 3> anchors{};  // thin-plate-spline kernels only
  double gaussian_width = 1.0;      // gaussian kernels only
  std::vector<Point2> nodes;
  Eigen::VectorXd coeffs;  // h_hat
  Eigen::VectorXd fitted;  // x_hat
  double norm_sq = 0.0;
  std::optional<UncertaintySpec> uncertainty;
  SolveReport report;

  // Rebuilds the kernel (re-deriving the cardinal basis from the stored
  // anchors for the thin-plate case).
  KernelBasis kernel() const;
};

void save_model(const ModelFile& model, std::ostream& out);
void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(std::istream& in);
ModelFile load_model(const std::string& path);

// Evaluable form of a stored model.
Reconstruction to_reconstruction(const ModelFile& model);

// Shortest decimal representation that parses back to exactly the same
// double (std::to_chars round-trip form); used for all numeric output.
std::string format_double(double value);

}  // namespace rkreco
