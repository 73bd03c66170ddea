#include "rkreco/cli.hpp"

#include <unistd.h>

#include <CLI11.hpp>

#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rkreco/errors.hpp"
#include "rkreco/io.hpp"
#include "rkreco/kernels.hpp"
#include "rkreco/reconstruction.hpp"
#include "rkreco/solvers.hpp"
#include "rkreco/uncertainty.hpp"

namespace rkreco {

namespace {

// Bad flag combinations or values discovered after CLI11 parsing; mapped to
// exit code 1 like CLI11's own parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitConfig {
  std::string input;
  std::string output = "model.rkm";
  std::string uncertainty = "interp";
  std::optional<double> delta;
  std::optional<double> delta_scale;
  std::optional<double> lambda;
  std::string anchors = "min-std";
  double tol = 1e-8;
  long max_iter = 1000000;
  std::optional<double> norm_bound;
  bool deterministic = false;
};

struct EvalConfig {
  std::string model;
  std::vector<std::string> at;
  std::string output;
};

struct GridConfig {
  std::string model;
  GridSpec grid;
  std::string output;
  bool deterministic = false;
};

struct VerifyConfig {
  std::string model;
  double tol = 1e-8;
  bool deterministic = false;
};

struct InfoConfig {
  std::string model;
};

double parse_flag_double(std::string_view token, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc{} || res.ptr != token.data() + token.size())
    throw UsageError("cannot parse '" + std::string(token) + "' in " + what);
  return v;
}

Point2 parse_point_flag(const std::string& token) {
  const size_t comma = token.find(',');
  if (comma == std::string::npos || token.find(',', comma + 1) != std::string::npos)
    throw UsageError("point '" + token + "' must have the form x,y");
  const std::string_view view = token;
  return Point2{parse_flag_double(view.substr(0, comma), "point '" + token + "'"),
                parse_flag_double(view.substr(comma + 1), "point '" + token + "'")};
}

std::array<int, 3> resolve_anchors(const std::string& flag, const ObservationSet& obs) {
  if (flag == "min-std") return select_anchors(obs, AnchorStrategy::MinStd);
  if (flag == "max-area") return select_anchors(obs, AnchorStrategy::MaxArea);

  std::array<int, 3> idx{};
  std::string_view rest = flag;
  for (int k = 0; k < 3; ++k) {
    const size_t comma = rest.find(',');
    const std::string_view tok = (k < 2) ? rest.substr(0, comma) : rest;
    if ((k < 2) == (comma == std::string_view::npos) || tok.empty())
      throw UsageError("--anchors expects min-std, max-area, or three indices i,j,k");
    int v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
      throw UsageError("cannot parse anchor index '" + std::string(tok) + "'");
    idx[static_cast<size_t>(k)] = v;
    if (k < 2) rest.remove_prefix(comma + 1);
  }
  for (const int i : idx) {
    if (i < 0 || i >= static_cast<int>(obs.size()))
      throw ParseError("anchor index " + std::to_string(i) + " is outside the data (0.." +
                       std::to_string(obs.size() - 1) + ")");
  }
  if (idx[0] == idx[1] || idx[0] == idx[2] || idx[1] == idx[2])
    throw ParseError("anchor indices must be distinct");
  return idx;
}

UncertaintySpec build_spec(const FitConfig& cfg, const ObservationSet& obs,
                           const GramMatrix& gram) {
  const Eigen::VectorXd& y = obs.values;
  if (cfg.uncertainty == "interp") {
    if (cfg.delta) throw UsageError("--delta does not apply to --uncertainty interp");
    if (cfg.delta_scale) throw UsageError("--delta-scale does not apply to --uncertainty interp");
    return UncertaintySpec::point(y);
  }
  if (cfg.uncertainty == "box") {
    Eigen::VectorXd deltas;
    if (cfg.delta)
      deltas = Eigen::VectorXd::Constant(y.size(), *cfg.delta);
    else
      deltas = cfg.delta_scale.value_or(1.0) * obs.stds;
    return UncertaintySpec::box(y, deltas);
  }
  if (cfg.delta_scale) throw UsageError("--delta-scale applies only to --uncertainty box");
  if (!cfg.delta) throw UsageError("--uncertainty " + cfg.uncertainty + " needs --delta");
  if (cfg.uncertainty == "l2") return UncertaintySpec::l2_ball(y, *cfg.delta);
  if (cfg.uncertainty == "l1") return UncertaintySpec::l1_ball(y, *cfg.delta);
  const Eigen::VectorXd rotated = gram.eigenvectors().transpose() * y;
  const Eigen::VectorXd lower = (rotated.array() - *cfg.delta).matrix();
  const Eigen::VectorXd upper = (rotated.array() + *cfg.delta).matrix();
  return UncertaintySpec::eigen_box(y, lower, upper);
}

// Opens cfg-selected output target, defaulting to the supplied stream.
class OutputTarget {
 public:
  OutputTarget(const std::string& path, std::ostream& fallback) {
    if (path.empty()) {
      sink_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary);
    if (!file_) throw Error("cannot open '" + path + "' for writing");
    sink_ = &file_;
  }

  std::ostream& stream() { return *sink_; }

 private:
  std::ofstream file_;
  std::ostream* sink_ = nullptr;
};

void print_report_lines(const SolveReport& report, std::ostream& out) {
  out << "gap " << format_double(report.gap) << "\n";
  if (report.lambda) out << "lambda " << format_double(*report.lambda) << "\n";
  if (report.tau) out << "tau " << format_double(*report.tau) << "\n";
  if (report.implied_delta) out << "implied_delta " << format_double(*report.implied_delta) << "\n";
  out << "iterations " << report.iterations << "\n";
  out << "converged " << (report.converged ? "yes" : "no") << "\n";
  if (report.trivial) out << "trivial yes\n";
  if (report.worst_case_error)
    out << "worst_case_error " << format_double(*report.worst_case_error) << "\n";
  if (report.small_delta_condition)
    out << "small_delta_condition " << (*report.small_delta_condition ? "yes" : "no") << "\n";
}

int run_fit(const FitConfig& cfg, std::ostream& out) {
  const ObservationSet obs = ingest_csv_file(cfg.input);
  if (obs.size() < 3)
    throw ParseError("need at least 3 distinct locations to fit, found " +
                     std::to_string(obs.size()));

  const std::array<int, 3> anchor_idx = resolve_anchors(cfg.anchors, obs);
  const std::array<Point2, 3> anchor_pts{obs.locations[static_cast<size_t>(anchor_idx[0])],
                                         obs.locations[static_cast<size_t>(anchor_idx[1])],
                                         obs.locations[static_cast<size_t>(anchor_idx[2])]};
  const KernelBasis kernel = KernelBasis::thin_plate_spline(cardinal_polynomials(anchor_pts));
  const GramMatrix gram = GramMatrix::from_points(obs.locations, kernel, cfg.deterministic);

  FittedSolution sol;
  UncertaintySpec echo = UncertaintySpec::point(obs.values);
  if (cfg.lambda) {
    sol = smoothing_spline(gram, obs.values, *cfg.lambda);
    if (cfg.norm_bound)
      sol.report.worst_case_error = worst_case_error(sol.norm_sq, *cfg.norm_bound);
    echo = UncertaintySpec::l2_ball(obs.values, sol.report.implied_delta.value_or(0.0));
  } else {
    echo = build_spec(cfg, obs, gram);
    SolveOptions opts;
    opts.tol = cfg.tol;
    opts.max_iter = cfg.max_iter;
    opts.norm_bound = cfg.norm_bound;
    sol = solve(gram, echo, opts);
  }

  ModelFile model;
  model.kernel_kind = KernelKind::ThinPlateSpline;
  model.anchors = anchor_pts;
  model.nodes = obs.locations;
  model.coeffs = sol.h_hat;
  model.fitted = sol.x_hat;
  model.norm_sq = sol.norm_sq;
  model.uncertainty = echo;
  model.report = sol.report;
  save_model(model, cfg.output);

  out << "nodes " << obs.size() << "\n";
  out << "anchors " << anchor_idx[0] << " " << anchor_idx[1] << " " << anchor_idx[2] << "\n";
  out << "uncertainty " << to_string(echo.kind()) << "\n";
  out << "norm_sq " << format_double(sol.norm_sq) << "\n";
  print_report_lines(sol.report, out);
  out << "model " << cfg.output << "\n";
  return 0;
}

int run_eval(const EvalConfig& cfg, std::ostream& out) {
  const ModelFile model = load_model(cfg.model);
  const Reconstruction recon = to_reconstruction(model);

  std::vector<Point2> points;
  points.reserve(cfg.at.size());
  for (const std::string& token : cfg.at) points.push_back(parse_point_flag(token));

  OutputTarget target(cfg.output, out);
  target.stream() << "x,y,value\n";
  for (const Point2& p : points) {
    target.stream() << format_double(p.x) << ',' << format_double(p.y) << ','
                    << format_double(evaluate(recon, p)) << "\n";
  }
  return 0;
}

int run_grid(const GridConfig& cfg, std::ostream& out) {
  if (!(cfg.grid.x0 < cfg.grid.x1) || !(cfg.grid.y0 < cfg.grid.y1))
    throw UsageError("grid bounds must satisfy x0 < x1 and y0 < y1");
  const ModelFile model = load_model(cfg.model);
  const Reconstruction recon = to_reconstruction(model);
  const Eigen::MatrixXd values = evaluate_grid(recon, cfg.grid, cfg.deterministic);

  OutputTarget target(cfg.output, out);
  std::ostream& sink = target.stream();
  sink << "# " << format_double(cfg.grid.x0) << ',' << format_double(cfg.grid.x1) << ','
       << cfg.grid.nx << ',' << format_double(cfg.grid.y0) << ',' << format_double(cfg.grid.y1)
       << ',' << cfg.grid.ny << "\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j > 0) sink << ',';
      sink << format_double(values(i, j));
    }
    sink << "\n";
  }
  return 0;
}

int run_verify(const VerifyConfig& cfg, std::ostream& out) {
  const ModelFile model = load_model(cfg.model);
  if (!model.uncertainty)
    throw ParseError("model carries no uncertainty description to verify against");
  const GramMatrix gram =
      GramMatrix::from_points(model.nodes, model.kernel(), cfg.deterministic);
  const double gap = verify_optimality(gram, model.fitted, *model.uncertainty);
  const double residual = (gram.entries() * model.coeffs - model.fitted).norm();

  out << "gap " << format_double(gap) << "\n";
  out << "residual " << format_double(residual) << "\n";
  const bool pass = gap <= cfg.tol;
  const bool color = (&out == &std::cout) && ::isatty(STDOUT_FILENO) != 0 &&
                     std::getenv("NO_COLOR") == nullptr;
  const char* verdict = pass ? "certificate passed" : "certificate FAILED";
  if (color)
    out << (pass ? "\x1b[32m" : "\x1b[31m") << verdict << "\x1b[0m";
  else
    out << verdict;
  out << " (tol " << format_double(cfg.tol) << ")\n";
  return pass ? 0 : 2;
}

int run_info(const InfoConfig& cfg, std::ostream& out) {
  const ModelFile model = load_model(cfg.model);
  out << "nodes " << model.nodes.size() << "\n";
  out << "kernel " << (model.kernel_kind == KernelKind::Gaussian ? "gaussian" : "tps") << "\n";
  out << "uncertainty "
      << (model.uncertainty ? to_string(model.uncertainty->kind()) : std::string("none")) << "\n";
  out << "norm_sq " << format_double(model.norm_sq) << "\n";
  print_report_lines(model.report, out);
  const GramMatrix gram = GramMatrix::from_points(model.nodes, model.kernel(), true);
  out << "condition_number " << format_double(gram.condition_number()) << "\n";
  return 0;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"minimum-norm scattered-data reconstruction with robust uncertainty sets"};
  app.require_subcommand(1);

  FitConfig fc;
  EvalConfig ec;
  GridConfig gc;
  VerifyConfig vc;
  InfoConfig ic;
  int rc = 0;

  CLI::App* fit = app.add_subcommand("fit", "fit a model to csv observations");
  fit->add_option("input", fc.input, "observations csv with header x,y,value")->required();
  CLI::Option* opt_unc =
      fit->add_option("--uncertainty", fc.uncertainty, "admissible-set shape around the data")
          ->check(CLI::IsMember({"interp", "box", "l2", "l1", "eigenbox"}))
          ->capture_default_str();
  CLI::Option* opt_delta =
      fit->add_option("--delta", fc.delta, "radius (l2/l1) or uniform half-width (box, eigenbox)")
          ->check(CLI::NonNegativeNumber);
  CLI::Option* opt_scale =
      fit->add_option("--delta-scale", fc.delta_scale,
                      "box half-widths as a multiple of each location's std (default 1)")
          ->check(CLI::NonNegativeNumber);
  CLI::Option* opt_lambda =
      fit->add_option("--lambda", fc.lambda, "smoothing parameter; replaces --uncertainty")
          ->check(CLI::NonNegativeNumber);
  opt_delta->excludes(opt_scale);
  opt_lambda->excludes(opt_unc);
  opt_lambda->excludes(opt_delta);
  opt_lambda->excludes(opt_scale);
  fit->add_option("--anchors", fc.anchors, "min-std, max-area, or explicit indices i,j,k")
      ->capture_default_str();
  fit->add_option("--tol", fc.tol, "optimality-gap tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--max-iter", fc.max_iter, "iteration cap for gradient paths")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit->add_option("--norm-bound", fc.norm_bound,
                  "norm bound M; reports the worst-case error M - norm_sq")
      ->check(CLI::NonNegativeNumber);
  fit->add_flag("--deterministic", fc.deterministic, "serial, bit-reproducible evaluation");
  fit->add_option("-o,--output", fc.output, "model file to write")->capture_default_str();
  fit->callback([&] { rc = run_fit(fc, out); });

  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model at points");
  eval->add_option("model", ec.model, "model file written by fit")->required();
  eval->add_option("--at", ec.at, "evaluation point x,y (repeatable)")->required();
  eval->add_option("-o,--output", ec.output, "csv file to write (default: stdout)");
  eval->callback([&] { rc = run_eval(ec, out); });

  CLI::App* grid = app.add_subcommand("grid", "evaluate a saved model on a regular grid");
  grid->add_option("model", gc.model, "model file written by fit")->required();
  grid->add_option("--x0", gc.grid.x0, "left grid edge")->required();
  grid->add_option("--x1", gc.grid.x1, "right grid edge")->required();
  grid->add_option("--nx", gc.grid.nx, "columns")->required()->check(CLI::Range(2, 1000000));
  grid->add_option("--y0", gc.grid.y0, "bottom grid edge")->required();
  grid->add_option("--y1", gc.grid.y1, "top grid edge")->required();
  grid->add_option("--ny", gc.grid.ny, "rows")->required()->check(CLI::Range(2, 1000000));
  grid->add_flag("--deterministic", gc.deterministic, "serial, bit-reproducible evaluation");
  grid->add_option("-o,--output", gc.output, "csv file to write (default: stdout)");
  grid->callback([&] { rc = run_grid(gc, out); });

  CLI::App* verify =
      app.add_subcommand("verify", "recompute the optimality certificate of a saved model");
  verify->add_option("model", vc.model, "model file written by fit")->required();
  verify->add_option("--tol", vc.tol, "largest acceptable gap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  verify->add_flag("--deterministic", vc.deterministic, "serial, bit-reproducible evaluation");
  verify->callback([&] { rc = run_verify(vc, out); });

  CLI::App* info = app.add_subcommand("info", "summarize a saved model");
  info->add_option("model", ic.model, "model file written by fit")->required();
  info->callback([&] { rc = run_info(ic, out); });

  try {
    app.parse(argc, argv);
    return rc;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NoConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    err << "gap " << format_double(e.best().report.gap) << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  return dispatch(argc, argv, std::cout, std::cerr);
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("rkreco");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& a : full) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace rkreco
