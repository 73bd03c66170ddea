#include "rkreco/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rkreco/errors.hpp"

namespace rkreco {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

void strip_bom(std::string_view& s) {
  if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") s.remove_prefix(3);
}

double parse_csv_double(std::string_view field, long row, int column) {
  const std::string_view t = trim(field);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
    std::ostringstream msg;
    msg << "csv row " << row << " column " << column << ": cannot parse \"" << std::string(t)
        << "\" as a number";
    throw ParseError(msg.str());
  }
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "csv row " << row << " column " << column << ": non-finite value";
    throw NonFiniteValueError(msg.str());
  }
  return v;
}

}  // namespace

ObservationSet ingest_csv(std::istream& in) {
  struct Group {
    Point2 location;
    std::vector<double> samples;
  };
  std::vector<Group> groups;

  std::string line;
  long row = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    std::string_view view = line;
    if (row == 1) strip_bom(view);
    if (trim(view).empty()) continue;

    const auto fields = split(view, ',');
    if (!header_seen) {
      if (fields.size() != 3 || !iequals(trim(fields[0]), "x") || !iequals(trim(fields[1]), "y") ||
          !iequals(trim(fields[2]), "value")) {
        std::ostringstream msg;
        msg << "csv row " << row << ": expected header \"x,y,value\", found \""
            << std::string(trim(view)) << "\"";
        throw ParseError(msg.str());
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      std::ostringstream msg;
      msg << "csv row " << row << ": expected 3 columns, found " << fields.size();
      throw ParseError(msg.str());
    }
    const Point2 loc{parse_csv_double(fields[0], row, 1), parse_csv_double(fields[1], row, 2)};
    const double value = parse_csv_double(fields[2], row, 3);

    const auto it = std::find_if(groups.begin(), groups.end(),
                                 [&](const Group& g) { return same_location(g.location, loc); });
    if (it == groups.end())
      groups.push_back({loc, {value}});
    else
      it->samples.push_back(value);
  }

  if (!header_seen) throw EmptyInputError("csv input is empty");
  if (groups.empty()) throw EmptyInputError("csv has a header but no data rows");

  ObservationSet obs;
  const auto n = static_cast<Eigen::Index>(groups.size());
  obs.locations.reserve(groups.size());
  obs.counts.reserve(groups.size());
  obs.values.resize(n);
  obs.stds.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Group& g = groups[static_cast<size_t>(i)];
    const auto count = static_cast<long>(g.samples.size());
    double mean = 0.0;
    for (const double v : g.samples) mean += v;
    mean /= static_cast<double>(count);
    double var = 0.0;
    if (count > 1) {
      for (const double v : g.samples) var += (v - mean) * (v - mean);
      var /= static_cast<double>(count - 1);
    }
    obs.locations.push_back(g.location);
    obs.counts.push_back(count);
    obs.values(i) = mean;
    obs.stds(i) = std::sqrt(var);
  }
  return obs;
}

ObservationSet ingest_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open csv file '" + path + "'");
  return ingest_csv(in);
}

namespace {

double abs_twice_area(const Point2& p, const Point2& q, const Point2& r) {
  const long double det =
      (static_cast<long double>(q.x) - p.x) * (static_cast<long double>(r.y) - p.y) -
      (static_cast<long double>(r.x) - p.x) * (static_cast<long double>(q.y) - p.y);
  return std::abs(static_cast<double>(det));
}

std::array<Point2, 3> triple_points(const ObservationSet& obs, const std::array<int, 3>& idx) {
  return {obs.locations[static_cast<size_t>(idx[0])], obs.locations[static_cast<size_t>(idx[1])],
          obs.locations[static_cast<size_t>(idx[2])]};
}

std::array<int, 3> select_min_std(const ObservationSet& obs) {
  const int n = static_cast<int>(obs.size());
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (obs.stds(a) != obs.stds(b)) return obs.stds(a) < obs.stds(b);
    return a < b;
  });

  std::array<int, 3> current{order[0], order[1], order[2]};
  int next = 3;
  while (!anchors_unisolvent(triple_points(obs, current))) {
    if (next >= n)
      throw UnisolvencyError("anchor selection failed: every candidate triple is collinear");
    const int candidate = order[static_cast<size_t>(next++)];
    // Swap the candidate into whichever slot leaves the widest triangle.
    int best_pos = 0;
    double best_area = -1.0;
    for (int pos = 0; pos < 3; ++pos) {
      std::array<int, 3> trial = current;
      trial[static_cast<size_t>(pos)] = candidate;
      const auto pts = triple_points(obs, trial);
      const double area = abs_twice_area(pts[0], pts[1], pts[2]);
      if (area > best_area) {
        best_area = area;
        best_pos = pos;
      }
    }
    current[static_cast<size_t>(best_pos)] = candidate;
  }
  std::sort(current.begin(), current.end());
  return current;
}

std::array<int, 3> select_max_area(const ObservationSet& obs) {
  const int n = static_cast<int>(obs.size());
  std::vector<int> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const Point2& p = obs.locations[static_cast<size_t>(a)];
    const Point2& q = obs.locations[static_cast<size_t>(b)];
    if (p.x != q.x) return p.x < q.x;
    if (p.y != q.y) return p.y < q.y;
    return a < b;
  });
  const auto cross = [&](int o, int a, int b) {
    const Point2& po = obs.locations[static_cast<size_t>(o)];
    const Point2& pa = obs.locations[static_cast<size_t>(a)];
    const Point2& pb = obs.locations[static_cast<size_t>(b)];
    return (static_cast<long double>(pa.x) - po.x) * (static_cast<long double>(pb.y) - po.y) -
           (static_cast<long double>(pb.x) - po.x) * (static_cast<long double>(pa.y) - po.y);
  };

  // Monotone-chain convex hull, strictly convex: points interior to an edge
  // are dropped so every hull vertex is a genuine corner.
  std::vector<int> hull;
  for (const int i : idx) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), i) <= 0.0L)
      hull.pop_back();
    hull.push_back(i);
  }
  const size_t lower_size = hull.size() + 1;
  for (int k = n - 2; k >= 0; --k) {
    const int i = idx[static_cast<size_t>(k)];
    while (hull.size() >= lower_size && cross(hull[hull.size() - 2], hull.back(), i) <= 0.0L)
      hull.pop_back();
    hull.push_back(i);
  }
  hull.pop_back();

  if (hull.size() < 3)
    throw UnisolvencyError("anchor selection failed: the observations are collinear");

  // The maximum-area triangle always has its vertices on the hull, and hulls
  // at this data scale are small, so exhaustive search is exact and cheap.
  const int h = static_cast<int>(hull.size());
  std::array<int, 3> best{hull[0], hull[1], hull[2]};
  double best_area = -1.0;
  for (int a = 0; a < h; ++a) {
    for (int b = a + 1; b < h; ++b) {
      for (int c = b + 1; c < h; ++c) {
        const double area =
            abs_twice_area(obs.locations[static_cast<size_t>(hull[static_cast<size_t>(a)])],
                           obs.locations[static_cast<size_t>(hull[static_cast<size_t>(b)])],
                           obs.locations[static_cast<size_t>(hull[static_cast<size_t>(c)])]);
        if (area > best_area) {
          best_area = area;
          best = {hull[static_cast<size_t>(a)], hull[static_cast<size_t>(b)],
                  hull[static_cast<size_t>(c)]};
        }
      }
    }
  }
  std::sort(best.begin(), best.end());
  if (!anchors_unisolvent(triple_points(obs, best)))
    throw UnisolvencyError(
        "anchor selection failed: the widest triangle in the data is numerically collinear");
  return best;
}

}  // namespace

std::array<int, 3> select_anchors(const ObservationSet& obs, AnchorStrategy strategy) {
  if (obs.values.size() != obs.stds.size() ||
      obs.values.size() != static_cast<Eigen::Index>(obs.locations.size()) ||
      obs.values.size() != static_cast<Eigen::Index>(obs.counts.size()))
    throw std::invalid_argument("observation set fields have mismatched sizes");
  if (obs.size() < 3)
    throw std::invalid_argument("anchor selection needs at least 3 distinct locations");
  return strategy == AnchorStrategy::MinStd ? select_min_std(obs) : select_max_area(obs);
}

std::string format_double(double value) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

KernelBasis ModelFile::kernel() const {
  if (kernel_kind == KernelKind::Gaussian) return KernelBasis::gaussian(gaussian_width);
  return KernelBasis::thin_plate_spline(cardinal_polynomials(anchors));
}

void save_model(const ModelFile& model, std::ostream& out) {
  const auto n = static_cast<Eigen::Index>(model.nodes.size());
  if (model.coeffs.size() != n || model.fitted.size() != n)
    throw std::invalid_argument("model nodes, coeffs, and fitted must have matching sizes");
  if (model.uncertainty && model.uncertainty->dimension() != n)
    throw std::invalid_argument("model uncertainty dimension does not match the node count");

  out << "schema_version " << model.schema_version << "\n";
  if (model.kernel_kind == KernelKind::Gaussian) {
    out << "kernel gaussian " << format_double(model.gaussian_width) << "\n";
  } else {
    out << "kernel tps\n";
    for (const Point2& a : model.anchors)
      out << "anchor " << format_double(a.x) << " " << format_double(a.y) << "\n";
  }
  out << "nodes " << n << "\n";
  for (const Point2& p : model.nodes)
    out << "node " << format_double(p.x) << " " << format_double(p.y) << "\n";
  for (Eigen::Index i = 0; i < n; ++i) out << "coeff " << format_double(model.coeffs(i)) << "\n";
  for (Eigen::Index i = 0; i < n; ++i) out << "fitted " << format_double(model.fitted(i)) << "\n";
  out << "norm_sq " << format_double(model.norm_sq) << "\n";

  if (!model.uncertainty) {
    out << "uncertainty none\n";
  } else {
    const UncertaintySpec& spec = *model.uncertainty;
    out << "uncertainty " << to_string(spec.kind()) << "\n";
    for (Eigen::Index i = 0; i < n; ++i)
      out << "center " << format_double(spec.center()(i)) << "\n";
    switch (spec.kind()) {
      case UncertaintyKind::Point:
        break;
      case UncertaintyKind::Box:
        for (Eigen::Index i = 0; i < n; ++i)
          out << "delta " << format_double(spec.deltas()(i)) << "\n";
        break;
      case UncertaintyKind::L2Ball:
      case UncertaintyKind::L1Ball:
        out << "radius " << format_double(spec.radius()) << "\n";
        break;
      case UncertaintyKind::EigenBox:
        for (Eigen::Index i = 0; i < n; ++i)
          out << "lower " << format_double(spec.lower()(i)) << "\n";
        for (Eigen::Index i = 0; i < n; ++i)
          out << "upper " << format_double(spec.upper()(i)) << "\n";
        break;
    }
  }

  const SolveReport& rep = model.report;
  out << "gap " << format_double(rep.gap) << "\n";
  if (rep.lambda) out << "lambda " << format_double(*rep.lambda) << "\n";
  if (rep.tau) out << "tau " << format_double(*rep.tau) << "\n";
  if (rep.implied_delta) out << "implied_delta " << format_double(*rep.implied_delta) << "\n";
  out << "iterations " << rep.iterations << "\n";
  out << "converged " << (rep.converged ? 1 : 0) << "\n";
  out << "trivial " << (rep.trivial ? 1 : 0) << "\n";
  out << "residual " << format_double(rep.residual) << "\n";
  if (rep.worst_case_error)
    out << "worst_case_error " << format_double(*rep.worst_case_error) << "\n";
  if (rep.small_delta_condition)
    out << "small_delta_condition " << (*rep.small_delta_condition ? 1 : 0) << "\n";
  out << "end\n";
  if (!out) throw Error("writing the model stream failed");
}

void save_model(const ModelFile& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  save_model(model, out);
  out.flush();
  if (!out) throw Error("writing model file '" + path + "' failed");
}

namespace {

// Sequential reader for the line-oriented model format: each line is a key
// followed by space-separated values. Blank lines are skipped.
class ModelParser {
 public:
  explicit ModelParser(std::istream& in) : in_(in) {}

  std::string_view peek() {
    fill();
    return key_;
  }

  std::vector<std::string> take_any(std::string_view key) {
    fill();
    if (key_.empty())
      throw ParseError("model line " + std::to_string(line_no_ + 1) +
                       ": unexpected end of file, expected '" + std::string(key) + "'");
    if (key_ != key)
      throw ParseError("model line " + std::to_string(line_no_) + ": expected '" +
                       std::string(key) + "', found '" + key_ + "'");
    pending_ = false;
    return std::move(values_);
  }

  std::vector<std::string> take(std::string_view key, size_t count) {
    auto values = take_any(key);
    if (values.size() != count)
      fail("'" + std::string(key) + "' expects " + std::to_string(count) + " value(s), found " +
           std::to_string(values.size()));
    return values;
  }

  double take_double(std::string_view key) { return parse_double(take(key, 1)[0]); }

  double parse_double(const std::string& tok) const {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
      fail("cannot parse \"" + tok + "\" as a number");
    return v;
  }

  long parse_long(const std::string& tok) const {
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
      fail("cannot parse \"" + tok + "\" as an integer");
    return v;
  }

  bool parse_bool(const std::string& tok) const {
    if (tok == "0") return false;
    if (tok == "1") return true;
    fail("expected 0 or 1, found \"" + tok + "\"");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("model line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  void fill() {
    if (pending_) return;
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      std::string_view view = line;
      if (line_no_ == 1) strip_bom(view);
      view = trim(view);
      if (view.empty()) continue;
      key_.clear();
      values_.clear();
      size_t pos = 0;
      while (pos < view.size()) {
        while (pos < view.size() && view[pos] == ' ') ++pos;
        const size_t start = pos;
        while (pos < view.size() && view[pos] != ' ') ++pos;
        if (pos == start) break;
        if (key_.empty())
          key_.assign(view.substr(start, pos - start));
        else
          values_.emplace_back(view.substr(start, pos - start));
      }
      pending_ = true;
      return;
    }
    key_.clear();
    values_.clear();
  }

  std::istream& in_;
  long line_no_ = 0;
  bool pending_ = false;
  std::string key_;
  std::vector<std::string> values_;
};

}  // namespace

ModelFile load_model(std::istream& in) {
  ModelParser p(in);
  ModelFile m;

  m.schema_version = static_cast<int>(p.parse_long(p.take("schema_version", 1)[0]));
  if (m.schema_version != 1)
    p.fail("unsupported schema_version " + std::to_string(m.schema_version));

  const auto kernel_values = p.take_any("kernel");
  if (kernel_values.size() == 1 && kernel_values[0] == "tps") {
    m.kernel_kind = KernelKind::ThinPlateSpline;
    for (auto& anchor : m.anchors) {
      const auto v = p.take("anchor", 2);
      anchor = Point2{p.parse_double(v[0]), p.parse_double(v[1])};
    }
  } else if (kernel_values.size() == 2 && kernel_values[0] == "gaussian") {
    m.kernel_kind = KernelKind::Gaussian;
    m.gaussian_width = p.parse_double(kernel_values[1]);
  } else {
    p.fail("unrecognized kernel description");
  }

  const long n = p.parse_long(p.take("nodes", 1)[0]);
  if (n < 1) p.fail("node count must be at least 1");
  m.nodes.reserve(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    const auto v = p.take("node", 2);
    m.nodes.push_back(Point2{p.parse_double(v[0]), p.parse_double(v[1])});
  }
  m.coeffs.resize(n);
  for (long i = 0; i < n; ++i) m.coeffs(i) = p.take_double("coeff");
  m.fitted.resize(n);
  for (long i = 0; i < n; ++i) m.fitted(i) = p.take_double("fitted");
  m.norm_sq = p.take_double("norm_sq");

  const std::string kind = p.take("uncertainty", 1)[0];
  if (kind != "none") {
    Eigen::VectorXd center(n);
    for (long i = 0; i < n; ++i) center(i) = p.take_double("center");
    if (kind == "point") {
      m.uncertainty = UncertaintySpec::point(std::move(center));
    } else if (kind == "box") {
      Eigen::VectorXd deltas(n);
      for (long i = 0; i < n; ++i) deltas(i) = p.take_double("delta");
      m.uncertainty = UncertaintySpec::box(std::move(center), std::move(deltas));
    } else if (kind == "l2") {
      m.uncertainty = UncertaintySpec::l2_ball(std::move(center), p.take_double("radius"));
    } else if (kind == "l1") {
      m.uncertainty = UncertaintySpec::l1_ball(std::move(center), p.take_double("radius"));
    } else if (kind == "eigenbox") {
      Eigen::VectorXd lower(n), upper(n);
      for (long i = 0; i < n; ++i) lower(i) = p.take_double("lower");
      for (long i = 0; i < n; ++i) upper(i) = p.take_double("upper");
      m.uncertainty =
          UncertaintySpec::eigen_box(std::move(center), std::move(lower), std::move(upper));
    } else {
      p.fail("unrecognized uncertainty kind '" + kind + "'");
    }
  }

  m.report.gap = p.take_double("gap");
  if (p.peek() == "lambda") m.report.lambda = p.take_double("lambda");
  if (p.peek() == "tau") m.report.tau = p.take_double("tau");
  if (p.peek() == "implied_delta") m.report.implied_delta = p.take_double("implied_delta");
  m.report.iterations = p.parse_long(p.take("iterations", 1)[0]);
  m.report.converged = p.parse_bool(p.take("converged", 1)[0]);
  m.report.trivial = p.parse_bool(p.take("trivial", 1)[0]);
  m.report.residual = p.take_double("residual");
  if (p.peek() == "worst_case_error")
    m.report.worst_case_error = p.take_double("worst_case_error");
  if (p.peek() == "small_delta_condition")
    m.report.small_delta_condition = p.parse_bool(p.take("small_delta_condition", 1)[0]);
  p.take("end", 0);
  return m;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  return load_model(in);
}

Reconstruction to_reconstruction(const ModelFile& model) {
  if (static_cast<Eigen::Index>(model.nodes.size()) != model.coeffs.size() ||
      model.coeffs.size() != model.fitted.size())
    throw std::invalid_argument("model nodes, coeffs, and fitted must have matching sizes");
  return Reconstruction{model.kernel(), model.nodes, model.coeffs, model.fitted, model.norm_sq};
}

}  // namespace rkreco
