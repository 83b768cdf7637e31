#include "ces/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ces/format.hpp"
#include "ces/rng.hpp"

namespace ces {

CoverageGrid::CoverageGrid(Bounds bounds, std::size_t resolution) : bounds_(bounds), resolution_(resolution) {
  if (resolution_ == 0) throw std::invalid_argument("CoverageGrid: resolution must be positive");
  if (!(bounds_.width() > 0.0) || !(bounds_.height() > 0.0)) throw std::invalid_argument("CoverageGrid: empty bounds");
}

std::pair<std::size_t, std::size_t> CoverageGrid::cell_of(Vec2 p) const {
  const auto index = [this](double v, double lo, double extent) {
    const double c = std::floor((v - lo) / extent * static_cast<double>(resolution_));
    return static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(resolution_ - 1)));
  };
  return {index(p.x, bounds_.lo.x, bounds_.width()), index(p.y, bounds_.lo.y, bounds_.height())};
}

bool CoverageGrid::update(Vec2 position) {
  if (!std::isfinite(position.x) || !std::isfinite(position.y)) {
    throw std::invalid_argument("CoverageGrid::update: non-finite position");
  }
  return cells_.insert(cell_of(position)).second;
}

std::vector<double> best_reward_curve(std::span<const double> per_generation_max) {
  std::vector<double> out;
  out.reserve(per_generation_max.size());
  double best = -std::numeric_limits<double>::infinity();
  for (double v : per_generation_max) {
    best = std::max(best, v);
    out.push_back(best);
  }
  return out;
}

PolicyFingerprint make_fingerprint(const Trajectory& trajectory, double extrinsic, std::string algorithm) {
  if (trajectory.empty()) throw std::invalid_argument("make_fingerprint: empty trajectory");
  std::vector<std::span<const double>> states;
  states.reserve(trajectory.size() + 1);
  for (const Transition& t : trajectory.transitions) states.emplace_back(t.state);
  states.emplace_back(trajectory.final_state());

  PolicyFingerprint fp;
  fp.extrinsic = extrinsic;
  fp.algorithm = std::move(algorithm);
  fp.values.reserve(kFingerprintStates * kStateDim);
  const std::size_t n = states.size();
  const std::size_t pad = n < kFingerprintStates ? kFingerprintStates - n : 0;
  for (std::size_t i = 0; i < pad; ++i) fp.values.insert(fp.values.end(), states.front().begin(), states.front().end());
  for (std::size_t i = n - std::min(n, kFingerprintStates); i < n; ++i) {
    fp.values.insert(fp.values.end(), states[i].begin(), states[i].end());
  }
  return fp;
}

namespace {

using Matrix = std::vector<std::vector<double>>;

double dot_span(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double normalize_in_place(std::vector<double>& v) {
  const double n = std::sqrt(dot_span(v, v));
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
  return n;
}

// Top eigenpairs of a symmetric PSD matrix.
std::vector<std::pair<double, std::vector<double>>> top_eigenpairs(Matrix m, std::size_t count) {
  const std::size_t n = m.size();
  std::vector<std::pair<double, std::vector<double>>> out;
  Rng rng = Rng::stream(0x5ca1ab1e, 0);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(m[i][i]));
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    normalize_in_place(v);
    std::vector<double> w(n);
    double lambda = 0.0;
    for (int iter = 0; iter < 200000; ++iter) {
      for (std::size_t i = 0; i < n; ++i) w[i] = dot_span(m[i], v);
      for (const auto& prev : out) {
        const double p = dot_span(w, prev.second);
        for (std::size_t i = 0; i < n; ++i) w[i] -= p * prev.second[i];
      }
      lambda = normalize_in_place(w);
      if (lambda <= 1e-14 * std::max(scale, 1e-300)) {
        lambda = 0.0;
        std::fill(w.begin(), w.end(), 0.0);
        break;
      }
      double diff = 0.0;
      for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(w[i] - v[i]));
      v.swap(w);
      if (diff < 1e-15 && iter > 10) break;
    }
    if (lambda == 0.0) std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) m[i][j] -= lambda * v[i] * v[j];
    }
    out.emplace_back(lambda, std::move(v));
  }
  return out;
}

}  // namespace

PcaResult pca_project(std::span<const std::vector<double>> data, std::size_t dims) {
  if (data.size() < 3) throw std::invalid_argument("pca_project: need at least 3 points");
  if (dims == 0) throw std::invalid_argument("pca_project: dims must be positive");
  const std::size_t n = data.size();
  const std::size_t d = data.front().size();
  for (const auto& row : data) {
    if (row.size() != d) throw std::invalid_argument("pca_project: ragged data");
  }

  std::vector<double> mean(d, 0.0);
  for (const auto& row : data) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  }
  for (double& v : mean) v /= static_cast<double>(n);
  Matrix x(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x[i][j] = data[i][j] - mean[j];
  }

  PcaResult r;
  for (const auto& row : x) r.total_variance += dot_span(row, row);
  r.total_variance /= static_cast<double>(n);

  const std::size_t k = std::min(dims, std::min(n, d));
  r.components.assign(dims, std::vector<double>(d, 0.0));
  r.explained_variance.assign(dims, 0.0);
  if (n <= d) {
    Matrix gram(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) gram[i][j] = gram[j][i] = dot_span(x[i], x[j]);
    }
    const auto pairs = top_eigenpairs(std::move(gram), k);
    for (std::size_t c = 0; c < k; ++c) {
      if (pairs[c].first == 0.0) continue;
      std::vector<double>& comp = r.components[c];
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) comp[j] += pairs[c].second[i] * x[i][j];
      }
      normalize_in_place(comp);
      r.explained_variance[c] = pairs[c].first / static_cast<double>(n);
    }
  } else {
    Matrix cov(d, std::vector<double>(d, 0.0));
    for (const auto& row : x) {
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) cov[a][b] += row[a] * row[b];
      }
    }
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < a; ++b) cov[a][b] = cov[b][a];
    }
    const auto pairs = top_eigenpairs(std::move(cov), k);
    for (std::size_t c = 0; c < k; ++c) {
      r.components[c] = pairs[c].second;
      r.explained_variance[c] = pairs[c].first / static_cast<double>(n);
    }
  }

  for (auto& comp : r.components) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(comp[j]) > std::abs(comp[arg])) arg = j;
    }
    if (comp[arg] < 0.0) {
      for (double& v : comp) v = -v;
    }
  }
  r.projections.assign(n, std::vector<double>(dims, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < dims; ++c) r.projections[i][c] = dot_span(x[i], r.components[c]);
  }
  return r;
}

PcaResult pca_project(std::span<const PolicyFingerprint> fingerprints, std::size_t dims) {
  std::vector<std::vector<double>> data;
  data.reserve(fingerprints.size());
  for (const auto& f : fingerprints) data.push_back(f.values);
  return pca_project(data, dims);
}

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 50.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Extent {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity(), y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    x0 = std::min(x0, x), x1 = std::max(x1, x);
    y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  void finish() {
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 - x0 <= 0.0) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 <= 0.0) y0 -= 0.5, y1 += 0.5;
  }
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

std::string fmt(double v) {
  return format_double(std::round(v * 100.0) / 100.0);
}

void svg_open(std::ostream& out, const std::string& title, const Extent& e) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title << "</text>\n"
      << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin << "\" height=\""
      << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n"
      << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 15 << "\">" << fmt(e.x0) << "</text>\n"
      << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 15 << "\" text-anchor=\"end\">"
      << fmt(e.x1) << "</text>\n"
      << "<text x=\"" << kMargin - 5 << "\" y=\"" << kHeight - kMargin << "\" text-anchor=\"end\">" << fmt(e.y0)
      << "</text>\n"
      << "<text x=\"" << kMargin - 5 << "\" y=\"" << kMargin + 10 << "\" text-anchor=\"end\">" << fmt(e.y1)
      << "</text>\n";
}

void svg_legend(std::ostream& out, std::span<const SvgSeries> series) {
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = kMargin + 15.0 + 15.0 * static_cast<double>(s);
    out << "<text x=\"" << kWidth - kMargin - 5 << "\" y=\"" << y << "\" text-anchor=\"end\" fill=\""
        << kPalette[s % 6] << "\">" << series[s].label << "</text>\n";
  }
}

}  // namespace

void write_line_svg(std::ostream& out, const std::string& title, std::span<const SvgSeries> series) {
  Extent e;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) e.add(s.x[i], s.y[i]);
  }
  e.finish();
  svg_open(out, title, e);
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 6] << "\" points=\"";
    for (std::size_t i = 0; i < std::min(series[s].x.size(), series[s].y.size()); ++i) {
      out << fmt(e.px(series[s].x[i])) << ',' << fmt(e.py(series[s].y[i])) << ' ';
    }
    out << "\"/>\n";
  }
  svg_legend(out, series);
  out << "</svg>\n";
}

void write_scatter_svg(std::ostream& out, const std::string& title, std::span<const SvgSeries> series,
                       const std::vector<Segment>* walls) {
  Extent e;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) e.add(s.x[i], s.y[i]);
  }
  if (walls) {
    for (const Segment& w : *walls) e.add(w.a.x, w.a.y), e.add(w.b.x, w.b.y);
  }
  e.finish();
  svg_open(out, title, e);
  if (walls) {
    for (const Segment& w : *walls) {
      out << "<line x1=\"" << fmt(e.px(w.a.x)) << "\" y1=\"" << fmt(e.py(w.a.y)) << "\" x2=\"" << fmt(e.px(w.b.x))
          << "\" y2=\"" << fmt(e.py(w.b.y)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    for (std::size_t i = 0; i < std::min(series[s].x.size(), series[s].y.size()); ++i) {
      out << "<circle cx=\"" << fmt(e.px(series[s].x[i])) << "\" cy=\"" << fmt(e.py(series[s].y[i]))
          << "\" r=\"2\" fill=\"" << kPalette[s % 6] << "\" fill-opacity=\"0.6\"/>\n";
    }
  }
  svg_legend(out, series);
  out << "</svg>\n";
}

}  // namespace ces
