#include "lgst/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "lgst/circuit.hpp"
#include "lgst/errors.hpp"

namespace lgst {

nlohmann::json RunManifest::to_json() const {
  return {{"subcommand", subcommand}, {"inputs", inputs}, {"seeds", seeds},
          {"config", config}, {"tool_version", tool_version}};
}

std::string RunManifest::hash() const { return hex64(fnv1a64(to_json().dump())); }

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v, double a, double b) const {
    double t = log ? (std::log10(std::max(v, 1e-300)) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
};

Axis make_axis(std::vector<double> values, bool log) {
  Axis ax;
  ax.log = log;
  if (log) {
    std::erase_if(values, [](double v) { return !(v > 0); });
    for (auto& v : values) v = std::log10(v);
  }
  std::erase_if(values, [](double v) { return !std::isfinite(v); });
  if (values.empty()) return ax;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  ax.lo = *mn;
  ax.hi = *mx;
  if (ax.hi - ax.lo < 1e-300) {
    ax.lo -= 0.5;
    ax.hi += 0.5;
  }
  const double pad = 0.05 * (ax.hi - ax.lo);
  ax.lo -= pad;
  ax.hi += pad;
  return ax;
}

std::string tick_text(double v, bool log) {
  std::ostringstream s;
  s.precision(3);
  if (log) s << "1e" << std::lround(v);
  else s << v;
  return s.str();
}

void frame(std::ostream& out, const std::string& hash, const std::string& title,
           const std::string& xl, const std::string& yl, const Axis& x, const Axis& y) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<!-- manifest: " << hash << " -->\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight
      << "\" height=\"" << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
      << escape_xml(xl) << "</text>\n";
  out << "<text x=\"15\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << kHeight / 2 << ")\">" << escape_xml(yl) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x.lo + (x.hi - x.lo) * i / 4, yv = y.lo + (y.hi - y.lo) * i / 4;
    const double px = kLeft + (kWidth - kLeft - kRight) * i / 4;
    const double py = kHeight - kBottom - (kHeight - kTop - kBottom) * i / 4;
    out << "<text x=\"" << px << "\" y=\"" << kHeight - kBottom + 15 << "\" text-anchor=\"middle\">"
        << tick_text(xv, x.log) << "</text>\n";
    out << "<text x=\"" << kLeft - 5 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
        << tick_text(yv, y.log) << "</text>\n";
  }
}

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

double px_of(const Axis& x, double v) { return x.map(v, kLeft, kWidth - kRight); }
double py_of(const Axis& y, double v) { return y.map(v, kHeight - kBottom, kTop); }

}  // namespace

void write_csv(const std::filesystem::path& path, const std::string& manifest_hash,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_output(path);
  out << "# manifest: " << manifest_hash << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

void write_json(const std::filesystem::path& path, const std::string& manifest_hash,
                nlohmann::json content) {
  content["manifest"] = manifest_hash;
  auto out = open_output(path);
  out << content.dump(2) << "\n";
}

nlohmann::json BoxStats::to_json() const {
  return {{"min", min}, {"q1", q1}, {"median", median}, {"q3", q3},
          {"max", max}, {"mean", mean}, {"count", count}};
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median_of(std::span<const double> v) {
  return quantile(std::vector<double>(v.begin(), v.end()), 0.5);
}

BoxStats box_stats(std::span<const double> v) {
  BoxStats b;
  b.count = v.size();
  if (v.empty()) return b;
  std::vector<double> s(v.begin(), v.end());
  std::sort(s.begin(), s.end());
  b.min = s.front();
  b.max = s.back();
  b.q1 = quantile(s, 0.25);
  b.median = quantile(s, 0.5);
  b.q3 = quantile(s, 0.75);
  b.mean = mean_of(s);
  return b;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("spearman: size mismatch");
  if (a.size() < 2) return 0.0;
  const auto ra = ranks(a), rb = ranks(b);
  const double ma = mean_of(ra), mb = mean_of(rb);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

void write_scatter_svg(const std::filesystem::path& path, const std::string& manifest_hash,
                       const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<ScatterSeries>& series,
                       bool diagonal, bool log_scale) {
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  Axis x = make_axis(xs, log_scale), y = make_axis(ys, log_scale);
  if (diagonal) {
    x.lo = y.lo = std::min(x.lo, y.lo);
    x.hi = y.hi = std::max(x.hi, y.hi);
  }
  auto out = open_output(path);
  frame(out, manifest_hash, title, x_label, y_label, x, y);
  if (diagonal) {
    out << "<line x1=\"" << px_of(x, log_scale ? std::pow(10, x.lo) : x.lo) << "\" y1=\""
        << py_of(y, log_scale ? std::pow(10, y.lo) : y.lo) << "\" x2=\""
        << px_of(x, log_scale ? std::pow(10, x.hi) : x.hi) << "\" y2=\""
        << py_of(y, log_scale ? std::pow(10, y.hi) : y.hi)
        << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 6];
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (log_scale && (s.x[i] <= 0 || s.y[i] <= 0)) continue;
      out << "<circle cx=\"" << px_of(x, s.x[i]) << "\" cy=\"" << py_of(y, s.y[i])
          << "\" r=\"2\" fill=\"" << color << "\" fill-opacity=\"0.6\"/>\n";
    }
    out << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 15 + 14 * static_cast<double>(k)
        << "\" fill=\"" << color << "\">" << escape_xml(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_histogram_svg(const std::filesystem::path& path, const std::string& manifest_hash,
                         const std::string& title, const std::string& x_label,
                         std::span<const double> values, std::size_t bins) {
  bins = std::max<std::size_t>(bins, 1);
  Axis x = make_axis(std::vector<double>(values.begin(), values.end()), false);
  std::vector<double> counts(bins, 0.0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - x.lo) / (x.hi - x.lo) * static_cast<double>(bins));
    counts[std::min(b, bins - 1)] += 1;
  }
  Axis y;
  y.lo = 0;
  y.hi = std::max(1.0, *std::max_element(counts.begin(), counts.end())) * 1.05;
  auto out = open_output(path);
  frame(out, manifest_hash, title, x_label, "count", x, y);
  const double w = (x.hi - x.lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const double x0 = px_of(x, x.lo + w * static_cast<double>(b));
    const double x1 = px_of(x, x.lo + w * static_cast<double>(b + 1));
    const double y0 = py_of(y, counts[b]);
    out << "<rect x=\"" << x0 << "\" y=\"" << y0 << "\" width=\"" << std::max(0.0, x1 - x0 - 1)
        << "\" height=\"" << py_of(y, 0) - y0 << "\" fill=\"" << kColors[0] << "\"/>\n";
  }
  out << "</svg>\n";
}

void write_box_svg(const std::filesystem::path& path, const std::string& manifest_hash,
                   const std::string& title, const std::vector<std::string>& labels,
                   const std::vector<BoxStats>& boxes, double reference, bool log_scale) {
  std::vector<double> ys;
  for (const auto& b : boxes) {
    ys.push_back(b.min);
    ys.push_back(b.max);
  }
  if (reference > 0) ys.push_back(reference);
  Axis y = make_axis(ys, log_scale);
  Axis x;
  x.lo = 0;
  x.hi = static_cast<double>(std::max<std::size_t>(boxes.size(), 1));
  auto out = open_output(path);
  frame(out, manifest_hash, title, "", "|estimate - truth|", x, y);
  const double slot = (kWidth - kLeft - kRight) / x.hi;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5), hw = slot * 0.3;
    auto py = [&](double v) { return py_of(y, log_scale ? std::max(v, 1e-300) : v); };
    out << "<line x1=\"" << cx << "\" y1=\"" << py(b.min) << "\" x2=\"" << cx << "\" y2=\"" << py(b.max)
        << "\" stroke=\"black\"/>\n";
    out << "<rect x=\"" << cx - hw << "\" y=\"" << py(b.q3) << "\" width=\"" << 2 * hw << "\" height=\""
        << std::max(0.0, py(b.q1) - py(b.q3)) << "\" fill=\"" << kColors[0] << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << cx - hw << "\" y1=\"" << py(b.median) << "\" x2=\"" << cx + hw << "\" y2=\""
        << py(b.median) << "\" stroke=\"" << kColors[1] << "\" stroke-width=\"2\"/>\n";
    if (i < labels.size()) {
      out << "<text x=\"" << cx << "\" y=\"" << kHeight - kBottom + 30 << "\" text-anchor=\"middle\">"
          << escape_xml(labels[i]) << "</text>\n";
    }
  }
  if (reference > 0) {
    out << "<line x1=\"" << kLeft << "\" y1=\"" << py_of(y, reference) << "\" x2=\"" << kWidth - kRight
        << "\" y2=\"" << py_of(y, reference) << "\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace lgst
