#include "trajcv/cli/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "trajcv/cli/config.hpp"
#include "trajcv/common.hpp"

namespace trajcv::cli {

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw Error("csv: row width does not match header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
    out += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::string num(double x) { return format_double(x); }

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
  if (!f) throw Error("failed writing " + path.string());
}

namespace {

constexpr double kW = 720, kH = 440, kLeft = 80, kRight = 20, kTop = 40, kBottom = 55;
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string f2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

struct Axis {
  bool log = false;
  double lo = 0, hi = 1;  // in transformed units
  double map(double v, double p0, double p1) const {
    const double u = log ? std::log10(v) : v;
    return p0 + (u - lo) / (hi - lo) * (p1 - p0);
  }
  bool valid(double v) const { return std::isfinite(v) && (!log || v > 0); }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (int e = static_cast<int>(std::ceil(lo - 1e-9)); e <= static_cast<int>(std::floor(hi + 1e-9)); ++e)
        t.push_back(std::pow(10.0, e));
      if (t.size() < 2) t = {std::pow(10.0, lo), std::pow(10.0, hi)};
      return t;
    }
    const double span = hi - lo;
    const double raw = span / 5;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
    return t;
  }
};

Axis make_axis(bool log, const std::vector<double>& vals) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : vals) {
    if (!a.valid(v)) continue;
    const double u = log ? std::log10(v) : v;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) {
    const double pad = log ? 0.5 : std::max(1.0, std::abs(lo) * 0.1);
    lo -= pad;
    hi += pad;
  } else if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

}  // namespace

std::string LinePlot::svg() const {
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
    ys.insert(ys.end(), s.lo.begin(), s.lo.end());
    ys.insert(ys.end(), s.hi.begin(), s.hi.end());
  }
  const Axis ax = make_axis(log_x, xs), ay = make_axis(log_y, ys);
  const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW
    << " " << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << f2(kW / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
    << "</text>\n";
  o << "<rect x=\"" << f2(x0) << "\" y=\"" << f2(y1) << "\" width=\"" << f2(x1 - x0) << "\" height=\"" << f2(y0 - y1)
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double t : ax.ticks()) {
    const double px = ax.map(t, x0, x1);
    if (px < x0 - 0.5 || px > x1 + 0.5) continue;
    o << "<line x1=\"" << f2(px) << "\" y1=\"" << f2(y0) << "\" x2=\"" << f2(px) << "\" y2=\"" << f2(y0 + 5)
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << f2(px) << "\" y=\"" << f2(y0 + 18) << "\" text-anchor=\"middle\">" << tick_label(t)
      << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t, y0, y1);
    if (py > y0 + 0.5 || py < y1 - 0.5) continue;
    o << "<line x1=\"" << f2(x0 - 5) << "\" y1=\"" << f2(py) << "\" x2=\"" << f2(x1) << "\" y2=\"" << f2(py)
      << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << f2(x0 - 8) << "\" y=\"" << f2(py + 4) << "\" text-anchor=\"end\">" << tick_label(t)
      << "</text>\n";
  }
  o << "<text x=\"" << f2((x0 + x1) / 2) << "\" y=\"" << f2(kH - 12) << "\" text-anchor=\"middle\">" << escape(xlabel)
    << "</text>\n";
  o << "<text x=\"18\" y=\"" << f2((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << f2((y0 + y1) / 2) << ")\">" << escape(ylabel) << "</text>\n";

  for (size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 8];
    if (!s.lo.empty() && s.lo.size() == s.x.size() && s.hi.size() == s.x.size()) {
      std::string pts;
      for (size_t i = 0; i < s.x.size(); ++i)
        if (ax.valid(s.x[i]) && ay.valid(s.hi[i]))
          pts += f2(ax.map(s.x[i], x0, x1)) + "," + f2(ay.map(s.hi[i], y0, y1)) + " ";
      for (size_t i = s.x.size(); i-- > 0;)
        if (ax.valid(s.x[i]) && ay.valid(s.lo[i]))
          pts += f2(ax.map(s.x[i], x0, x1)) + "," + f2(ay.map(s.lo[i], y0, y1)) + " ";
      if (!pts.empty())
        o << "<polygon points=\"" << pts << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    std::string pts;
    for (size_t i = 0; i < s.x.size(); ++i)
      if (ax.valid(s.x[i]) && ay.valid(s.y[i]))
        pts += f2(ax.map(s.x[i], x0, x1)) + "," + f2(ay.map(s.y[i], y0, y1)) + " ";
    if (!pts.empty())
      o << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const double ly = y1 + 16 + 18 * static_cast<double>(k);
    o << "<line x1=\"" << f2(x1 - 150) << "\" y1=\"" << f2(ly) << "\" x2=\"" << f2(x1 - 125) << "\" y2=\"" << f2(ly)
      << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    o << "<text x=\"" << f2(x1 - 118) << "\" y=\"" << f2(ly + 4) << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace trajcv::cli
