#include "scimetric/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace scimetric::svg {

namespace {

constexpr double kWidth = 640, kHeight = 480, kMargin = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

class Canvas {
 public:
  Canvas(Range x, Range y) : x_(x), y_(y) {
    s_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }
  double px(double x) const { return kMargin + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - 2 * kMargin); }

  void axes(const std::string& xl, const std::string& yl, const std::string& title) {
    s_ << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kWidth - 2 * kMargin << "\" height=\""
       << kHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = x_.lo + k * (x_.hi - x_.lo) / 4, yv = y_.lo + k * (y_.hi - y_.lo) / 4;
      text(px(xv), kHeight - kMargin + 16, num(xv), "middle");
      text(kMargin - 6, py(yv) + 4, num(yv), "end");
    }
    text(kWidth / 2, kHeight - 15, xl, "middle");
    s_ << "<text x=\"15\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 15 " << kHeight / 2
       << ")\" text-anchor=\"middle\">" << esc(yl) << "</text>\n";
    text(kWidth / 2, 30, title, "middle");
  }
  void text(double x, double y, const std::string& t, const char* anchor) {
    s_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\">" << esc(t)
       << "</text>\n";
  }
  void line(double x0, double y0, double x1, double y1, const char* stroke, const char* dash = nullptr) {
    s_ << "<line x1=\"" << num(px(x0)) << "\" y1=\"" << num(py(y0)) << "\" x2=\"" << num(px(x1)) << "\" y2=\""
       << num(py(y1)) << "\" stroke=\"" << stroke << "\"";
    if (dash) s_ << " stroke-dasharray=\"" << dash << "\"";
    s_ << "/>\n";
  }
  std::ostringstream& raw() { return s_; }
  std::string finish() {
    s_ << "</svg>\n";
    return s_.str();
  }

 private:
  Range x_, y_;
  std::ostringstream s_;
};

}  // namespace

std::string sector_scatter(const std::vector<Point>& points, double tau, const std::string& title) {
  Range xr, yr;
  for (const auto& p : points) {
    xr.add(p.x);
    yr.add(p.y);
  }
  for (double v : {0.0, tau}) {
    xr.add(v);
    yr.add(v);
  }
  xr.finish();
  yr.finish();
  Canvas c(xr, yr);
  c.axes("P", "I", title);
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
    const bool out = p.x > tau || p.y > tau;
    c.raw() << "<circle cx=\"" << num(c.px(p.x)) << "\" cy=\"" << num(c.py(p.y)) << "\" r=\"1.5\" fill=\""
            << (out ? "#d62728" : "#1f77b4") << "\" fill-opacity=\"0.5\"/>\n";
  }
  c.line(xr.lo, 0, xr.hi, 0, "grey");
  c.line(0, yr.lo, 0, yr.hi, "grey");
  c.line(xr.lo, tau, xr.hi, tau, "black", "4 3");
  c.line(tau, yr.lo, tau, yr.hi, "black", "4 3");
  return c.finish();
}

std::string heatmap(const Eigen::MatrixXd& values, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::string& title) {
  Range vr;
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j) vr.add(values(i, j));
  const bool flat = !(vr.hi > vr.lo);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"30\" text-anchor=\"middle\">" << esc(title) << "</text>\n";
  const double left = 90, top = 50;
  const double cw = values.cols() ? (kWidth - left - 20) / static_cast<double>(values.cols()) : 0;
  const double ch = values.rows() ? (kHeight - top - 40) / static_cast<double>(values.rows()) : 0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if (static_cast<std::size_t>(i) < row_labels.size())
      s << "<text x=\"" << left - 6 << "\" y=\"" << num(top + (i + 0.5) * ch + 4) << "\" text-anchor=\"end\">"
        << esc(row_labels[static_cast<std::size_t>(i)]) << "</text>\n";
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double v = values(i, j);
      std::string fill = "#cccccc";
      if (std::isfinite(v)) {
        const double t = flat ? 0.5 : (v - vr.lo) / (vr.hi - vr.lo);
        const int r = static_cast<int>(255 * t), b = static_cast<int>(255 * (1 - t));
        char buf[16];
        std::snprintf(buf, sizeof buf, "#%02x40%02x", r, b);
        fill = buf;
      }
      s << "<rect x=\"" << num(left + j * cw) << "\" y=\"" << num(top + i * ch) << "\" width=\"" << num(cw)
        << "\" height=\"" << num(ch) << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      if (std::isfinite(v))
        s << "<text x=\"" << num(left + (j + 0.5) * cw) << "\" y=\"" << num(top + (i + 0.5) * ch + 4)
          << "\" text-anchor=\"middle\" fill=\"white\">" << num(v) << "</text>\n";
    }
  }
  for (Eigen::Index j = 0; j < values.cols(); ++j)
    if (static_cast<std::size_t>(j) < col_labels.size())
      s << "<text x=\"" << num(left + (j + 0.5) * cw) << "\" y=\"" << num(kHeight - 20) << "\" text-anchor=\"middle\">"
        << esc(col_labels[static_cast<std::size_t>(j)]) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string trend_bands(const std::vector<Band>& bands, const std::string& x_label, const std::string& y_label,
                        const std::string& title) {
  Range xr, yr;
  for (const auto& b : bands) {
    for (double v : b.x) xr.add(v);
    for (double v : b.lo) yr.add(v);
    for (double v : b.hi) yr.add(v);
  }
  xr.finish();
  yr.finish();
  Canvas c(xr, yr);
  c.axes(x_label, y_label, title);
  for (std::size_t k = 0; k < bands.size(); ++k) {
    const auto& b = bands[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    if (b.x.empty()) continue;
    auto& s = c.raw();
    s << "<polygon fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i) s << num(c.px(b.x[i])) << ',' << num(c.py(b.hi[i])) << ' ';
    for (std::size_t i = b.x.size(); i-- > 0;) s << num(c.px(b.x[i])) << ',' << num(c.py(b.lo[i])) << ' ';
    s << "\"/>\n<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i) s << num(c.px(b.x[i])) << ',' << num(c.py(b.mean[i])) << ' ';
    s << "\"/>\n";
    c.text(kWidth - kMargin - 4, kMargin + 16 + 14 * static_cast<double>(k), b.label, "end");
  }
  return c.finish();
}

std::string ridgeline(const std::vector<Ridge>& ridges, const std::string& x_label, const std::string& title) {
  Range xr;
  for (const auto& r : ridges)
    for (double v : r.x) xr.add(v);
  xr.finish();
  Range yr;
  yr.lo = 0;
  yr.hi = static_cast<double>(std::max<std::size_t>(ridges.size(), 1)) + 0.5;
  Canvas c(xr, yr);
  c.axes(x_label, "", title);
  for (std::size_t k = 0; k < ridges.size(); ++k) {
    const auto& r = ridges[k];
    if (r.x.empty()) continue;
    double peak = 0.0;
    for (double d : r.density) peak = std::max(peak, d);
    if (!(peak > 0)) peak = 1.0;
    const double base = static_cast<double>(k) + 0.2;
    auto& s = c.raw();
    s << "<polygon fill=\"" << kPalette[k % std::size(kPalette)] << "\" fill-opacity=\"0.5\" stroke=\"black\" points=\"";
    s << num(c.px(r.x.front())) << ',' << num(c.py(base)) << ' ';
    for (std::size_t i = 0; i < r.x.size(); ++i) s << num(c.px(r.x[i])) << ',' << num(c.py(base + 1.2 * r.density[i] / peak)) << ' ';
    s << num(c.px(r.x.back())) << ',' << num(c.py(base)) << "\"/>\n";
    c.text(c.px(r.x.front()) - 4, c.py(base) - 2, r.label, "end");
  }
  return c.finish();
}

}  // namespace scimetric::svg
