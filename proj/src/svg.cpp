#include "codim2/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace codim2::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v, bool log) {
  char buf[32];
  if (log)
    std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(v)));
  else
    std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string line_plot(const std::vector<Series>& series, const PlotOptions& o) {
  auto tx = [&](double v) { return o.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return o.log_y ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  std::vector<std::vector<std::pair<double, double>>> pts(series.size());
  for (std::size_t k = 0; k < series.size(); ++k)
    for (std::size_t i = 0; i < std::min(series[k].x.size(), series[k].y.size()); ++i) {
      const double x = series[k].x[i], y = series[k].y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if ((o.log_x && x <= 0.0) || (o.log_y && y <= 0.0)) continue;
      pts[k].emplace_back(tx(x), ty(y));
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  if (o.log_y) y0 = std::floor(y0), y1 = std::ceil(y1);
  const double L = 70, R = 160, T = 40, B = 50;
  const double W = o.width - L - R, H = o.height - T - B;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * W; };
  auto py = [&](double y) { return T + (1.0 - (y - y0) / (y1 - y0)) * H; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(L + W / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << escape(o.title)
     << "</text>\n";
  os << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\"" << num(W) << "\" height=\"" << num(H)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    double xv = x0 + (x1 - x0) * i / ticks, yv = y0 + (y1 - y0) * i / ticks;
    if (o.log_y) yv = std::round(yv);
    os << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(T + H) << "\" x2=\"" << num(px(xv)) << "\" y2=\""
       << num(T + H + 4) << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(T + H + 16) << "\" text-anchor=\"middle\">"
       << (o.log_x ? tick_label(std::pow(10.0, xv), false) : tick_label(xv, false)) << "</text>\n";
    os << "<line x1=\"" << num(L - 4) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(L) << "\" y2=\"" << num(py(yv))
       << "\" stroke=\"black\"/>";
    os << "<text x=\"" << num(L - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
       << tick_label(yv, o.log_y) << "</text>\n";
  }
  os << "<text x=\"" << num(L + W / 2) << "\" y=\"" << num(o.height - 10) << "\" text-anchor=\"middle\">"
     << escape(o.x_label) << "</text>\n";
  os << "<text x=\"14\" y=\"" << num(T + H / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << num(T + H / 2) << ")\">" << escape(o.y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
    if (!pts[k].empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : pts[k]) os << num(px(x)) << "," << num(py(y)) << " ";
      os << "\"/>\n";
      for (const auto& [x, y] : pts[k])
        os << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2.5\" fill=\"" << color << "\"/>";
      os << "\n";
    }
    const double ly = T + 12 + 16.0 * k;
    os << "<line x1=\"" << num(L + W + 10) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(L + W + 28) << "\" y2=\""
       << num(ly - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    os << "<text x=\"" << num(L + W + 32) << "\" y=\"" << num(ly) << "\">" << escape(series[k].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace codim2::svg
