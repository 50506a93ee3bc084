#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "daycare/evaluation.hpp"

namespace daycare {

inline std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct PlotSeries {
  std::string name;
  const CostReport* report = nullptr;
};

/// Mean per desert size with standard-error bars, one line per series.
inline std::string render_svg(const std::vector<PlotSeries>& series, const std::string& title = {}) {
  static const char* kColors[] = {"#1b6ca8", "#d1495b", "#66a182", "#edae49", "#6c4f77", "#2e4057"};
  const double W = 640, H = 420, left = 64, right = 170, top = 40, bottom = 56;
  const double pw = W - left - right, ph = H - top - bottom;

  int xmin = 0, xmax = 1;
  double ymax = 0.0;
  bool first = true;
  for (const auto& s : series)
    for (const auto& row : s.report->rows) {
      if (first) xmin = xmax = row.size, first = false;
      xmin = std::min(xmin, row.size);
      xmax = std::max(xmax, row.size);
      const double se = row.n > 0 ? std::sqrt(row.variance / row.n) : 0.0;
      ymax = std::max(ymax, row.mean + se);
    }
  if (xmax == xmin) xmax = xmin + 1;
  // Round the y range up to a tidy value.
  const double raw = ymax > 0 ? ymax * 1.1 : 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double ytop = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      ytop = m * mag;
      break;
    }
  auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double y) { return top + ph - y / ytop * ph; };

  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    o << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  o << "<g stroke=\"#333\" fill=\"none\">\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
  o << "</g>\n";
  const int xstep = (xmax - xmin) > 12 ? 2 : 1;
  for (int x = xmin; x <= xmax; x += xstep)
    o << "<text x=\"" << X(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << x << "</text>\n";
  for (int k = 0; k <= 5; ++k) {
    const double y = ytop * k / 5.0;
    o << "<line x1=\"" << left << "\" y1=\"" << Y(y) << "\" x2=\"" << left + pw << "\" y2=\"" << Y(y)
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 8 << "\" y=\"" << Y(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 14 << "\" text-anchor=\"middle\">desert size</text>\n";
  o << "<text transform=\"translate(18," << top + ph / 2
    << ") rotate(-90)\" text-anchor=\"middle\">mean events per episode</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& rows = series[i].report->rows;
    const char* color = kColors[i % 6];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& row : rows) o << X(row.size) << "," << Y(row.mean) << " ";
    o << "\"/>\n";
    for (const auto& row : rows) {
      const double se = row.n > 0 ? std::sqrt(row.variance / row.n) : 0.0;
      o << "<line x1=\"" << X(row.size) << "\" y1=\"" << Y(std::max(0.0, row.mean - se)) << "\" x2=\"" << X(row.size)
        << "\" y2=\"" << Y(row.mean + se) << "\" stroke=\"" << color << "\"/>\n";
      o << "<circle cx=\"" << X(row.size) << "\" cy=\"" << Y(row.mean) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = top + 14 + 20.0 * static_cast<double>(i);
    o << "<line x1=\"" << left + pw + 16 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 46 << "\" y=\"" << ly + 4 << "\">" << xml_escape(series[i].name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace daycare
