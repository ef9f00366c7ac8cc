// SPDX-License-Identifier: Apache-2.0
#include "alr/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace alr {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void emit_svg_lines(const std::vector<SvgSeries>& series, const std::string& path,
                    const SvgOptions& options) {
  if (series.empty()) throw std::invalid_argument("emit_svg_lines: no series");
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("emit_svg_lines: x/y length mismatch in series '" + s.name + "'");
    if (s.x.empty()) throw std::invalid_argument("emit_svg_lines: empty series '" + s.name + "'");
  }

  auto map_y = [&](double y) { return options.log_y ? std::log10(y) : y; };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (options.log_y && !(s.y[i] > 0.0)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, map_y(s.y[i]));
      ymax = std::max(ymax, map_y(s.y[i]));
    }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin))
    throw std::invalid_argument("emit_svg_lines: no drawable points");
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const double ml = 70, mr = 20, mt = options.title.empty() ? 20 : 44, mb = 50;
  const double pw = options.width - ml - mr;
  const double ph = options.height - mt - mb;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + ph - (map_y(y) - ymin) / (ymax - ymin) * ph; };

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
     << options.height << "\" viewBox=\"0 0 " << options.width << " " << options.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty())
    os << "<text x=\"" << options.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"15\">"
       << escape_xml(options.title) << "</text>\n";

  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
     << "\" stroke=\"black\"/>\n";

  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / ticks;
    const double gx = px(fx);
    os << "<line x1=\"" << gx << "\" y1=\"" << mt + ph << "\" x2=\"" << gx << "\" y2=\"" << mt + ph + 5
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << gx << "\" y=\"" << mt + ph + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(fx)
       << "</text>\n";
    const double fy = ymin + (ymax - ymin) * i / ticks;
    const double gy = mt + ph - ph * i / ticks;
    const double label = options.log_y ? std::pow(10.0, fy) : fy;
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << gy << "\" x2=\"" << ml << "\" y2=\"" << gy
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(label)
       << "</text>\n";
  }
  if (!options.x_label.empty())
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << options.height - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape_xml(options.x_label) << "</text>\n";
  if (!options.y_label.empty())
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
       << mt + ph / 2 << ")\">" << escape_xml(options.y_label) << (options.log_y ? " (log)" : "")
       << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (options.log_y && !(s.y[i] > 0.0)) continue;
      os << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
    }
    os << "\"/>\n";
  }

  // legend
  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
    const double ly = mt + 14 + 16 * static_cast<double>(si);
    os << "<rect x=\"" << ml + pw - 130 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
       << color << "\"/>\n";
    os << "<text x=\"" << ml + pw - 115 << "\" y=\"" << ly
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape_xml(series[si].name)
       << "</text>\n";
  }

  os << "</svg>\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace alr
