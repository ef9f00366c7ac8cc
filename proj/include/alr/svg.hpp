// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace alr {

struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;  // nonpositive values are dropped from log plots
  int width = 720;
  int height = 420;
};

// Standalone SVG line chart with axes, ticks, and a legend; one polyline per
// series. Throws on an empty series list or I/O failure.
void emit_svg_lines(const std::vector<SvgSeries>& series, const std::string& path,
                    const SvgOptions& options = {});

}  // namespace alr
