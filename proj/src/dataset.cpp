// SPDX-License-Identifier: Apache-2.0
#include "alr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "alr/util.hpp"

namespace alr {

Dataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.dim < 1 || spec.per_class < 1)
    throw std::invalid_argument("gen_synthetic: classes, dim, per_class must be >= 1");
  if (!(spec.separation >= 0.0)) throw std::invalid_argument("gen_synthetic: separation must be >= 0");

  std::mt19937_64 g(spec.seed);
  const std::size_t dim = static_cast<std::size_t>(spec.dim);

  std::vector<std::vector<double>> means;
  for (int c = 0; c < spec.classes; ++c) {
    std::vector<double> m(dim);
    double norm = 0.0;
    for (double& x : m) {
      x = gaussian(g);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) norm = 1.0;
    for (double& x : m) x = spec.separation * x / norm;
    means.push_back(std::move(m));
  }

  const int train_per_class = std::max(1, (4 * spec.per_class) / 5);
  const int test_per_class = spec.per_class - train_per_class;

  Dataset ds;
  ds.feature_dim = spec.dim;
  ds.num_classes = spec.classes;
  ds.train_x = Matrix(static_cast<std::size_t>(spec.classes) * train_per_class, dim);
  ds.test_x = Matrix(static_cast<std::size_t>(spec.classes) * std::max(0, test_per_class), dim);

  std::size_t tr = 0, te = 0;
  for (int c = 0; c < spec.classes; ++c) {
    for (int i = 0; i < spec.per_class; ++i) {
      std::vector<double> x(dim);
      for (std::size_t d = 0; d < dim; ++d) x[d] = means[c][d] + gaussian(g);
      if (i < train_per_class) {
        for (std::size_t d = 0; d < dim; ++d) ds.train_x(tr, d) = x[d];
        ds.train_y.push_back(c);
        ++tr;
      } else {
        for (std::size_t d = 0; d < dim; ++d) ds.test_x(te, d) = x[d];
        ds.test_y.push_back(c);
        ++te;
      }
    }
  }
  return ds;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\r')) ++pos;
    if (pos != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw parse_error("line " + std::to_string(line_no) + ": cell " + std::to_string(col) +
                      " is not numeric: '" + cell + "'");
  }
}

}  // namespace

Dataset load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);

  std::string line;
  if (!std::getline(is, line)) throw parse_error("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line);
  if (header.size() < 2 || header.back() != "label")
    throw parse_error("header must end with column 'label'");
  const std::size_t dim = header.size() - 1;
  for (std::size_t d = 0; d < dim; ++d) {
    if (header[d] != "f" + std::to_string(d))
      throw parse_error("header column " + std::to_string(d) + " must be 'f" + std::to_string(d) +
                        "', got '" + header[d] + "'");
  }

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != dim + 1)
      throw parse_error("line " + std::to_string(line_no) + ": expected " + std::to_string(dim + 1) +
                        " cells, got " + std::to_string(cells.size()));
    std::vector<double> x(dim);
    for (std::size_t d = 0; d < dim; ++d) x[d] = parse_cell(cells[d], line_no, d);
    const double raw = parse_cell(cells[dim], line_no, dim);
    if (raw < 0.0 || raw != std::floor(raw))
      throw parse_error("line " + std::to_string(line_no) + ": label must be a nonnegative integer");
    rows.push_back(std::move(x));
    labels.push_back(static_cast<int>(raw));
  }
  if (rows.empty()) throw parse_error("no data rows in " + path);

  const int max_label = *std::max_element(labels.begin(), labels.end());
  std::vector<int> counts(static_cast<std::size_t>(max_label) + 1, 0);
  for (int y : labels) ++counts[static_cast<std::size_t>(y)];
  for (int c = 0; c <= max_label; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0)
      throw parse_error("labels are not dense: class " + std::to_string(c) +
                        " is missing; relabel classes to 0.." + std::to_string(max_label));
  }

  // Stratified 80/20 split in file order.
  Dataset ds;
  ds.feature_dim = static_cast<int>(dim);
  ds.num_classes = max_label + 1;
  std::vector<int> seen(counts.size(), 0);
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    const int train_n = std::max(1, (4 * counts[c]) / 5);
    (seen[c]++ < train_n ? train_idx : test_idx).push_back(i);
  }
  ds.train_x = Matrix(train_idx.size(), dim);
  ds.test_x = Matrix(test_idx.size(), dim);
  for (std::size_t r = 0; r < train_idx.size(); ++r) {
    for (std::size_t d = 0; d < dim; ++d) ds.train_x(r, d) = rows[train_idx[r]][d];
    ds.train_y.push_back(labels[train_idx[r]]);
  }
  for (std::size_t r = 0; r < test_idx.size(); ++r) {
    for (std::size_t d = 0; d < dim; ++d) ds.test_x(r, d) = rows[test_idx[r]][d];
    ds.test_y.push_back(labels[test_idx[r]]);
  }
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  for (int d = 0; d < ds.feature_dim; ++d) os << "f" << d << ",";
  os << "label\n";
  char buf[64];
  auto write_rows = [&](const Matrix& x, const std::vector<int>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      for (std::size_t d = 0; d < x.cols(); ++d) {
        std::snprintf(buf, sizeof buf, "%.17g", x(i, d));
        os << buf << ",";
      }
      os << y[i] << "\n";
    }
  };
  write_rows(ds.train_x, ds.train_y);
  write_rows(ds.test_x, ds.test_y);
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace alr
