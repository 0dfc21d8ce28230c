// Copyright 2026 The jlsampler Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// File formats: dataset and matrix CSV, trace and trajectory CSV, JSON
// reports and SVG line plots. Every file is written to a temporary sibling
// and renamed into place, so a failed run leaves no partial output.

#ifndef JLSAMPLER_IO_HPP
#define JLSAMPLER_IO_HPP

#include <Eigen/Dense>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "jlsampler/core.hpp"
#include "jlsampler/errors.hpp"
#include "jlsampler/mcsim.hpp"
#include "jlsampler/optimizer.hpp"

namespace jlsampler::io {

using json = nlohmann::json;

/// Shortest "%.17g" rendering; exact on read-back.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes `content` to path via a temporary file in the same directory.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for " + path);
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path);
  }
}

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string checksum(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += fmt(m(i, j));
    }
    out += '\n';
  }
  return out;
}

/// Parses rows of comma-separated numbers; '#' lines are skipped.
inline Matrix parse_matrix_csv(const std::string& text, const std::string& what) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ParameterError(what + ": bad number '" + cell + "' on line " +
                             std::to_string(lineno));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParameterError(what + ": ragged row on line " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParameterError(what + ": no data rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

/// Header "# n=<n> d=<d>" followed by one point per row.
inline std::string dataset_csv(const Dataset& data) {
  return "# n=" + std::to_string(data.n()) + " d=" + std::to_string(data.d()) + "\n" +
         matrix_csv(data.points());
}

inline Dataset read_dataset(const std::string& path) {
  const std::string text = read_file(path);
  Matrix m = parse_matrix_csv(text, path);
  if (text.rfind("# n=", 0) == 0) {
    long n = -1, d = -1;
    if (std::sscanf(text.c_str(), "# n=%ld d=%ld", &n, &d) == 2 &&
        (n != m.rows() || d != m.cols()))
      throw ParameterError(path + ": header says n=" + std::to_string(n) + " d=" +
                           std::to_string(d) + " but the file has " +
                           std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return Dataset(std::move(m));
}

inline Matrix read_matrix(const std::string& path) {
  return parse_matrix_csv(read_file(path), path);
}

inline std::string trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out = "iter,step_type,g,f,sigma2,grad_norm,lambda_min,decrease\n";
  for (const auto& r : trace) {
    out += std::to_string(r.iter) + ',' + to_string(r.step) + ',' + fmt(r.g) + ',' +
           fmt(r.f) + ',' + fmt(r.sigma2) + ',' + fmt(r.grad_norm) + ',' +
           (std::isnan(r.lambda_min) ? std::string() : fmt(r.lambda_min)) + ',' +
           fmt(r.decrease) + '\n';
  }
  return out;
}

inline std::string trajectory_csv(const std::vector<McLogRow>& rows) {
  std::string out = "iter,sampled_distortion,mean_matrix_distortion,sigma2,proxy_value\n";
  for (const auto& r : rows)
    out += std::to_string(r.iter) + ',' + fmt(r.sampled_distortion) + ',' +
           fmt(r.mean_matrix_distortion) + ',' + fmt(r.sigma2) + ',' +
           fmt(r.proxy_value) + '\n';
  return out;
}

// ---------------------------------------------------------------------------
// JSON. nlohmann prints doubles in shortest round-trip form; non-finite
// values become null.

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// SVG line plots.

struct Series {
  std::string name;
  std::string color;
  std::vector<double> x, y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

namespace detail {
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
inline std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}
inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}
}  // namespace detail

/// Panels side by side, one polyline per series, linear axes.
inline std::string render_svg(const std::vector<Panel>& panels) {
  constexpr double pw = 420, ph = 320, ml = 60, mr = 20, mt = 36, mb = 50;
  const double width = pw * static_cast<double>(panels.size());
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(width) +
                  "\" height=\"" + detail::num(ph) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    const double ox = pw * static_cast<double>(p);
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& se : panel.series)
      for (std::size_t i = 0; i < se.x.size(); ++i) {
        if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
        x0 = std::min(x0, se.x[i]);
        x1 = std::max(x1, se.x[i]);
        y0 = std::min(y0, se.y[i]);
        y1 = std::max(y1, se.y[i]);
      }
    if (!(x0 <= x1)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
    if (x1 == x0) x1 = x0 + 1;
    y0 = std::min(y0, 0.0);
    if (y1 <= y0) y1 = y0 + 1;
    const double iw = pw - ml - mr, ih = ph - mt - mb;
    auto px = [&](double v) { return ox + ml + (v - x0) / (x1 - x0) * iw; };
    auto py = [&](double v) { return mt + ih - (v - y0) / (y1 - y0) * ih; };
    s += "<text x=\"" + detail::num(ox + pw / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" +
         detail::escape(panel.title) + "</text>\n";
    s += "<rect x=\"" + detail::num(ox + ml) + "\" y=\"" + detail::num(mt) + "\" width=\"" +
         detail::num(iw) + "\" height=\"" + detail::num(ih) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
      s += "<text x=\"" + detail::num(px(xv)) + "\" y=\"" + detail::num(mt + ih + 14) +
           "\" text-anchor=\"middle\">" + detail::tick(xv) + "</text>\n";
      s += "<text x=\"" + detail::num(ox + ml - 4) + "\" y=\"" + detail::num(py(yv) + 4) +
           "\" text-anchor=\"end\">" + detail::tick(yv) + "</text>\n";
    }
    s += "<text x=\"" + detail::num(ox + ml + iw / 2) + "\" y=\"" + detail::num(ph - 10) +
         "\" text-anchor=\"middle\">" + detail::escape(panel.x_label) + "</text>\n";
    s += "<text x=\"" + detail::num(ox + 14) + "\" y=\"" + detail::num(mt + ih / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 " + detail::num(ox + 14) + " " +
         detail::num(mt + ih / 2) + ")\">" + detail::escape(panel.y_label) + "</text>\n";
    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const Series& se = panel.series[si];
      s += "<polyline fill=\"none\" stroke=\"" + se.color + "\" stroke-width=\"1.2\" points=\"";
      for (std::size_t i = 0; i < se.x.size(); ++i) {
        if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
        s += detail::num(px(se.x[i])) + "," + detail::num(py(se.y[i])) + " ";
      }
      s += "\"/>\n";
      const double ly = mt + 12 + 14 * static_cast<double>(si);
      s += "<line x1=\"" + detail::num(ox + pw - mr - 110) + "\" y1=\"" + detail::num(ly - 4) +
           "\" x2=\"" + detail::num(ox + pw - mr - 92) + "\" y2=\"" + detail::num(ly - 4) +
           "\" stroke=\"" + se.color + "\"/>\n";
      s += "<text x=\"" + detail::num(ox + pw - mr - 88) + "\" y=\"" + detail::num(ly) + "\">" +
           detail::escape(se.name) + "</text>\n";
    }
  }
  s += "</svg>\n";
  return s;
}

/// Two panels: distortions against iteration, variance against iteration.
inline std::string trajectory_svg(const std::vector<McLogRow>& rows, double baseline_min) {
  Series sampled{"sampled A", "#1f77b4", {}, {}};
  Series mean{"mean M", "#d62728", {}, {}};
  Series base{"best random", "#7f7f7f", {}, {}};
  Series var{"sigma^2", "#2ca02c", {}, {}};
  for (const auto& r : rows) {
    sampled.x.push_back(r.iter);
    sampled.y.push_back(r.sampled_distortion);
    mean.x.push_back(r.iter);
    mean.y.push_back(r.mean_matrix_distortion);
    var.x.push_back(r.iter);
    var.y.push_back(r.sigma2);
  }
  std::vector<Series> left = {sampled, mean};
  if (std::isfinite(baseline_min) && !rows.empty()) {
    base.x = {static_cast<double>(rows.front().iter), static_cast<double>(rows.back().iter)};
    base.y = {baseline_min, baseline_min};
    left.push_back(base);
  }
  return render_svg({{"max distortion", "iteration", "distortion", left},
                     {"sampler variance", "iteration", "sigma^2", {var}}});
}

}  // namespace jlsampler::io

#endif  // JLSAMPLER_IO_HPP
