#include "dexp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dexp/error.hpp"

namespace dexp {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_string(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ",";
    out += header[i];
  }
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += row[i];
    }
    out += "\n";
  }
  return out;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  write_text_file(path, csv_string(header, rows));
}

void write_metric_log_csv(const std::filesystem::path& path,
                          const MetricLog& log) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(log.rows.size());
  for (const auto& row : log.rows) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (double v : row) cells.push_back(format_g17(v));
    rows.push_back(std::move(cells));
  }
  write_csv(path, log.columns, rows);
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
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

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};

// One shape panel: fixed world window [-3.5, 3.5]^2 mapped into a
// side x side box at (ox, oy).
void cloud_panel(std::string& svg, const PointCloud& cloud, double ox,
                 double oy, double side, const std::string& color) {
  svg += "<rect x=\"" + num(ox) + "\" y=\"" + num(oy) + "\" width=\"" +
         num(side) + "\" height=\"" + num(side) +
         "\" fill=\"white\" stroke=\"#cccccc\"/>\n";
  const double scale = side / 7.0;
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    const double px = ox + (cloud.x(k) + 3.5) * scale;
    const double py = oy + (3.5 - cloud.y(k)) * scale;
    svg += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) +
           "\" r=\"2\" fill=\"" + color + "\"/>\n";
  }
}

}  // namespace

std::string svg_curves(const std::vector<SvgSeries>& series,
                       const std::string& title) {
  const double width = 640, height = 400;
  const double ml = 60, mr = 160, mt = 40, mb = 40;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  auto py = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 640 400\">\n";
  svg += "<text x=\"20\" y=\"24\" font-size=\"14\">" + escape_xml(title) +
         "</text>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(height - mb) + "\" x2=\"" +
         num(width - mr) + "\" y2=\"" + num(height - mb) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" +
         num(ml) + "\" y2=\"" + num(height - mb) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + num(ml) + "\" y=\"" + num(height - mb + 16) +
         "\" font-size=\"10\">" + num(xmin) + "</text>\n";
  svg += "<text x=\"" + num(width - mr) + "\" y=\"" + num(height - mb + 16) +
         "\" font-size=\"10\">" + num(xmax) + "</text>\n";
  svg += "<text x=\"" + num(ml - 50) + "\" y=\"" + num(height - mb) +
         "\" font-size=\"10\">" + num(ymin) + "</text>\n";
  svg += "<text x=\"" + num(ml - 50) + "\" y=\"" + num(mt + 8) +
         "\" font-size=\"10\">" + num(ymax) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = kPalette[si % 6];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) points += " ";
      points += num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    svg += "<polyline fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    svg += "<text x=\"" + num(width - mr + 8) + "\" y=\"" +
           num(mt + 14 * static_cast<double>(si + 1)) +
           "\" font-size=\"11\" fill=\"" + color + "\">" +
           escape_xml(s.label) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string svg_cloud_strip(const std::vector<PointCloud>& clouds,
                            const std::vector<std::string>& labels,
                            const std::string& title) {
  const double side = 140, pad = 10, top = 40;
  const double width = pad + static_cast<double>(clouds.size()) * (side + pad);
  const double height = top + side + 30;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
                    num(width) + " " + num(height) + "\">\n";
  svg += "<text x=\"10\" y=\"24\" font-size=\"14\">" + escape_xml(title) +
         "</text>\n";
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const double ox = pad + static_cast<double>(i) * (side + pad);
    cloud_panel(svg, clouds[i], ox, top, side, kPalette[0]);
    if (i < labels.size()) {
      svg += "<text x=\"" + num(ox) + "\" y=\"" + num(top + side + 16) +
             "\" font-size=\"11\">" + escape_xml(labels[i]) + "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

std::string svg_cloud_grid(const std::vector<std::vector<PointCloud>>& grid,
                           const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels,
                           const std::string& title) {
  const double side = 120, pad = 8, top = 60, left = 90;
  std::size_t cols = 0;
  for (const auto& row : grid) cols = std::max(cols, row.size());
  const double width = left + static_cast<double>(cols) * (side + pad) + pad;
  const double height =
      top + static_cast<double>(grid.size()) * (side + pad) + pad;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " +
                    num(width) + " " + num(height) + "\">\n";
  svg += "<text x=\"10\" y=\"24\" font-size=\"14\">" + escape_xml(title) +
         "</text>\n";
  for (std::size_t c = 0; c < col_labels.size(); ++c) {
    svg += "<text x=\"" + num(left + static_cast<double>(c) * (side + pad)) +
           "\" y=\"" + num(top - 8) + "\" font-size=\"11\">" +
           escape_xml(col_labels[c]) + "</text>\n";
  }
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const double oy = top + static_cast<double>(r) * (side + pad);
    if (r < row_labels.size()) {
      svg += "<text x=\"8\" y=\"" + num(oy + side / 2) +
             "\" font-size=\"11\">" + escape_xml(row_labels[r]) + "</text>\n";
    }
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      cloud_panel(svg, grid[r][c],
                  left + static_cast<double>(c) * (side + pad), oy, side,
                  kPalette[0]);
    }
  }
  svg += "</svg>\n";
  return svg;
}

void dormancy_report(const std::filesystem::path& dir,
                     const LatentBasis& basis,
                     const std::vector<double>& scores) {
  if (scores.size() != basis.dim()) {
    throw std::invalid_argument("dormancy_report: scores length");
  }
  std::vector<std::vector<std::string>> rows;
  SvgSeries sv{"singular value", {}, {}};
  SvgSeries ds{"3-sigma displacement", {}, {}};
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    rows.push_back({std::to_string(i), format_g17(basis.s[i]),
                    format_g17(scores[i])});
    sv.x.push_back(static_cast<double>(i));
    sv.y.push_back(basis.s[i]);
    ds.x.push_back(static_cast<double>(i));
    ds.y.push_back(scores[i]);
  }
  write_csv(dir / "dormancy.csv", {"index", "singular_value", "displacement"},
            rows);
  write_text_file(dir / "dormancy.svg",
                  svg_curves({sv, ds}, "dormancy spectrum"));
}

}  // namespace dexp
