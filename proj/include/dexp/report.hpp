#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dexp/latent.hpp"
#include "dexp/scene.hpp"
#include "dexp/trainer.hpp"

namespace dexp {

// Floats in CSV files carry 17 significant digits so values round-trip.
std::string format_g17(double v);

std::string csv_string(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);
void write_metric_log_csv(const std::filesystem::path& path,
                          const MetricLog& log);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Standalone SVG figures: fixed viewBox, deterministic element order.
std::string svg_curves(const std::vector<SvgSeries>& series,
                       const std::string& title);
std::string svg_cloud_strip(const std::vector<PointCloud>& clouds,
                            const std::vector<std::string>& labels,
                            const std::string& title);
std::string svg_cloud_grid(const std::vector<std::vector<PointCloud>>& grid,
                           const std::vector<std::string>& row_labels,
                           const std::vector<std::string>& col_labels,
                           const std::string& title);

// Dormancy spectrum: CSV (index, singular_value, displacement) plus an SVG
// of both curves, written into `dir`.
void dormancy_report(const std::filesystem::path& dir,
                     const LatentBasis& basis,
                     const std::vector<double>& scores);

}  // namespace dexp
