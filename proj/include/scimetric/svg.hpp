#pragma once

// Static SVG figures. Output is a complete standalone document.

#include <Eigen/Core>

#include <string>
#include <vector>

namespace scimetric::svg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Researcher-years on the (P, I) plane with the sector boundaries at 0 and tau.
std::string sector_scatter(const std::vector<Point>& points, double tau, const std::string& title);

// Cell colours scale linearly from the matrix minimum to its maximum; NaN cells are grey.
std::string heatmap(const Eigen::MatrixXd& values, const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::string& title);

struct Band {
  std::string label;
  std::vector<double> x, mean, lo, hi;
};

std::string trend_bands(const std::vector<Band>& bands, const std::string& x_label, const std::string& y_label,
                        const std::string& title);

struct Ridge {
  std::string label;
  std::vector<double> x, density;
};

// One density per row, each scaled to its own maximum.
std::string ridgeline(const std::vector<Ridge>& ridges, const std::string& x_label, const std::string& title);

}  // namespace scimetric::svg
