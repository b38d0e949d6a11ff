#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "tutorbench/stats.hpp"

namespace tutorbench {

struct PCAModel {
  Eigen::RowVectorXd mean;
  RowMatrix components;  // k x d, orthonormal rows
  std::vector<double> explained_variance;
  std::vector<double> explained_variance_ratio;  // non-increasing
  double total_variance = 0.0;

  int k() const { return static_cast<int>(components.rows()); }
};

/// Thin SVD of the centered data. Each component is signed so that its
/// largest-magnitude coordinate (first one on ties) is positive. Directions
/// with zero variance get ratio 0; when the data has no variance at all every
/// ratio is 0. Throws Error unless n >= 2 and 1 <= k <= min(n, d).
PCAModel fit_pca(const RowMatrix& x, int k);

/// (x - mean) * components^T. Throws Error on a column-count mismatch.
RowMatrix project(const PCAModel& model, const RowMatrix& x);

struct GroupEllipse {
  std::string label;
  std::array<double, 2> center{};
  std::array<double, 2> axes{};  // semi-axes, major first
  double rotation = 0.0;         // major-axis angle in radians, (-pi/2, pi/2]
  double n_sigma = 2.0;
  std::size_t n = 0;
  bool degenerate = false;
  std::string warning;
};

/// Covariance ellipse of 2-D points: semi-axes are n_sigma * sqrt(eigenvalue)
/// of the sample covariance. A (near-)singular covariance is floored and
/// flagged. Throws Error for fewer than 3 points or a non-2-column input.
GroupEllipse group_ellipse(const RowMatrix& points, std::string label, double n_sigma = 2.0);

struct PlotPoint {
  std::string scenario_id;
  std::string variant_key;
  std::string model;
  double pc1 = 0.0;
  double pc2 = 0.0;
};

struct PlotBundle {
  std::vector<PlotPoint> points;
  std::vector<GroupEllipse> ellipses;
  std::vector<double> explained_variance_ratio;
  double total_variance = 0.0;
};

inline constexpr std::string_view kPcaPointsFile = "pca_points.csv";
inline constexpr std::string_view kPcaPlotFile = "pca_plot.json";

/// Writes pca_points.csv and pca_plot.json into `dir`. Output is a pure
/// function of the bundle. Throws Error on an empty bundle or write failure.
void export_plot_data(const std::filesystem::path& dir, const PlotBundle& bundle);

}  // namespace tutorbench
