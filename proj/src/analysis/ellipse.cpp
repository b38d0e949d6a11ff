#include <fmt/format.h>

#include <cmath>
#include <numbers>

#include "tutorbench/analysis.hpp"
#include "tutorbench/error.hpp"

namespace tutorbench {

GroupEllipse group_ellipse(const RowMatrix& points, std::string label, double n_sigma) {
  if (points.cols() != 2) throw Error("group_ellipse expects n x 2 points");
  if (points.rows() < 3) throw Error(fmt::format("group '{}' needs at least 3 points", label));

  GroupEllipse e;
  e.label = std::move(label);
  e.n_sigma = n_sigma;
  e.n = static_cast<std::size_t>(points.rows());
  const Eigen::RowVector2d mean = points.colwise().mean();
  e.center = {mean(0), mean(1)};

  const Eigen::MatrixX2d c = points.rowwise() - mean;
  const double dof = static_cast<double>(points.rows() - 1);
  const double sxx = c.col(0).squaredNorm() / dof;
  const double syy = c.col(1).squaredNorm() / dof;
  const double sxy = c.col(0).dot(c.col(1)) / dof;

  const double half_trace = (sxx + syy) / 2.0;
  const double spread = std::hypot((sxx - syy) / 2.0, sxy);
  const double major = half_trace + spread;
  double minor = half_trace - spread;

  double rotation = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  if (rotation <= -std::numbers::pi / 2) rotation += std::numbers::pi;
  e.rotation = rotation;

  const double floor = 1e-12 * std::max(major, 1.0);
  if (minor <= floor) {
    e.degenerate = true;
    e.warning = fmt::format("group '{}' has a degenerate covariance; minor axis floored", e.label);
    minor = floor;
  }
  e.axes = {n_sigma * std::sqrt(std::max(major, floor)), n_sigma * std::sqrt(minor)};
  return e;
}

}  // namespace tutorbench
