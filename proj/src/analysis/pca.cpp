#include <fmt/format.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "tutorbench/analysis.hpp"
#include "tutorbench/error.hpp"

namespace tutorbench {

PCAModel fit_pca(const RowMatrix& x, int k) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 2) throw Error("PCA needs at least two rows");
  if (k < 1 || k > std::min(n, d)) {
    throw Error(fmt::format("PCA k={} outside [1, min(n={}, d={})]", k, n, d));
  }
  if (!x.allFinite()) throw Error("PCA input has non-finite entries");

  PCAModel m;
  m.mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - m.mean;
  const double dof = static_cast<double>(n - 1);
  m.total_variance = centered.squaredNorm() / dof;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const auto& v = svd.matrixV();

  m.components.resize(k, d);
  for (int i = 0; i < k; ++i) {
    Eigen::RowVectorXd comp = v.col(i).transpose();
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < d; ++j) {
      if (std::abs(comp(j)) > std::abs(comp(arg))) arg = j;
    }
    if (comp(arg) < 0) comp = -comp;
    m.components.row(i) = comp;

    const double var = sv(i) * sv(i) / dof;
    m.explained_variance.push_back(var);
    m.explained_variance_ratio.push_back(m.total_variance > 0.0 ? var / m.total_variance : 0.0);
  }
  return m;
}

RowMatrix project(const PCAModel& model, const RowMatrix& x) {
  if (x.cols() != model.mean.size()) {
    throw Error(fmt::format("projection dimension mismatch: data has {} columns, model {}",
                            x.cols(), model.mean.size()));
  }
  return (x.rowwise() - model.mean) * model.components.transpose();
}

}  // namespace tutorbench
