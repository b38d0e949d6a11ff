#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "tutorbench/analysis.hpp"
#include "tutorbench/error.hpp"
#include "tutorbench/random.hpp"

using namespace tutorbench;
using tutorbench::testing::TempDir;

namespace {

RowMatrix random_matrix(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  RowMatrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = standard_normal(rng) * (1.0 + j);
  return x;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const auto n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

}  // namespace

TEST(Pca, RankOneDataPutsAllVarianceOnFirstComponent) {
  RowMatrix x(5, 3);
  for (int i = 0; i < 5; ++i) x.row(i) << i * 1.0, i * 2.0, i * -2.0;
  const auto m = fit_pca(x, 2);
  EXPECT_NEAR(m.explained_variance_ratio[0], 1.0, 1e-12);
  EXPECT_NEAR(m.explained_variance_ratio[1], 0.0, 1e-12);
  // largest-magnitude coordinate is positive; ties go to the first
  EXPECT_GT(m.components(0, 1), 0.0);
  EXPECT_NEAR(m.components(0, 1), 2.0 / 3.0, 1e-12);
}

TEST(Pca, VariancesMatchJacobiEigenvaluesOfCovariance) {
  const auto x = random_matrix(10, 6, 3);
  const auto m = fit_pca(x, 6);
  const Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = c.transpose() * c / 9.0;
  std::vector<std::vector<double>> a(6, std::vector<double>(6));
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a[i][j] = cov(i, j);
  const auto ev = jacobi_eigenvalues(a);
  double total = 0;
  for (double e : ev) total += e;
  ASSERT_EQ(m.explained_variance.size(), 6u);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(m.explained_variance[i], ev[i], 1e-9 * total);
    EXPECT_NEAR(m.explained_variance_ratio[i], ev[i] / total, 1e-9);
    if (i > 0) {
      EXPECT_LE(m.explained_variance_ratio[i], m.explained_variance_ratio[i - 1]);
    }
  }
  EXPECT_NEAR(m.total_variance, total, 1e-9 * total);
  const RowMatrix gram = m.components * m.components.transpose();
  EXPECT_TRUE(gram.isApprox(RowMatrix::Identity(6, 6), 1e-10));
}

TEST(Pca, ReconstructionErrorEqualsDiscardedVariance) {
  const auto x = random_matrix(30, 8, 11);
  const auto full = fit_pca(x, 8);
  for (int k = 1; k <= 8; ++k) {
    const auto m = fit_pca(x, k);
    const RowMatrix z = project(m, x);
    const RowMatrix back = (z * m.components).rowwise() + m.mean;
    const double err = (x - back).squaredNorm() / 29.0;
    double discarded = 0;
    for (int i = k; i < 8; ++i) discarded += full.explained_variance[i];
    EXPECT_NEAR(err, discarded, 1e-8) << "k=" << k;
  }
}

TEST(Pca, ProjectAndErrors) {
  const auto x = random_matrix(6, 4, 5);
  const auto m = fit_pca(x, 2);
  const auto z = project(m, x);
  EXPECT_EQ(z.rows(), 6);
  EXPECT_EQ(z.cols(), 2);
  EXPECT_NEAR(z.col(0).mean(), 0.0, 1e-12);
  EXPECT_THROW(project(m, RowMatrix::Zero(2, 3)), Error);
  EXPECT_THROW(fit_pca(x, 0), Error);
  EXPECT_THROW(fit_pca(x, 5), Error);
  EXPECT_THROW(fit_pca(RowMatrix::Zero(1, 3), 1), Error);
  const auto flat = fit_pca(RowMatrix::Ones(4, 3), 2);
  EXPECT_EQ(flat.explained_variance_ratio, (std::vector<double>{0.0, 0.0}));
}

TEST(Ellipse, KnownCovariance) {
  // Points on a rotated rectangle: covariance has eigenvalues 4a^2/3 and 4b^2/3 scaled.
  const double angle = 0.4;
  const double c = std::cos(angle), s = std::sin(angle);
  RowMatrix p(4, 2);
  const double pts[4][2] = {{3, 0}, {-3, 0}, {0, 1}, {0, -1}};
  for (int i = 0; i < 4; ++i) {
    p(i, 0) = 10 + c * pts[i][0] - s * pts[i][1];
    p(i, 1) = -5 + s * pts[i][0] + c * pts[i][1];
  }
  const auto e = group_ellipse(p, "g", 2.0);
  EXPECT_NEAR(e.center[0], 10, 1e-12);
  EXPECT_NEAR(e.center[1], -5, 1e-12);
  EXPECT_NEAR(e.axes[0], 2.0 * std::sqrt(18.0 / 3.0), 1e-12);
  EXPECT_NEAR(e.axes[1], 2.0 * std::sqrt(2.0 / 3.0), 1e-12);
  EXPECT_NEAR(e.rotation, angle, 1e-12);
  EXPECT_FALSE(e.degenerate);
  EXPECT_EQ(e.n, 4u);
}

TEST(Ellipse, DegenerateAndTooFew) {
  RowMatrix line(3, 2);
  line << 0, 0, 1, 1, 2, 2;
  const auto e = group_ellipse(line, "line");
  EXPECT_TRUE(e.degenerate);
  EXPECT_FALSE(e.warning.empty());
  EXPECT_NEAR(e.rotation, std::numbers::pi / 4, 1e-12);
  EXPECT_GT(e.axes[1], 0.0);
  EXPECT_THROW(group_ellipse(RowMatrix::Zero(2, 2), "few"), Error);
  EXPECT_THROW(group_ellipse(RowMatrix::Zero(3, 3), "wide"), Error);
}

TEST(Export, WritesPointsAndPlot) {
  TempDir dir;
  PlotBundle b;
  b.points = {{"s1", "full", "m,1", 0.5, -1.25}, {"s2", "no_kc", "m,1", 1, 2}};
  GroupEllipse e;
  e.label = "m,1";
  e.n = 2;
  b.ellipses = {e};
  b.explained_variance_ratio = {0.6, 0.3};
  b.total_variance = 2.0;
  export_plot_data(dir.path(), b);
  EXPECT_EQ(read_text(dir / "pca_points.csv"),
            "scenario_id,variant_key,model,pc1,pc2\ns1,full,\"m,1\",0.5,-1.25\ns2,no_kc,\"m,1\",1,2\n");
  const auto plot = nlohmann::json::parse(read_text(dir / "pca_plot.json"));
  EXPECT_EQ(plot["points_file"], "pca_points.csv");
  EXPECT_EQ(plot["ellipses"][0]["group"], "m,1");
  EXPECT_EQ(plot["explained_variance_ratio"][1], 0.3);
  const auto first = read_text(dir / "pca_plot.json");
  export_plot_data(dir.path(), b);
  EXPECT_EQ(read_text(dir / "pca_plot.json"), first);
  EXPECT_THROW(export_plot_data(dir.path(), PlotBundle{}), Error);
}
