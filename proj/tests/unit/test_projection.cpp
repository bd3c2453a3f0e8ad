#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "cdisc/error.hpp"
#include "cdisc/projection.hpp"
#include "cdisc/random.hpp"

using namespace cdisc;

TEST(Projection, TwoDimensionalDataIsRotated) {
    Rng rng(3);
    Eigen::MatrixXd x(30, 2);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        x(i, 0) = rng.normal(0.0, 3.0);
        x(i, 1) = rng.normal(0.0, 1.0);
    }
    x.rowwise() -= x.colwise().mean();
    const Eigen::MatrixXd p = pca_2d(x);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.rows(); ++j)
            EXPECT_NEAR((p.row(i) - p.row(j)).norm(), (x.row(i) - x.row(j)).norm(), 1e-6);
    // First axis carries the larger variance.
    EXPECT_GE(p.col(0).squaredNorm(), p.col(1).squaredNorm());
}

TEST(Projection, IdenticalSamplesAtOrigin) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(5, 7, 2.5);
    const Eigen::MatrixXd p = pca_2d(x);
    EXPECT_LT(p.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Projection, SignConvention) {
    Eigen::MatrixXd x(4, 3);
    x << -2, 0, 0, -1, 0, 0, 1, 0.1, 0, 2, -0.1, 0;
    const Eigen::MatrixXd p = pca_2d(x);
    // Axis 1 is mostly the first coordinate with a positive loading, so the
    // projection increases with it.
    EXPECT_LT(p(0, 0), p(3, 0));
}

TEST(Projection, OrderInvariant) {
    Rng rng(4);
    Eigen::MatrixXd f(20, 6);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.uniform(0.0, 1.0);
    std::vector<ItemId> ids{2, 5, 7, 11, 13, 17, 19};
    std::vector<ItemId> shuffled{19, 2, 13, 7, 5, 17, 11};
    const auto a = project_items(1, ids, f, 4, 4);
    const auto b = project_items(1, shuffled, f, 4, 4);
    EXPECT_EQ(a.ids, b.ids);
    EXPECT_EQ(a.points, b.points);
    EXPECT_EQ(a.cells, b.cells);
}

TEST(Projection, GridCellsAreUnique) {
    Rng rng(5);
    Eigen::MatrixXd pts(40, 2);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.normal(0.0, 1.0);
    const auto cells = snap_to_grid(pts, 7, 7);
    std::set<std::pair<int, int>> used;
    for (const auto& c : cells) {
        EXPECT_TRUE(c.row >= 0 && c.row < 7 && c.col >= 0 && c.col < 7);
        EXPECT_TRUE(used.insert({c.row, c.col}).second);
    }
    EXPECT_THROW(snap_to_grid(pts, 6, 6), DataError);
}

TEST(Projection, SnapCollisionTakesNearestFree) {
    Eigen::MatrixXd pts(3, 2);
    pts << 0, 0, 0, 0, 1, 1;
    const auto cells = snap_to_grid(pts, 2, 2);
    // Two points compete for cell (0, 0); the loser's two free neighbours
    // are equally near and the lower row wins.
    EXPECT_EQ(cells[0], (GridCell{0, 0}));
    EXPECT_EQ(cells[1], (GridCell{0, 1}));
    EXPECT_EQ(cells[2], (GridCell{1, 1}));
}

TEST(Spearman, ByHand) {
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-12);
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-12);
    // Ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4): Pearson of the ranks.
    const double rx[] = {1, 2.5, 2.5, 4}, ry[] = {1, 2, 3, 4};
    double mx = 2.5, my = 2.5, sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < 4; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    EXPECT_NEAR(spearman({1, 5, 5, 9}, {1, 2, 3, 4}), sxy / std::sqrt(sxx * syy), 1e-12);
    EXPECT_DOUBLE_EQ(spearman({1, 1, 1}, {1, 2, 3}), 0.0);
}
