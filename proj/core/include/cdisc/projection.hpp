#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdisc/corpus.hpp"

namespace cdisc {

// Projection of n samples (rows) onto the top two principal axes of their
// centered covariance. Each axis is signed so that its largest-magnitude
// loading is positive. Returns n x 2.
Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& samples);

struct GridCell {
    int row = 0;
    int col = 0;
    bool operator==(const GridCell&) const = default;
};

// Scales the points onto a rows x cols grid and places them one at a time,
// in the given order, on the nearest free cell (ties: lowest row, then
// column). Throws DataError when there are more points than cells.
std::vector<GridCell> snap_to_grid(const Eigen::MatrixXd& points, int rows, int cols);

struct Projection2D {
    int concept_id = 0;
    std::vector<ItemId> ids;  // ascending
    Eigen::MatrixXd points;   // rows parallel to ids: (u, v)
    int grid_rows = 0;        // 0 when not snapped
    int grid_cols = 0;
    std::vector<GridCell> cells;  // parallel to ids when snapped
};

// PCA projection of per-item features. `features` is indexed by item id;
// only `ids` are used, sorted first so the result does not depend on their
// order. A grid of 0 x 0 skips snapping.
Projection2D project_items(int concept_id, std::vector<ItemId> ids, const Eigen::MatrixXd& features, int grid_rows = 0,
                           int grid_cols = 0);

// Spearman rank correlation with average ranks for ties; 0 when either side
// is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cdisc
