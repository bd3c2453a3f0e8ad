#include "cdisc/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "cdisc/error.hpp"

namespace cdisc {

Eigen::MatrixXd pca_2d(const Eigen::MatrixXd& samples) {
    const Eigen::Index n = samples.rows();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, 2);
    if (n == 0 || samples.cols() == 0) return out;
    const Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw DataError("PCA eigendecomposition failed");

    // Eigenvalues come in ascending order.
    const Eigen::Index d = samples.cols();
    for (Eigen::Index axis = 0; axis < std::min<Eigen::Index>(2, d); ++axis) {
        Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - axis);
        Eigen::Index big = 0;
        for (Eigen::Index i = 1; i < v.size(); ++i)
            if (std::abs(v(i)) > std::abs(v(big))) big = i;
        if (v(big) < 0.0) v = -v;
        out.col(axis) = centered * v;
    }
    return out;
}

std::vector<GridCell> snap_to_grid(const Eigen::MatrixXd& points, int rows, int cols) {
    if (rows < 1 || cols < 1) throw DataError("grid dims must be positive");
    const Eigen::Index n = points.rows();
    if (n > static_cast<Eigen::Index>(rows) * cols) {
        throw DataError(std::to_string(n) + " points do not fit a " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " grid");
    }
    std::vector<GridCell> out;
    if (n == 0) return out;

    // u runs along columns, v along rows.
    auto scale = [](double x, double lo, double hi, int cells) {
        return hi > lo ? (x - lo) / (hi - lo) * (cells - 1) : (cells - 1) / 2.0;
    };
    const double ulo = points.col(0).minCoeff(), uhi = points.col(0).maxCoeff();
    const double vlo = points.col(1).minCoeff(), vhi = points.col(1).maxCoeff();
    std::vector<std::uint8_t> used(static_cast<std::size_t>(rows * cols), 0);
    for (Eigen::Index p = 0; p < n; ++p) {
        const double c = scale(points(p, 0), ulo, uhi, cols);
        const double r = scale(points(p, 1), vlo, vhi, rows);
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < rows; ++i) {
            for (int j = 0; j < cols; ++j) {
                if (used[static_cast<std::size_t>(i * cols + j)]) continue;
                const double dist = (i - r) * (i - r) + (j - c) * (j - c);
                if (dist < best_d) {
                    best_d = dist;
                    best = i * cols + j;
                }
            }
        }
        used[static_cast<std::size_t>(best)] = 1;
        out.push_back({best / cols, best % cols});
    }
    return out;
}

Projection2D project_items(int concept_id, std::vector<ItemId> ids, const Eigen::MatrixXd& features, int grid_rows,
                           int grid_cols) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    Eigen::MatrixXd samples(static_cast<Eigen::Index>(ids.size()), features.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= features.rows()) throw NotFoundError("unknown item " + std::to_string(ids[i]));
        samples.row(static_cast<Eigen::Index>(i)) = features.row(ids[i]);
    }
    Projection2D p;
    p.concept_id = concept_id;
    p.points = pca_2d(samples);
    p.ids = std::move(ids);
    if (grid_rows > 0 || grid_cols > 0) {
        p.grid_rows = grid_rows;
        p.grid_cols = grid_cols;
        p.cells = snap_to_grid(p.points, grid_rows, grid_cols);
    }
    return p;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DataError("spearman: length mismatch");
    if (x.size() < 2) return 0.0;
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

}  // namespace cdisc
