#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace cdisc {

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is zero from dividing roundoff by zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares `analytic` against central differences of `loss` taken by
// perturbing each entry of `params` in place (restored afterwards).
inline double max_gradient_error(const std::function<double()>& loss, Eigen::Ref<Eigen::MatrixXd> params,
                                 const Eigen::MatrixXd& analytic, double step = 1e-4) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < params.rows(); ++i) {
        for (Eigen::Index j = 0; j < params.cols(); ++j) {
            const double saved = params(i, j);
            params(i, j) = saved + step;
            const double up = loss();
            params(i, j) = saved - step;
            const double down = loss();
            params(i, j) = saved;
            worst = std::max(worst, relative_error(analytic(i, j), (up - down) / (2.0 * step)));
        }
    }
    return worst;
}

}  // namespace cdisc
