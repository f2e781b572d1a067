#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "monogp/types.hpp"

namespace monogp {

inline double rmse(const VectorXd& pred, const VectorXd& truth) {
    if (pred.size() != truth.size() || pred.size() < 1)
        throw shape_error("rmse: length mismatch or empty input");
    return std::sqrt((pred - truth).squaredNorm() / pred.size());
}

inline double r_squared(const VectorXd& pred, const VectorXd& truth) {
    if (pred.size() != truth.size() || pred.size() < 1)
        throw shape_error("r_squared: length mismatch or empty input");
    const double mean = truth.mean();
    const double ss_tot = (truth.array() - mean).square().sum();
    if (!(ss_tot > 0.0)) throw data_error("r_squared: constant truth");
    const double ss_res = (pred - truth).squaredNorm();
    return 1.0 - ss_res / ss_tot;
}

// Fraction of truth values inside mean +- z * std.
inline double coverage(const VectorXd& pred_mean, const VectorXd& pred_std,
                       const VectorXd& truth, double z) {
    if (pred_mean.size() != truth.size() || pred_std.size() != truth.size() ||
        truth.size() < 1)
        throw shape_error("coverage: length mismatch or empty input");
    int inside = 0;
    for (int i = 0; i < truth.size(); ++i) {
        if (!(pred_std[i] >= 0.0)) throw data_error("coverage: negative std");
        if (std::abs(truth[i] - pred_mean[i]) <= z * pred_std[i]) ++inside;
    }
    return static_cast<double>(inside) / truth.size();
}

}  // namespace monogp
