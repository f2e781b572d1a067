#pragma once

#include <Eigen/Dense>

#include "monogp/types.hpp"

namespace monogp {

namespace detail {
inline void check_dim(const Eigen::Ref<const VectorXd>& x, const Hyperparameters& hp,
                      const char* what) {
    if (x.size() != hp.dim())
        throw shape_error(std::string(what) + ": point dimension does not match length_scales");
}
}  // namespace detail

// k(x_i, x_j) = eta^2 exp(-1/2 sum_d (dx_d / rho_d)^2)
inline double se_cov(const Eigen::Ref<const VectorXd>& xi, const Eigen::Ref<const VectorXd>& xj,
                     const Hyperparameters& hp) {
    detail::check_dim(xi, hp, "se_cov");
    detail::check_dim(xj, hp, "se_cov");
    const VectorXd d = (xi - xj).cwiseQuotient(hp.length_scales);
    return hp.signal_std * hp.signal_std * std::exp(-0.5 * d.squaredNorm());
}

// Cov[df/dx_{i,g}, f(x_j)] = -k(x_i,x_j) * (x_{i,g} - x_{j,g}) / rho_g^2
inline double cov_deriv_f(const Eigen::Ref<const VectorXd>& xi, int g,
                          const Eigen::Ref<const VectorXd>& xj, const Hyperparameters& hp) {
    if (g < 0 || g >= hp.dim()) throw shape_error("cov_deriv_f: dimension index out of range");
    const double rg = hp.length_scales[g];
    return -se_cov(xi, xj, hp) * (xi[g] - xj[g]) / (rg * rg);
}

// Cov[df/dx_{i,g}, df/dx_{j,h}] = k(x_i,x_j) / rho_g^2 * (delta_gh - dx_g dx_h / rho_h^2)
inline double cov_deriv_deriv(const Eigen::Ref<const VectorXd>& xi, int g,
                              const Eigen::Ref<const VectorXd>& xj, int h,
                              const Hyperparameters& hp) {
    if (g < 0 || g >= hp.dim() || h < 0 || h >= hp.dim())
        throw shape_error("cov_deriv_deriv: dimension index out of range");
    const double rg = hp.length_scales[g];
    const double rh = hp.length_scales[h];
    const double delta = (g == h) ? 1.0 : 0.0;
    const double term = delta - (xi[g] - xj[g]) * (xi[h] - xj[h]) / (rh * rh);
    return se_cov(xi, xj, hp) * term / (rg * rg);
}

// Joint prior covariance over (f at X, constrained derivatives at dps).
// Sign flags are baked into the derivative rows/columns so the EP site math
// always sees a non-negative-derivative constraint.
inline MatrixXd assemble_blocks(const MatrixXd& X, const DerivativePointSet& dps,
                                const Hyperparameters& hp) {
    const int n = static_cast<int>(X.rows());
    const int m = dps.size();
    if (X.cols() != hp.dim()) throw shape_error("assemble_blocks: X dimension mismatch");
    dps.validate(hp.dim());
    MatrixXd K(n + m, n + m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double v = se_cov(X.row(i), X.row(j), hp);
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    for (int a = 0; a < m; ++a) {
        for (int j = 0; j < n; ++j) {
            const double v = dps.signs[a] * cov_deriv_f(dps.locations.row(a), dps.dims[a],
                                                        X.row(j), hp);
            K(n + a, j) = v;
            K(j, n + a) = v;
        }
    }
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b <= a; ++b) {
            const double v = dps.signs[a] * dps.signs[b] *
                             cov_deriv_deriv(dps.locations.row(a), dps.dims[a],
                                             dps.locations.row(b), dps.dims[b], hp);
            K(n + a, n + b) = v;
            K(n + b, n + a) = v;
        }
    }
    return K;
}

// Cross-covariance of query values f(X*) against the joint (f, f') vector.
inline MatrixXd cross_blocks(const MatrixXd& Xq, const MatrixXd& X,
                             const DerivativePointSet& dps, const Hyperparameters& hp) {
    const int q = static_cast<int>(Xq.rows());
    const int n = static_cast<int>(X.rows());
    const int m = dps.size();
    if (Xq.cols() != hp.dim()) throw shape_error("cross_blocks: query dimension mismatch");
    MatrixXd C(q, n + m);
    for (int i = 0; i < q; ++i) {
        for (int j = 0; j < n; ++j) C(i, j) = se_cov(Xq.row(i), X.row(j), hp);
        for (int a = 0; a < m; ++a)
            C(i, n + a) = dps.signs[a] * cov_deriv_f(dps.locations.row(a), dps.dims[a],
                                                     Xq.row(i), hp);
    }
    return C;
}

// Squared column-d separations, the reusable factor in d k / d log rho_d.
inline MatrixXd sq_dist_dim(const MatrixXd& X, int d) {
    const int n = static_cast<int>(X.rows());
    MatrixXd D2(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double dx = X(i, d) - X(j, d);
            D2(i, j) = dx * dx;
        }
    return D2;
}

}  // namespace monogp
