#pragma once

#include <Eigen/Dense>

#include "monogp/kernel.hpp"
#include "monogp/linalg.hpp"
#include "monogp/normal.hpp"
#include "monogp/types.hpp"

namespace monogp {

inline constexpr double kJitterRel = 1e-8;        // first-attempt diagonal jitter, times eta^2
inline constexpr double kJitterRetryRel = 1e-6;   // retry level, times eta^2

struct FitOptions {
    // Center y by its training mean before fitting (added back at predict).
    // The formulation assumes a zero-mean process; outputs far from zero
    // (stress, log-life) need the shift.
    bool center_mean = true;
};

// Exact GP with cached Cholesky of (K_ff + sigma^2 I) and weights alpha.
struct FittedGP {
    Hyperparameters hp;
    MatrixXd X;
    VectorXd y;        // raw outputs as given
    double y_mean = 0.0;
    Eigen::LLT<MatrixXd> llt;
    VectorXd alpha;    // (K + sigma^2 I)^-1 (y - y_mean)
    double jitter = 0.0;
};

// Log marginal likelihood of raw y under hp (no centering here; fit drivers
// center before calling).
inline double log_marginal(const MatrixXd& X, const VectorXd& y, const Hyperparameters& hp) {
    const int n = static_cast<int>(X.rows());
    if (n < 1) throw shape_error("log_marginal: empty dataset");
    if (y.size() != n) throw shape_error("log_marginal: X/y size mismatch");
    hp.validate();
    DerivativePointSet empty;
    MatrixXd C = assemble_blocks(X, empty, hp);
    const double eta2 = hp.signal_std * hp.signal_std;
    C.diagonal().array() += hp.noise_std * hp.noise_std;
    const auto f = chol_with_jitter(C, kJitterRel * eta2, kJitterRetryRel * eta2, "log_marginal");
    const VectorXd a = f.llt.solve(y);
    return -0.5 * y.dot(a) - 0.5 * logdet_from_llt(f.llt) - 0.5 * n * kLog2Pi;
}

// Analytic gradient of log_marginal over (log eta, log rho_d, log sigma),
// via d/dtheta = 1/2 tr((alpha alpha^T - C^-1) dC/dtheta).
inline VectorXd log_marginal_grad(const MatrixXd& X, const VectorXd& y,
                                  const Hyperparameters& hp) {
    const int n = static_cast<int>(X.rows());
    if (n < 1) throw shape_error("log_marginal_grad: empty dataset");
    if (y.size() != n) throw shape_error("log_marginal_grad: X/y size mismatch");
    hp.validate();
    DerivativePointSet empty;
    const MatrixXd K = assemble_blocks(X, empty, hp);
    const double eta2 = hp.signal_std * hp.signal_std;
    const double sig2 = hp.noise_std * hp.noise_std;
    MatrixXd C = K;
    C.diagonal().array() += sig2;
    const auto f = chol_with_jitter(C, kJitterRel * eta2, kJitterRetryRel * eta2,
                                    "log_marginal_grad");
    const VectorXd alpha = f.llt.solve(y);
    const MatrixXd Cinv = f.llt.solve(MatrixXd::Identity(n, n));
    const MatrixXd A = alpha * alpha.transpose() - Cinv;
    VectorXd grad(hp.dim() + 2);
    // d C / d log eta = 2 K_ff + 2 jitter I: the stabilizing jitter scales
    // with eta^2, so differentiating the objective as computed must include it.
    grad[0] = 0.5 * A.cwiseProduct(2.0 * K).sum() + f.jitter * A.trace();
    for (int d = 0; d < hp.dim(); ++d) {
        const double r2 = hp.length_scales[d] * hp.length_scales[d];
        const MatrixXd dK = K.cwiseProduct(sq_dist_dim(X, d)) / r2;
        grad[1 + d] = 0.5 * A.cwiseProduct(dK).sum();
    }
    grad[hp.dim() + 1] = 0.5 * A.trace() * 2.0 * sig2;
    return grad;
}

inline FittedGP fit(const MatrixXd& X, const VectorXd& y, const Hyperparameters& hp,
                    const FitOptions& opts = {}) {
    const int n = static_cast<int>(X.rows());
    if (n < 1) throw shape_error("fit: empty dataset");
    if (y.size() != n) throw shape_error("fit: X/y size mismatch");
    hp.validate();
    FittedGP gp;
    gp.hp = hp;
    gp.X = X;
    gp.y = y;
    gp.y_mean = opts.center_mean ? y.mean() : 0.0;
    DerivativePointSet empty;
    MatrixXd C = assemble_blocks(X, empty, hp);
    const double eta2 = hp.signal_std * hp.signal_std;
    C.diagonal().array() += hp.noise_std * hp.noise_std;
    auto f = chol_with_jitter(C, kJitterRel * eta2, kJitterRetryRel * eta2, "fit");
    gp.llt = std::move(f.llt);
    gp.jitter = f.jitter;
    gp.alpha = gp.llt.solve((y.array() - gp.y_mean).matrix());
    return gp;
}

// Posterior mean/variance of latent f at the query locations. Variance is the
// latent one by default; include_noise adds sigma^2.
inline PredictionSet predict(const FittedGP& gp, const MatrixXd& Xq, bool include_noise = false) {
    if (Xq.cols() != gp.hp.dim()) throw shape_error("predict: query dimension mismatch");
    const int q = static_cast<int>(Xq.rows());
    DerivativePointSet empty;
    const MatrixXd Ks = cross_blocks(Xq, gp.X, empty, gp.hp);
    PredictionSet out;
    out.mean = Ks * gp.alpha;
    out.mean.array() += gp.y_mean;
    const MatrixXd V = gp.llt.solve(Ks.transpose());
    const double eta2 = gp.hp.signal_std * gp.hp.signal_std;
    out.var.resize(q);
    for (int i = 0; i < q; ++i) {
        double v = eta2 - Ks.row(i).dot(V.col(i));
        if (include_noise) v += gp.hp.noise_std * gp.hp.noise_std;
        if (v < 0.0) {
            ++out.clamp_count;
            v = 0.0;
        }
        out.var[i] = v;
    }
    return out;
}

// Posterior over df/dx_d at queries: mean is d k(q,.)/d q_d * alpha, variance
// the corresponding Schur complement against the prior derivative variance.
inline PredictionSet predict_derivative(const FittedGP& gp, const MatrixXd& Xq, int d) {
    if (Xq.cols() != gp.hp.dim()) throw shape_error("predict_derivative: query dimension mismatch");
    if (d < 0 || d >= gp.hp.dim()) throw shape_error("predict_derivative: dimension out of range");
    const int q = static_cast<int>(Xq.rows());
    const int n = static_cast<int>(gp.X.rows());
    MatrixXd Kd(q, n);
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < n; ++j)
            Kd(i, j) = cov_deriv_f(Xq.row(i), d, gp.X.row(j), gp.hp);
    PredictionSet out;
    out.mean = Kd * gp.alpha;
    const MatrixXd V = gp.llt.solve(Kd.transpose());
    const double rd = gp.hp.length_scales[d];
    const double prior_var = gp.hp.signal_std * gp.hp.signal_std / (rd * rd);
    out.var.resize(q);
    for (int i = 0; i < q; ++i) {
        double v = prior_var - Kd.row(i).dot(V.col(i));
        if (v < 0.0) {
            ++out.clamp_count;
            v = 0.0;
        }
        out.var[i] = v;
    }
    return out;
}

}  // namespace monogp
