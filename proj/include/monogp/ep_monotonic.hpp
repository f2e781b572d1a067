#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "monogp/gp_regression.hpp"
#include "monogp/kernel.hpp"
#include "monogp/linalg.hpp"
#include "monogp/normal.hpp"
#include "monogp/rng.hpp"
#include "monogp/types.hpp"

namespace monogp {

inline double probit(double z) { return norm_cdf(z); }

// Moments of the tilted density  N(f' | mu_c, var_c) * Phi(s f' / nu),
// normalized. Returned alongside log of the normalizer Z-hat = Phi(z).
struct TiltedMoments {
    double mean = 0.0;
    double var = 0.0;
    double log_z = 0.0;
};

inline TiltedMoments tilted_moments(double cavity_mean, double cavity_var, double nu, double s) {
    if (!(cavity_var > 0.0)) throw error("tilted_moments: cavity variance must be > 0");
    TiltedMoments t;
    const double denom = std::sqrt(nu * nu + cavity_var);
    const double z = s * cavity_mean / denom;
    const double r = inv_mills(z);
    t.log_z = log_ndtr(z);
    t.mean = cavity_mean + s * cavity_var * r / denom;
    t.var = cavity_var - cavity_var * cavity_var * r * (z + r) / (nu * nu + cavity_var);
    return t;
}

// One EP site in natural parameters (tau = 1/site_var, nu_n = site_mean/site_var).
struct SiteUpdate {
    double tau = 0.0;
    double nu_natural = 0.0;
    double log_z = 0.0;
};

// Gaussian division of tilted moments by the cavity gives the new site.
inline SiteUpdate ep_update_site(double cavity_mean, double cavity_var, double nu, double s) {
    const TiltedMoments t = tilted_moments(cavity_mean, cavity_var, nu, s);
    SiteUpdate u;
    if (!(t.var > 0.0)) throw error("ep_update_site: non-positive tilted variance");
    u.tau = 1.0 / t.var - 1.0 / cavity_var;
    u.nu_natural = t.mean / t.var - cavity_mean / cavity_var;
    u.log_z = t.log_z;
    return u;
}

struct EPState {
    // Natural site parameters for the M derivative sites.
    VectorXd tau_site;
    VectorXd nu_site;
    // Moment form of the same sites (valid after convergence).
    VectorXd site_mean;
    VectorXd site_var;
    VectorXd site_log_norm;
    // Cavity parameters computed from the converged joint posterior.
    VectorXd cavity_mean;
    VectorXd cavity_var;
    // Joint posterior over (f at X, signed f' at sites).
    VectorXd mu;
    MatrixXd Sigma;
    int sweeps = 0;
    double max_delta = 0.0;
    bool converged = false;
    double jitter = 0.0;
};

struct EpOptions {
    int max_sweeps = 200;
    double tol = 1e-6;
    double damping = 0.8;
    // Optional warm start for the site natural parameters (e.g. from a
    // previous fit at nearby hyperparameters).
    std::optional<std::pair<VectorXd, VectorXd>> warm_start;
    // Throw convergence_error on failure; when false the caller inspects
    // state.converged instead (used by hyperparameter search).
    bool throw_on_nonconvergence = true;
};

// Fitted monotonic GP: EP state plus the prediction cache (Cholesky of
// K_joint + Sigma-tilde and the corresponding weights).
struct MonotonicGP {
    Hyperparameters hp;
    MatrixXd X;
    VectorXd y;
    double y_mean = 0.0;
    DerivativePointSet dps;
    double nu = 1e-6;
    EPState ep;
    MatrixXd K_joint;             // jittered joint prior
    Eigen::LLT<MatrixXd> B_llt;   // K_joint + diag(sigma^2 .. site_var)
    VectorXd weights;             // B^-1 mu-tilde-joint
};

namespace detail {

// tau-tilde bounds: sites may go modestly negative while iterating but are
// capped so that K + Sigma-tilde stays representable.
inline constexpr double kTauMin = -1e6;
inline constexpr double kTauMax = 1e14;

inline void ep_finalize(MonotonicGP& gp, const VectorXd& y0) {
    const int n = static_cast<int>(gp.X.rows());
    const int m = gp.dps.size();
    EPState& st = gp.ep;
    st.site_var = st.tau_site.cwiseInverse();
    st.site_mean.resize(m);
    for (int i = 0; i < m; ++i)
        st.site_mean[i] = (st.tau_site[i] != 0.0) ? st.nu_site[i] / st.tau_site[i] : 0.0;
    // Cavities from the converged posterior marginals.
    st.cavity_mean.resize(m);
    st.cavity_var.resize(m);
    st.site_log_norm.resize(m);
    for (int i = 0; i < m; ++i) {
        const int j = n + i;
        const double post_var = st.Sigma(j, j);
        const double tau_c = 1.0 / post_var - st.tau_site[i];
        const double nu_c = st.mu[j] / post_var - st.nu_site[i];
        st.cavity_var[i] = 1.0 / tau_c;
        st.cavity_mean[i] = nu_c / tau_c;
        st.site_log_norm[i] =
            log_ndtr(st.cavity_mean[i] / std::sqrt(gp.nu * gp.nu + st.cavity_var[i]));
    }
    // Prediction cache: B = K_joint + Sigma-tilde, weights = B^-1 mu-tilde.
    const double sig2 = gp.hp.noise_std * gp.hp.noise_std;
    MatrixXd B = gp.K_joint;
    for (int j = 0; j < n; ++j) B(j, j) += sig2;
    for (int i = 0; i < m; ++i) B(n + i, n + i) += st.site_var[i];
    const double eta2 = gp.hp.signal_std * gp.hp.signal_std;
    auto f = chol_with_jitter(B, 0.0, kJitterRel * eta2, "ep_fit");
    gp.B_llt = std::move(f.llt);
    VectorXd mu_tilde(n + m);
    mu_tilde.head(n) = y0;
    mu_tilde.tail(m) = st.site_mean;
    gp.weights = gp.B_llt.solve(mu_tilde);
}

}  // namespace detail

// EP fit of the monotonicity-constrained GP. Damped sequential sweeps over
// the derivative sites; the Gaussian data block enters exactly through
// sigma^2. M = 0 degenerates to the classical GP.
inline MonotonicGP ep_fit(const MatrixXd& X, const VectorXd& y, const DerivativePointSet& dps,
                          const Hyperparameters& hp, double nu = 1e-6,
                          const EpOptions& opts = {}, const FitOptions& fit_opts = {}) {
    const int n = static_cast<int>(X.rows());
    const int m = dps.size();
    if (n < 1) throw shape_error("ep_fit: empty dataset");
    if (y.size() != n) throw shape_error("ep_fit: X/y size mismatch");
    hp.validate();
    if (!(nu > 0.0)) throw config_error("ep_fit: nu must be > 0");

    MonotonicGP gp;
    gp.hp = hp;
    gp.X = X;
    gp.y = y;
    gp.y_mean = fit_opts.center_mean ? y.mean() : 0.0;
    gp.dps = dps;
    gp.nu = nu;

    const VectorXd y0 = y.array() - gp.y_mean;
    const double eta2 = hp.signal_std * hp.signal_std;
    const double sig2 = hp.noise_std * hp.noise_std;

    MatrixXd K = assemble_blocks(X, dps, hp);
    const auto kf = chol_with_jitter(K, kJitterRel * eta2, kJitterRetryRel * eta2, "ep_fit");
    gp.ep.jitter = kf.jitter;
    K.diagonal().array() += kf.jitter;
    gp.K_joint = K;

    EPState& st = gp.ep;
    st.tau_site = VectorXd::Zero(m);
    st.nu_site = VectorXd::Zero(m);
    if (opts.warm_start) {
        if (opts.warm_start->first.size() == m && opts.warm_start->second.size() == m) {
            st.tau_site = opts.warm_start->first;
            st.nu_site = opts.warm_start->second;
        }
    }

    // Natural parameters of the exact data sites.
    const double tau_data = 1.0 / std::max(sig2, 1e-12);
    VectorXd nu_all(n + m);
    nu_all.head(n) = y0 * tau_data;
    nu_all.tail(m) = st.nu_site;

    const MatrixXd Kinv = kf.llt.solve(MatrixXd::Identity(n + m, n + m));
    const auto refresh = [&]() {
        MatrixXd P = Kinv;
        for (int j = 0; j < n; ++j) P(j, j) += tau_data;
        for (int i = 0; i < m; ++i) P(n + i, n + i) += st.tau_site[i];
        // Sites may be transiently negative, so P is not guaranteed SPD; LU.
        Eigen::PartialPivLU<MatrixXd> lu(P);
        st.Sigma = lu.solve(MatrixXd::Identity(n + m, n + m));
        st.Sigma = 0.5 * (st.Sigma + st.Sigma.transpose());
        st.mu = st.Sigma * nu_all;
    };
    refresh();

    if (m == 0) {
        st.converged = true;
        detail::ep_finalize(gp, y0);
        return gp;
    }

    const double tau_scale = 1.0 / gp.K_joint.diagonal().maxCoeff();
    double maxd = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        maxd = 0.0;
        for (int i = 0; i < m; ++i) {
            const int j = n + i;
            const double post_var = st.Sigma(j, j);
            const double tau_c = 1.0 / post_var - st.tau_site[i];
            if (tau_c <= 1e-12) continue;  // cavity collapsed; keep the old site
            const double nu_c = st.mu[j] / post_var - st.nu_site[i];
            const double mu_c = nu_c / tau_c;
            const double var_c = 1.0 / tau_c;
            TiltedMoments t;
            try {
                t = tilted_moments(mu_c, var_c, nu, 1.0);
            } catch (const error&) {
                continue;
            }
            if (!(t.var > 0.0)) continue;
            const double tau_raw = 1.0 / t.var - tau_c;
            const double nu_raw = t.mean / t.var - nu_c;
            double tau_new = st.tau_site[i] + opts.damping * (tau_raw - st.tau_site[i]);
            double nu_new = st.nu_site[i] + opts.damping * (nu_raw - st.nu_site[i]);
            tau_new = std::clamp(tau_new, detail::kTauMin, detail::kTauMax);
            const double dtau = tau_new - st.tau_site[i];
            const double dnu = nu_new - st.nu_site[i];
            const double den = 1.0 + dtau * post_var;
            if (den <= 1e-12) continue;  // update would make the posterior indefinite
            const VectorXd sj = st.Sigma.col(j);
            st.Sigma.noalias() -= sj * (sj.transpose() * (dtau / den));
            st.tau_site[i] = tau_new;
            st.nu_site[i] = nu_new;
            nu_all[j] = nu_new;
            st.mu = st.Sigma * nu_all;
            maxd = std::max({maxd, std::abs(dtau), std::abs(dnu)});
        }
        refresh();
        st.sweeps = sweep + 1;
        if (maxd < opts.tol) break;
    }
    st.max_delta = maxd;
    st.converged = maxd < opts.tol;

    if (st.converged) {
        // A probit site is log-concave, so exact-arithmetic tau updates are
        // non-negative; materially negative converged sites indicate a bad
        // fixed point, while tiny negatives are floating-point noise that is
        // floored to keep Sigma-tilde positive.
        const double floor = 1e-10 * tau_scale;
        if ((st.tau_site.array() < -1e-3 * tau_scale).any()) {
            st.converged = false;
        } else {
            for (int i = 0; i < m; ++i) {
                if (st.tau_site[i] < floor) {
                    st.tau_site[i] = floor;
                    st.nu_site[i] = 0.0;
                    nu_all[n + i] = 0.0;
                }
            }
            refresh();
        }
    }

    if (!st.converged) {
        if (opts.throw_on_nonconvergence)
            throw convergence_error("ep_fit: EP did not converge", st.max_delta);
        return gp;  // caller checks ep.converged; prediction cache absent
    }

    detail::ep_finalize(gp, y0);
    return gp;
}

// EP approximation of the log marginal likelihood (including the Gaussian
// normalization constant so the M=0 case reduces exactly to the classical
// expression).
inline double ep_log_marginal(const MonotonicGP& gp) {
    if (!gp.ep.converged) throw error("ep_log_marginal: state not converged");
    const int n = static_cast<int>(gp.X.rows());
    const int m = gp.dps.size();
    const VectorXd y0 = gp.y.array() - gp.y_mean;
    const double sig2 = gp.hp.noise_std * gp.hp.noise_std;
    if (m == 0) {
        const VectorXd a = gp.B_llt.solve(y0);
        return -0.5 * y0.dot(a) - 0.5 * logdet_from_llt(gp.B_llt) - 0.5 * n * kLog2Pi;
    }
    const EPState& st = gp.ep;
    VectorXd mu_tilde(n + m);
    mu_tilde.head(n) = y0;
    mu_tilde.tail(m) = st.site_mean;
    const double t1 = -0.5 * logdet_from_llt(gp.B_llt);
    const double t2 = -0.5 * mu_tilde.dot(gp.weights);
    double t3 = 0.0, t4 = 0.0, t5 = 0.0;
    for (int i = 0; i < m; ++i) {
        const double dv = st.cavity_var[i] + st.site_var[i];
        const double dm = st.cavity_mean[i] - st.site_mean[i];
        t3 += dm * dm / (2.0 * dv);
        t4 += st.site_log_norm[i];
        t5 += 0.5 * std::log(dv);
    }
    return t1 + t2 + t3 + t4 + t5 - 0.5 * n * kLog2Pi;
}

// Constrained posterior mean and latent variance at query locations.
inline PredictionSet ep_predict(const MonotonicGP& gp, const MatrixXd& Xq) {
    if (!gp.ep.converged) throw error("ep_predict: state not converged");
    if (Xq.cols() != gp.hp.dim()) throw shape_error("ep_predict: query dimension mismatch");
    const int q = static_cast<int>(Xq.rows());
    const MatrixXd Ks = cross_blocks(Xq, gp.X, gp.dps, gp.hp);
    PredictionSet out;
    out.mean = Ks * gp.weights;
    out.mean.array() += gp.y_mean;
    const MatrixXd V = gp.B_llt.solve(Ks.transpose());
    const double eta2 = gp.hp.signal_std * gp.hp.signal_std;
    out.var.resize(q);
    for (int i = 0; i < q; ++i) {
        double v = eta2 - Ks.row(i).dot(V.col(i));
        if (v < 0.0) {
            ++out.clamp_count;
            v = 0.0;
        }
        out.var[i] = v;
    }
    return out;
}

// Uniform inducing grid over the training bounding box. One derivative site
// per (grid location, constrained dimension); the total is capped at 100 by
// stratified subsampling under a fixed seed.
inline DerivativePointSet place_inducing(const MatrixXd& X, const std::vector<int>& directions,
                                         int m_per_dim = 0, int cap = 100) {
    const int d_in = static_cast<int>(X.cols());
    if (static_cast<int>(directions.size()) != d_in)
        throw shape_error("place_inducing: directions size must match input dimension");
    std::vector<int> constrained;
    for (int d = 0; d < d_in; ++d)
        if (directions[d] != 0) constrained.push_back(d);
    if (constrained.empty())
        throw config_error("place_inducing: at least one nonzero direction required");
    if (m_per_dim <= 0) m_per_dim = (d_in == 1) ? 10 : 5;

    const VectorXd lo = X.colwise().minCoeff();
    const VectorXd hi = X.colwise().maxCoeff();
    for (int d : constrained)
        if (!(hi[d] > lo[d]))
            throw data_error("place_inducing: degenerate bounding box in constrained dimension");

    // Full grid of m_per_dim per axis (axes with zero width collapse to one).
    std::vector<int> counts(d_in, m_per_dim);
    long total = 1;
    for (int d = 0; d < d_in; ++d) {
        if (!(hi[d] > lo[d])) counts[d] = 1;
        total *= counts[d];
    }
    MatrixXd grid(total, d_in);
    for (long idx = 0; idx < total; ++idx) {
        long rem = idx;
        for (int d = 0; d < d_in; ++d) {
            const int k = static_cast<int>(rem % counts[d]);
            rem /= counts[d];
            grid(idx, d) =
                (counts[d] == 1) ? lo[d] : lo[d] + (hi[d] - lo[d]) * k / (counts[d] - 1);
        }
    }

    DerivativePointSet dps;
    const long m_total = total * static_cast<long>(constrained.size());
    std::vector<long> keep;
    if (m_total <= cap) {
        keep.resize(m_total);
        for (long i = 0; i < m_total; ++i) keep[i] = i;
    } else {
        // Stratified subsample: one index per contiguous stratum.
        Rng rng(0xC0FFEEull);
        for (int s = 0; s < cap; ++s) {
            const long a = s * m_total / cap;
            const long b = (s + 1) * m_total / cap;
            keep.push_back(a + static_cast<long>(rng.integer(static_cast<std::uint64_t>(b - a))));
        }
    }
    dps.locations.resize(static_cast<long>(keep.size()), d_in);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const long site = keep[r];
        const long loc = site % total;
        const int cd = constrained[static_cast<std::size_t>(site / total)];
        dps.locations.row(static_cast<long>(r)) = grid.row(loc);
        dps.dims.push_back(cd);
        dps.signs.push_back(directions[cd] > 0 ? 1.0 : -1.0);
    }
    return dps;
}

}  // namespace monogp
