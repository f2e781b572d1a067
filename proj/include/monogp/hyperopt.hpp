#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "monogp/ep_monotonic.hpp"
#include "monogp/gp_regression.hpp"
#include "monogp/rng.hpp"
#include "monogp/types.hpp"

namespace monogp {

struct OptimizerConfig {
    int max_iterations = 6000;
    int restarts = 5;
    double convergence_tol = 1e-5;  // infinity-norm of the projected gradient
    std::uint64_t seed = 0;
    // Log-space box half-width around the initial point; keeps length-scales
    // from collapsing to degenerate values.
    double bound_halfwidth = 10.0;

    void validate() const {
        if (max_iterations < 1) throw config_error("optimizer: max_iterations must be >= 1");
        if (restarts < 1) throw config_error("optimizer: restarts must be >= 1");
    }
};

// Objective: value and gradient of a scalar field to MAXIMIZE.
using Objective = std::function<bool(const VectorXd& x, double& value, VectorXd& grad)>;

struct OptimizeResult {
    VectorXd best_x;
    double best_value = -std::numeric_limits<double>::infinity();
    // Accepted objective values per iteration, per restart.
    std::vector<std::vector<double>> traces;
    // Terminal point and value of every restart (empty/-inf where the
    // objective was not finite at that start).
    std::vector<VectorXd> restart_x;
    std::vector<double> restart_value;
};

namespace detail {

// Projected-gradient L-BFGS ascent within a box, with a strong-Wolfe
// bracket-and-zoom line search (Armijo backtracking as the safety net).
// Returns false if the objective is not finite at the initial point.
inline bool lbfgs_box(const Objective& obj, const VectorXd& x0, const VectorXd& lo,
                      const VectorXd& hi, int max_iter, double tol, VectorXd& x_out,
                      double& f_out, std::vector<double>& trace) {
    const int dim = static_cast<int>(x0.size());
    const auto clip = [&](VectorXd v) {
        for (int i = 0; i < dim; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
        return v;
    };
    VectorXd x = clip(x0);
    double f = 0.0;
    VectorXd g(dim);
    if (!obj(x, f, g) || !std::isfinite(f)) return false;
    trace.push_back(f);

    const int memory = 10;
    std::deque<VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < max_iter; ++iter) {
        // Convergence on the projected gradient (box-aware).
        double pg = 0.0;
        for (int i = 0; i < dim; ++i) {
            double gi = g[i];
            if (x[i] <= lo[i] && gi < 0.0) gi = 0.0;
            if (x[i] >= hi[i] && gi > 0.0) gi = 0.0;
            pg = std::max(pg, std::abs(gi));
        }
        if (pg < tol) break;

        // Two-loop recursion for the ascent direction.
        VectorXd q = g;
        std::vector<double> alpha(s_hist.size());
        for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
            alpha[k] = rho_hist[k] * s_hist[k].dot(q);
            q -= alpha[k] * y_hist[k];
        }
        if (!s_hist.empty()) {
            const double gamma =
                s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            if (std::isfinite(gamma) && gamma > 0.0) q *= gamma;
        }
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = rho_hist[k] * y_hist[k].dot(q);
            q += (alpha[k] - beta) * s_hist[k];
        }
        VectorXd dir = q;
        if (dir.dot(g) <= 0.0) dir = g;  // fall back to steepest ascent
        if (s_hist.empty()) {
            // No curvature information yet: cap the unit step at one log-unit
            // per coordinate so a steep surface cannot fling the iterate.
            const double dn = dir.lpNorm<Eigen::Infinity>();
            if (dn > 1.0) dir /= dn;
        }

        const double slope0 = dir.dot(g);
        constexpr double c1 = 1e-4, c2 = 0.9;
        // phi(t) = f(clip(x + t dir)); slope via the effective displacement so
        // box clipping is accounted for.
        const auto eval_t = [&](double t, double& ft, VectorXd& gt, VectorXd& xt,
                                double& st) {
            xt = clip(x + t * dir);
            if (!obj(xt, ft, gt) || !std::isfinite(ft)) return false;
            st = gt.dot((xt - x) / t);
            return true;
        };

        VectorXd x_new, g_new(dim);
        double f_new = 0.0;
        bool accepted = false;

        // Bracketing phase: extend until the increase stalls or the slope
        // flattens to the curvature tolerance.
        double t = 1.0, t_prev = 0.0, f_prev = f;
        double t_lo = -1.0, t_hi = -1.0, f_lo = 0.0;
        bool bracketed = false;
        for (int ls = 0; ls < 12; ++ls) {
            VectorXd xt, gt(dim);
            double ft = 0.0, st = 0.0;
            if (!eval_t(t, ft, gt, xt, st)) {
                t_lo = t_prev;
                f_lo = f_prev;
                t_hi = t;
                bracketed = t_prev > 0.0 || ls > 0;
                if (!bracketed) {  // first probe already non-finite: shrink
                    t *= 0.1;
                    continue;
                }
                break;
            }
            if (ft < f + c1 * t * slope0 || (ls > 0 && ft <= f_prev)) {
                t_lo = t_prev;
                f_lo = f_prev;
                t_hi = t;
                bracketed = true;
                break;
            }
            if (std::abs(st) <= c2 * slope0) {
                accepted = true;
                x_new = xt;
                f_new = ft;
                g_new = gt;
                break;
            }
            if (st <= 0.0) {
                t_lo = t;
                f_lo = ft;
                t_hi = t_prev;
                bracketed = true;
                break;
            }
            t_prev = t;
            f_prev = ft;
            if ((clip(x + 2.0 * t * dir) - xt).lpNorm<Eigen::Infinity>() < 1e-15) {
                // The whole remaining ray is outside the box; take this point.
                accepted = true;
                x_new = xt;
                f_new = ft;
                g_new = gt;
                break;
            }
            t *= 2.0;
        }
        // Zoom phase: bisect the bracket until strong Wolfe holds.
        if (!accepted && bracketed) {
            for (int z = 0; z < 20; ++z) {
                if (std::abs(t_hi - t_lo) < 1e-14) break;
                t = 0.5 * (t_lo + t_hi);
                VectorXd xt, gt(dim);
                double ft = 0.0, st = 0.0;
                if (!eval_t(t, ft, gt, xt, st)) {
                    t_hi = t;
                    continue;
                }
                if (ft < f + c1 * t * slope0 || ft <= f_lo) {
                    t_hi = t;
                } else {
                    if (std::abs(st) <= c2 * slope0) {
                        accepted = true;
                        x_new = xt;
                        f_new = ft;
                        g_new = gt;
                        break;
                    }
                    if (st * (t_hi - t_lo) <= 0.0) t_hi = t_lo;
                    t_lo = t;
                    f_lo = ft;
                }
            }
            if (!accepted && t_lo > 0.0) {
                // Wolfe unattainable in the bracket (e.g. noisy finite
                // differences); settle for the best sufficient-increase point.
                VectorXd xt, gt(dim);
                double ft = 0.0, st = 0.0;
                if (eval_t(t_lo, ft, gt, xt, st) && ft > f) {
                    accepted = true;
                    x_new = xt;
                    f_new = ft;
                    g_new = gt;
                }
            }
        }
        // Safety net: plain Armijo backtracking.
        if (!accepted) {
            double step = 1.0;
            for (int bt = 0; bt < 40; ++bt) {
                VectorXd xt = clip(x + step * dir);
                if ((xt - x).lpNorm<Eigen::Infinity>() < 1e-15) break;
                double ft = 0.0;
                VectorXd gt(dim);
                if (obj(xt, ft, gt) && std::isfinite(ft) &&
                    ft >= f + c1 * step * slope0) {
                    accepted = true;
                    x_new = xt;
                    f_new = ft;
                    g_new = gt;
                    break;
                }
                step *= 0.5;
            }
        }
        if (!accepted) break;

        const VectorXd s = x_new - x;
        const VectorXd yv = g - g_new;  // curvature pair for the ascent problem
        const double sy = s.dot(yv);
        if (std::isfinite(sy) && sy > 1e-10 * s.norm() * yv.norm()) {
            s_hist.push_back(s);
            y_hist.push_back(yv);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = x_new;
        f = f_new;
        g = g_new;
        trace.push_back(f);
    }
    x_out = x;
    f_out = f;
    return true;
}

}  // namespace detail

// Multi-restart L-BFGS ascent. Restart 0 starts at `init`; later restarts
// perturb it by seeded log-normal factors (std 0.5 in log space). Extra
// candidate starts (e.g. another model's optimum) may be appended.
inline OptimizeResult optimize(const Objective& obj, const VectorXd& init,
                               const OptimizerConfig& cfg,
                               const std::vector<VectorXd>& extra_inits = {}) {
    cfg.validate();
    const int dim = static_cast<int>(init.size());
    const VectorXd lo = init.array() - cfg.bound_halfwidth;
    const VectorXd hi = init.array() + cfg.bound_halfwidth;
    Rng rng(cfg.seed);
    std::vector<VectorXd> starts;
    starts.push_back(init);
    for (int r = 1; r < cfg.restarts; ++r) {
        VectorXd p(dim);
        for (int i = 0; i < dim; ++i) p[i] = init[i] + rng.normal(0.0, 0.5);
        starts.push_back(p);
    }
    for (const auto& e : extra_inits)
        if (e.size() == dim) starts.push_back(e);

    OptimizeResult out;
    bool any = false;
    for (const auto& start : starts) {
        out.traces.emplace_back();
        VectorXd x;
        double f = 0.0;
        if (!detail::lbfgs_box(obj, start, lo, hi, cfg.max_iterations, cfg.convergence_tol, x,
                               f, out.traces.back())) {
            out.restart_x.emplace_back();
            out.restart_value.push_back(-std::numeric_limits<double>::infinity());
            continue;
        }
        out.restart_x.push_back(x);
        out.restart_value.push_back(f);
        any = true;
        if (f > out.best_value) {
            out.best_value = f;
            out.best_x = x;
        }
    }
    if (!any) throw error("optimize: objective not finite at any restart init");
    return out;
}

// Data-driven starting hyperparameters: eta = std(y), rho_d = half the column
// range, sigma = 0.1 std(y), with floors for degenerate data.
inline Hyperparameters default_init(const MatrixXd& X, const VectorXd& y) {
    const int n = static_cast<int>(X.rows());
    if (n < 2) throw shape_error("default_init: need at least two points");
    if (y.size() != n) throw shape_error("default_init: X/y size mismatch");
    const double mean = y.mean();
    double var = (y.array() - mean).square().sum() / (n - 1);
    double eta = std::sqrt(var);
    if (!(eta > 0.0)) eta = 1e-6 * (1.0 + std::abs(mean));
    const VectorXd lo = X.colwise().minCoeff();
    const VectorXd hi = X.colwise().maxCoeff();
    const double overall = (hi - lo).maxCoeff();
    Hyperparameters hp;
    hp.signal_std = eta;
    hp.length_scales.resize(X.cols());
    for (int d = 0; d < X.cols(); ++d) {
        double w = 0.5 * (hi[d] - lo[d]);
        if (!(w > 0.0)) w = std::max(1e-6 * overall, 1e-12);
        hp.length_scales[d] = w;
    }
    hp.noise_std = 0.1 * eta;
    return hp;
}

struct GpFitResult {
    FittedGP gp;
    double log_marginal = 0.0;
    OptimizeResult opt;
};

// Maximize the classical log marginal likelihood (analytic gradient).
inline GpFitResult fit_gp(const MatrixXd& X, const VectorXd& y, const OptimizerConfig& cfg = {},
                          const std::vector<VectorXd>& extra_inits = {}) {
    const double y_mean = y.mean();
    const VectorXd y0 = y.array() - y_mean;
    const Objective obj = [&](const VectorXd& lp, double& value, VectorXd& grad) {
        if (lp.array().abs().maxCoeff() > 50.0) return false;
        const Hyperparameters hp = Hyperparameters::from_log(lp);
        try {
            value = log_marginal(X, y0, hp);
            grad = log_marginal_grad(X, y0, hp);
        } catch (const error&) {
            return false;
        }
        return std::isfinite(value) && grad.allFinite();
    };
    const VectorXd init = default_init(X, y).to_log();
    GpFitResult res;
    res.opt = optimize(obj, init, cfg, extra_inits);
    const Hyperparameters best = Hyperparameters::from_log(res.opt.best_x);
    res.gp = fit(X, y, best);
    res.log_marginal = res.opt.best_value;
    return res;
}

struct MonotonicFitResult {
    MonotonicGP gp;
    double log_z_ep = 0.0;
    OptimizeResult opt;
};

// Maximize log Z_EP with central finite-difference gradients (log-space step
// 1e-4). Each restart warm-starts EP from the latest converged sites, and
// every FD probe reuses the centre point's sites, which keeps the surface
// smooth and the sweep counts low.
inline MonotonicFitResult fit_monotonic(const MatrixXd& X, const VectorXd& y,
                                        const DerivativePointSet& dps, double nu = 1e-6,
                                        const OptimizerConfig& cfg = {},
                                        const std::vector<VectorXd>& extra_inits = {}) {
    struct EvalState {
        std::optional<std::pair<VectorXd, VectorXd>> warm;
    };
    auto eval_raw = [&](const VectorXd& lp, const EvalState& state, MonotonicGP* keep,
                        double& value) {
        if (lp.array().abs().maxCoeff() > 50.0) return false;
        const Hyperparameters hp = Hyperparameters::from_log(lp);
        EpOptions opts;
        opts.throw_on_nonconvergence = false;
        opts.warm_start = state.warm;
        try {
            MonotonicGP gp = ep_fit(X, y, dps, hp, nu, opts);
            if (!gp.ep.converged && state.warm) {
                opts.warm_start.reset();
                gp = ep_fit(X, y, dps, hp, nu, opts);
            }
            if (!gp.ep.converged) return false;
            value = ep_log_marginal(gp);
            if (!std::isfinite(value)) return false;
            if (keep) *keep = std::move(gp);
            return true;
        } catch (const error&) {
            return false;
        }
    };

    // One FD-gradient objective per restart, each with its own warm state.
    auto make_objective = [&]() {
        auto state = std::make_shared<EvalState>();
        return Objective([&, state](const VectorXd& lp, double& value, VectorXd& grad) {
            MonotonicGP center;
            if (!eval_raw(lp, *state, &center, value)) return false;
            state->warm = {center.ep.tau_site, center.ep.nu_site};
            EvalState probe_state;
            probe_state.warm = state->warm;
            const double h = 1e-4;
            grad.resize(lp.size());
            for (int k = 0; k < lp.size(); ++k) {
                VectorXd lp_p = lp, lp_m = lp;
                lp_p[k] += h;
                lp_m[k] -= h;
                double fp = 0.0, fm = 0.0;
                if (!eval_raw(lp_p, probe_state, nullptr, fp) ||
                    !eval_raw(lp_m, probe_state, nullptr, fm))
                    return false;
                grad[k] = (fp - fm) / (2.0 * h);
            }
            return true;
        });
    };

    cfg.validate();
    const VectorXd init = default_init(X, y).to_log();
    const int dim = static_cast<int>(init.size());
    const VectorXd lo = init.array() - cfg.bound_halfwidth;
    const VectorXd hi = init.array() + cfg.bound_halfwidth;
    Rng rng(cfg.seed);
    std::vector<VectorXd> starts;
    starts.push_back(init);
    for (int r = 1; r < cfg.restarts; ++r) {
        VectorXd p(dim);
        for (int i = 0; i < dim; ++i) p[i] = init[i] + rng.normal(0.0, 0.5);
        starts.push_back(p);
    }
    for (const auto& e : extra_inits)
        if (e.size() == dim) starts.push_back(e);

    MonotonicFitResult res;
    res.log_z_ep = -std::numeric_limits<double>::infinity();
    VectorXd best_x;
    bool any = false;
    for (const auto& start : starts) {
        res.opt.traces.emplace_back();
        VectorXd x;
        double f = 0.0;
        if (!detail::lbfgs_box(make_objective(), start, lo, hi, cfg.max_iterations,
                               cfg.convergence_tol, x, f, res.opt.traces.back())) {
            res.opt.restart_x.emplace_back();
            res.opt.restart_value.push_back(-std::numeric_limits<double>::infinity());
            continue;
        }
        res.opt.restart_x.push_back(x);
        res.opt.restart_value.push_back(f);
        any = true;
        if (f > res.log_z_ep) {
            res.log_z_ep = f;
            best_x = x;
        }
    }
    if (!any) throw error("fit_monotonic: EP objective not finite at any restart init");
    res.opt.best_x = best_x;
    res.opt.best_value = res.log_z_ep;
    res.gp = ep_fit(X, y, dps, Hyperparameters::from_log(best_x), nu);
    return res;
}

}  // namespace monogp
