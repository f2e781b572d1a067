#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "monogp/datasets.hpp"
#include "monogp/ep_monotonic.hpp"
#include "monogp/gp_regression.hpp"
#include "monogp/hyperopt.hpp"
#include "monogp/io_util.hpp"
#include "monogp/metrics.hpp"
#include "monogp/types.hpp"

namespace monogp {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kExperimentSchema = "monogp-experiment";
inline constexpr int kExperimentVersion = 1;

struct DatasetConfig {
    std::string source = "builtin";  // "builtin" | "csv"
    std::string name = "logistic";   // builtin generator name
    int n = 0;                       // generator rows; 0 keeps the module default
    double noise_scale = 1.0;        // multiplies the generator's noise level
    bool equispaced = true;          // logistic input placement
    double log_base = 10.0;          // fatigue life log base
    std::string path;                // csv file
    CsvSchema schema;                // csv columns
};

// Full experiment specification; a single JSON document drives fit, predict,
// and benchmark runs.
struct ExperimentConfig {
    std::string experiment = "logistic";  // logistic | hallpetch | fatigue | csv
    DatasetConfig dataset;
    std::string model = "both";  // regular | monotonic | both
    // Monotonicity direction per input column: +1 increasing, -1 decreasing,
    // 0 unconstrained. Columns absent from the map are unconstrained.
    std::map<std::string, int> directions;
    int m_per_dim = 0;  // inducing grid density; 0 keeps the module default
    int cap = 100;      // hard cap on derivative sites
    double nu = 1e-6;   // probit steepness
    OptimizerConfig optimizer;
    std::string output_dir = ".";
    std::uint64_t seed = 0;  // dataset seed
    // Seed the monotonic search with the regular model's optimum as an extra
    // restart candidate (only meaningful when model == "both").
    bool mono_init_from_regular = true;

    void validate() const {
        if (experiment != "logistic" && experiment != "hallpetch" && experiment != "fatigue" &&
            experiment != "csv")
            throw config_error("config: unknown experiment '" + experiment + "'");
        if (model != "regular" && model != "monotonic" && model != "both")
            throw config_error("config: model must be regular, monotonic, or both");
        if (dataset.source != "builtin" && dataset.source != "csv")
            throw config_error("config: dataset.source must be builtin or csv");
        if (experiment == "csv") {
            if (dataset.source != "csv" || dataset.path.empty())
                throw config_error("config: csv experiment needs dataset.source=csv and a path");
            if (dataset.schema.input_cols.empty() || dataset.schema.output_col.empty())
                throw config_error("config: csv experiment needs input/output columns");
        } else if (dataset.source == "builtin" && dataset.name != experiment) {
            throw config_error("config: builtin dataset name must match the experiment");
        }
        if (!(nu > 0.0)) throw config_error("config: nu must be > 0");
        if (cap < 1) throw config_error("config: cap must be >= 1");
        if (model != "regular") {
            bool any = false;
            for (const auto& [name, dir] : directions) {
                if (dir < -1 || dir > 1)
                    throw config_error("config: direction for " + name + " must be -1, 0, or +1");
                any = any || dir != 0;
            }
            if (!any)
                throw config_error(
                    "config: monotonic model requires at least one nonzero direction");
        }
        optimizer.validate();
    }
};

// Fully-populated configuration for one of the builtin experiments.
inline ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    cfg.dataset.name = experiment;
    if (experiment == "logistic") {
        cfg.directions = {{"x", 1}};
    } else if (experiment == "hallpetch") {
        cfg.directions = {{"d", -1}};
        // The heteroscedastic example needs a denser constraint grid than the
        // 1-D default to pin the flat tail down.
        cfg.m_per_dim = 20;
    } else if (experiment == "fatigue") {
        cfg.directions = {{"sigma_a", -1}};
    } else if (experiment == "csv") {
        cfg.dataset.source = "csv";
    } else {
        throw config_error("config: unknown experiment '" + experiment + "'");
    }
    return cfg;
}

inline ordered_json config_to_json(const ExperimentConfig& cfg) {
    ordered_json j;
    j["schema"] = kExperimentSchema;
    j["version"] = kExperimentVersion;
    j["experiment"] = cfg.experiment;
    ordered_json d;
    d["source"] = cfg.dataset.source;
    if (cfg.dataset.source == "builtin") {
        d["name"] = cfg.dataset.name;
        d["n"] = cfg.dataset.n;
        d["noise_scale"] = cfg.dataset.noise_scale;
        d["equispaced"] = cfg.dataset.equispaced;
        d["log_base"] = cfg.dataset.log_base;
    } else {
        d["path"] = cfg.dataset.path;
        d["input_cols"] = cfg.dataset.schema.input_cols;
        d["output_col"] = cfg.dataset.schema.output_col;
        d["split_col"] = cfg.dataset.schema.split_col;
    }
    j["dataset"] = d;
    j["model"] = cfg.model;
    ordered_json dirs;
    for (const auto& [name, dir] : cfg.directions) dirs[name] = dir;
    j["directions"] = dirs;
    ordered_json ind;
    ind["m_per_dim"] = cfg.m_per_dim;
    ind["cap"] = cfg.cap;
    j["inducing"] = ind;
    j["nu"] = cfg.nu;
    ordered_json opt;
    opt["max_iterations"] = cfg.optimizer.max_iterations;
    opt["restarts"] = cfg.optimizer.restarts;
    opt["convergence_tol"] = cfg.optimizer.convergence_tol;
    opt["seed"] = cfg.optimizer.seed;
    opt["bound_halfwidth"] = cfg.optimizer.bound_halfwidth;
    j["optimizer"] = opt;
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["mono_init_from_regular"] = cfg.mono_init_from_regular;
    return j;
}

inline ExperimentConfig config_from_json(const ordered_json& j) {
    if (!j.contains("schema") || j.at("schema").get<std::string>() != kExperimentSchema)
        throw config_error("config: missing or unknown schema tag");
    if (j.at("version").get<int>() > kExperimentVersion)
        throw config_error("config: file version newer than supported");
    ExperimentConfig cfg;
    cfg.experiment = j.at("experiment").get<std::string>();
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        if (d.contains("source")) cfg.dataset.source = d.at("source").get<std::string>();
        cfg.dataset.name = d.value("name", cfg.experiment);
        cfg.dataset.n = d.value("n", 0);
        cfg.dataset.noise_scale = d.value("noise_scale", 1.0);
        cfg.dataset.equispaced = d.value("equispaced", true);
        cfg.dataset.log_base = d.value("log_base", 10.0);
        cfg.dataset.path = d.value("path", std::string());
        if (d.contains("input_cols"))
            cfg.dataset.schema.input_cols = d.at("input_cols").get<std::vector<std::string>>();
        cfg.dataset.schema.output_col = d.value("output_col", std::string());
        cfg.dataset.schema.split_col = d.value("split_col", std::string());
    } else {
        cfg.dataset.name = cfg.experiment;
        if (cfg.experiment == "csv") cfg.dataset.source = "csv";
    }
    cfg.model = j.value("model", std::string("both"));
    if (j.contains("directions"))
        for (const auto& [name, dir] : j.at("directions").items())
            cfg.directions[name] = dir.get<int>();
    else
        cfg.directions = default_config(cfg.experiment).directions;
    if (cfg.directions.empty() && cfg.experiment != "csv")
        cfg.directions = default_config(cfg.experiment).directions;
    if (j.contains("inducing")) {
        cfg.m_per_dim = j.at("inducing").value("m_per_dim", 0);
        cfg.cap = j.at("inducing").value("cap", 100);
    } else if (cfg.experiment == "hallpetch") {
        cfg.m_per_dim = default_config("hallpetch").m_per_dim;
    }
    cfg.nu = j.value("nu", 1e-6);
    if (j.contains("optimizer")) {
        const auto& o = j.at("optimizer");
        cfg.optimizer.max_iterations = o.value("max_iterations", 6000);
        cfg.optimizer.restarts = o.value("restarts", 5);
        cfg.optimizer.convergence_tol = o.value("convergence_tol", 1e-5);
        cfg.optimizer.bound_halfwidth = o.value("bound_halfwidth", 10.0);
        cfg.optimizer.seed = o.value("seed", j.value("seed", 0ull));
    } else {
        cfg.optimizer.seed = j.value("seed", 0ull);
    }
    cfg.output_dir = j.value("output_dir", std::string("."));
    cfg.seed = j.value("seed", 0ull);
    cfg.mono_init_from_regular = j.value("mono_init_from_regular", true);
    return cfg;
}

// ---- evaluation protocol ---------------------------------------------------

inline Dataset build_dataset(const ExperimentConfig& cfg) {
    const auto& d = cfg.dataset;
    if (d.source == "csv") return load_csv(d.path, d.schema);
    if (d.name == "logistic")
        return gen_logistic(d.n > 0 ? d.n : 10, cfg.seed, d.equispaced, 0.1 * d.noise_scale);
    if (d.name == "hallpetch")
        return gen_hallpetch(d.n > 0 ? d.n : 20, cfg.seed, d.noise_scale);
    if (d.name == "fatigue") return fatigue_s355n(d.log_base);
    throw config_error("config: unknown builtin dataset '" + d.name + "'");
}

// One axis-aligned pass of the evaluation grid: `len` rows starting at `start`
// vary dimension `dim` monotonically; the rest of the coordinates are fixed.
struct GridSweep {
    int start = 0;
    int len = 0;
    int dim = 0;
    int direction = 0;  // expected sign of d mean / d x_dim
};

struct EvalGrid {
    MatrixXd X;
    std::vector<GridSweep> sweeps;
};

namespace detail {

inline double column_median(const MatrixXd& X, int d) {
    std::vector<double> v(X.rows());
    for (long i = 0; i < X.rows(); ++i) v[static_cast<std::size_t>(i)] = X(i, d);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline EvalGrid line_grid(double lo, double hi, int points, int direction) {
    EvalGrid g;
    g.X.resize(points, 1);
    for (int i = 0; i < points; ++i) g.X(i, 0) = lo + (hi - lo) * i / (points - 1);
    g.sweeps.push_back({0, points, 0, direction});
    return g;
}

}  // namespace detail

// Evaluation grid for an experiment. Builtins use the figure ranges; CSV data
// gets one 200-point sweep per constrained dimension across its data range,
// with the other coordinates anchored at the training median.
inline EvalGrid build_grid(const ExperimentConfig& cfg, const Dataset& data,
                           const std::vector<int>& dirs) {
    if (cfg.experiment == "logistic") return detail::line_grid(-3.0, 3.0, 100, dirs[0]);
    if (cfg.experiment == "hallpetch") return detail::line_grid(15.0, 350.0, 200, dirs[0]);
    if (cfg.experiment == "fatigue") return detail::line_grid(320.0, 700.0, 200, dirs[0]);
    // csv: anchored sweeps
    const Dataset train = data.subset(Split::train);
    EvalGrid g;
    const int d_in = data.dim();
    std::vector<int> sweep_dims;
    for (int d = 0; d < d_in; ++d)
        if (dirs[d] != 0) sweep_dims.push_back(d);
    if (sweep_dims.empty()) sweep_dims.push_back(0);  // unconstrained run still gets a grid
    const int pts = 200;
    g.X.resize(pts * static_cast<long>(sweep_dims.size()), d_in);
    VectorXd anchor(d_in);
    for (int d = 0; d < d_in; ++d) anchor[d] = detail::column_median(train.X, d);
    const VectorXd lo = data.X.colwise().minCoeff();
    const VectorXd hi = data.X.colwise().maxCoeff();
    int row = 0;
    for (int sd : sweep_dims) {
        if (!(hi[sd] > lo[sd]))
            throw data_error("benchmark: degenerate range in swept column " + data.x_names[sd]);
        g.sweeps.push_back({row, pts, sd, dirs[sd]});
        for (int i = 0; i < pts; ++i, ++row) {
            g.X.row(row) = anchor.transpose();
            g.X(row, sd) = lo[sd] + (hi[sd] - lo[sd]) * i / (pts - 1);
        }
    }
    return g;
}

struct ViolationCount {
    long inside = 0;
    long outside = 0;
};

// Count slope tolerance violations along each sweep. The tolerance is
// relative: 1e-3 of the mean's range per unit of the swept input's range.
// Segments whose midpoint lies inside the training hull count as `inside`.
inline ViolationCount count_violations(const EvalGrid& grid, const VectorXd& mean,
                                       const MatrixXd& train_X) {
    ViolationCount out;
    const VectorXd hull_lo = train_X.colwise().minCoeff();
    const VectorXd hull_hi = train_X.colwise().maxCoeff();
    for (const auto& sw : grid.sweeps) {
        if (sw.direction == 0 || sw.len < 2) continue;
        double m_lo = mean[sw.start], m_hi = mean[sw.start];
        for (int i = 1; i < sw.len; ++i) {
            m_lo = std::min(m_lo, mean[sw.start + i]);
            m_hi = std::max(m_hi, mean[sw.start + i]);
        }
        const double x_range =
            grid.X(sw.start + sw.len - 1, sw.dim) - grid.X(sw.start, sw.dim);
        const double tol = 1e-3 * (m_hi - m_lo) / std::abs(x_range);
        for (int i = 0; i + 1 < sw.len; ++i) {
            const int a = sw.start + i;
            const double dx = grid.X(a + 1, sw.dim) - grid.X(a, sw.dim);
            const double slope = (mean[a + 1] - mean[a]) / dx;
            const bool bad = (sw.direction > 0) ? (slope < -tol) : (slope > tol);
            if (!bad) continue;
            const double mid = 0.5 * (grid.X(a, sw.dim) + grid.X(a + 1, sw.dim));
            bool in_hull = mid >= hull_lo[sw.dim] && mid <= hull_hi[sw.dim];
            for (int d = 0; d < train_X.cols() && in_hull; ++d)
                if (d != sw.dim)
                    in_hull = grid.X(a, d) >= hull_lo[d] && grid.X(a, d) <= hull_hi[d];
            (in_hull ? out.inside : out.outside) += 1;
        }
    }
    return out;
}

// ---- reports ----------------------------------------------------------------

struct ModelReport {
    std::string model;  // "regular" | "monotonic"
    Hyperparameters hp;
    double objective = 0.0;  // log marginal (regular) or log Z_EP (monotonic)
    double rmse_test = std::numeric_limits<double>::quiet_NaN();
    double rmse_test_raw = std::numeric_limits<double>::quiet_NaN();  // raw-life units
    double rmse_train = std::numeric_limits<double>::quiet_NaN();
    double r2_test = std::numeric_limits<double>::quiet_NaN();
    double mean_std_test = std::numeric_limits<double>::quiet_NaN();
    double max_std_test = std::numeric_limits<double>::quiet_NaN();
    double coverage90 = std::numeric_limits<double>::quiet_NaN();
    double coverage68 = std::numeric_limits<double>::quiet_NaN();
    double mean_std_grid = std::numeric_limits<double>::quiet_NaN();
    double max_std_grid = std::numeric_limits<double>::quiet_NaN();
    ViolationCount violations;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    int clamped = 0;  // negative predictive variances clamped to zero
};

namespace detail {

inline ordered_json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

inline ordered_json report_json(const ModelReport& r) {
    ordered_json j;
    j["model"] = r.model;
    ordered_json hp;
    hp["signal_std"] = r.hp.signal_std;
    ordered_json ls = ordered_json::array();
    for (long d = 0; d < r.hp.length_scales.size(); ++d) ls.push_back(r.hp.length_scales[d]);
    hp["length_scales"] = ls;
    hp["noise_std"] = r.hp.noise_std;
    j["hyperparameters"] = hp;
    j["objective"] = finite_or_null(r.objective);
    j["rmse_test"] = finite_or_null(r.rmse_test);
    j["rmse_test_raw_life"] = finite_or_null(r.rmse_test_raw);
    j["rmse_train"] = finite_or_null(r.rmse_train);
    j["r2_test"] = finite_or_null(r.r2_test);
    j["mean_std_test"] = finite_or_null(r.mean_std_test);
    j["max_std_test"] = finite_or_null(r.max_std_test);
    j["coverage90"] = finite_or_null(r.coverage90);
    j["coverage68"] = finite_or_null(r.coverage68);
    j["mean_std_grid"] = finite_or_null(r.mean_std_grid);
    j["max_std_grid"] = finite_or_null(r.max_std_grid);
    j["violations_inside_hull"] = r.violations.inside;
    j["violations_outside_hull"] = r.violations.outside;
    j["fit_seconds"] = r.fit_seconds;
    j["predict_seconds"] = r.predict_seconds;
    j["variance_clamps"] = r.clamped;
    return j;
}

template <typename F>
double timed(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace detail

struct BenchmarkRun {
    ExperimentConfig cfg;
    Dataset data;
    std::string dataset_hash;
    Dataset train;
    Dataset test;
    EvalGrid grid;
    bool evaluated_on_train = false;  // csv data without a test split
    std::optional<GpFitResult> regular_fit;
    std::optional<MonotonicFitResult> monotonic_fit;
    std::optional<ModelReport> regular;
    std::optional<ModelReport> monotonic;
    PredictionSet regular_grid;
    PredictionSet monotonic_grid;
    ordered_json report;
    std::string grid_csv;
};

// Fit the requested models on identical data and emit the comparison report
// plus a prediction-grid CSV for plotting. Deterministic given the config
// (wall-clock time fields aside).
inline BenchmarkRun run_benchmark(const ExperimentConfig& cfg) {
    cfg.validate();
    BenchmarkRun run;
    run.cfg = cfg;
    run.data = build_dataset(cfg);
    run.data.validate();
    run.dataset_hash = fnv1a64_hex(to_csv(run.data));
    run.train = run.data.subset(Split::train);
    run.test = run.data.subset(Split::test);
    if (run.train.rows() < 2) throw data_error("benchmark: need at least 2 training rows");

    std::vector<int> dirs(run.data.dim(), 0);
    for (int d = 0; d < run.data.dim(); ++d) {
        auto it = cfg.directions.find(run.data.x_names[d]);
        if (it != cfg.directions.end()) dirs[d] = it->second;
    }
    for (const auto& [name, dir] : cfg.directions)
        if (dir != 0 &&
            std::find(run.data.x_names.begin(), run.data.x_names.end(), name) ==
                run.data.x_names.end())
            throw config_error("config: direction references unknown column " + name);

    run.grid = build_grid(cfg, run.data, dirs);

    // Evaluation targets: synthetic experiments score against the noiseless
    // truth on the grid; data-driven experiments score on the test split.
    MatrixXd target_X;
    VectorXd truth;
    if (cfg.experiment == "logistic") {
        target_X = run.grid.X;
        truth.resize(target_X.rows());
        for (long i = 0; i < target_X.rows(); ++i) truth[i] = logistic(target_X(i, 0));
    } else if (cfg.experiment == "hallpetch") {
        target_X = run.grid.X;
        truth.resize(target_X.rows());
        for (long i = 0; i < target_X.rows(); ++i) truth[i] = hallpetch_mean(target_X(i, 0));
    } else if (run.test.rows() > 0) {
        target_X = run.test.X;
        truth = run.test.y;
    } else {
        target_X = run.train.X;
        truth = run.train.y;
        run.evaluated_on_train = true;
    }

    const auto evaluate = [&](const std::string& name, auto&& predict_fn, double objective,
                              const Hyperparameters& hp, double fit_seconds) {
        ModelReport r;
        r.model = name;
        r.hp = hp;
        r.objective = objective;
        PredictionSet target_pred, grid_pred, train_pred;
        r.predict_seconds = detail::timed([&] {
            target_pred = predict_fn(target_X);
            grid_pred = predict_fn(run.grid.X);
        });
        train_pred = predict_fn(run.train.X);
        r.fit_seconds = fit_seconds;
        r.clamped = target_pred.clamp_count + grid_pred.clamp_count;
        r.rmse_test = rmse(target_pred.mean, truth);
        r.rmse_train = rmse(train_pred.mean, run.train.y);
        const VectorXd target_std = target_pred.var.array().sqrt();
        if (truth.size() >= 2 && (truth.array() - truth.mean()).abs().maxCoeff() > 0.0)
            r.r2_test = r_squared(target_pred.mean, truth);
        r.mean_std_test = target_std.mean();
        r.max_std_test = target_std.maxCoeff();
        r.coverage90 = coverage(target_pred.mean, target_std, truth, 1.645);
        r.coverage68 = coverage(target_pred.mean, target_std, truth, 1.0);
        const VectorXd grid_std = grid_pred.var.array().sqrt();
        r.mean_std_grid = grid_std.mean();
        r.max_std_grid = grid_std.maxCoeff();
        r.violations = count_violations(run.grid, grid_pred.mean, run.train.X);
        if (cfg.experiment == "fatigue" && run.data.aux.count("n_exp") && run.test.rows() > 0) {
            // Raw-life RMSE alongside the log-life one, since both unit
            // conventions are in common use for fatigue comparisons.
            VectorXd raw_pred(target_pred.mean.size());
            for (long i = 0; i < raw_pred.size(); ++i)
                raw_pred[i] = std::pow(cfg.dataset.log_base, target_pred.mean[i]);
            r.rmse_test_raw = rmse(raw_pred, run.test.aux.at("n_exp"));
        }
        return std::pair<ModelReport, PredictionSet>(std::move(r), std::move(grid_pred));
    };

    std::vector<VectorXd> mono_extra_inits;
    if (cfg.model == "regular" || cfg.model == "both") {
        GpFitResult fr;
        const double secs = detail::timed([&] {
            try {
                fr = fit_gp(run.train.X, run.train.y, cfg.optimizer);
            } catch (const conditioning_error& e) {
                throw conditioning_error(std::string("regular fit: ") + e.what(),
                                         e.attempted_jitters);
            } catch (const error& e) {
                throw error(std::string("regular fit: ") + e.what());
            }
        });
        auto [rep, grid_pred] = evaluate(
            "regular", [&](const MatrixXd& q) { return predict(fr.gp, q); }, fr.log_marginal,
            fr.gp.hp, secs);
        if (cfg.mono_init_from_regular) mono_extra_inits.push_back(fr.opt.best_x);
        run.regular = std::move(rep);
        run.regular_grid = std::move(grid_pred);
        run.regular_fit = std::move(fr);
    }
    if (cfg.model == "monotonic" || cfg.model == "both") {
        const DerivativePointSet dps =
            place_inducing(run.train.X, dirs, cfg.m_per_dim, cfg.cap);
        MonotonicFitResult fr;
        const double secs = detail::timed([&] {
            try {
                fr = fit_monotonic(run.train.X, run.train.y, dps, cfg.nu, cfg.optimizer,
                                   mono_extra_inits);
            } catch (const convergence_error& e) {
                throw convergence_error(std::string("monotonic fit: ") + e.what(),
                                        e.last_max_delta);
            } catch (const conditioning_error& e) {
                throw conditioning_error(std::string("monotonic fit: ") + e.what(),
                                         e.attempted_jitters);
            } catch (const error& e) {
                throw error(std::string("monotonic fit: ") + e.what());
            }
        });
        auto [rep, grid_pred] = evaluate(
            "monotonic", [&](const MatrixXd& q) { return ep_predict(fr.gp, q); }, fr.log_z_ep,
            fr.gp.hp, secs);
        run.monotonic = std::move(rep);
        run.monotonic_grid = std::move(grid_pred);
        run.monotonic_fit = std::move(fr);
    }

    // Prediction-grid CSV: inputs, then mean/std per fitted model.
    {
        std::ostringstream out;
        for (const auto& n : run.data.x_names) out << n << ',';
        std::vector<const PredictionSet*> preds;
        std::vector<std::string> tags;
        if (run.regular) {
            preds.push_back(&run.regular_grid);
            tags.push_back("regular");
        }
        if (run.monotonic) {
            preds.push_back(&run.monotonic_grid);
            tags.push_back("monotonic");
        }
        for (std::size_t k = 0; k < tags.size(); ++k) {
            out << tags[k] << "_mean," << tags[k] << "_std";
            if (k + 1 < tags.size()) out << ',';
        }
        out << '\n';
        for (long i = 0; i < run.grid.X.rows(); ++i) {
            for (int d = 0; d < run.data.dim(); ++d)
                out << detail::format_double(run.grid.X(i, d)) << ',';
            for (std::size_t k = 0; k < preds.size(); ++k) {
                out << detail::format_double(preds[k]->mean[i]) << ','
                    << detail::format_double(std::sqrt(preds[k]->var[i]));
                if (k + 1 < preds.size()) out << ',';
            }
            out << '\n';
        }
        run.grid_csv = out.str();
    }

    ordered_json rj;
    rj["schema"] = "monogp-report";
    rj["version"] = 1;
    rj["experiment"] = cfg.experiment;
    rj["dataset_hash"] = run.dataset_hash;
    rj["rows_train"] = run.train.rows();
    rj["rows_test"] = run.test.rows();
    rj["evaluated_on_train"] = run.evaluated_on_train;
    if (run.regular) rj["regular"] = detail::report_json(*run.regular);
    if (run.monotonic) rj["monotonic"] = detail::report_json(*run.monotonic);
    rj["config"] = config_to_json(cfg);
    run.report = std::move(rj);
    return run;
}

// ---- logistic seed sweep -----------------------------------------------------

struct SeedSweepRow {
    std::uint64_t seed = 0;
    double rmse_regular = 0.0;
    double rmse_monotonic = 0.0;
    bool monotonic_wins = false;
};

struct SeedSweepResult {
    std::vector<SeedSweepRow> rows;
    int wins = 0;
    ordered_json summary;
};

// Repeat the logistic benchmark over consecutive dataset seeds and tally how
// often the constrained model matches or beats the regular one against the
// noiseless truth.
inline SeedSweepResult logistic_seed_sweep(ExperimentConfig cfg, int n_seeds) {
    if (n_seeds < 1) throw config_error("seed sweep: n_seeds must be >= 1");
    cfg.model = "both";
    SeedSweepResult out;
    ordered_json rows = ordered_json::array();
    for (int s = 0; s < n_seeds; ++s) {
        cfg.seed = static_cast<std::uint64_t>(s);
        cfg.optimizer.seed = cfg.seed;
        const BenchmarkRun run = run_benchmark(cfg);
        SeedSweepRow row;
        row.seed = cfg.seed;
        row.rmse_regular = run.regular->rmse_test;
        row.rmse_monotonic = run.monotonic->rmse_test;
        row.monotonic_wins = row.rmse_monotonic <= row.rmse_regular;
        if (row.monotonic_wins) ++out.wins;
        out.rows.push_back(row);
        ordered_json r;
        r["seed"] = row.seed;
        r["rmse_regular"] = row.rmse_regular;
        r["rmse_monotonic"] = row.rmse_monotonic;
        r["monotonic_wins"] = row.monotonic_wins;
        rows.push_back(r);
    }
    ordered_json j;
    j["schema"] = "monogp-seed-sweep";
    j["version"] = 1;
    j["seeds"] = n_seeds;
    j["monotonic_wins"] = out.wins;
    j["win_fraction"] = static_cast<double>(out.wins) / n_seeds;
    j["rows"] = rows;
    out.summary = std::move(j);
    return out;
}

}  // namespace monogp
