// Command-line front end: generate / fit / predict / benchmark over the
// monogp library. Exit codes: 0 success, 2 configuration or data error,
// 3 numerical failure, 4 acceptance-check failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "monogp/monogp.hpp"

namespace {

using monogp::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitCheckFailed = 4;

std::uint64_t env_seed_fallback() {
    const char* v = std::getenv("MONOGP_SEED");
    if (!v || !*v) return 0;
    return std::strtoull(v, nullptr, 10);
}

// Machine-readable error report on stdout, exit code per error class.
int report_error(const monogp::error& e) {
    const char* type = "numerical";
    int code = kExitNumerical;
    if (dynamic_cast<const monogp::config_error*>(&e)) {
        type = "config";
        code = kExitConfig;
    } else if (dynamic_cast<const monogp::data_error*>(&e) ||
               dynamic_cast<const monogp::shape_error*>(&e)) {
        type = "data";
        code = kExitConfig;
    } else if (dynamic_cast<const monogp::conditioning_error*>(&e)) {
        type = "conditioning";
    } else if (dynamic_cast<const monogp::convergence_error*>(&e)) {
        type = "convergence";
    }
    ordered_json j;
    j["error"]["type"] = type;
    j["error"]["message"] = e.what();
    std::cout << j.dump() << "\n";
    return code;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw monogp::data_error("cannot create output directory " + dir);
}

// ---- generate ---------------------------------------------------------------

struct GenerateArgs {
    std::string name;
    std::string out;
    int n = 0;
    std::optional<std::uint64_t> seed;
    double noise_scale = 1.0;
    bool random_x = false;
};

int cmd_generate(const GenerateArgs& a) {
    const std::uint64_t seed = a.seed ? *a.seed : env_seed_fallback();
    monogp::Dataset ds;
    if (a.name == "logistic") {
        ds = monogp::gen_logistic(a.n > 0 ? a.n : 10, seed, !a.random_x, 0.1 * a.noise_scale);
    } else if (a.name == "hallpetch") {
        ds = monogp::gen_hallpetch(a.n > 0 ? a.n : 20, seed, a.noise_scale);
    } else {
        throw monogp::config_error("generate: unknown generator '" + a.name +
                                   "' (expected logistic or hallpetch)");
    }
    const std::string csv = monogp::to_csv(ds);
    monogp::atomic_write_file(a.out, csv);
    std::cout << "rows=" << ds.rows() << " checksum=" << monogp::fnv1a64_hex(csv)
              << " path=" << a.out << "\n";
    return kExitOk;
}

// ---- fit ----------------------------------------------------------------------

struct FitArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
};

monogp::ExperimentConfig load_config(const std::string& path,
                                     const std::optional<std::uint64_t>& seed_flag) {
    ordered_json j;
    try {
        j = ordered_json::parse(monogp::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw monogp::config_error("config: cannot parse " + path + ": " + e.what());
    }
    monogp::ExperimentConfig cfg;
    try {
        cfg = monogp::config_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw monogp::config_error("config: malformed " + path + ": " + e.what());
    }
    if (seed_flag) {
        cfg.seed = *seed_flag;
        if (!j.contains("optimizer") || !j.at("optimizer").contains("seed"))
            cfg.optimizer.seed = *seed_flag;
    } else if (!j.contains("seed")) {
        cfg.seed = env_seed_fallback();
        if (!j.contains("optimizer") || !j.at("optimizer").contains("seed"))
            cfg.optimizer.seed = cfg.seed;
    }
    return cfg;
}

ordered_json fit_summary(const std::string& model, double objective,
                         const monogp::Hyperparameters& hp, const std::string& dataset_hash,
                         int rows_train, const std::string& model_file) {
    ordered_json j;
    j["schema"] = "monogp-fit-summary";
    j["version"] = 1;
    j["model"] = model;
    j["objective"] = objective;
    ordered_json h;
    h["signal_std"] = hp.signal_std;
    ordered_json ls = ordered_json::array();
    for (long d = 0; d < hp.length_scales.size(); ++d) ls.push_back(hp.length_scales[d]);
    h["length_scales"] = ls;
    h["noise_std"] = hp.noise_std;
    j["hyperparameters"] = h;
    j["dataset_hash"] = dataset_hash;
    j["rows_train"] = rows_train;
    j["model_file"] = model_file;
    return j;
}

int cmd_fit(const FitArgs& a) {
    monogp::ExperimentConfig cfg = load_config(a.config_path, a.seed);
    cfg.validate();
    ensure_dir(cfg.output_dir);
    const monogp::Dataset data = monogp::build_dataset(cfg);
    data.validate();
    const std::string dataset_hash = monogp::fnv1a64_hex(monogp::to_csv(data));
    const monogp::Dataset train = data.subset(monogp::Split::train);
    if (train.rows() < 2) throw monogp::data_error("fit: need at least 2 training rows");

    std::vector<int> dirs(data.dim(), 0);
    for (int d = 0; d < data.dim(); ++d) {
        auto it = cfg.directions.find(data.x_names[d]);
        if (it != cfg.directions.end()) dirs[d] = it->second;
    }

    std::vector<monogp::VectorXd> mono_inits;
    if (cfg.model == "regular" || cfg.model == "both") {
        const monogp::GpFitResult fr = monogp::fit_gp(train.X, train.y, cfg.optimizer);
        monogp::ModelArtifact art;
        art.kind = "regular";
        art.input_columns = data.x_names;
        art.output_column = data.y_name;
        art.regular = fr.gp;
        const std::string model_file = join_path(cfg.output_dir, "model_regular.json");
        monogp::save_model(art, model_file);
        const ordered_json summary = fit_summary("regular", fr.log_marginal, fr.gp.hp,
                                                 dataset_hash, train.rows(), model_file);
        monogp::atomic_write_file(join_path(cfg.output_dir, "summary_regular.json"),
                                  summary.dump(2) + "\n");
        std::cout << "regular: objective=" << fr.log_marginal << " model=" << model_file
                  << "\n";
        if (cfg.mono_init_from_regular) mono_inits.push_back(fr.opt.best_x);
    }
    if (cfg.model == "monotonic" || cfg.model == "both") {
        const monogp::DerivativePointSet dps =
            monogp::place_inducing(train.X, dirs, cfg.m_per_dim, cfg.cap);
        const monogp::MonotonicFitResult fr =
            monogp::fit_monotonic(train.X, train.y, dps, cfg.nu, cfg.optimizer, mono_inits);
        monogp::ModelArtifact art;
        art.kind = "monotonic";
        art.input_columns = data.x_names;
        art.output_column = data.y_name;
        art.monotonic = fr.gp;
        const std::string model_file = join_path(cfg.output_dir, "model_monotonic.json");
        monogp::save_model(art, model_file);
        ordered_json summary = fit_summary("monotonic", fr.log_z_ep, fr.gp.hp, dataset_hash,
                                           train.rows(), model_file);
        summary["ep_sweeps"] = fr.gp.ep.sweeps;
        summary["sites"] = fr.gp.dps.size();
        monogp::atomic_write_file(join_path(cfg.output_dir, "summary_monotonic.json"),
                                  summary.dump(2) + "\n");
        std::cout << "monotonic: objective=" << fr.log_z_ep << " model=" << model_file
                  << "\n";
    }
    return kExitOk;
}

// ---- predict -------------------------------------------------------------------

struct PredictArgs {
    std::string model_path;
    std::string query_csv;
    std::string out_csv;
    bool include_noise = false;
};

int cmd_predict(const PredictArgs& a) {
    const monogp::ModelArtifact art = monogp::load_model(a.model_path);
    const std::string content = monogp::read_file(a.query_csv);
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line))
        throw monogp::data_error("predict: empty query file " + a.query_csv);
    const auto header = monogp::detail::split_line(line);
    std::vector<int> idx;
    for (const auto& col : art.input_columns) {
        int found = -1;
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == col) found = static_cast<int>(i);
        if (found < 0)
            throw monogp::data_error("predict: query is missing model input column " + col);
        idx.push_back(found);
    }
    std::vector<std::vector<double>> rows;
    int row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = monogp::detail::split_line(line);
        if (cells.size() != header.size())
            throw monogp::data_error("predict: row " + std::to_string(row) +
                                     " has wrong cell count");
        std::vector<double> r;
        for (std::size_t k = 0; k < idx.size(); ++k)
            r.push_back(monogp::detail::parse_double(cells[idx[k]], row,
                                                     art.input_columns[k]));
        rows.push_back(std::move(r));
    }

    monogp::MatrixXd Xq(rows.size(), art.input_columns.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t d = 0; d < rows[i].size(); ++d)
            Xq(static_cast<long>(i), static_cast<long>(d)) = rows[i][d];

    monogp::PredictionSet pred;
    if (!rows.empty()) {
        pred = (art.kind == "regular") ? monogp::predict(art.regular, Xq, a.include_noise)
                                       : monogp::ep_predict(art.monotonic, Xq);
    }

    std::ostringstream out;
    for (const auto& col : art.input_columns) out << col << ',';
    out << "mean,std\n";
    for (long i = 0; i < static_cast<long>(rows.size()); ++i) {
        for (long d = 0; d < Xq.cols(); ++d)
            out << monogp::detail::format_double(Xq(i, d)) << ',';
        out << monogp::detail::format_double(pred.mean[i]) << ','
            << monogp::detail::format_double(std::sqrt(pred.var[i])) << '\n';
    }
    monogp::atomic_write_file(a.out_csv, out.str());
    std::cout << "rows=" << rows.size() << " path=" << a.out_csv << "\n";
    return kExitOk;
}

// ---- benchmark -----------------------------------------------------------------

struct BenchmarkArgs {
    std::string experiment;
    std::string config_path;
    std::string out_dir;
    std::string data_path;
    std::string inputs;
    std::string output_col;
    std::string split_col;
    std::vector<std::string> monotone;
    std::optional<std::uint64_t> seed;
    int seeds = 0;
    bool check = false;
};

std::pair<std::string, int> parse_direction(const std::string& spec) {
    const auto pos = spec.rfind(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 >= spec.size())
        throw monogp::config_error("benchmark: bad --monotone spec '" + spec +
                                   "' (expected column:+ or column:-)");
    const std::string name = spec.substr(0, pos);
    const std::string d = spec.substr(pos + 1);
    if (d == "+" || d == "+1" || d == "1") return {name, 1};
    if (d == "-" || d == "-1") return {name, -1};
    if (d == "0") return {name, 0};
    throw monogp::config_error("benchmark: bad direction '" + d + "' in '" + spec + "'");
}

struct CheckFailure {
    std::vector<std::string> lines;
};

void check_line(CheckFailure& cf, bool ok, const std::string& what) {
    std::cout << (ok ? "[CHECK PASS] " : "[CHECK FAIL] ") << what << "\n";
    if (!ok) cf.lines.push_back(what);
}

int cmd_benchmark(const BenchmarkArgs& a) {
    monogp::ExperimentConfig cfg = a.config_path.empty()
                                       ? monogp::default_config(a.experiment)
                                       : load_config(a.config_path, a.seed);
    cfg.experiment = a.experiment;
    if (a.config_path.empty()) {
        cfg.seed = a.seed ? *a.seed : env_seed_fallback();
        cfg.optimizer.seed = cfg.seed;
    }
    if (!a.data_path.empty()) {
        cfg.dataset.source = "csv";
        cfg.dataset.path = a.data_path;
    }
    if (!a.inputs.empty()) {
        cfg.dataset.schema.input_cols.clear();
        std::string cur;
        for (char c : a.inputs + ",") {
            if (c == ',') {
                if (!cur.empty()) cfg.dataset.schema.input_cols.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
    }
    if (!a.output_col.empty()) cfg.dataset.schema.output_col = a.output_col;
    if (!a.split_col.empty()) cfg.dataset.schema.split_col = a.split_col;
    if (!a.monotone.empty()) {
        cfg.directions.clear();
        for (const auto& spec : a.monotone) {
            const auto [name, dir] = parse_direction(spec);
            cfg.directions[name] = dir;
        }
    }
    if (!a.out_dir.empty()) cfg.output_dir = a.out_dir;
    ensure_dir(cfg.output_dir);

    CheckFailure cf;
    if (a.seeds > 0) {
        if (a.experiment != "logistic")
            throw monogp::config_error("benchmark: --seeds is only for the logistic sweep");
        const monogp::SeedSweepResult sweep = monogp::logistic_seed_sweep(cfg, a.seeds);
        const std::string path = join_path(cfg.output_dir, "sweep_logistic.json");
        monogp::atomic_write_file(path, sweep.summary.dump(2) + "\n");
        std::cout << "seeds=" << a.seeds << " monotonic_wins=" << sweep.wins
                  << " path=" << path << "\n";
        if (a.check)
            check_line(cf, sweep.wins * 10 >= a.seeds * 7,
                       "logistic sweep: monotonic wins in >= 70% of seeds");
    } else {
        const monogp::BenchmarkRun run = monogp::run_benchmark(cfg);
        const std::string report_path =
            join_path(cfg.output_dir, "report_" + a.experiment + ".json");
        const std::string grid_path =
            join_path(cfg.output_dir, "grid_" + a.experiment + ".csv");
        monogp::atomic_write_file(report_path, run.report.dump(2) + "\n");
        monogp::atomic_write_file(grid_path, run.grid_csv);
        for (const auto* r : {&run.regular, &run.monotonic}) {
            if (!r->has_value()) continue;
            const monogp::ModelReport& m = **r;
            std::cout << m.model << ": rmse_test=" << m.rmse_test
                      << " mean_std_grid=" << m.mean_std_grid
                      << " violations=" << m.violations.inside << "/"
                      << m.violations.outside << "\n";
        }
        std::cout << "report=" << report_path << " grid=" << grid_path << "\n";
        if (a.check) {
            if (run.monotonic)
                check_line(cf, run.monotonic->violations.inside == 0,
                           a.experiment + ": monotonic model has no violations inside hull");
            if (a.experiment == "hallpetch" && run.monotonic)
                check_line(cf,
                           run.monotonic->violations.inside == 0 &&
                               run.monotonic->violations.outside == 0,
                           "hallpetch: monotonic mean non-increasing over the whole grid");
            if (a.experiment == "fatigue" && run.regular && run.monotonic) {
                check_line(cf, run.monotonic->rmse_test < run.regular->rmse_test,
                           "fatigue: monotonic test RMSE below regular");
                check_line(cf, run.monotonic->rmse_test <= 0.5 * run.regular->rmse_test,
                           "fatigue: monotonic test RMSE at most half of regular");
                check_line(cf, run.monotonic->mean_std_grid < run.regular->mean_std_grid,
                           "fatigue: monotonic mean posterior std below regular on grid");
            }
        }
    }
    if (a.check && !cf.lines.empty()) return kExitCheckFailed;
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"monogp: Gaussian-process regression with monotonicity constraints",
                 "monogp"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
    g->add_option("name", gen.name, "Generator name: logistic | hallpetch")->required();
    g->add_option("--out", gen.out, "Output CSV path")->required();
    g->add_option("--n", gen.n, "Number of rows (0 = generator default)");
    g->add_option("--seed", gen.seed, "RNG seed (default: MONOGP_SEED env, then 0)");
    g->add_option("--noise-scale", gen.noise_scale, "Noise level multiplier");
    g->add_flag("--random-x", gen.random_x,
                "Place logistic inputs uniformly at random instead of equispaced");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Fit model(s) from an experiment config");
    f->add_option("config", fit.config_path, "Experiment config JSON path")->required();
    f->add_option("--seed", fit.seed, "Override the config seed");

    PredictArgs pred;
    auto* p = app.add_subcommand("predict", "Predict mean/std at query points");
    p->add_option("model", pred.model_path, "Model artifact JSON path")->required();
    p->add_option("query", pred.query_csv, "Query CSV with the model's input columns")
        ->required();
    p->add_option("--out", pred.out_csv, "Output CSV path")->required();
    p->add_flag("--include-noise", pred.include_noise,
                "Add observation noise to the reported std (regular model only)");

    BenchmarkArgs bench;
    auto* b = app.add_subcommand("benchmark",
                                 "Fit regular and monotonic models and compare them");
    b->add_option("experiment", bench.experiment,
                  "Experiment: logistic | hallpetch | fatigue | csv")
        ->required();
    b->add_option("--config", bench.config_path, "Experiment config JSON path");
    b->add_option("--out-dir", bench.out_dir, "Output directory for report and grid");
    b->add_option("--data", bench.data_path, "CSV experiment: dataset path");
    b->add_option("--inputs", bench.inputs, "CSV experiment: comma-separated input columns");
    b->add_option("--output-col", bench.output_col, "CSV experiment: output column");
    b->add_option("--split-col", bench.split_col, "CSV experiment: split column");
    b->add_option("--monotone", bench.monotone,
                  "Monotone direction as column:+ or column:- (repeatable)");
    b->add_option("--seed", bench.seed, "Dataset seed (default: MONOGP_SEED env, then 0)");
    b->add_option("--seeds", bench.seeds, "Logistic: run a sweep over this many seeds");
    b->add_flag("--check", bench.check,
                "Assert the experiment's acceptance conditions (exit 4 on failure)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*g) return cmd_generate(gen);
        if (*f) return cmd_fit(fit);
        if (*p) return cmd_predict(pred);
        if (*b) return cmd_benchmark(bench);
    } catch (const monogp::error& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        ordered_json j;
        j["error"]["type"] = "internal";
        j["error"]["message"] = e.what();
        std::cout << j.dump() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
