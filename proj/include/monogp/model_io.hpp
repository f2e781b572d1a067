#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "json.hpp"
#include "monogp/datasets.hpp"
#include "monogp/ep_monotonic.hpp"
#include "monogp/gp_regression.hpp"
#include "monogp/io_util.hpp"
#include "monogp/types.hpp"

namespace monogp {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kModelSchema = "monogp-model";
inline constexpr int kModelVersion = 1;

// A fitted model plus the column names needed to validate prediction queries.
// Exactly one of `regular` / `monotonic` is meaningful, per `kind`.
struct ModelArtifact {
    std::string kind;  // "regular" | "monotonic"
    std::vector<std::string> input_columns;
    std::string output_column;
    FittedGP regular;
    MonotonicGP monotonic;
};

namespace detail {

inline ordered_json matrix_rows(const MatrixXd& m) {
    ordered_json a = ordered_json::array();
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
    return a;
}

inline MatrixXd matrix_from_rows(const ordered_json& a, long rows, long cols,
                                 const std::string& what) {
    if (static_cast<long>(a.size()) != rows * cols)
        throw data_error("model: " + what + " has " + std::to_string(a.size()) +
                         " entries, expected " + std::to_string(rows * cols));
    MatrixXd m(rows, cols);
    long k = 0;
    for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) m(i, j) = a[k++].get<double>();
    return m;
}

inline ordered_json vector_json(const VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline VectorXd vector_from_json(const ordered_json& a) {
    VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<long>(i)] = a[i].get<double>();
    return v;
}

// Content hash of the training block, recorded so artifacts can be tied back
// to the dataset they were fit on.
inline std::string training_hash(const MatrixXd& X, const VectorXd& y) {
    std::string s;
    for (long i = 0; i < X.rows(); ++i) {
        for (long j = 0; j < X.cols(); ++j) {
            s += format_double(X(i, j));
            s += ',';
        }
        s += format_double(y[i]);
        s += '\n';
    }
    return fnv1a64_hex(s);
}

inline ordered_json hp_json(const Hyperparameters& hp) {
    ordered_json j;
    j["signal_std"] = hp.signal_std;
    j["length_scales"] = vector_json(hp.length_scales);
    j["noise_std"] = hp.noise_std;
    return j;
}

inline Hyperparameters hp_from_json(const ordered_json& j) {
    Hyperparameters hp;
    hp.signal_std = j.at("signal_std").get<double>();
    hp.length_scales = vector_from_json(j.at("length_scales"));
    hp.noise_std = j.at("noise_std").get<double>();
    hp.validate();
    return hp;
}

}  // namespace detail

inline ordered_json model_to_json(const ModelArtifact& art) {
    if (art.kind != "regular" && art.kind != "monotonic")
        throw config_error("model: kind must be 'regular' or 'monotonic'");
    const bool mono = art.kind == "monotonic";
    if (mono && !art.monotonic.ep.converged)
        throw error("model: refusing to serialize a non-converged monotonic fit");
    const Hyperparameters& hp = mono ? art.monotonic.hp : art.regular.hp;
    const MatrixXd& X = mono ? art.monotonic.X : art.regular.X;
    const VectorXd& y = mono ? art.monotonic.y : art.regular.y;
    const double y_mean = mono ? art.monotonic.y_mean : art.regular.y_mean;

    ordered_json j;
    j["schema"] = kModelSchema;
    j["version"] = kModelVersion;
    j["kind"] = art.kind;
    j["input_columns"] = art.input_columns;
    j["output_column"] = art.output_column;
    j["hyperparameters"] = detail::hp_json(hp);
    ordered_json tr;
    tr["rows"] = X.rows();
    tr["cols"] = X.cols();
    tr["x"] = detail::matrix_rows(X);
    tr["y"] = detail::vector_json(y);
    tr["y_mean"] = y_mean;
    tr["hash"] = detail::training_hash(X, y);
    j["training"] = tr;
    if (mono) {
        const MonotonicGP& gp = art.monotonic;
        ordered_json c;
        c["nu"] = gp.nu;
        c["points"] = gp.dps.size();
        c["locations"] = detail::matrix_rows(gp.dps.locations);
        c["dims"] = gp.dps.dims;
        c["signs"] = gp.dps.signs;
        j["constraint"] = c;
        ordered_json ep;
        ep["tau_site"] = detail::vector_json(gp.ep.tau_site);
        ep["nu_site"] = detail::vector_json(gp.ep.nu_site);
        ep["sweeps"] = gp.ep.sweeps;
        ep["max_delta"] = gp.ep.max_delta;
        j["ep"] = ep;
    }
    return j;
}

// Rebuild a converged monotonic fit from stored site parameters without
// re-running EP sweeps; every step is deterministic, so a loaded model
// predicts identically to the one that was saved.
namespace detail {

inline MonotonicGP reconstruct_monotonic(const Hyperparameters& hp, const MatrixXd& X,
                                         const VectorXd& y, double y_mean,
                                         const DerivativePointSet& dps, double nu,
                                         const VectorXd& tau_site, const VectorXd& nu_site,
                                         int sweeps, double max_delta) {
    const int n = static_cast<int>(X.rows());
    const int m = dps.size();
    MonotonicGP gp;
    gp.hp = hp;
    gp.X = X;
    gp.y = y;
    gp.y_mean = y_mean;
    gp.dps = dps;
    gp.nu = nu;
    const VectorXd y0 = y.array() - y_mean;
    const double eta2 = hp.signal_std * hp.signal_std;
    MatrixXd K = assemble_blocks(X, dps, hp);
    const auto kf = chol_with_jitter(K, kJitterRel * eta2, kJitterRetryRel * eta2, "load_model");
    gp.ep.jitter = kf.jitter;
    K.diagonal().array() += kf.jitter;
    gp.K_joint = K;
    gp.ep.tau_site = tau_site;
    gp.ep.nu_site = nu_site;
    gp.ep.sweeps = sweeps;
    gp.ep.max_delta = max_delta;
    gp.ep.converged = true;
    // Posterior refresh in precision form, exactly as at the end of ep_fit.
    const double tau_data = 1.0 / std::max(hp.noise_std * hp.noise_std, 1e-12);
    VectorXd nu_all(n + m);
    nu_all.head(n) = y0 * tau_data;
    nu_all.tail(m) = nu_site;
    MatrixXd P = kf.llt.solve(MatrixXd::Identity(n + m, n + m));
    for (int j = 0; j < n; ++j) P(j, j) += tau_data;
    for (int i = 0; i < m; ++i) P(n + i, n + i) += tau_site[i];
    Eigen::PartialPivLU<MatrixXd> lu(P);
    gp.ep.Sigma = lu.solve(MatrixXd::Identity(n + m, n + m));
    gp.ep.Sigma = 0.5 * (gp.ep.Sigma + gp.ep.Sigma.transpose());
    gp.ep.mu = gp.ep.Sigma * nu_all;
    ep_finalize(gp, y0);
    return gp;
}

}  // namespace detail

inline ModelArtifact model_from_json(const ordered_json& j) {
    if (!j.contains("schema") || j.at("schema").get<std::string>() != kModelSchema)
        throw data_error("model: missing or unknown schema tag");
    if (j.at("version").get<int>() > kModelVersion)
        throw data_error("model: file version newer than supported");
    ModelArtifact art;
    art.kind = j.at("kind").get<std::string>();
    if (art.kind != "regular" && art.kind != "monotonic")
        throw data_error("model: unknown kind '" + art.kind + "'");
    art.input_columns = j.at("input_columns").get<std::vector<std::string>>();
    art.output_column = j.at("output_column").get<std::string>();
    const Hyperparameters hp = detail::hp_from_json(j.at("hyperparameters"));
    const auto& tr = j.at("training");
    const long rows = tr.at("rows").get<long>();
    const long cols = tr.at("cols").get<long>();
    const MatrixXd X = detail::matrix_from_rows(tr.at("x"), rows, cols, "training.x");
    const VectorXd y = detail::vector_from_json(tr.at("y"));
    if (y.size() != rows) throw data_error("model: training.y length mismatch");
    const double y_mean = tr.at("y_mean").get<double>();
    if (static_cast<long>(art.input_columns.size()) != cols)
        throw data_error("model: input_columns/cols mismatch");

    if (art.kind == "regular") {
        FittedGP gp;
        gp.hp = hp;
        gp.X = X;
        gp.y = y;
        gp.y_mean = y_mean;
        const double eta2 = hp.signal_std * hp.signal_std;
        DerivativePointSet empty;
        MatrixXd C = assemble_blocks(X, empty, hp);
        C.diagonal().array() += hp.noise_std * hp.noise_std;
        auto f = chol_with_jitter(C, kJitterRel * eta2, kJitterRetryRel * eta2, "load_model");
        gp.llt = std::move(f.llt);
        gp.jitter = f.jitter;
        gp.alpha = gp.llt.solve((y.array() - y_mean).matrix());
        art.regular = std::move(gp);
        return art;
    }

    const auto& c = j.at("constraint");
    DerivativePointSet dps;
    const long m = c.at("points").get<long>();
    dps.locations = detail::matrix_from_rows(c.at("locations"), m, cols, "constraint.locations");
    dps.dims = c.at("dims").get<std::vector<int>>();
    dps.signs = c.at("signs").get<std::vector<double>>();
    dps.validate(static_cast<int>(cols));
    const double nu = c.at("nu").get<double>();
    const auto& ep = j.at("ep");
    const VectorXd tau_site = detail::vector_from_json(ep.at("tau_site"));
    const VectorXd nu_site = detail::vector_from_json(ep.at("nu_site"));
    if (tau_site.size() != m || nu_site.size() != m)
        throw data_error("model: ep site vectors length mismatch");
    art.monotonic = detail::reconstruct_monotonic(hp, X, y, y_mean, dps, nu, tau_site, nu_site,
                                                  ep.at("sweeps").get<int>(),
                                                  ep.at("max_delta").get<double>());
    return art;
}

inline void save_model(const ModelArtifact& art, const std::string& path) {
    atomic_write_file(path, model_to_json(art).dump(2) + "\n");
}

inline ModelArtifact load_model(const std::string& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw data_error("model: cannot parse " + path + ": " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw data_error("model: malformed " + path + ": " + e.what());
    }
}

}  // namespace monogp
