#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace monogp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---- error hierarchy ----------------------------------------------------

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent dimensions between inputs.
struct shape_error : error {
    explicit shape_error(const std::string& msg) : error(msg) {}
};

// Cholesky failure even after jitter retries; carries the attempted levels.
struct conditioning_error : error {
    conditioning_error(const std::string& msg, std::vector<double> jitters)
        : error(msg), attempted_jitters(std::move(jitters)) {}
    std::vector<double> attempted_jitters;
};

// Iterative scheme did not reach its tolerance; carries the last delta.
struct convergence_error : error {
    convergence_error(const std::string& msg, double last_delta)
        : error(msg), last_max_delta(last_delta) {}
    double last_max_delta;
};

struct config_error : error {
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Malformed input data (CSV schema violations, NaNs, ...).
struct data_error : error {
    explicit data_error(const std::string& msg) : error(msg) {}
};

// ---- core value types ----------------------------------------------------

// SE-kernel hyperparameters in natural space. Optimization happens on
// (log eta, log rho_1..D, log sigma); see to_log/from_log.
struct Hyperparameters {
    double signal_std = 1.0;     // eta
    VectorXd length_scales;      // rho_d, one per input dimension
    double noise_std = 0.0;      // sigma

    int dim() const { return static_cast<int>(length_scales.size()); }

    void validate() const {
        if (!(signal_std > 0.0))
            throw config_error("hyperparameters: signal_std must be > 0");
        if (!(noise_std >= 0.0))
            throw config_error("hyperparameters: noise_std must be >= 0");
        for (int d = 0; d < dim(); ++d)
            if (!(length_scales[d] > 0.0))
                throw config_error("hyperparameters: length_scales must be > 0");
    }

    VectorXd to_log() const {
        VectorXd lp(dim() + 2);
        lp[0] = std::log(signal_std);
        for (int d = 0; d < dim(); ++d) lp[1 + d] = std::log(length_scales[d]);
        lp[dim() + 1] = std::log(noise_std);
        return lp;
    }

    static Hyperparameters from_log(const VectorXd& lp) {
        if (lp.size() < 3) throw shape_error("from_log: need at least 3 parameters");
        Hyperparameters hp;
        hp.signal_std = std::exp(lp[0]);
        hp.length_scales = lp.segment(1, lp.size() - 2).array().exp();
        hp.noise_std = std::exp(lp[lp.size() - 1]);
        return hp;
    }
};

// Virtual derivative points: location, constrained dimension, and direction
// sign (+1 increasing, -1 decreasing) per point.
struct DerivativePointSet {
    MatrixXd locations;       // M x D
    std::vector<int> dims;    // constrained dimension index, 0-based
    std::vector<double> signs;

    int size() const { return static_cast<int>(locations.rows()); }

    void validate(int input_dim) const {
        const std::size_t m = static_cast<std::size_t>(size());
        if (dims.size() != m || signs.size() != m)
            throw shape_error("derivative point set: dims/signs length mismatch");
        if (size() > 0 && locations.cols() != input_dim)
            throw shape_error("derivative point set: location dimension mismatch");
        for (std::size_t i = 0; i < m; ++i) {
            if (dims[i] < 0 || dims[i] >= input_dim)
                throw shape_error("derivative point set: dimension index out of range");
            if (signs[i] != 1.0 && signs[i] != -1.0)
                throw config_error("derivative point set: signs must be +1 or -1");
            if (!locations.row(static_cast<int>(i)).allFinite())
                throw data_error("derivative point set: non-finite location");
        }
    }
};

// Posterior summaries at query points. `clamp_count` tracks how many
// variances had to be clamped up to zero from small negative values.
struct PredictionSet {
    VectorXd mean;
    VectorXd var;
    int clamp_count = 0;
};

}  // namespace monogp
