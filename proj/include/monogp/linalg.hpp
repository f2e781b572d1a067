#pragma once

#include <Eigen/Dense>

#include "monogp/types.hpp"

namespace monogp {

// Cholesky factorization with the jitter policy used throughout: add
// `jitter0` to the diagonal, retry once at `jitter1` if the factorization
// fails. Jitter levels are relative to eta^2 at the call sites.
struct JitteredLLT {
    Eigen::LLT<MatrixXd> llt;
    double jitter = 0.0;
};

inline JitteredLLT chol_with_jitter(const MatrixXd& A, double jitter0, double jitter1,
                                    const char* what) {
    JitteredLLT out;
    MatrixXd B = A;
    B.diagonal().array() += jitter0;
    out.llt.compute(B);
    out.jitter = jitter0;
    if (out.llt.info() == Eigen::Success) return out;
    B = A;
    B.diagonal().array() += jitter1;
    out.llt.compute(B);
    out.jitter = jitter1;
    if (out.llt.info() == Eigen::Success) return out;
    throw conditioning_error(std::string(what) + ": Cholesky failed after jitter retries",
                             {jitter0, jitter1});
}

inline double logdet_from_llt(const Eigen::LLT<MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace monogp
