#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "monogp/gp_regression.hpp"
#include "oracles.hpp"

using namespace monogp;
using testutil::rel_err;

namespace {

Hyperparameters hp1(double eta, double rho, double sigma) {
    Hyperparameters hp;
    hp.signal_std = eta;
    hp.length_scales = VectorXd::Constant(1, rho);
    hp.noise_std = sigma;
    return hp;
}

}  // namespace

TEST_CASE("log_marginal reference values") {
    MatrixXd X(1, 1);
    X << 0.0;

    SECTION("single zero observation") {
        VectorXd y(1);
        y << 0.0;
        const Hyperparameters hp = hp1(1.3, 1.0, 0.4);
        const double expected =
            -0.5 * std::log(1.3 * 1.3 + 0.4 * 0.4) - 0.5 * std::log(2.0 * M_PI);
        CHECK(std::abs(log_marginal(X, y, hp) - expected) < 1e-7);
    }
    SECTION("single unit observation, unit signal, no noise") {
        VectorXd y(1);
        y << 1.0;
        CHECK(std::abs(log_marginal(X, y, hp1(1.0, 1.0, 0.0)) -
                       (-1.4189385332046727)) < 1e-7);
    }
    SECTION("scaling y by 10 lowers the value") {
        const auto fx = testutil::random_gp_fixture(17);
        const double base = log_marginal(fx.X, fx.y, fx.hp);
        const double scaled = log_marginal(fx.X, 10.0 * fx.y, fx.hp);
        CHECK(scaled < base);
    }
}

TEST_CASE("log_marginal_grad matches central differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto fx = testutil::random_gp_fixture(seed);
        const VectorXd lp = fx.hp.to_log();
        const VectorXd analytic = log_marginal_grad(fx.X, fx.y, fx.hp);
        const VectorXd fd = testutil::central_grad(
            [&](const VectorXd& p) {
                return log_marginal(fx.X, fx.y, Hyperparameters::from_log(p));
            },
            lp, 1e-5);
        REQUIRE(analytic.size() == fd.size());
        for (int i = 0; i < analytic.size(); ++i) {
            if (std::abs(fd[i]) > 1e-7)
                CHECK(rel_err(analytic[i], fd[i]) < 1e-5);
            else
                CHECK(std::abs(analytic[i] - fd[i]) < 1e-6);
        }
    }
}

TEST_CASE("fit validates inputs and is deterministic") {
    SECTION("empty data is rejected") {
        MatrixXd X(0, 1);
        VectorXd y(0);
        CHECK_THROWS_AS(fit(X, y, hp1(1.0, 1.0, 0.1)), shape_error);
    }
    SECTION("size mismatch is rejected") {
        MatrixXd X(2, 1);
        X << 0.0, 1.0;
        VectorXd y(3);
        y << 0.0, 1.0, 2.0;
        CHECK_THROWS_AS(fit(X, y, hp1(1.0, 1.0, 0.1)), shape_error);
    }
    SECTION("refit gives bitwise-identical weights") {
        const auto fx = testutil::random_gp_fixture(5);
        const FittedGP a = fit(fx.X, fx.y, fx.hp);
        const FittedGP b = fit(fx.X, fx.y, fx.hp);
        REQUIRE(a.alpha.size() == b.alpha.size());
        for (int i = 0; i < a.alpha.size(); ++i) CHECK(a.alpha[i] == b.alpha[i]);
    }
    SECTION("cached weights solve the noisy system") {
        const auto fx = testutil::random_gp_fixture(6);
        const FittedGP gp = fit(fx.X, fx.y, fx.hp);
        MatrixXd K(fx.X.rows(), fx.X.rows());
        for (int i = 0; i < fx.X.rows(); ++i)
            for (int j = 0; j < fx.X.rows(); ++j)
                K(i, j) = se_cov(fx.X.row(i), fx.X.row(j), fx.hp);
        K.diagonal().array() += fx.hp.noise_std * fx.hp.noise_std + gp.jitter;
        const VectorXd y0 = fx.y.array() - gp.y_mean;
        CHECK((K * gp.alpha - y0).norm() < 1e-8 * fx.y.norm());
    }
}

TEST_CASE("predict reference values") {
    SECTION("single-point textbook case without centering") {
        MatrixXd X(1, 1);
        X << 0.0;
        VectorXd y(1);
        y << 1.0;
        const FittedGP gp = fit(X, y, hp1(1.0, 1.0, 0.0), FitOptions{false});
        MatrixXd Xq(1, 1);
        Xq << 1.0;
        const PredictionSet p = predict(gp, Xq);
        CHECK(std::abs(p.mean[0] - 0.6065306597126334) < 1e-7);
        CHECK(std::abs(p.var[0] - 0.6321205588285577) < 1e-7);
    }
    SECTION("noiseless interpolation recovers the data") {
        // Inputs two length-scales apart keep the Gram matrix comfortably
        // conditioned, so the only interpolation error is the stabilizing
        // jitter itself.
        MatrixXd X(7, 1);
        for (int i = 0; i < 7; ++i) X(i, 0) = 2.0 * i;
        Rng rng(9);
        VectorXd y(7);
        for (int i = 0; i < 7; ++i) y[i] = rng.uniform(-1.0, 1.0);
        const FittedGP gp = fit(X, y, hp1(1.0, 1.0, 0.0));
        const PredictionSet p = predict(gp, X);
        CHECK((p.mean - y).cwiseAbs().maxCoeff() < 1e-6 * y.cwiseAbs().maxCoeff());
    }
    SECTION("far queries revert to the prior") {
        MatrixXd X(3, 1);
        X << -1.0, 0.0, 1.0;
        VectorXd y(3);
        y << 0.5, -0.25, 0.75;
        const Hyperparameters hp = hp1(1.7, 0.8, 0.1);
        MatrixXd Xq(1, 1);
        Xq << 60.0;

        const FittedGP raw = fit(X, y, hp, FitOptions{false});
        const PredictionSet pr = predict(raw, Xq);
        CHECK(std::abs(pr.mean[0]) < 1e-10);
        CHECK(std::abs(pr.var[0] - 1.7 * 1.7) < 1e-10);

        const FittedGP centered = fit(X, y, hp);
        const PredictionSet pc = predict(centered, Xq);
        CHECK(std::abs(pc.mean[0] - y.mean()) < 1e-10);
    }
    SECTION("latent variance never exceeds the prior variance") {
        for (std::uint64_t seed = 40; seed < 50; ++seed) {
            const auto fx = testutil::random_gp_fixture(seed);
            const FittedGP gp = fit(fx.X, fx.y, fx.hp);
            Rng rng(seed);
            MatrixXd Xq(20, fx.X.cols());
            for (int i = 0; i < Xq.rows(); ++i)
                for (int j = 0; j < Xq.cols(); ++j) Xq(i, j) = rng.uniform(-3.0, 3.0);
            const double eta2 = fx.hp.signal_std * fx.hp.signal_std;
            const double sig2 = fx.hp.noise_std * fx.hp.noise_std;
            const PredictionSet latent = predict(gp, Xq);
            const PredictionSet noisy = predict(gp, Xq, true);
            for (int i = 0; i < Xq.rows(); ++i) {
                CHECK(latent.var[i] >= 0.0);
                CHECK(latent.var[i] <= eta2 * (1.0 + 1e-10) + 1e-12);
                CHECK(noisy.var[i] <= (eta2 + sig2) * (1.0 + 1e-10) + 1e-12);
                CHECK(std::abs(noisy.var[i] - latent.var[i] - sig2) < 1e-12);
            }
        }
    }
}

TEST_CASE("predict_derivative reference behavior") {
    SECTION("constant data has zero derivative mean") {
        MatrixXd X(4, 1);
        X << 0.0, 1.0, 2.0, 3.0;
        const VectorXd y = VectorXd::Constant(4, 2.5);
        const FittedGP gp = fit(X, y, hp1(1.0, 1.0, 0.1));
        MatrixXd Xq(3, 1);
        Xq << 0.5, 1.5, 2.5;
        const PredictionSet p = predict_derivative(gp, Xq, 0);
        CHECK(p.mean.cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("derivative mean matches finite differences of the mean") {
        const auto fx = testutil::random_gp_fixture(21, 12, 2);
        const FittedGP gp = fit(fx.X, fx.y, fx.hp);
        Rng rng(77);
        for (int k = 0; k < 8; ++k) {
            MatrixXd Xq(1, fx.X.cols());
            for (int j = 0; j < Xq.cols(); ++j) Xq(0, j) = rng.uniform(-1.5, 1.5);
            for (int d = 0; d < fx.X.cols(); ++d) {
                const double h = 1e-5 * fx.hp.length_scales[d];
                const double fd = testutil::central_diff(
                    [&](double t) {
                        MatrixXd q = Xq;
                        q(0, d) = t;
                        return predict(gp, q).mean[0];
                    },
                    Xq(0, d), h);
                const double an = predict_derivative(gp, Xq, d).mean[0];
                if (std::abs(fd) > 1e-6)
                    CHECK(rel_err(an, fd) < 1e-5);
                else
                    CHECK(std::abs(an - fd) < 1e-6);
            }
        }
    }
    SECTION("far-field derivative variance approaches the prior rate") {
        MatrixXd X(2, 1);
        X << 0.0, 1.0;
        VectorXd y(2);
        y << 0.3, -0.2;
        const Hyperparameters hp = hp1(2.0, 0.7, 0.05);
        const FittedGP gp = fit(X, y, hp);
        MatrixXd Xq(1, 1);
        Xq << 80.0;
        const PredictionSet p = predict_derivative(gp, Xq, 0);
        CHECK(std::abs(p.var[0] - 4.0 / (0.7 * 0.7)) < 1e-9);
    }
}
