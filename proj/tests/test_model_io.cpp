#include <catch2/catch_amalgamated.hpp>

#include <cctype>
#include <cstdio>
#include <string>

#include "monogp/datasets.hpp"
#include "monogp/model_io.hpp"
#include "oracles.hpp"

using namespace monogp;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/monogp_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

Hyperparameters hp1(double eta, double rho, double sigma) {
    Hyperparameters hp;
    hp.signal_std = eta;
    hp.length_scales = VectorXd::Constant(1, rho);
    hp.noise_std = sigma;
    return hp;
}

MatrixXd query_grid(int n) {
    MatrixXd Xq(n, 1);
    for (int i = 0; i < n; ++i) Xq(i, 0) = -3.2 + 6.4 * i / (n - 1);
    return Xq;
}

}  // namespace

TEST_CASE("regular model round trip predicts identically") {
    const Dataset ds = gen_logistic(10, 1);
    const Hyperparameters hp = hp1(0.5, 1.4, 0.1);
    ModelArtifact art;
    art.kind = "regular";
    art.input_columns = ds.x_names;
    art.output_column = ds.y_name;
    art.regular = fit(ds.X, ds.y, hp);

    TempFile f("model_regular.json");
    save_model(art, f.path);
    const ModelArtifact back = load_model(f.path);

    REQUIRE(back.kind == "regular");
    CHECK(back.input_columns == ds.x_names);
    CHECK(back.output_column == ds.y_name);

    const MatrixXd Xq = query_grid(31);
    const PredictionSet a = predict(art.regular, Xq);
    const PredictionSet b = predict(back.regular, Xq);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.var - b.var).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("monotonic model round trip predicts identically") {
    const Dataset ds = gen_logistic(10, 2);
    const Hyperparameters hp = hp1(0.5, 1.4, 0.1);
    DerivativePointSet dps;
    dps.locations.resize(5, 1);
    for (int i = 0; i < 5; ++i) dps.locations(i, 0) = -3.0 + 1.5 * i;
    dps.dims.assign(5, 0);
    dps.signs.assign(5, 1.0);

    ModelArtifact art;
    art.kind = "monotonic";
    art.input_columns = ds.x_names;
    art.output_column = ds.y_name;
    art.monotonic = ep_fit(ds.X, ds.y, dps, hp);

    TempFile f("model_monotonic.json");
    save_model(art, f.path);
    const ModelArtifact back = load_model(f.path);

    REQUIRE(back.kind == "monotonic");
    REQUIRE(back.monotonic.ep.converged);

    const MatrixXd Xq = query_grid(31);
    const PredictionSet a = ep_predict(art.monotonic, Xq);
    const PredictionSet b = ep_predict(back.monotonic, Xq);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((a.var - b.var).cwiseAbs().maxCoeff() < 1e-10);

    SECTION("evidence value survives the round trip") {
        CHECK(std::abs(ep_log_marginal(back.monotonic) - ep_log_marginal(art.monotonic)) <
              1e-8);
    }
}

TEST_CASE("model json carries schema, version, and a training hash") {
    const Dataset ds = gen_logistic(10, 3);
    ModelArtifact art;
    art.kind = "regular";
    art.input_columns = ds.x_names;
    art.output_column = ds.y_name;
    art.regular = fit(ds.X, ds.y, hp1(0.5, 1.0, 0.1));
    const ordered_json j = model_to_json(art);

    CHECK(j.at("schema").get<std::string>() == "monogp-model");
    CHECK(j.at("version").get<int>() == 1);
    const std::string hash = j.at("training").at("hash").get<std::string>();
    REQUIRE(hash.size() == 16);
    for (char c : hash) CHECK(std::isxdigit(static_cast<unsigned char>(c)));

    SECTION("hash tracks the training content") {
        const Dataset other = gen_logistic(10, 4);
        ModelArtifact art2 = art;
        art2.regular = fit(other.X, other.y, hp1(0.5, 1.0, 0.1));
        CHECK(model_to_json(art2).at("training").at("hash").get<std::string>() != hash);
    }
}

TEST_CASE("model loader rejects foreign or damaged files") {
    const Dataset ds = gen_logistic(10, 5);
    ModelArtifact art;
    art.kind = "regular";
    art.input_columns = ds.x_names;
    art.output_column = ds.y_name;
    art.regular = fit(ds.X, ds.y, hp1(0.5, 1.0, 0.1));
    const ordered_json good = model_to_json(art);

    SECTION("wrong schema tag") {
        ordered_json j = good;
        j["schema"] = "something-else";
        CHECK_THROWS_AS(model_from_json(j), data_error);
    }
    SECTION("missing schema tag") {
        ordered_json j = good;
        j.erase("schema");
        CHECK_THROWS_AS(model_from_json(j), data_error);
    }
    SECTION("future version") {
        ordered_json j = good;
        j["version"] = 99;
        CHECK_THROWS_AS(model_from_json(j), data_error);
    }
    SECTION("unknown kind") {
        ordered_json j = good;
        j["kind"] = "bayesian";
        CHECK_THROWS_AS(model_from_json(j), data_error);
    }
    SECTION("truncated training block") {
        ordered_json j = good;
        j["training"]["x"].erase(0);
        CHECK_THROWS_AS(model_from_json(j), data_error);
    }
    SECTION("unparseable file") {
        TempFile f("model_garbage.json");
        {
            std::FILE* fp = std::fopen(f.path.c_str(), "w");
            std::fputs("{not json", fp);
            std::fclose(fp);
        }
        CHECK_THROWS_AS(load_model(f.path), data_error);
    }
}

TEST_CASE("non-converged monotonic fits cannot be serialized") {
    MatrixXd X(6, 1);
    VectorXd y(6);
    for (int i = 0; i < 6; ++i) {
        X(i, 0) = i;
        y[i] = i;
    }
    DerivativePointSet dps;
    dps.locations.resize(5, 1);
    for (int i = 0; i < 5; ++i) dps.locations(i, 0) = i + 0.5;
    dps.dims.assign(5, 0);
    dps.signs.assign(5, -1.0);  // fights the increasing data
    EpOptions opts;
    opts.max_sweeps = 1;
    opts.throw_on_nonconvergence = false;
    ModelArtifact art;
    art.kind = "monotonic";
    art.input_columns = {"x"};
    art.output_column = "y";
    art.monotonic = ep_fit(X, y, dps, hp1(2.0, 2.0, 0.1), 1e-6, opts);
    REQUIRE(!art.monotonic.ep.converged);
    CHECK_THROWS_AS(model_to_json(art), error);
}
