#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "sst/model_io.hpp"

using namespace sst;

namespace {

Model random_model(std::mt19937_64& rng, Family fam) {
    std::uniform_real_distribution<double> uni(-5.0, 5.0);
    Model m;
    m.spec.family = fam;
    if (m.spec.spline()) {
        m.spec.knots.k_min = uni(rng);
        m.spec.knots.k_max = m.spec.knots.k_min + 1.0 + std::fabs(uni(rng));
        m.spec.knots.internal = {0.5 * (m.spec.knots.k_min + m.spec.knots.k_max)};
        m.spec.knots_m = 1;
    }
    m.feature_names = {"a", "b"};
    m.params.topo.depth = 2;
    m.params.p = 2;
    const std::size_t bd = m.spec.beta_dim(2);
    for (int n = 0; n < m.params.topo.n_branch(); ++n) {
        std::vector<double> w(3);
        for (double& v : w) v = uni(rng) / 3.0;  // awkward decimals on purpose
        m.params.omega.push_back(w);
    }
    for (int l = 0; l < m.params.topo.n_leaf(); ++l) {
        std::vector<double> b(bd);
        for (double& v : b) v = uni(rng) / 7.0;
        m.params.beta.push_back(b);
    }
    m.scaler.min = {uni(rng), uni(rng)};
    m.scaler.max = {m.scaler.min[0] + 1.0, m.scaler.min[1] + 2.0};
    m.scaler.impute = {uni(rng), uni(rng)};
    m.scaler.categorical = {true, false};
    return m;
}

} // namespace

TEST_CASE("model json round trip is bit exact") {
    std::mt19937_64 rng(139);
    for (Family fam : {Family::Exp, Family::Weibull, Family::LogLogistic, Family::SplinePO,
                       Family::SplinePH}) {
        Model m = random_model(rng, fam);
        Model back = model_from_json(model_to_json(m));
        CHECK(back.params.topo.depth == m.params.topo.depth);
        CHECK(back.spec.family == m.spec.family);
        CHECK(back.params.omega == m.params.omega);  // exact double equality
        CHECK(back.params.beta == m.params.beta);
        CHECK(back.feature_names == m.feature_names);
        CHECK(back.scaler.min == m.scaler.min);
        CHECK(back.scaler.max == m.scaler.max);
        CHECK(back.scaler.impute == m.scaler.impute);
        CHECK(back.scaler.categorical == m.scaler.categorical);
        if (m.spec.spline()) {
            CHECK(back.spec.knots.k_min == m.spec.knots.k_min);
            CHECK(back.spec.knots.k_max == m.spec.knots.k_max);
            CHECK(back.spec.knots.internal == m.spec.knots.internal);
        }
        // serializing the reloaded model reproduces the bytes
        CHECK(model_to_json(back) == model_to_json(m));
    }
}

TEST_CASE("model file round trip") {
    std::mt19937_64 rng(149);
    Model m = random_model(rng, Family::Weibull);
    const std::string path =
        (std::filesystem::temp_directory_path() / "sst_model_io_test.json").string();
    save_model(m, path);
    Model back = load_model(path);
    CHECK(back.params.omega == m.params.omega);
    CHECK(back.params.beta == m.params.beta);
    std::remove(path.c_str());
}

TEST_CASE("schema validation") {
    CHECK_THROWS_AS(model_from_json("{not json"), ParseError);
    CHECK_THROWS_AS(model_from_json("{\"format\":\"other\"}"), SchemaMismatch);

    std::mt19937_64 rng(151);
    Model m = random_model(rng, Family::Exp);
    std::string good = model_to_json(m);
    // corrupt: drop one omega block
    auto j = good.find("\"omega\"");
    REQUIRE(j != std::string::npos);
    Model broken = m;
    broken.params.omega.pop_back();
    CHECK_THROWS_AS(model_from_json(model_to_json(broken)), SchemaMismatch);
}

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_bytes("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_bytes("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_bytes(std::string(1000000, 'a')) ==
          "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}
