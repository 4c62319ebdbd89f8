#include <doctest.h>

#include "sfl/aircraft.hpp"
#include "sfl/config.hpp"
#include "sfl/errors.hpp"

using namespace sfl;

TEST_CASE("bundled flight configuration is valid and resolves the model") {
    const ExperimentConfig cfg = aircraft_config();
    CHECK(validate_config(cfg).empty());
    const VarxModel m = resolve_model(cfg);
    const VarxModel ref = aircraft_varx();
    CHECK((m.A_hat - ref.A_hat).cwiseAbs().maxCoeff() == 0.0);
    CHECK((m.B_hat - ref.B_hat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("configuration round-trips through JSON") {
    const ExperimentConfig cfg = aircraft_config();
    const ExperimentConfig back = config_from_json(to_json(cfg));
    CHECK(back.N == cfg.N);
    CHECK(back.T == cfg.T);
    CHECK(back.ell == cfg.ell);
    CHECK(back.steps == cfg.steps);
    CHECK(back.seed == cfg.seed);
    CHECK(back.init_spread == cfg.init_spread);
    CHECK((back.init_mean - cfg.init_mean).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.weights.Q - cfg.weights.Q).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.chance_rows.size() == cfg.chance_rows.size());
    CHECK(back.chance_rows[0].upper == cfg.chance_rows[0].upper);
    CHECK(back.schemes == cfg.schemes);
}

TEST_CASE("an empty JSON document yields the defaults") {
    const ExperimentConfig cfg = config_from_json(json::object());
    CHECK(validate_config(cfg).empty());
    CHECK(cfg.N == 10);
    CHECK(cfg.T == 90);
}

TEST_CASE("validation names every offending field") {
    ExperimentConfig cfg = aircraft_config();
    cfg.T = 5; // below ell + N with the default horizon
    cfg.ell = -1;
    cfg.init_spread = -2.0;
    const auto failures = validate_config(cfg);
    auto mentions = [&](const std::string& field) {
        for (const auto& f : failures)
            if (f.find(field) != std::string::npos) return true;
        return false;
    };
    CHECK(mentions("T"));
    CHECK(mentions("ell"));
    CHECK(mentions("init_spread"));
    CHECK_THROWS_AS(resolve_model(cfg), ConfigError);
}

TEST_CASE("cross-field checks catch mismatched dimensions") {
    ExperimentConfig cfg = aircraft_config();
    cfg.weights.Q = Eigen::MatrixXd::Identity(2, 2); // model has three outputs
    CHECK_THROWS_AS(resolve_model(cfg), ConfigError);

    cfg = aircraft_config();
    cfg.chance_rows[0].component = 7;
    CHECK_THROWS_AS(resolve_model(cfg), ConfigError);

    cfg = aircraft_config();
    cfg.init_mean = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(resolve_model(cfg), ConfigError);
}

TEST_CASE("missing model files raise a configuration error") {
    ExperimentConfig cfg = aircraft_config();
    cfg.model.reset();
    cfg.model_file = "/nonexistent/model.json";
    CHECK_THROWS_AS(resolve_model(cfg), Error);
}
