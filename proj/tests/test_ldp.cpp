#include "doctest.h"

#include "slowfast/ldp.hpp"

#include <cmath>
#include <sstream>

using namespace slowfast;

TEST_SUITE("ldp") {

TEST_CASE("deterministic slow path stays in any tube") {
    TubeConfig cfg;
    cfg.epsilons = {0.3, 0.1};
    cfg.replicas = 1000;
    cfg.delta = 0.05;
    const auto est = tube_probability(*builtin("constant"), Path::linear(Vec{0.0}, Vec{0.7}, 1.0, 10), cfg, 0.0);
    for (const auto& r : est.rows) {
        CHECK(r.p_hat == 1.0);
        CHECK(r.log_prob == 0.0);
        CHECK_FALSE(r.censored);
    }
    const auto t = trend_check(est);
    CHECK_FALSE(t.has_data);  // fewer than three rows
    cfg.epsilons = {0.3, 0.2, 0.1};
    const auto est3 = tube_probability(*builtin("constant"), Path::linear(Vec{0.0}, Vec{0.7}, 1.0, 10), cfg, 0.0);
    const auto t3 = trend_check(est3);
    CHECK(t3.has_data);
    CHECK(t3.gap == 0.0);
    CHECK(t3.nu_hat == 0.0);
    CHECK(t3.lower_bound_holds);
}

TEST_CASE("an unreachable path is censored, never -inf") {
    TubeConfig cfg;
    cfg.epsilons = {0.3, 0.2, 0.1};
    cfg.replicas = 1000;
    cfg.delta = 0.01;
    const auto est = tube_probability(*builtin("constant"), Path::linear(Vec{0.0}, Vec{0.8}, 1.0, 10), cfg, kInf);
    CHECK(est.all_censored);
    for (const auto& r : est.rows) {
        CHECK(r.hits == 0);
        CHECK(r.censored);
        CHECK(std::isfinite(r.log_prob));
        CHECK(r.log_prob == doctest::Approx(r.epsilon * r.epsilon * std::log(r.ci_high)));
    }
    const auto t = trend_check(est);
    CHECK_FALSE(t.has_data);
    CHECK(t.message.find("no uncensored data") != std::string::npos);
    CHECK(std::isnan(t.gap));
}

TEST_CASE("averaged path: probabilities rise toward 1 as epsilon falls") {
    TubeConfig cfg;
    cfg.replicas = 2000;
    cfg.seed = 4;
    const auto est = tube_probability(*builtin("cosine-ring"), Path::linear(Vec{0.0}, Vec{0.0}, 1.0, 10), cfg, 0.0);
    const auto t = trend_check(est, 0.1);
    CHECK(t.has_data);
    CHECK(t.monotone);
    CHECK(t.lower_bound_holds);
    CHECK(t.nu_hat <= 0.1);
    for (const auto& r : est.rows) {
        CHECK((r.p_hat >= 0.0 && r.p_hat <= 1.0));
        CHECK(r.log_prob <= 0.0);
        CHECK(r.ci_low <= r.p_hat);
        CHECK(r.p_hat <= r.ci_high);
    }
}

TEST_CASE("tube probability grows with the radius") {
    TubeConfig cfg;
    cfg.replicas = 2000;
    cfg.seed = 8;
    const auto ring = builtin("cosine-ring");
    const Path phi = Path::linear(Vec{0.0}, Vec{0.0}, 1.0, 10);
    double prev = -1.0;
    for (double d : {0.1, 0.2, 0.4}) {
        // same seed and index: common random numbers make this exact
        const auto r = tube_probability_at(*ring, phi, d, 0.3, cfg, 0);
        CHECK(r.p_hat >= prev);
        prev = r.p_hat;
    }
}

TEST_CASE("sweep output") {
    TubeConfig cfg;
    cfg.epsilons = {0.3, 0.2};
    cfg.replicas = 1000;
    const auto est = tube_probability(*builtin("cosine-ring"), Path::linear(Vec{0.0}, Vec{0.0}, 1.0, 10), cfg, 0.0);
    std::ostringstream os;
    write_csv(os, est);
    CHECK(os.str().rfind("epsilon,p_hat,ci_low,ci_high,eps2_log_p,censored\n", 0) == 0);
    const std::string j = ldp_json(est, trend_check(est));
    CHECK(j.find("action_ref") != std::string::npos);
    TubeConfig few = cfg;
    few.replicas = 10;
    CHECK_THROWS_AS((void)tube_probability(*builtin("cosine-ring"), Path::linear(Vec{0.0}, Vec{0.0}, 1.0, 10), few),
                    InvalidArgument);
}

}  // TEST_SUITE
