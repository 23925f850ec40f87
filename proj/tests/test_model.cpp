#include "doctest.h"

#include "slowfast/config.hpp"
#include "slowfast/expression.hpp"
#include "slowfast/io.hpp"
#include "slowfast/model.hpp"
#include "slowfast/random.hpp"
#include "slowfast/stats.hpp"

#include <cmath>
#include <random>
#include <set>

using namespace slowfast;

TEST_SUITE("model") {

TEST_CASE("builtin coefficients") {
    const auto c = builtin("constant");
    CHECK(c->eval_f(Vec{3.0}, Vec{1.0})[0] == 0.7);
    CHECK(c->eval_f(Vec{-100.0}, Vec{5.5})[0] == 0.7);
    const auto ring = builtin("cosine-ring");
    CHECK(ring->eval_f(Vec{0.3}, Vec{kPi})[0] == doctest::Approx(-1.0).epsilon(1e-15));
    const auto fd = builtin("full-dep");
    for (double y : {0.0, 0.4, 1.7, 3.0, 6.0}) {
        const double c0 = fd->eval_C(Vec{0.0}, Vec{y})[0];
        CHECK(c0 * c0 == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(fd->eval_B(Vec{1.0}, Vec{0.2})[0] == doctest::Approx(0.3 * std::sin(0.8)));
    CHECK_FALSE(fd->x_independent);
    CHECK_FALSE(fd->fast_x_independent);
    CHECK(ring->x_independent);
}

TEST_CASE("unknown builtin lists the valid names") {
    try {
        (void)builtin("nope");
        FAIL("expected UnknownSystemError");
    } catch (const UnknownSystemError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("constant") != std::string::npos);
        CHECK(msg.find("cosine-ring") != std::string::npos);
        CHECK(msg.find("full-dep") != std::string::npos);
    }
}

TEST_CASE("registry names are unique and every builtin validates") {
    std::set<std::string> seen;
    for (const auto& b : builtin_registry()) {
        CHECK(seen.insert(b.name).second);
        const auto r = validate(*b.spec, 2000, 17);
        INFO(b.name);
        CHECK(r.ok());
    }
}

TEST_CASE("validate examples") {
    const auto rc = validate(*builtin("constant"), 100, 1);
    CHECK(rc.max_abs_f == doctest::Approx(0.7));
    CHECK(rc.lipschitz_f == 0.0);
    const auto rr = validate(*builtin("cosine-ring"), 1000, 1);
    CHECK(rr.max_abs_f <= 1.0);
    const auto rf = validate(*builtin("full-dep"), 1000, 1);
    CHECK(rf.min_eig_diffusion >= 0.5);
    // dense-grid oracle for min of 1 + 0.5 sin(x) cos(y)
    double lo = 1e9;
    for (int i = 0; i < 400; ++i)
        for (int j = 0; j < 400; ++j) lo = std::min(lo, 1.0 + 0.5 * std::sin(kTwoPi * i / 400) * std::cos(kTwoPi * j / 400));
    CHECK(lo == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(rf.min_eig_diffusion >= lo - 1e-12);
}

TEST_CASE("validate reports violated declarations") {
    ExpressionSystem def;
    def.f = {"2*cos(y1)"};
    def.B = {"0"};
    def.C = {"1"};
    def.f_sup_norm = 1.0;
    def.lipschitz_f = 2.0;
    def.nondegeneracy_floor = 1.0;
    const auto r = validate(*make_expression_system(def), 500, 3);
    CHECK_FALSE(r.ok());
}

TEST_CASE("wrapping is idempotent and lands in the fundamental domain") {
    const TorusGeometry g(2, std::vector<double>{kTwoPi, 3.0});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 10000; ++i) {
        double y[2] = {u(rng), u(rng)};
        g.wrap(y);
        CHECK((y[0] >= 0.0 && y[0] < kTwoPi));
        CHECK((y[1] >= 0.0 && y[1] < 3.0));
        double z[2] = {y[0], y[1]};
        g.wrap(z);
        CHECK(z[0] == y[0]);
        CHECK(z[1] == y[1]);
    }
    double a[2] = {0.1, 0.1}, b[2] = {kTwoPi - 0.1, 2.9};
    CHECK(g.distance(a, b) == doctest::Approx(std::sqrt(0.08)));
}

TEST_CASE("f is periodic in y") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (const auto& b : builtin_registry()) {
        for (int i = 0; i < 1000; ++i) {
            const double x = u(rng), y = u(rng);
            const double f0 = b.spec->eval_f(Vec{x}, Vec{y})[0];
            const double f1 = b.spec->eval_f(Vec{x}, Vec{y + kTwoPi})[0];
            CHECK(std::abs(f0 - f1) <= 1e-12);
        }
    }
}

TEST_CASE("expressions") {
    const auto e = Expression::parse("sqrt(1 + 0.5*sin(x1)*cos(y_1)) - exp(-x)/2 + pi", 1, 1);
    const double x = 0.7, y = 2.1;
    CHECK(e(Vec{x}, Vec{y}) == doctest::Approx(std::sqrt(1 + 0.5 * std::sin(x) * std::cos(y)) - std::exp(-x) / 2 + kPi));
    CHECK(e.uses_slow());
    CHECK_FALSE(Expression::parse("cos(y2) * -3", 1, 2).uses_slow());
    CHECK(Expression::parse("cos(y2) * -3", 1, 2)(Vec{0.0}, Vec{0.0, 0.0}) == -3.0);
    CHECK_THROWS_AS((void)Expression::parse("cos(y3)", 1, 2), ConfigError);
    CHECK_THROWS_AS((void)Expression::parse("1 +", 1, 1), ConfigError);
    CHECK_THROWS_AS((void)Expression::parse("tan(x)", 1, 1), ConfigError);
}

}  // TEST_SUITE

TEST_SUITE("support") {

TEST_CASE("log-mean-exp") {
    const Vec z{1.0, 1.0, 1.0, 1.0};
    const auto r = log_mean_exp(z);
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.ess == doctest::Approx(4.0));
    const Vec big{1000.0, 1000.0 + std::log(3.0)};
    CHECK(log_mean_exp(big).value == doctest::Approx(1000.0 + std::log(2.0)));
    const Vec one_hot{0.0, -800.0, -800.0};
    CHECK(log_mean_exp(one_hot).ess == doctest::Approx(1.0));
}

TEST_CASE("Wilson interval") {
    const auto [lo, hi] = wilson_interval(0, 100);
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(0.0370).epsilon(1e-2));
    const auto [l2, h2] = wilson_interval(50, 100);
    CHECK(l2 == doctest::Approx(0.4038).epsilon(1e-3));
    CHECK(h2 == doctest::Approx(0.5962).epsilon(1e-3));
    const auto [l3, h3] = wilson_interval(100, 100);
    CHECK(h3 == doctest::Approx(1.0));
    CHECK(l3 < 1.0);
}

TEST_CASE("number formatting round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, kInf, -kInf}) CHECK(io::parse_num(io::num(v)) == v);
    CHECK(io::num(kInf) == "inf");
    CHECK(std::isnan(io::parse_num("nan")));
}

TEST_CASE("sha256 known vector") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("normal streams are reproducible and standard") {
    NormalStream a(42, 3), b(42, 3), c(42, 4);
    double s = 0.0, s2 = 0.0, cross = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = a.next(), v = b.next(), w = c.next();
        CHECK(u == v);
        s += u;
        s2 += u * u;
        cross += u * w;
    }
    CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(cross / n) < 5.0 / std::sqrt(n));
    NormalStream d(42, 3);
    d.seek(7);
    NormalStream e(42, 3);
    for (int i = 0; i < 7; ++i) (void)e.next();
    CHECK(d.next() == e.next());
    CHECK(derive_seed(1, "ldp") != derive_seed(1, "simulate"));
    CHECK(derive_seed(1, std::uint64_t{0}) != derive_seed(1, std::uint64_t{1}));
}

TEST_CASE("config views name the failing field") {
    const auto j = config::parse(R"({"a": {"n": 3, "x": "inf", "v": [1, 2], "s": "t", "bad": [1, "q"]}})");
    const config::View top(j, "");
    const auto a = top.sub("a");
    CHECK(a.integer("n") == 3);
    CHECK(a.number("x") == kInf);
    CHECK(a.vec("v", 2) == Vec{1.0, 2.0});
    CHECK(a.vec("n") == Vec{3.0});
    CHECK(a.number("missing", 0.5) == 0.5);
    try {
        (void)a.number("s");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("a.s") != std::string::npos);
    }
    CHECK_THROWS_AS((void)a.vec("v", 3), ConfigError);
    CHECK_THROWS_AS((void)a.vec("bad"), ConfigError);
    CHECK_THROWS_AS(a.only({"n", "x"}), ConfigError);
    CHECK_THROWS_AS((void)config::parse("{oops"), ConfigError);
}

TEST_CASE("config overrides") {
    auto j = config::parse(R"({"ldp": {"delta": 0.3}})");
    const auto h0 = config::hash(j);
    config::apply_override(j, "ldp.delta=0.2");
    config::apply_override(j, "ldp.path.T=2");
    config::apply_override(j, "system=full-dep");
    config::apply_override(j, "ldp.epsilons=[0.3,0.2]");
    CHECK(j["ldp"]["delta"] == 0.2);
    CHECK(j["ldp"]["path"]["T"] == 2);
    CHECK(j["system"] == "full-dep");
    CHECK(j["ldp"]["epsilons"].size() == 2);
    CHECK(config::hash(j) != h0);
    CHECK_THROWS_AS(config::apply_override(j, "novalue"), ConfigError);
    CHECK_THROWS_AS(config::apply_override(j, "system.x=1"), ConfigError);
}

TEST_CASE("systems from config") {
    CHECK(config::system_from_json("constant")->name == "constant");
    CHECK(config::system_from_json(config::Json{{"builtin", "full-dep"}})->name == "full-dep");
    const auto j = config::parse(R"({"name": "tilted", "f": ["0.5*cos(y1) + 0.2"], "B": [0], "C": ["1"],
                                     "f_sup_norm": 0.7, "lipschitz_f": 0.5, "nondegeneracy_floor": 1})");
    const auto s = config::system_from_json(j);
    CHECK(s->name == "tilted");
    CHECK(s->x_independent);
    CHECK(s->eval_f(Vec{0.0}, Vec{0.0})[0] == doctest::Approx(0.7));
    CHECK_THROWS_AS((void)config::system_from_json(config::parse(R"j({"f": ["cos(y1)"]})j")), ConfigError);
    CHECK_THROWS_AS((void)config::system_from_json("bogus"), UnknownSystemError);
}

}  // TEST_SUITE
