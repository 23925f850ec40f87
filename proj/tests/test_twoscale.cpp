#include "doctest.h"

#include "slowfast/hamiltonian.hpp"
#include "slowfast/stats.hpp"
#include "slowfast/twoscale.hpp"

#include <cmath>
#include <sstream>

using namespace slowfast;

TEST_SUITE("twoscale") {

TEST_CASE("configuration checks") {
    SimConfig ok{0.1, 1.0, 0.01, 0, 1};
    CHECK_NOTHROW(ok.validate());
    CHECK_THROWS_AS((SimConfig{1.5, 1.0, 0.01, 0, 1}.validate()), InvalidArgument);
    CHECK_THROWS_AS((SimConfig{0.1, 1.0, 0.02, 0, 1}.validate()), InvalidArgument);
    CHECK_THROWS_AS((SimConfig{0.1, 1.0, 0.01, 0, 0}.validate()), InvalidArgument);

    const auto a = TwoScaleSchedule::for_epsilon(0.1, 0.2, 0.05);
    const auto b = TwoScaleSchedule::for_epsilon(0.01, 0.2, 0.05);
    CHECK(a.t_eps == doctest::Approx(std::sqrt(std::log(10.0))));
    CHECK(b.t_eps > a.t_eps);
    CHECK(b.t_eps / std::log(100.0) < a.t_eps / std::log(10.0));
    CHECK_NOTHROW(a.validate(0.1));
    CHECK_THROWS_AS((TwoScaleSchedule{0.2, 50.0, 0.05}.validate(0.1)), InvalidArgument);
    CHECK_THROWS_AS((TwoScaleSchedule{1e-4, 1.0, 0.05}.validate(0.1)), InvalidArgument);
}

TEST_CASE("constant system moves deterministically") {
    const SimConfig cfg{0.1, 1.0, 0.01, 3, 1};
    const auto tr = simulate_coupled(*builtin("constant"), Vec{0.25}, Vec{0.0}, cfg);
    CHECK(tr.x(tr.size() - 1)[0] == doctest::Approx(0.25 + 0.7).epsilon(1e-12));
    CHECK(tr.times.back() == doctest::Approx(1.0));
}

TEST_CASE("slow increments are bounded by |f| per step") {
    const SimConfig cfg{0.2, 0.5, 0.01, 9, 1};
    const auto fd = builtin("full-dep");
    const auto tr = simulate_coupled(*fd, Vec{0.0}, Vec{0.0}, cfg);
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double step = tr.times[k] - tr.times[k - 1];
        CHECK(std::abs(tr.x(k)[0] - tr.x(k - 1)[0]) <= fd->f_sup_norm * step + 1e-12);
        CHECK((tr.y(k)[0] >= 0.0 && tr.y(k)[0] < kTwoPi));
    }
    const auto ring = simulate_coupled(*builtin("cosine-ring"), Vec{0.0}, Vec{0.0}, SimConfig{0.1, 1.0, 0.01, 1, 1});
    CHECK(std::abs(ring.x(ring.size() - 1)[0]) <= 1.0);
}

TEST_CASE("recording stride keeps the final point") {
    const SimConfig cfg{0.3, 0.1, 0.01, 1, 1};
    const auto all = simulate_coupled(*builtin("full-dep"), Vec{0.0}, Vec{0.0}, cfg, 0, 1);
    const auto sparse = simulate_coupled(*builtin("full-dep"), Vec{0.0}, Vec{0.0}, cfg, 0, 7);
    CHECK(sparse.times.back() == all.times.back());
    CHECK(sparse.slow.back() == all.slow.back());
    CHECK(sparse.size() < all.size());
}

TEST_CASE("averaging shrinks the spread of X_T") {
    const auto ring = builtin("cosine-ring");
    auto var = [&](double eps) {
        const Vec ends = coupled_endpoints(*ring, Vec{0.0}, Vec{0.0}, SimConfig{eps, 1.0, 0.01, 5, 200});
        return mean_var(ends).variance;
    };
    CHECK(var(0.1) < var(0.3));
}

TEST_CASE("replica results do not depend on the worker count") {
    const SimConfig cfg{0.3, 0.5, 0.01, 77, 16};
    const auto fd = builtin("full-dep");
    CHECK(coupled_endpoints(*fd, Vec{0.1}, Vec{0.0}, cfg, 1) == coupled_endpoints(*fd, Vec{0.1}, Vec{0.0}, cfg, 4));
    const auto a = verify_lemma5(*fd, Vec{0.0}, Vec{0.0}, Vec{0.3}, SimConfig{0.2, 0.1, 0.01, 3, 64},
                                 TwoScaleSchedule::for_epsilon(0.2, 0.1, 0.05), 0.0, {}, 1);
    const auto b = verify_lemma5(*fd, Vec{0.0}, Vec{0.0}, Vec{0.3}, SimConfig{0.2, 0.1, 0.01, 3, 64},
                                 TwoScaleSchedule::for_epsilon(0.2, 0.1, 0.05), 0.0, {}, 3);
    CHECK(a.lambda_hat == b.lambda_hat);
}

TEST_CASE("coupling error") {
    const SimConfig cfg{0.1, 1.0, 0.01, 4, 50};
    CHECK(coupling_error(*builtin("cosine-ring"), Vec{0.3}, cfg, 2.0).mean_sq_sup == 0.0);
    const auto fd = builtin("full-dep");
    double prev = -1.0;
    for (double t : {0.25, 0.5, 1.0, 2.0}) {
        const double e = coupling_error(*fd, Vec{0.5}, SimConfig{0.2, 1.0, 0.01, 4, 50}, t).mean_sq_sup;
        CHECK(e >= prev);
        prev = e;
    }
    CHECK(prev > 0.0);
    CHECK_THROWS_AS((void)coupling_error(*fd, Vec{0.5}, SimConfig{0.5, 0.01, 0.01, 4, 5}, 1.0), InvalidArgument);
}

TEST_CASE("exponential moments: exact cases") {
    const auto sched = TwoScaleSchedule::for_epsilon(0.1, 0.2, 0.05);
    const auto c = verify_lemma5(*builtin("constant"), Vec{0.0}, Vec{0.0}, Vec{1.0}, SimConfig{0.1, 0.2, 0.01, 1, 20},
                                 sched, 0.7);
    CHECK(c.lambda_hat == doctest::Approx(0.14).epsilon(1e-12));
    CHECK(c.pass);
    const auto z = verify_lemma5(*builtin("cosine-ring"), Vec{0.0}, Vec{0.0}, Vec{0.0},
                                 SimConfig{0.1, 0.2, 0.01, 1, 20}, sched, 0.0);
    CHECK(z.lambda_hat == 0.0);
    CHECK(z.nu_hat == 0.0);
}

TEST_CASE("exponential moments: cosine ring") {
    const auto ring = builtin("cosine-ring");
    const double H = h_spectral(*ring, Vec{0.0}, Vec{0.0}, Vec{0.3}, 256).eigenvalue;
    const auto sched = TwoScaleSchedule::for_epsilon(0.1, 0.2, 0.05);
    const auto r = verify_lemma5(*ring, Vec{0.0}, Vec{0.0}, Vec{0.3}, SimConfig{0.1, 0.2, 0.01, 12, 20000}, sched, H);
    CHECK_FALSE(r.unreliable);
    CHECK(r.delta_H == doctest::Approx(0.2 * H));
    CHECK(std::abs(r.lambda_hat - r.delta_H) <= 0.05 * 0.2);
    CHECK(r.pass);
    CHECK_FALSE(r.blocks.empty());
    CHECK(r.blocks.front().t_start == 0.0);
    std::ostringstream os;
    os << lemma5_json(r);
    CHECK(os.str().find("lambda_hat") != std::string::npos);
}

TEST_CASE("trajectory CSV header") {
    const auto tr = simulate_coupled(*builtin("cosine-ring"), Vec{0.0}, Vec{0.0}, SimConfig{0.3, 0.05, 0.01, 1, 1});
    std::ostringstream os;
    write_csv(os, tr);
    CHECK(os.str().rfind("t,x_1,y_1\n", 0) == 0);
}

}  // TEST_SUITE
