#include "doctest.h"

#include "slowfast/fastsim.hpp"
#include "slowfast/model.hpp"
#include "slowfast/rate.hpp"

#include <cmath>
#include <numeric>

using namespace slowfast;

namespace {

SystemPtr frozen_still() {
    ExpressionSystem def;
    def.f = {"0.7"};
    def.B = {"0"};
    def.C = {"0"};
    def.f_sup_norm = 0.7;
    def.nondegeneracy_floor = 1.0;
    return make_expression_system(def, "still");
}

double mass_sum(const OccupationMeasure& o) { return std::accumulate(o.mass.begin(), o.mass.end(), 0.0); }

}  // namespace

TEST_SUITE("fastsim") {

TEST_CASE("zero drift and diffusion keep y at y0") {
    const auto p = simulate_frozen(*frozen_still(), Vec{0.3}, Vec{1.25}, 1.0, 0.01, 7);
    CHECK(p.size() == 101);
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(p.state(k)[0] == 1.25);
}

TEST_CASE("paths are deterministic in the seed") {
    const auto ring = builtin("cosine-ring");
    const auto a = simulate_frozen(*ring, Vec{0.0}, Vec{0.0}, 10.0, 0.001, 42);
    const auto b = simulate_frozen(*ring, Vec{0.0}, Vec{0.0}, 10.0, 0.001, 42);
    const auto c = simulate_frozen(*ring, Vec{0.0}, Vec{0.0}, 10.0, 0.001, 43);
    CHECK(a.states == b.states);
    CHECK(a.times == b.times);
    CHECK(a.states != c.states);
}

TEST_CASE("time grid and wrapping") {
    const auto p = simulate_frozen(*builtin("full-dep"), Vec{0.5}, Vec{0.0}, 1.005, 0.01, 3);
    CHECK(p.times.back() == doctest::Approx(1.005));
    CHECK(p.size() == static_cast<std::size_t>(step_count(1.005, 0.01) + 1));
    for (std::size_t k = 1; k < p.size(); ++k) {
        CHECK(p.times[k] > p.times[k - 1]);
        CHECK((p.state(k)[0] >= 0.0 && p.state(k)[0] < kTwoPi));
    }
    CHECK_THROWS_AS((void)simulate_frozen(*builtin("full-dep"), Vec{0.5}, Vec{0.0}, 0.001, 0.01, 3), InvalidArgument);
}

TEST_CASE("occupation of constructed paths") {
    FrozenFastPath still;
    still.times = {0.0, 1.0, 2.0};
    still.states = {1.0, 1.0, 1.0};
    still.period = {kTwoPi};
    const auto o1 = occupation(still, 8);
    CHECK(mass_sum(o1) == doctest::Approx(1.0).epsilon(1e-12));
    const auto bin = static_cast<std::size_t>(1.0 / (kTwoPi / 8));
    CHECK(o1.mass[bin] == doctest::Approx(1.0));

    FrozenFastPath two;
    two.times = {0.0, 1.0, 2.0};
    two.states = {0.5, 0.5 + kPi, 0.5 + kPi};
    two.period = {kTwoPi};
    const auto o2 = occupation(two, 2);
    CHECK(o2.mass[0] == doctest::Approx(0.5));
    CHECK(o2.mass[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)occupation(two, 1), InvalidArgument);
}

TEST_CASE("Brownian motion on the circle spreads uniformly") {
    // Bin masses at t_end = 1000 have a relative standard deviation of about
    // 11% (Fourier series of the occupation-time variance), so the band
    // check runs there and the max/min ratio check on a longer run.
    const auto p = simulate_frozen(*builtin("cosine-ring"), Vec{0.0}, Vec{0.0}, 1000.0, 0.01, 1);
    const auto o = occupation(p, 64);
    CHECK(mass_sum(o) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*std::min_element(o.mass.begin(), o.mass.end()) >= 0.010);
    CHECK(*std::max_element(o.mass.begin(), o.mass.end()) <= 0.021);

    const auto q = simulate_frozen(*builtin("cosine-ring"), Vec{0.0}, Vec{0.0}, 20000.0, 0.01, 1);
    const auto oq = occupation(q, 64);
    const double lo = *std::min_element(oq.mass.begin(), oq.mass.end());
    const double hi = *std::max_element(oq.mass.begin(), oq.mass.end());
    CHECK(hi / lo < 1.3);
}

TEST_CASE("invariant averages") {
    CHECK(invariant_average_f(*builtin("constant"), Vec{0.0}, 10.0, 0.01, 1)[0] == doctest::Approx(0.7).epsilon(1e-14));
    const double ring = invariant_average_f(*builtin("cosine-ring"), Vec{0.0}, 2000.0, 0.01, 2)[0];
    CHECK(std::abs(ring) <= 0.03);
}

TEST_CASE("full-dep time average matches the spectral drift") {
    const auto fd = builtin("full-dep");
    const double avg = invariant_average_f(*fd, Vec{0.0}, 2000.0, 0.01, 5)[0];
    SurfaceOptions so;
    so.grid_n = 64;
    const auto s = build_surface(fd, Vec{0.0}, Vec{0.0}, BetaBox::symmetric(1, 0.5), 5, so);
    CHECK(std::abs(avg - averaged_drift(s)[0]) <= 0.05);
}

TEST_CASE("weak error of E cos(y_t) is small for Brownian motion") {
    // y0 = 0, C = 1: E cos(y_1) = exp(-1/2)
    const auto ring = builtin("cosine-ring");
    auto mean_cos = [&](double dt) {
        double s = 0.0;
        const int n = 4000;
        for (int r = 0; r < n; ++r) {
            const auto p = simulate_frozen(*ring, Vec{0.0}, Vec{0.0}, 1.0, dt, 1000 + r);
            s += std::cos(p.state(p.size() - 1)[0]);
        }
        return s / n;
    };
    const double exact = std::exp(-0.5);
    const double tol = 4.0 * std::sqrt(0.5 / 4000);
    CHECK(std::abs(mean_cos(0.1) - exact) < tol);
    CHECK(std::abs(mean_cos(0.05) - exact) < tol);
}

}  // TEST_SUITE
