#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "instances.hpp"

using namespace mfstop;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MeasureOnGrid m3(double a, double b, double c) { return MeasureOnGrid({a, b, c}); }

void check_masses(const MeasureOnGrid& m, std::initializer_list<double> expected) {
    REQUIRE(m.size() == expected.size());
    std::size_t k = 0;
    for (double e : expected) CHECK(m.mass(k++) == doctest::Approx(e).epsilon(1e-14));
}

// Right-endpoint sampling of f on a uniform grid of [0, T] with `n` pieces.
StepFunctionVPlus sample_step(double horizon, int n, auto f) {
    StepFunctionVPlus v;
    for (int i = 0; i <= n; ++i) v.knots.push_back(horizon * i / n);
    for (int i = 0; i < n; ++i) v.values.push_back(f(v.knots[i + 1]));
    return v;
}

}  // namespace

TEST_CASE("measure construction") {
    CHECK_THROWS(MeasureOnGrid({0.5, 0.6}));
    CHECK_THROWS(MeasureOnGrid({1.2, -0.2}));
    auto u = MeasureOnGrid::uniform(4);
    CHECK(u.cdf().back() == doctest::Approx(1.0));
    auto c = MeasureOnGrid::from_cdf(std::vector<double>{0.2, 0.2, 0.7, 1.0});
    check_masses(c, {0.2, 0.0, 0.5, 0.3});
    CHECK(MeasureOnGrid::point_mass(3, 1).integrate(std::vector<double>{5, 7, 9}) == 7.0);
}

TEST_CASE("first-order dominance examples") {
    auto d0 = MeasureOnGrid::point_mass(3, 0);
    auto dN = MeasureOnGrid::point_mass(3, 2);
    CHECK(fosd_leq(d0, dN));
    CHECK_FALSE(fosd_leq(dN, d0));
    CHECK(fosd_leq(m3(0.5, 0.5, 0), m3(0, 0, 1)));
    CHECK_FALSE(fosd_leq(m3(0.5, 0, 0.5), m3(0, 1, 0)));
    CHECK_FALSE(fosd_leq(m3(0, 1, 0), m3(0.5, 0, 0.5)));
}

TEST_CASE("random measure dominance is cell-wise") {
    auto a = RandomMeasure({MeasureOnGrid::point_mass(3, 0), MeasureOnGrid::point_mass(3, 2)});
    auto b = RandomMeasure({MeasureOnGrid::point_mass(3, 2), MeasureOnGrid::point_mass(3, 0)});
    CHECK(random_fosd_leq(a, a));
    CHECK(random_fosd_leq(RandomMeasure::bottom(2, 3), RandomMeasure::top(2, 3)));
    CHECK_FALSE(random_fosd_leq(a, b));
    CHECK_FALSE(random_fosd_leq(b, a));
}

TEST_CASE("lattice operations examples") {
    check_masses(fosd_sup(MeasureOnGrid::point_mass(3, 1), MeasureOnGrid::point_mass(3, 2)), {0, 0, 1});
    auto m = m3(0.2, 0.3, 0.5);
    CHECK(fosd_sup(m, m) == m);
    check_masses(fosd_sup(m3(0.5, 0, 0.5), m3(0, 1, 0)), {0, 0.5, 0.5});
    check_masses(fosd_inf(m3(0.5, 0, 0.5), m3(0, 1, 0)), {0.5, 0.5, 0});
}

TEST_CASE("dominance is a partial order with lattice bounds") {
    Rng rng(21);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t cells = 1 + rep % 3;
        const std::size_t times = 2 + rep % 5;
        auto a = sample_random_measure(rng, cells, times);
        auto b = sample_random_measure(rng, cells, times);
        auto c = sample_random_measure(rng, cells, times);
        CHECK(random_fosd_leq(a, a));
        if (random_fosd_leq(a, b) && random_fosd_leq(b, a)) CHECK(kolmogorov_distance(a, b) <= 1e-12);
        if (random_fosd_leq(a, b) && random_fosd_leq(b, c)) CHECK(random_fosd_leq(a, c));

        auto sup = lattice_sup(a, b);
        auto inf = lattice_inf(a, b);
        CHECK(random_fosd_leq(a, sup));
        CHECK(random_fosd_leq(b, sup));
        CHECK(random_fosd_leq(inf, a));
        CHECK(random_fosd_leq(inf, b));
        // Least upper bound: any upper bound of a and b dominates sup.
        auto ub = lattice_sup(sup, c);
        CHECK(random_fosd_leq(sup, ub));
        if (random_fosd_leq(a, c) && random_fosd_leq(b, c)) CHECK(random_fosd_leq(sup, c));
        if (random_fosd_leq(c, a) && random_fosd_leq(c, b)) CHECK(random_fosd_leq(c, inf));

        // Ordered pairs integrate non-decreasing test functions in order.
        auto [lo, hi] = sample_ordered_pair(rng, cells, times);
        CHECK(random_fosd_leq(lo, hi));
        std::vector<double> phi(times);
        double level = -1.0;
        for (auto& p : phi) p = (level += std::uniform_real_distribution<double>(0.0, 1.0)(rng));
        for (std::size_t i = 0; i < cells; ++i)
            CHECK(lo.cell(i).integrate(phi) <= hi.cell(i).integrate(phi) + 1e-12);
    }
}

TEST_CASE("kolmogorov distance") {
    auto m = RandomMeasure::constant(2, m3(0.1, 0.6, 0.3));
    CHECK(kolmogorov_distance(m, m) == 0.0);
    CHECK(kolmogorov_distance(RandomMeasure::bottom(2, 3), RandomMeasure::top(2, 3)) == 1.0);
    CHECK(kolmogorov_distance(MeasureOnGrid({0.5, 0.5}), MeasureOnGrid({0.4, 0.6})) == doctest::Approx(0.1));

    Rng rng(8);
    for (int rep = 0; rep < 300; ++rep) {
        auto a = sample_random_measure(rng, 2, 5);
        auto b = sample_random_measure(rng, 2, 5);
        auto c = sample_random_measure(rng, 2, 5);
        CHECK(kolmogorov_distance(a, b) == kolmogorov_distance(b, a));
        CHECK(kolmogorov_distance(a, c) <= kolmogorov_distance(a, b) + kolmogorov_distance(b, c) + 1e-15);
    }
}

TEST_CASE("mixing stays on the simplex") {
    auto a = RandomMeasure::bottom(2, 4);
    auto b = RandomMeasure::top(2, 4);
    auto m = mix(a, b, 0.25);
    check_masses(m.cell(1), {0.75, 0, 0, 0.25});
    CHECK(random_fosd_leq(a, m));
    CHECK(random_fosd_leq(m, b));
}

TEST_CASE("levy distance basics") {
    auto v = sample_step(2.0, 8, [](double t) { return t * t; });
    CHECK(levy_distance(v, v) == 0.0);

    auto w = v;
    for (auto& x : w.values) x += 0.3;
    CHECK(levy_distance(v, w) <= 0.3 + 1e-12);
    CHECK(levy_distance(v, w) == doctest::Approx(levy_distance(w, v)).epsilon(1e-10));
    CHECK(levy_distance(v, w) > 0.0);

    StepFunctionVPlus bad = v;
    bad.values[2] = -10.0;
    CHECK_THROWS(bad.check());
}

TEST_CASE("levy distance of the right-continuity counterexample family") {
    const double t1 = 1.0;
    const double horizon = 2.0;
    auto v = sample_step(horizon, 256, [&](double t) { return t < t1 ? 0.0 : t - t1; });
    for (int n = 1; n <= 40; ++n) {
        const double c = 1.0 / n;
        auto vn = sample_step(horizon, 256, [&](double t) { return t < t1 + c ? c : t - t1; });
        CHECK(levy_distance(vn, v) <= c + 1e-12);
    }
}

TEST_CASE("levy distance metric axioms on random step functions") {
    Rng rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random_step = [&] {
        StepFunctionVPlus v;
        v.knots = {0.0};
        double level = -2.0;
        for (int i = 0; i < 6; ++i) {
            v.knots.push_back(v.knots.back() + 0.25 + u(rng));
            v.values.push_back(level += u(rng));
        }
        v.knots.back() = 8.0;
        return v;
    };
    for (int rep = 0; rep < 100; ++rep) {
        auto a = random_step();
        auto b = random_step();
        auto c = random_step();
        const double ab = levy_distance(a, b);
        CHECK(ab >= 0.0);
        CHECK(ab == doctest::Approx(levy_distance(b, a)).epsilon(1e-9));
        CHECK(levy_distance(a, c) <= ab + levy_distance(b, c) + 1e-9);
    }
}

TEST_CASE("d_rho") {
    CHECK(d_rho(0.7, 0.7, 0.3) == 0.0);
    CHECK(d_rho(0.0, kInf, 0.3) == 1.0);
    CHECK(d_rho(0.0, std::log(2.0), 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(d_rho(1.0, 3.0, 0.5) == d_rho(3.0, 1.0, 0.5));
    CHECK(d_rho(1.0, 4.0, 0.5) <= d_rho(1.0, 2.0, 0.5) + d_rho(2.0, 4.0, 0.5) + 1e-15);
    CHECK_THROWS(d_rho(0.0, 1.0, 0.0));
}
