#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "instances.hpp"

using namespace mfstop;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BEKSolution from_L(const ScenarioTree& tree, std::vector<double> l) {
    BEKSolution s;
    s.L = AdaptedProcess(std::move(l));
    s.M = running_max(tree, s.L);
    return s;
}

double simpson(auto f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Coin tree with unit steps: Y root 1, Y after one step (2, 0), zero at leaves.
std::pair<ScenarioTree, DiscountedProblem> coin_problem() {
    auto tree = binary_tree(2, 0.5, 0.0, 1);
    std::vector<double> y(tree.size(), 0.0);
    y[0] = 1.0;
    y[1] = 2.0;
    y[2] = 0.0;
    auto p = direct_problem(tree, y, std::vector<double>(tree.size(), 0.0));
    return {tree, p};
}

}  // namespace

TEST_CASE("constant running reward gives a constant index") {
    Rng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        auto tree = random_tree(rng, {});
        const double c = 0.37 * (rep - 10);
        auto p = direct_problem(tree, std::vector<double>(tree.size(), 0.0), std::vector<double>(tree.size(), c));
        auto sol = solve_L(tree, p);
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const int n = static_cast<int>(i);
            if (tree.is_leaf(n)) {
                CHECK(sol.L[i] == -kInf);
                continue;
            }
            CHECK(std::abs(sol.L[i] + c) <= 1e-9);
            CHECK(brute_force_L(tree, p, n) == doctest::Approx(-c).epsilon(1e-12));
        }
        CHECK(verify_representation(tree, p, sol.L) <= 1e-9);
    }
}

TEST_CASE("deterministic two-step index") {
    auto tree = path_tree({0, 1, 2}, 0.0);
    Rng rng(2);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int rep = 0; rep < 50; ++rep) {
        const double y0 = u(rng);
        const double y1 = u(rng);
        auto p = direct_problem(tree, {y0, y1, 0.0}, {0.0, 0.0, 0.0});
        auto sol = solve_L(tree, p);
        CHECK(std::abs(sol.L[1] - y1) <= 1e-8);
        CHECK(std::abs(sol.L[0] - std::min(y0 - y1, y0 / 2.0)) <= 1e-8);
        CHECK(std::abs(brute_force_L(tree, p, 0) - sol.L[0]) <= 1e-8);
    }
}

TEST_CASE("coin tree index") {
    auto [tree, p] = coin_problem();
    auto sol = solve_L(tree, p);
    CHECK(std::abs(sol.L[1] - 2.0) <= 1e-8);
    CHECK(std::abs(sol.L[2] - 0.0) <= 1e-8);
    CHECK(std::abs(sol.L[0] - 0.0) <= 1e-8);
    for (int n : {0, 1, 2}) CHECK(std::abs(brute_force_L(tree, p, n) - sol.L[n]) <= 1e-8);
    CHECK(sol.residual <= 1e-8);
}

TEST_CASE("closed-form index of a given stopping time") {
    SUBCASE("one step on a path") {
        auto tree = path_tree({0, 1, 2, 3}, 0.0);
        auto p = direct_problem(tree, {1.5, -0.5, 2.0, 0.0}, {0, 0, 0, 0});
        for (int k = 0; k < 3; ++k) {
            std::vector<std::uint8_t> f(4, 0);
            f[k + 1] = 1;
            CHECK(l_closed_form(tree, p, k, PureStoppingTime(f)) == doctest::Approx(p.y[k] - p.y[k + 1]));
        }
    }
    SUBCASE("constant running reward") {
        auto tree = binary_tree(3, 0.3, 0.2, 1);
        auto p = direct_problem(tree, std::vector<double>(tree.size(), 0.0), std::vector<double>(tree.size(), 0.8));
        Rng rng(3);
        for (int rep = 0; rep < 20; ++rep) {
            auto s = random_pure_stop(rng, tree, 0.5);
            std::vector<std::uint8_t> f(s.flags().begin(), s.flags().end());
            f[0] = 0;
            CHECK(l_closed_form(tree, p, 0, PureStoppingTime(f)) == doctest::Approx(-0.8));
        }
    }
    SUBCASE("coin tree to the leaves") {
        auto [tree, p] = coin_problem();
        CHECK(l_closed_form(tree, p, 0, PureStoppingTime::at_level(tree, 2)) == doctest::Approx(0.5));
        CHECK_THROWS(l_closed_form(tree, p, 0, PureStoppingTime::at_level(tree, 0)));
    }
}

TEST_CASE("brute force on a single step") {
    Rng rng(4);
    auto tree = binary_tree(1, 0.6, 0.2, 1);
    auto p = direct_problem(tree, {0.9, 0.0, 0.0}, {0.3, 0.0, 0.0});
    CHECK(brute_force_L(tree, p, 0) ==
          doctest::Approx(l_closed_form(tree, p, 0, PureStoppingTime::at_level(tree, 1))));
    auto deep = binary_tree(4, 0.5, 0.0, 1);
    auto pd = direct_problem(deep, std::vector<double>(deep.size(), 0.0), std::vector<double>(deep.size(), 0.0));
    CHECK_THROWS(brute_force_L(deep, pd, 0, 2));
}

TEST_CASE("solver agrees with the oracle on random trees") {
    Rng rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        auto tree = random_tree(rng, {.max_periods = 4, .max_branch = 2});
        auto p = build_problem(tree, random_rewards(rng, tree, 1.0));
        auto sol = solve_L(tree, p);
        for (std::size_t i = 0; i < tree.size(); ++i) {
            if (tree.is_leaf(static_cast<int>(i))) continue;
            CHECK(std::abs(sol.L[i] - brute_force_L(tree, p, static_cast<int>(i))) <= 1e-8);
        }
        CHECK(sol.residual <= 1e-8);
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const int par = tree.node(static_cast<int>(i)).parent;
            if (par >= 0) CHECK(sol.M[i] >= sol.M[par]);
            CHECK(sol.M[i] >= sol.L[i]);
        }
    }
}

TEST_CASE("bisection only, without the polish step") {
    Rng rng(6);
    for (int rep = 0; rep < 50; ++rep) {
        auto tree = random_tree(rng, {.max_periods = 4, .max_branch = 2});
        auto p = build_problem(tree, random_rewards(rng, tree, 1.0));
        auto polished = solve_L(tree, p);
        auto plain = solve_L(tree, p, {.polish = false});
        for (std::size_t i = 0; i < tree.size(); ++i) {
            if (tree.is_leaf(static_cast<int>(i))) continue;
            CHECK(std::abs(polished.L[i] - plain.L[i]) <= 1e-8);
        }
        CHECK(plain.residual <= 1e-8);
    }
}

TEST_CASE("forced continuation excess is increasing with the minimal slope") {
    Rng rng(7);
    auto tree = random_tree(rng, {.min_periods = 3, .max_periods = 4});
    auto p = build_problem(tree, random_rewards(rng, tree, 1.0));
    for (int n : tree.level(1)) {
        const int k = tree.node(n).level;
        const double slope = tree.grid().discount(k) * tree.grid().step(k);
        double prev = forced_continuation_excess(tree, p, n, -5.0);
        for (double l = -4.9; l <= 5.0; l += 0.1) {
            const double cur = forced_continuation_excess(tree, p, n, l);
            CHECK(cur - prev >= slope * 0.1 * (1.0 - 1e-9));
            prev = cur;
        }
    }
}

TEST_CASE("perturbing the index breaks the representation") {
    Rng rng(8);
    for (int rep = 0; rep < 50; ++rep) {
        auto tree = random_tree(rng, {});
        auto p = build_problem(tree, random_rewards(rng, tree, 1.0));
        auto sol = solve_L(tree, p);
        double min_step = kInf;
        for (int k = 0; k < tree.periods(); ++k) min_step = std::min(min_step, tree.grid().step(k));
        const double bound = std::exp(-tree.grid().rho * tree.grid().horizon()) * 0.1 * min_step;
        for (std::size_t i = 0; i < tree.size(); ++i) {
            if (tree.is_leaf(static_cast<int>(i))) continue;
            auto bumped = sol.L;
            bumped[i] += 0.1;
            CHECK(verify_representation(tree, p, bumped) >= bound - 1e-9);
        }
    }
}

TEST_CASE("martingale additions leave the index unchanged") {
    Rng rng(9);
    for (int rep = 0; rep < 30; ++rep) {
        auto tree = random_tree(rng, {.max_periods = 4, .max_branch = 3});
        auto p = build_problem(tree, random_rewards(rng, tree, 1.0));
        auto base = solve_L(tree, p);
        // N = E[X | F_t] for a random terminal X.
        auto x = random_process(rng, tree, -2.0, 2.0);
        auto mart = project_to_nodes(tree, x, tree.periods());
        auto q = p;
        for (std::size_t i = 0; i < tree.size(); ++i) q.y[i] += mart[i];
        auto shifted = solve_L(tree, q);
        CHECK(shifted.residual <= 1e-8);
        for (std::size_t i = 0; i < tree.size(); ++i)
            if (!tree.is_leaf(static_cast<int>(i))) CHECK(std::abs(shifted.L[i] - base.L[i]) <= 1e-8);
    }
}

TEST_CASE("hitting time examples") {
    auto tree = path_tree({0, 1, 2}, 0.0);
    SUBCASE("negative index never hits") {
        auto [s, t] = hitting_times(tree, from_L(tree, {-1.0, -1.0, -kInf}), 0.0);
        CHECK(s.stop_levels(tree) == std::vector<int>{2});
        CHECK(t.stop_levels(tree) == std::vector<int>{2});
    }
    SUBCASE("strict crossing at the start") {
        auto [s, t] = hitting_times(tree, from_L(tree, {1.0, -5.0, -kInf}), 0.0);
        CHECK(s.stop_levels(tree) == std::vector<int>{0});
        CHECK(t.stop_levels(tree) == std::vector<int>{0});
    }
    SUBCASE("touching the level separates the two times") {
        auto [s, t] = hitting_times(tree, from_L(tree, {0.0, -5.0, -kInf}), 0.0);
        CHECK(s.stop_levels(tree) == std::vector<int>{0});
        CHECK(t.stop_levels(tree) == std::vector<int>{2});
    }
}

TEST_CASE("inclusive running max matches the oracle where the strict past does not") {
    // Y represented by L = (1, -5): Y_1 = L_1, Y_0 = L_0 + max(L_0, L_1).
    // Stopping at t_0 is the unique optimum of the level-0 problem.
    auto tree = path_tree({0, 1, 2}, 0.0);
    auto p = direct_problem(tree, {2.0, -5.0, 0.0}, {0, 0, 0});
    auto sol = solve_L(tree, p);
    CHECK(std::abs(sol.L[0] - 1.0) <= 1e-8);
    auto res = snell_solve(tree, p.y, p.hbar);
    auto [s, t] = hitting_times(tree, sol, 0.0);
    CHECK(res.smallest_optimal.stop_levels(tree) == std::vector<int>{0});
    CHECK(s.stop_levels(tree) == std::vector<int>{0});
    CHECK(t.stop_levels(tree) == std::vector<int>{0});
    // The strict-past supremum is -inf at t_0 and would never stop there.
    auto strict_past = running_sup_path(tree, sol, tree.leaves()[0]);
    CHECK(strict_past(0.0) == -kInf);
}

TEST_CASE("hitting times coincide with the oracle's extremal optimizers") {
    Rng rng(10);
    for (int rep = 0; rep < 60; ++rep) {
        auto tree = random_tree(rng, {.max_periods = 4, .max_branch = 3});
        auto p = build_problem(tree, random_rewards(rng, tree, 1.0));
        auto sol = solve_L(tree, p);
        const auto& g = tree.grid();
        std::vector<double> levels = level_grid(tree, sol);
        // Levels at the index values themselves exercise the ties.
        for (std::size_t i = 0; i < tree.size(); ++i)
            if (!tree.is_leaf(static_cast<int>(i))) levels.push_back(sol.L[i]);
        for (double l : levels) {
            AdaptedProcess payoff(tree.size());
            for (std::size_t i = 0; i < tree.size(); ++i) {
                double acc = p.y[i];
                for (int n : tree.path(static_cast<int>(i))) {
                    if (n == static_cast<int>(i)) break;
                    const int k = tree.node(n).level;
                    acc += (p.hbar[n] + p.discount[k] * l) * g.step(k);
                }
                payoff[i] = acc;
            }
            auto res = snell_solve(tree, payoff, AdaptedProcess(tree.size(), 0.0));
            auto [s, t] = hitting_times(tree, sol, l);
            CHECK(s.stop_nodes(tree) == res.smallest_optimal.stop_nodes(tree));
            CHECK(t.stop_nodes(tree) == res.largest_optimal.stop_nodes(tree));
        }
    }
}

TEST_CASE("hitting times are monotone in the level") {
    Rng rng(11);
    auto tree = random_tree(rng, {.min_periods = 3, .max_periods = 4});
    auto sol = solve_L(tree, build_problem(tree, random_rewards(rng, tree, 1.0)));
    auto levels = level_grid(tree, sol);
    REQUIRE(levels.size() == 21);
    std::vector<int> prev_s(tree.leaves().size(), 0);
    std::vector<int> prev_t(tree.leaves().size(), 0);
    for (double l : levels) {
        auto [s, t] = hitting_times(tree, sol, l);
        auto ls = s.stop_levels(tree);
        auto lt = t.stop_levels(tree);
        for (std::size_t i = 0; i < ls.size(); ++i) {
            CHECK(ls[i] <= lt[i]);
            CHECK(ls[i] >= prev_s[i]);
            CHECK(lt[i] >= prev_t[i]);
        }
        prev_s = ls;
        prev_t = lt;
    }
    for (int v : prev_s) CHECK(v == tree.periods());
    auto [s0, t0] = hitting_times(tree, sol, levels.front());
    for (int v : t0.stop_levels(tree)) CHECK(v == 0);
}

TEST_CASE("time weight integral") {
    for (double rho : {0.0, 1e-9, 1e-4, 3e-3, 0.05, 0.3, 1.0, 2.5}) {
        for (double horizon : {0.5, 1.0, 3.0, 10.0}) {
            const double q = simpson([&](double t) { return t * std::exp(-rho * t); }, 0.0, horizon, 20000);
            CHECK(std::abs(time_weight_integral(rho, horizon) - q) <= 1e-10 * std::max(1.0, q));
        }
    }
    CHECK(time_weight_integral(0.0, 2.0) == 2.0);
}

TEST_CASE("epsilon hitting examples") {
    SUBCASE("large horizon limit of delta") {
        auto tree = path_tree({0, 15, 30}, 1.0);
        auto sol = from_L(tree, {-1.0, -1.0, -kInf});
        for (double eps : {0.1, 0.01}) CHECK(epsilon_hitting_time(tree, sol, eps).delta == doctest::Approx(eps / 3.0));
    }
    SUBCASE("index strictly above zero from t_1") {
        auto tree = path_tree({0, 1, 2, 3}, 0.1);
        auto sol = from_L(tree, {-2.0, 0.5, 0.1, -kInf});
        auto [s, t] = hitting_times(tree, sol, 0.0);
        for (double eps : {1e-1, 1e-2, 1e-3})
            CHECK(epsilon_hitting_time(tree, sol, eps).stop.stop_levels(tree) == t.stop_levels(tree));
    }
    SUBCASE("zero index stops at t_1") {
        auto tree = path_tree({0, 1, 2, 3}, 0.1);
        auto sol = from_L(tree, {0.0, 0.0, 0.0, -kInf});
        CHECK(epsilon_hitting_time(tree, sol, 1e-3).stop.stop_levels(tree) == std::vector<int>{1});
        CHECK(hitting_times(tree, sol, 0.0).second.stop_levels(tree) == std::vector<int>{3});
    }
    SUBCASE("non-positive epsilon is rejected") {
        auto tree = path_tree({0, 1}, 0.1);
        CHECK_THROWS(epsilon_hitting_time(tree, from_L(tree, {0.0, -kInf}), 0.0));
    }
}

TEST_CASE("perturbing the running max instead of the index can lose much more than epsilon") {
    // L_0 slightly negative, L_1 very negative: continuing to T is optimal with value 0,
    // yet the running max plus delta * t turns positive at t_1.
    auto tree = path_tree({0, 1, 2}, 0.0);
    const double eps = 0.1;
    const double delta = eps / (3.0 * time_weight_integral(0.0, 2.0));
    auto p = direct_problem(tree, {-delta, -100.0, 0.0}, {0, 0, 0});
    auto sol = solve_L(tree, p);
    CHECK(std::abs(sol.L[0] + delta / 2.0) <= 1e-9);
    CHECK(std::abs(sol.L[1] + 100.0) <= 1e-8);

    RewardProcesses raw{AdaptedProcess(3, 0.0), AdaptedProcess(std::vector<double>{-delta, -100.0, 0.0})};
    auto hit = epsilon_hitting_time(tree, sol, eps);
    CHECK(hit.delta == doctest::Approx(delta));
    CHECK(optimality_gap(tree, raw, hit.stop) <= eps);

    AdaptedProcess shifted(3);
    for (int k = 0; k < 3; ++k) shifted[k] = sol.M[k] + delta * tree.grid().times[k];
    auto literal = hitting_time(tree, shifted, 0.0, true);
    CHECK(literal.stop_levels(tree) == std::vector<int>{1});
    CHECK(optimality_gap(tree, raw, literal) > 99.0);
}

TEST_CASE("epsilon gap bound on random instances") {
    Rng rng(12);
    for (int rep = 0; rep < 100; ++rep) {
        auto tree = random_tree(rng, {.max_periods = 4, .max_branch = 2});
        auto r = random_rewards(rng, tree, 1.0);
        auto sol = solve_L(tree, build_problem(tree, r));
        for (double eps : {1e-1, 1e-2, 1e-3}) CHECK(optimality_gap(tree, r, epsilon_hitting_time(tree, sol, eps).stop) <= eps);
    }
}

TEST_CASE("running supremum path export") {
    auto tree = path_tree({0, 1, 2, 3}, 0.0);
    auto sol = from_L(tree, {-1.0, 2.0, 0.5, -kInf});
    auto v = running_sup_path(tree, sol, 3);
    v.check();
    CHECK(v(0.0) == -kInf);
    CHECK(v(0.5) == -1.0);
    CHECK(v(1.0) == -1.0);
    CHECK(v(1.5) == 2.0);
    CHECK(v(2.5) == 2.0);
    auto grid = level_grid(tree, sol);
    CHECK(grid.front() == -2.0);
    CHECK(grid.back() == 3.0);
}
