#include "snell.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfstop {

SnellResult snell_solve(const ScenarioTree& tree, const AdaptedProcess& payoff, const AdaptedProcess& running,
                        double tie_tol) {
    if (payoff.size() != tree.size() || running.size() != tree.size())
        throw std::invalid_argument("snell_solve: process sizes do not match the tree");
    const auto& grid = tree.grid();
    const int last = tree.periods();

    SnellResult r{AdaptedProcess(tree.size()), AdaptedProcess(tree.size(), 0.0),
                  PureStoppingTime(std::vector<std::uint8_t>(tree.size(), 0)),
                  PureStoppingTime(std::vector<std::uint8_t>(tree.size(), 0))};
    std::vector<std::uint8_t> small(tree.size(), 0), large(tree.size(), 0);

    for (int n : tree.level(last)) {
        r.value[n] = payoff[n];
        small[n] = large[n] = 1;
    }
    for (int k = last - 1; k >= 0; --k) {
        for (int n : tree.level(k)) {
            const double cont = running[n] * grid.step(k) + tree.child_mean(n, r.value.values());
            const double g = payoff[n];
            const double scale = std::max({1.0, std::abs(g), std::abs(cont)});
            const bool tie = std::abs(g - cont) <= tie_tol * scale;
            r.continuation[n] = cont;
            r.value[n] = std::max(g, cont);
            small[n] = tie || g > cont;
            large[n] = !tie && g > cont;
        }
    }
    r.smallest_optimal = PureStoppingTime(std::move(small));
    r.largest_optimal = PureStoppingTime(std::move(large));
    return r;
}

double stopping_value(const ScenarioTree& tree, const AdaptedProcess& payoff, const AdaptedProcess& running,
                      const PureStoppingTime& stop) {
    const auto& grid = tree.grid();
    // Backward pass: W(n) = payoff if the path stops at n, else running dt + E[W | n].
    std::vector<double> w(tree.size(), 0.0);
    for (int k = tree.periods(); k >= 0; --k) {
        for (int n : tree.level(k)) {
            if (k == tree.periods() || stop.flagged(n))
                w[n] = payoff[n];
            else
                w[n] = running[n] * grid.step(k) + tree.child_mean(n, w);
        }
    }
    return w[0];
}

double stopping_value(const ScenarioTree& tree, const AdaptedProcess& payoff, const AdaptedProcess& running,
                      const RandomizedStoppingTime& stop) {
    double prev = 0.0;
    double total = 0.0;
    for (double b : stop.breakpoints()) {
        total += (b - prev) * stopping_value(tree, payoff, running, slice_randomized(tree, stop, b));
        prev = b;
    }
    return total;
}

std::pair<AdaptedProcess, AdaptedProcess> discounted(const ScenarioTree& tree, const RewardProcesses& rewards) {
    AdaptedProcess g(tree.size()), h(tree.size());
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const double d = tree.grid().discount(tree.node(static_cast<int>(i)).level);
        g[i] = d * rewards.g[i];
        h[i] = d * rewards.h[i];
    }
    return {std::move(g), std::move(h)};
}

double game_value_J(const ScenarioTree& tree, const RewardProcesses& rewards, const PureStoppingTime& stop) {
    auto [g, h] = discounted(tree, rewards);
    return stopping_value(tree, g, h, stop);
}

double game_value_J(const ScenarioTree& tree, const DiscountedProblem& problem, const PureStoppingTime& stop) {
    return stopping_value(tree, problem.y, problem.hbar, stop) + problem.offset;
}

double game_value_Jtilde(const ScenarioTree& tree, const RewardProcesses& rewards,
                         const RandomizedStoppingTime& stop) {
    auto [g, h] = discounted(tree, rewards);
    return stopping_value(tree, g, h, stop);
}

double game_value_Jtilde(const ScenarioTree& tree, const DiscountedProblem& problem,
                         const RandomizedStoppingTime& stop) {
    return stopping_value(tree, problem.y, problem.hbar, stop) + problem.offset;
}

double optimal_value(const ScenarioTree& tree, const RewardProcesses& rewards) {
    auto [g, h] = discounted(tree, rewards);
    return snell_solve(tree, g, h).value[0];
}

double optimality_gap(const ScenarioTree& tree, const RewardProcesses& rewards, const PureStoppingTime& stop) {
    auto [g, h] = discounted(tree, rewards);
    return snell_solve(tree, g, h).value[0] - stopping_value(tree, g, h, stop);
}

double optimality_gap(const ScenarioTree& tree, const RewardProcesses& rewards,
                      const RandomizedStoppingTime& stop) {
    auto [g, h] = discounted(tree, rewards);
    return snell_solve(tree, g, h).value[0] - stopping_value(tree, g, h, stop);
}

}  // namespace mfstop
