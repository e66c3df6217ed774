#include "stopping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfstop {

PureStoppingTime PureStoppingTime::at_level(const ScenarioTree& tree, int k) {
    std::vector<std::uint8_t> f(tree.size(), 0);
    for (int n : tree.level(k)) f[n] = 1;
    return PureStoppingTime(std::move(f));
}

int PureStoppingTime::stop_node(const ScenarioTree& tree, int leaf) const {
    auto p = tree.path(leaf);
    for (int n : p)
        if (flags_[n]) return n;
    return leaf;
}

std::vector<int> PureStoppingTime::stop_nodes(const ScenarioTree& tree) const {
    // Top-down: the stop node of each node's path prefix, or -1 while still running.
    std::vector<int> stopped(tree.size(), -1);
    for (int k = 0; k <= tree.periods(); ++k) {
        for (int n : tree.level(k)) {
            int inherited = k == 0 ? -1 : stopped[tree.node(n).parent];
            stopped[n] = inherited >= 0 ? inherited : (flags_[n] || k == tree.periods() ? n : -1);
        }
    }
    std::vector<int> out;
    out.reserve(tree.leaves().size());
    for (int leaf : tree.leaves()) out.push_back(stopped[leaf]);
    return out;
}

std::vector<int> PureStoppingTime::stop_levels(const ScenarioTree& tree) const {
    auto nodes = stop_nodes(tree);
    for (auto& n : nodes) n = tree.node(n).level;
    return nodes;
}

bool PureStoppingTime::stopped_before(const ScenarioTree& tree, int node) const {
    for (int cur = tree.node(node).parent; cur >= 0; cur = tree.node(cur).parent)
        if (flags_[cur]) return true;
    return false;
}

PureStoppingTime PureStoppingTime::canonical(const ScenarioTree& tree) const {
    std::vector<std::uint8_t> f(tree.size(), 0);
    for (int n : stop_nodes(tree)) f[n] = 1;
    return PureStoppingTime(std::move(f));
}

void RandomizedStoppingTime::check(const ScenarioTree& tree, double tol) const {
    if (a_.size() != tree.size()) throw std::invalid_argument("A-process does not match tree");
    for (std::size_t n = 0; n < tree.size(); ++n) {
        double v = a_[n];
        if (!(v >= -tol && v <= 1.0 + tol)) throw std::invalid_argument("A-process leaves [0, 1]");
        int p = tree.node(static_cast<int>(n)).parent;
        if (p >= 0 && v < a_[p] - tol) throw std::invalid_argument("A-process decreases along a path");
        if (tree.is_leaf(static_cast<int>(n)) && std::abs(v - 1.0) > tol)
            throw std::invalid_argument("A-process must equal 1 at leaves");
    }
}

std::vector<double> RandomizedStoppingTime::breakpoints() const {
    std::vector<double> b;
    for (double v : a_.values())
        if (v > 0.0 && v < 1.0) b.push_back(v);
    b.push_back(1.0);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

PureStoppingTime hitting_time(const ScenarioTree& tree, const AdaptedProcess& m, double l, bool strict) {
    std::vector<std::uint8_t> f(tree.size(), 0);
    for (std::size_t n = 0; n < tree.size(); ++n) f[n] = strict ? (m[n] > l) : (m[n] >= l);
    return PureStoppingTime(std::move(f));
}

RandomMeasure conditional_law(const ScenarioTree& tree, const PureStoppingTime& stop) {
    const auto n_times = static_cast<std::size_t>(tree.periods() + 1);
    std::vector<std::vector<double>> mass(tree.num_cells(), std::vector<double>(n_times, 0.0));
    auto leaves = tree.leaves();
    auto levels = stop.stop_levels(tree);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        const auto& leaf = tree.node(leaves[i]);
        mass[leaf.cell][levels[i]] += leaf.path_prob;
    }
    std::vector<MeasureOnGrid> cells;
    for (int c = 0; c < tree.num_cells(); ++c) {
        for (double& x : mass[c]) x /= tree.cell_prob(c);
        cells.emplace_back(std::move(mass[c]));
    }
    return RandomMeasure(std::move(cells));
}

RandomMeasure conditional_law(const ScenarioTree& tree, const RandomizedStoppingTime& stop) {
    const auto n_times = static_cast<std::size_t>(tree.periods() + 1);
    std::vector<std::vector<double>> mass(tree.num_cells(), std::vector<double>(n_times, 0.0));
    for (int leaf_idx : tree.leaves()) {
        const auto& leaf = tree.node(leaf_idx);
        double prev = 0.0;
        for (int n : tree.path(leaf_idx)) {
            double inc = stop[n] - prev;
            prev = stop[n];
            mass[leaf.cell][tree.node(n).level] += leaf.path_prob * inc;
        }
    }
    std::vector<MeasureOnGrid> cells;
    for (int c = 0; c < tree.num_cells(); ++c) {
        for (double& x : mass[c]) x /= tree.cell_prob(c);
        cells.emplace_back(std::move(mass[c]));
    }
    return RandomMeasure(std::move(cells));
}

RandomizedStoppingTime embed_pure(const ScenarioTree& tree, const PureStoppingTime& stop) {
    AdaptedProcess a(tree.size(), 0.0);
    for (int k = 0; k <= tree.periods(); ++k) {
        for (int n : tree.level(k)) {
            bool before = k > 0 && a[tree.node(n).parent] == 1.0;
            a[n] = (before || stop.flagged(n) || k == tree.periods()) ? 1.0 : 0.0;
        }
    }
    return RandomizedStoppingTime(std::move(a));
}

PureStoppingTime slice_randomized(const ScenarioTree& tree, const RandomizedStoppingTime& stop, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("slice level outside [0, 1]");
    std::vector<std::uint8_t> f(tree.size(), 0);
    for (std::size_t n = 0; n < tree.size(); ++n) f[n] = stop[static_cast<int>(n)] >= v;
    return PureStoppingTime(std::move(f));
}

RandomizedStoppingTime mix_randomized(std::span<const RandomizedStoppingTime> parts,
                                      std::span<const double> weights) {
    if (parts.empty() || parts.size() != weights.size())
        throw std::invalid_argument("mix_randomized: parts and weights differ in length");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("mix_randomized: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("mix_randomized: weights must sum to 1");
    const auto n = parts.front().size();
    AdaptedProcess a(n, 0.0);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].size() != n) throw std::invalid_argument("mix_randomized: dimension mismatch");
        for (std::size_t j = 0; j < n; ++j) a[j] += weights[i] * parts[i][static_cast<int>(j)];
    }
    // Pin leaves to 1 exactly; weights summing to 1 only up to rounding would drift.
    for (std::size_t j = 0; j < n; ++j)
        if (std::abs(a[j] - 1.0) <= 1e-12) a[j] = 1.0;
    return RandomizedStoppingTime(std::move(a));
}

}  // namespace mfstop
