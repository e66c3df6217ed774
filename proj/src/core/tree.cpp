#include "tree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include "error.hpp"

namespace mfstop {

namespace {

constexpr double kProbTol = 1e-12;

std::string node_tag(long long id) { return "node " + std::to_string(id); }

}  // namespace

double TimeGrid::discount(int k) const { return std::exp(-rho * times[k]); }

std::vector<std::string> ValidationReport::lines() const {
    std::vector<std::string> out;
    out.reserve(issues.size());
    for (const auto& i : issues) out.push_back(i.where + ": " + i.message);
    return out;
}

ValidationReport validate_tree(const TreeSpec& spec) {
    ValidationReport rep;
    auto add = [&](std::string where, std::string msg) {
        rep.issues.push_back({std::move(where), std::move(msg)});
    };

    const auto& t = spec.times;
    if (t.size() < 2) add("grid", "need at least two grid times (N >= 1)");
    if (!t.empty() && t.front() != 0.0) add("grid", "t_0 must be 0");
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        if (!(t[k + 1] > t[k]) || !std::isfinite(t[k + 1]))
            add("grid", "times not strictly increasing at index " + std::to_string(k + 1));
    }
    if (!std::isfinite(spec.rho) || spec.rho < 0.0) add("grid", "rho must be finite and >= 0");
    if (!rep.ok()) return rep;

    const int n_levels = static_cast<int>(t.size());
    const int last = n_levels - 1;

    std::map<long long, std::size_t> by_id;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        if (!by_id.emplace(spec.nodes[i].id, i).second)
            add(node_tag(spec.nodes[i].id), "duplicate node id");
    }

    std::map<long long, std::vector<long long>> children;
    int roots = 0;
    for (const auto& n : spec.nodes) {
        if (n.time < 0 || n.time > last) {
            add(node_tag(n.id), "time index out of range");
            continue;
        }
        if (!n.parent) {
            ++roots;
            if (n.time != 0) add(node_tag(n.id), "root must sit at time index 0");
            continue;
        }
        auto it = by_id.find(*n.parent);
        if (it == by_id.end()) {
            add(node_tag(n.id), "unknown parent " + std::to_string(*n.parent));
            continue;
        }
        const auto& p = spec.nodes[it->second];
        if (p.time + 1 != n.time)
            add(node_tag(n.id), "time index must be parent's time index + 1");
        if (!(n.prob > 0.0) || n.prob > 1.0 + kProbTol || !std::isfinite(n.prob))
            add(node_tag(n.id), "branch probability must lie in (0, 1]");
        children[*n.parent].push_back(n.id);
    }
    if (roots != 1) add("tree", "expected exactly one root, found " + std::to_string(roots));

    for (const auto& n : spec.nodes) {
        auto it = children.find(n.id);
        if (it == children.end()) {
            if (n.time != last) add(node_tag(n.id), "leaf not at the terminal time index");
            continue;
        }
        double sum = 0.0;
        for (long long c : it->second) sum += spec.nodes[by_id[c]].prob;
        if (std::abs(sum - 1.0) > kProbTol) {
            std::ostringstream os;
            os.precision(17);
            os << "child probabilities sum " << sum << " != 1";
            add(node_tag(n.id), os.str());
        }
    }

    // Reachability from the root (catches cycles and detached components).
    if (roots == 1) {
        long long root_id = 0;
        for (const auto& n : spec.nodes)
            if (!n.parent) root_id = n.id;
        std::set<long long> seen{root_id};
        std::queue<long long> q;
        q.push(root_id);
        while (!q.empty()) {
            auto cur = q.front();
            q.pop();
            if (auto it = children.find(cur); it != children.end())
                for (auto c : it->second)
                    if (seen.insert(c).second) q.push(c);
        }
        for (const auto& n : spec.nodes)
            if (!seen.count(n.id)) add(node_tag(n.id), "not reachable from the root");
    }

    // Common-noise partition: every leaf in exactly one cell, every cell non-null.
    std::map<long long, std::string> cell_of;
    for (const auto& [leaf, label] : spec.cells) {
        auto it = by_id.find(leaf);
        if (it == by_id.end()) {
            add(node_tag(leaf), "cell assignment for unknown node");
            continue;
        }
        if (children.count(leaf)) add(node_tag(leaf), "cell assignment for a non-leaf node");
        if (!cell_of.emplace(leaf, label).second) add(node_tag(leaf), "leaf assigned to two cells");
    }
    if (!rep.ok()) return rep;

    // Path probabilities, then cell masses.
    std::map<long long, double> path_prob;
    for (int k = 0; k <= last; ++k) {
        for (const auto& n : spec.nodes) {
            if (n.time != k) continue;
            path_prob[n.id] = n.parent ? path_prob[*n.parent] * n.prob : 1.0;
        }
    }
    std::map<std::string, double> cell_mass;
    for (const auto& [leaf, label] : spec.cells) cell_mass[label] += 0.0;
    for (const auto& label : spec.declared_cells) cell_mass[label] += 0.0;
    double leaf_total = 0.0;
    for (const auto& n : spec.nodes) {
        if (n.time != last) continue;
        leaf_total += path_prob[n.id];
        auto it = cell_of.find(n.id);
        if (it == cell_of.end()) {
            add(node_tag(n.id), "leaf belongs to no cell");
            continue;
        }
        cell_mass[it->second] += path_prob[n.id];
    }
    for (const auto& [label, mass] : cell_mass)
        if (!(mass > 0.0)) add("cell " + label, "cell probability 0");
    if (std::abs(leaf_total - 1.0) > 1e-9)
        add("tree", "leaf probabilities do not sum to 1");
    return rep;
}

ScenarioTree ScenarioTree::build(const TreeSpec& spec) {
    auto rep = validate_tree(spec);
    if (!rep.ok()) throw ValidationError("invalid scenario tree", rep.lines());

    ScenarioTree tree;
    tree.grid_.times = spec.times;
    tree.grid_.rho = spec.rho;
    const int last = tree.grid_.periods();

    std::map<long long, std::size_t> by_id;
    std::map<long long, std::vector<std::size_t>> kids;
    std::size_t root_pos = 0;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        by_id[spec.nodes[i].id] = i;
        if (spec.nodes[i].parent)
            kids[*spec.nodes[i].parent].push_back(i);
        else
            root_pos = i;
    }

    std::map<std::string, int> cell_idx;
    for (const auto& [leaf, label] : spec.cells) cell_idx.emplace(label, 0);
    for (auto& [label, idx] : cell_idx) {
        idx = static_cast<int>(tree.cell_labels_.size());
        tree.cell_labels_.push_back(label);
    }
    std::map<long long, int> leaf_cell;
    for (const auto& [leaf, label] : spec.cells) leaf_cell[leaf] = cell_idx[label];

    // Breadth-first relabelling; children keep file order.
    std::vector<std::size_t> order{root_pos};
    tree.nodes_.reserve(spec.nodes.size());
    std::vector<int> internal(spec.nodes.size(), -1);
    for (std::size_t head = 0; head < order.size(); ++head) {
        const auto pos = order[head];
        const auto& src = spec.nodes[pos];
        TreeNode n;
        n.id = src.id;
        n.level = src.time;
        internal[pos] = static_cast<int>(tree.nodes_.size());
        if (src.parent) {
            n.parent = internal[by_id[*src.parent]];
            n.branch_prob = src.prob;
            n.path_prob = tree.nodes_[n.parent].path_prob * src.prob;
            tree.nodes_[n.parent].children.push_back(internal[pos]);
        }
        if (n.level == last) n.cell = leaf_cell.at(n.id);
        tree.nodes_.push_back(n);
        if (auto it = kids.find(src.id); it != kids.end())
            for (auto c : it->second) order.push_back(c);
    }

    tree.level_start_.assign(last + 2, 0);
    for (const auto& n : tree.nodes_) ++tree.level_start_[n.level + 1];
    for (int k = 0; k <= last; ++k) tree.level_start_[k + 1] += tree.level_start_[k];
    tree.level_nodes_.resize(tree.nodes_.size());
    for (std::size_t i = 0; i < tree.nodes_.size(); ++i) tree.level_nodes_[i] = static_cast<int>(i);

    tree.cell_probs_.assign(tree.cell_labels_.size(), 0.0);
    for (int leaf : tree.leaves()) tree.cell_probs_[tree.nodes_[leaf].cell] += tree.nodes_[leaf].path_prob;

    for (std::size_t i = 0; i < tree.nodes_.size(); ++i)
        tree.id_index_.emplace_back(tree.nodes_[i].id, static_cast<int>(i));
    std::sort(tree.id_index_.begin(), tree.id_index_.end());
    return tree;
}

std::span<const int> ScenarioTree::level(int k) const {
    if (k < 0 || k > periods()) throw std::out_of_range("level index out of range");
    return std::span<const int>(level_nodes_).subspan(
        level_start_[k], level_start_[k + 1] - level_start_[k]);
}

int ScenarioTree::cell_index(const std::string& label) const {
    auto it = std::find(cell_labels_.begin(), cell_labels_.end(), label);
    return it == cell_labels_.end() ? -1 : static_cast<int>(it - cell_labels_.begin());
}

int ScenarioTree::find(long long external_id) const {
    auto it = std::lower_bound(id_index_.begin(), id_index_.end(),
                               std::pair<long long, int>{external_id, -1});
    if (it == id_index_.end() || it->first != external_id) return -1;
    return it->second;
}

std::vector<int> ScenarioTree::path(int i) const {
    std::vector<int> p(nodes_[i].level + 1);
    for (int cur = i; cur >= 0; cur = nodes_[cur].parent) p[nodes_[cur].level] = cur;
    return p;
}

double ScenarioTree::child_mean(int i, std::span<const double> values) const {
    double s = 0.0;
    for (int c : nodes_[i].children) s += nodes_[c].branch_prob * values[c];
    return s;
}

TreeSpec ScenarioTree::spec() const {
    TreeSpec s;
    s.times = grid_.times;
    s.rho = grid_.rho;
    for (const auto& n : nodes_) {
        TreeSpec::Node sn;
        sn.id = n.id;
        sn.time = n.level;
        if (n.parent >= 0) sn.parent = nodes_[n.parent].id;
        sn.prob = n.branch_prob;
        s.nodes.push_back(sn);
        if (n.cell >= 0) s.cells.emplace_back(n.id, cell_labels_[n.cell]);
    }
    return s;
}

std::vector<double> conditional_expectation(const ScenarioTree& tree,
                                            std::span<const double> x_level_j, int j, int k) {
    if (j < 0 || j > tree.periods() || k < 0 || k > j)
        throw std::out_of_range("conditional_expectation: need 0 <= k <= j <= N");
    auto lj = tree.level(j);
    if (x_level_j.size() != lj.size())
        throw std::invalid_argument("conditional_expectation: values do not match level size");

    std::vector<double> full(tree.size(), 0.0);
    for (std::size_t i = 0; i < lj.size(); ++i) full[lj[i]] = x_level_j[i];
    for (int lev = j - 1; lev >= k; --lev)
        for (int n : tree.level(lev)) full[n] = tree.child_mean(n, full);

    auto lk = tree.level(k);
    std::vector<double> out(lk.size());
    for (std::size_t i = 0; i < lk.size(); ++i) out[i] = full[lk[i]];
    return out;
}

AdaptedProcess project_to_nodes(const ScenarioTree& tree, const AdaptedProcess& x, int j) {
    AdaptedProcess out = x;
    for (int lev = j - 1; lev >= 0; --lev)
        for (int n : tree.level(lev)) out[n] = tree.child_mean(n, out.values());
    return out;
}

}  // namespace mfstop
