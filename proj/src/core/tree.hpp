#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mfstop {

/// Finite time grid 0 = t_0 < t_1 < ... < t_N = T with a discount rate.
struct TimeGrid {
    std::vector<double> times;
    double rho = 0.0;

    int periods() const noexcept { return static_cast<int>(times.size()) - 1; }
    double horizon() const noexcept { return times.back(); }
    /// Width t_{k+1} - t_k; zero at the terminal index (no running reward after T).
    double step(int k) const noexcept {
        return k < periods() ? times[k + 1] - times[k] : 0.0;
    }
    double discount(int k) const;
};

/// Per-node real values on a ScenarioTree, indexed by internal node index.
class AdaptedProcess {
  public:
    AdaptedProcess() = default;
    explicit AdaptedProcess(std::size_t n, double fill = 0.0) : values_(n, fill) {}
    explicit AdaptedProcess(std::vector<double> values) : values_(std::move(values)) {}

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& raw() noexcept { return values_; }

    friend bool operator==(const AdaptedProcess&, const AdaptedProcess&) = default;

  private:
    std::vector<double> values_;
};

struct TreeNode {
    long long id = 0;       // external id from the model file
    int level = 0;          // time index k
    int parent = -1;        // internal index, -1 for the root
    std::vector<int> children;
    double branch_prob = 1.0;
    double path_prob = 1.0;
    int cell = -1;          // leaves only
};

/// Unchecked tree description as read from a model file.
struct TreeSpec {
    struct Node {
        long long id = 0;
        int time = 0;
        std::optional<long long> parent;
        double prob = 1.0;
    };
    std::vector<double> times;
    double rho = 0.0;
    std::vector<Node> nodes;
    std::vector<std::pair<long long, std::string>> cells;  // leaf id -> cell label
    std::vector<std::string> declared_cells;               // optional; each must receive a leaf
};

struct Issue {
    std::string where;    // node id, "grid", or "cell <label>"
    std::string message;
};

struct ValidationReport {
    std::vector<Issue> issues;
    bool ok() const noexcept { return issues.empty(); }
    std::vector<std::string> lines() const;
};

/// Checks every structural invariant of the tree, grid and common-noise partition.
/// Nothing is repaired; each violation is listed with its location.
ValidationReport validate_tree(const TreeSpec& spec);

/// Finite filtered probability space. F_{t_k} is generated by the level-k nodes;
/// the common-noise sigma-algebra is generated by a partition of the leaves into cells.
/// Internal node indices are breadth-first: the root is 0 and levels are contiguous.
class ScenarioTree {
  public:
    /// Throws ValidationError when validate_tree(spec) reports anything.
    static ScenarioTree build(const TreeSpec& spec);

    const TimeGrid& grid() const noexcept { return grid_; }
    int periods() const noexcept { return grid_.periods(); }
    std::size_t size() const noexcept { return nodes_.size(); }
    const TreeNode& node(int i) const { return nodes_[i]; }
    std::span<const TreeNode> nodes() const noexcept { return nodes_; }
    std::span<const int> level(int k) const;
    std::span<const int> leaves() const { return level(periods()); }
    bool is_leaf(int i) const { return nodes_[i].children.empty(); }

    int num_cells() const noexcept { return static_cast<int>(cell_labels_.size()); }
    const std::string& cell_label(int c) const { return cell_labels_[c]; }
    double cell_prob(int c) const { return cell_probs_[c]; }
    int cell_index(const std::string& label) const;  // -1 when absent

    /// Internal index for an external id, -1 when absent.
    int find(long long external_id) const;

    /// Root-to-node path of internal indices (inclusive).
    std::vector<int> path(int i) const;

    /// Probability-weighted average of per-node values over the children of i.
    double child_mean(int i, std::span<const double> values) const;

    /// Round-trip description (ids, grid, cells) of this tree.
    TreeSpec spec() const;

  private:
    TimeGrid grid_;
    std::vector<TreeNode> nodes_;
    std::vector<int> level_start_;  // size N + 2
    std::vector<int> level_nodes_;
    std::vector<std::string> cell_labels_;
    std::vector<double> cell_probs_;
    std::vector<std::pair<long long, int>> id_index_;  // sorted by external id
};

/// E[x | F_{t_k}] for x measurable at level j >= k. `x_level_j` is aligned with
/// tree.level(j); the result is aligned with tree.level(k).
std::vector<double> conditional_expectation(const ScenarioTree& tree,
                                            std::span<const double> x_level_j, int j, int k);

/// Adapted process n -> E[x_{level j} | n] on levels <= j; entries on deeper levels
/// are copied from x unchanged.
AdaptedProcess project_to_nodes(const ScenarioTree& tree, const AdaptedProcess& x, int j);

}  // namespace mfstop
