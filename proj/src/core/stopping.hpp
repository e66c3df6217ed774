#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "measures.hpp"
#include "tree.hpp"

namespace mfstop {

/// Pure stopping time as a stop flag per node: on each path the agent stops at the
/// first flagged node, or at t_N if none is flagged. Any flag vector defines a
/// stopping time, so adaptedness holds by construction.
class PureStoppingTime {
  public:
    PureStoppingTime() = default;
    explicit PureStoppingTime(std::vector<std::uint8_t> flags) : flags_(std::move(flags)) {}

    static PureStoppingTime at_level(const ScenarioTree& tree, int k);

    std::size_t size() const noexcept { return flags_.size(); }
    bool flagged(int node) const { return flags_[node] != 0; }
    std::span<const std::uint8_t> flags() const noexcept { return flags_; }

    /// Internal index of the node where the path to `leaf` stops.
    int stop_node(const ScenarioTree& tree, int leaf) const;
    /// Stopping node per leaf, aligned with tree.leaves().
    std::vector<int> stop_nodes(const ScenarioTree& tree) const;
    /// Stopping time index per leaf, aligned with tree.leaves().
    std::vector<int> stop_levels(const ScenarioTree& tree) const;
    /// True iff the path through `node` has already stopped strictly before it.
    bool stopped_before(const ScenarioTree& tree, int node) const;
    /// Flags only at the nodes where stopping actually happens (the canonical form).
    PureStoppingTime canonical(const ScenarioTree& tree) const;

    friend bool operator==(const PureStoppingTime&, const PureStoppingTime&) = default;

  private:
    std::vector<std::uint8_t> flags_;
};

/// Randomized stopping time stored as its per-path CDF: A(n) is the probability of
/// having stopped by node n's time along the path through n.
class RandomizedStoppingTime {
  public:
    RandomizedStoppingTime() = default;
    explicit RandomizedStoppingTime(AdaptedProcess cumulative) : a_(std::move(cumulative)) {}

    const AdaptedProcess& cumulative() const noexcept { return a_; }
    double operator[](int node) const { return a_[node]; }
    std::size_t size() const noexcept { return a_.size(); }

    /// Throws std::invalid_argument unless A is in [0,1], non-decreasing on paths,
    /// and 1 at every leaf.
    void check(const ScenarioTree& tree, double tol = 1e-12) const;

    /// Sorted distinct values of A in (0, 1], always ending with 1.
    std::vector<double> breakpoints() const;

  private:
    AdaptedProcess a_;
};

/// Stop at the first node with M > l (strict) or M >= l; t_N if never.
PureStoppingTime hitting_time(const ScenarioTree& tree, const AdaptedProcess& m, double l, bool strict);

/// Conditional law of the stopping time given the common noise: per cell A_i,
/// mass at t_k = P(tau = t_k, A_i) / P(A_i).
RandomMeasure conditional_law(const ScenarioTree& tree, const PureStoppingTime& stop);
RandomMeasure conditional_law(const ScenarioTree& tree, const RandomizedStoppingTime& stop);

RandomizedStoppingTime embed_pure(const ScenarioTree& tree, const PureStoppingTime& stop);

/// v-section: stop at the first node with A >= v.
PureStoppingTime slice_randomized(const ScenarioTree& tree, const RandomizedStoppingTime& stop, double v);

/// Convex combination of A-processes.
RandomizedStoppingTime mix_randomized(std::span<const RandomizedStoppingTime> parts,
                                      std::span<const double> weights);

}  // namespace mfstop
