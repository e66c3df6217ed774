#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "measures.hpp"
#include "tree.hpp"

namespace mfstop {

/// Bounded, continuous piecewise-linear function of one variable (flat outside the table).
struct PiecewiseLinear {
    std::vector<double> x;  // strictly increasing
    std::vector<double> y;

    double operator()(double v) const;
    double bound() const;  // sup |y|
    void check() const;
};

enum class Coupling { None, MeanTime, VarianceTime };

Coupling coupling_from_name(const std::string& name);  // throws InputError on unknown names
const char* coupling_name(Coupling c);

/// h = h0 + coef_h * F(m), g = g0 + coef_g * F(m) with a named statistic F of m.
struct TabularFamily {
    AdaptedProcess h0, g0, coef_h, coef_g;
    Coupling coupling = Coupling::None;
};

/// h = h0 + beta * F_m, g = g0 + gamma * F_m, F_m = sum_k phi(t_k) m(t_k),
/// with beta >= 0, gamma <= 0 and phi non-decreasing.
struct MonotoneFamily {
    AdaptedProcess h0, g0;
    double beta = 0.0;
    double gamma = 0.0;
    std::vector<double> phi;
};

/// Rewards through a proxy process X^m = x0 + slope * F_m:
/// g = ghat(X), h = h_offset + h_scale * (mean of X over the last `window` nodes of the path).
struct ContinuityFamily {
    std::vector<double> phi;
    AdaptedProcess x0;
    double slope = 0.0;
    PiecewiseLinear ghat;
    int window = 1;
    double h_scale = 0.0;
    double h_offset = 0.0;
};

struct RewardSpec {
    std::variant<TabularFamily, MonotoneFamily, ContinuityFamily> family;

    std::string variant_name() const;
    /// False for couplings with no continuity/monotonicity guarantee (nonlinear in m).
    bool affine_in_m() const;
};

/// Reward processes h(., m) and g(., m) on the tree.
struct RewardProcesses {
    AdaptedProcess h;
    AdaptedProcess g;
};

/// Normalized representation inputs: Y = e^{-rho t} g - E[e^{-rho T} g_T | F_t] (zero at
/// leaves), hbar = e^{-rho t} h, and offset = E[e^{-rho T} g_T] so that
/// J(tau) = E[sum_{j < tau} hbar_j dt_j + Y_tau] + offset.
struct DiscountedProblem {
    AdaptedProcess y;
    AdaptedProcess hbar;
    std::vector<double> discount;  // e^{-rho t_k} per level
    double offset = 0.0;
};

/// Coupling statistic sum_k phi(t_k) m_c(t_k) per cell, projected to nodes by
/// conditional expectation so the result is adapted.
AdaptedProcess coupling_statistic(const ScenarioTree& tree, const RandomMeasure& m, std::span<const double> phi);

RewardProcesses evaluate(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m);

DiscountedProblem build_problem(const ScenarioTree& tree, const RewardProcesses& rewards);
DiscountedProblem build_problem(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m);

struct AssumptionReport {
    bool pass = true;
    std::vector<Issue> violations;
    std::vector<std::string> notes;

    void fail(std::string where, std::string message);
};

AssumptionReport check_standing_assumptions(const RewardSpec& spec, const ScenarioTree& tree,
                                            std::span<const RandomMeasure> samples);

/// Samples ordered pairs m1 <=_p m2 (plus bottom/top) and checks h(m1) <= h(m2)
/// node-wise and that e^{-rho t}(g(m1) - g(m2)) is a supermartingale.
AssumptionReport check_monotone_assumptions(const RewardSpec& spec, const ScenarioTree& tree,
                                            int n_samples, std::uint64_t seed);

/// For sampled m: h1 >= h2 node-wise and e^{-rho t}(g1 - g2) a submartingale.
AssumptionReport check_comparative_assumptions(const RewardSpec& spec1, const RewardSpec& spec2,
                                               const ScenarioTree& tree, int n_samples, std::uint64_t seed);

/// Random measure with Dirichlet-like cell masses; some atoms are zeroed at random.
RandomMeasure sample_random_measure(std::mt19937_64& rng, std::size_t n_cells, std::size_t n_times);
/// Pair (m1, m2) with m1 <=_p m2, built by moving random fractions of mass to later times.
std::pair<RandomMeasure, RandomMeasure> sample_ordered_pair(std::mt19937_64& rng, std::size_t n_cells,
                                                            std::size_t n_times);

/// phi(t_k) = t_k / T.
std::vector<double> normalized_time(const TimeGrid& grid);

}  // namespace mfstop
