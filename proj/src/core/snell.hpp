#pragma once

#include "rewards.hpp"
#include "stopping.hpp"
#include "tree.hpp"

namespace mfstop {

/// Relative tolerance under which stopping and continuing count as a tie.
inline constexpr double kTieTol = 1e-10;

struct SnellResult {
    AdaptedProcess value;         // V
    AdaptedProcess continuation;  // running * dt + E[V_next | node]; unused at leaves
    PureStoppingTime smallest_optimal;
    PureStoppingTime largest_optimal;
};

/// Backward induction for sup_tau E[sum_{j < tau} running_j dt_j + payoff_tau].
/// The smallest optimizer stops on ties, the largest continues on ties.
SnellResult snell_solve(const ScenarioTree& tree, const AdaptedProcess& payoff, const AdaptedProcess& running,
                        double tie_tol = kTieTol);

/// E[sum_{j < tau} running_j dt_j + payoff_tau], exact sum over leaves.
double stopping_value(const ScenarioTree& tree, const AdaptedProcess& payoff, const AdaptedProcess& running,
                      const PureStoppingTime& stop);
/// Randomized version: sum over A-breakpoints of (b_i - b_{i-1}) * value of the b_i-slice.
double stopping_value(const ScenarioTree& tree, const AdaptedProcess& payoff, const AdaptedProcess& running,
                      const RandomizedStoppingTime& stop);

/// Raw game functional J(tau, m) = E[sum_{j<tau} e^{-rho t_j} h_j dt_j + e^{-rho tau} g_tau].
double game_value_J(const ScenarioTree& tree, const RewardProcesses& rewards, const PureStoppingTime& stop);
/// Same functional evaluated through the normalized problem (Y, hbar) plus its offset.
double game_value_J(const ScenarioTree& tree, const DiscountedProblem& problem, const PureStoppingTime& stop);

double game_value_Jtilde(const ScenarioTree& tree, const RewardProcesses& rewards,
                         const RandomizedStoppingTime& stop);
double game_value_Jtilde(const ScenarioTree& tree, const DiscountedProblem& problem,
                         const RandomizedStoppingTime& stop);

/// Discounted payoff/running processes e^{-rho t} g and e^{-rho t} h.
std::pair<AdaptedProcess, AdaptedProcess> discounted(const ScenarioTree& tree, const RewardProcesses& rewards);

/// sup_tau J(tau, m) from the oracle.
double optimal_value(const ScenarioTree& tree, const RewardProcesses& rewards);

/// sup_tau J(tau, m) - J(stop, m), computed from the raw rewards with the Snell oracle.
double optimality_gap(const ScenarioTree& tree, const RewardProcesses& rewards, const PureStoppingTime& stop);
double optimality_gap(const ScenarioTree& tree, const RewardProcesses& rewards,
                      const RandomizedStoppingTime& stop);

}  // namespace mfstop
