#pragma once

#include <utility>
#include <vector>

#include "measures.hpp"
#include "rewards.hpp"
#include "stopping.hpp"
#include "tree.hpp"

namespace mfstop {

/// Index process L of the representation
///   Y(n) = E[ sum_{j >= k} e^{-rho t_j} (h_j + max_{k <= i <= j} L_i) dt_j + Y_T | n ]
/// together with its inclusive running maximum M_k = max_{i <= k} L_i.
/// Leaves carry L = -inf. Y_T is normally 0; other terminal values shift Y by a
/// martingale, which leaves L unchanged.
struct BEKSolution {
    AdaptedProcess L;
    AdaptedProcess M;
    double residual = 0.0;
    double tolerance = 0.0;
};

struct BekOptions {
    double tol = 1e-10;     // bisection width
    bool polish = true;     // finish with exact ratio iterations on the optimal sigma
    int max_expansions = 200;
};

/// Node-wise solve: L(n) is the unique l with
///   sup_{sigma > t_k} E[ sum_{k <= j < sigma} e^{-rho t_j}(h_j + l) dt_j + Y_sigma | n ] = Y(n).
BEKSolution solve_L(const ScenarioTree& tree, const DiscountedProblem& problem, const BekOptions& opts = {});

/// Value minus Y(n) of the forced-continuation problem at node n and level l.
/// Strictly increasing in l with slope >= e^{-rho t_k} dt_k.
double forced_continuation_excess(const ScenarioTree& tree, const DiscountedProblem& problem, int node, double l);

/// l_{n, sigma} = E[Y_n - Y_sigma - sum_{k<=j<sigma} hbar_j dt_j | n] / E[sum_{k<=j<sigma} e^{-rho t_j} dt_j | n].
/// Throws std::invalid_argument unless sigma is strictly later than the node on its subtree.
double l_closed_form(const ScenarioTree& tree, const DiscountedProblem& problem, int node,
                     const PureStoppingTime& sigma);

/// Minimum of l_closed_form over every stopping time strictly after the node, by
/// exhaustive enumeration. Throws if the subtree is deeper than max_depth or the
/// enumeration exceeds max_candidates.
double brute_force_L(const ScenarioTree& tree, const DiscountedProblem& problem, int node, int max_depth = 6,
                     std::size_t max_candidates = 5'000'000);

/// Max over non-leaf nodes of |Y(n) - E[sum_{j>=k} e^{-rho t_j}(h_j + max_{k<=i<=j} L_i) dt_j + Y_T | n]|.
double verify_representation(const ScenarioTree& tree, const DiscountedProblem& problem, const AdaptedProcess& L);

/// Inclusive running maximum along paths.
AdaptedProcess running_max(const ScenarioTree& tree, const AdaptedProcess& L);

/// (sigma_l, tau_l): first hit of M >= l and of M > l, capped at t_N. Values within
/// the relative tie tolerance of l count as equal to l.
std::pair<PureStoppingTime, PureStoppingTime> hitting_times(const ScenarioTree& tree, const BEKSolution& sol,
                                                            double l, double tie_tol = 1e-10);

/// int_0^T t e^{-rho t} dt = (1 - e^{-rho T}(1 + rho T)) / rho^2 (T^2 / 2 at rho = 0).
double time_weight_integral(double rho, double horizon);

struct EpsilonHit {
    PureStoppingTime stop;
    double delta = 0.0;
};

/// Perturbed hitting time: delta = eps / (3 int_0^T t e^{-rho t} dt), stop at the first
/// node where the perturbed index L_k + delta t_k turns positive (t_N if never).
EpsilonHit epsilon_hitting_time(const ScenarioTree& tree, const BEKSolution& sol, double eps);

/// Path of the strict-past running supremum t -> sup_{[0,t)} L along the path to `leaf`,
/// as a step function with value -inf at 0.
StepFunctionVPlus running_sup_path(const ScenarioTree& tree, const BEKSolution& sol, int leaf);

/// 21 equally spaced levels spanning [min L - 1, max L + 1] over non-leaf nodes.
std::vector<double> level_grid(const ScenarioTree& tree, const BEKSolution& sol, int count = 21);

}  // namespace mfstop
