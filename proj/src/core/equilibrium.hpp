#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bek.hpp"
#include "measures.hpp"
#include "rewards.hpp"
#include "stopping.hpp"
#include "tree.hpp"

namespace mfstop {

enum class ResponseMode { Largest, Smallest, Epsilon };

struct BestResponse {
    PureStoppingTime stop;
    BEKSolution sol;
    double delta = 0.0;  // perturbation slope (epsilon mode only)
};

/// build_problem -> solve_L -> hitting at level 0 (largest: M > 0, smallest: M >= 0)
/// or the perturbed hitting time in epsilon mode.
BestResponse best_response(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m,
                           ResponseMode mode, double eps = 0.0);

/// Conditional laws of the largest (T) and smallest (S) best responses.
RandomMeasure T_map(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m);
RandomMeasure S_map(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m);

using StopRule = std::variant<PureStoppingTime, RandomizedStoppingTime>;

struct VerifyTolerances {
    double gap = 1e-9;
    double consistency = 1e-9;
};

struct VerifyReport {
    bool pass = false;
    bool gap_ok = false;
    bool consistency_ok = false;
    double epsilon = 0.0;
    double gap = 0.0;
    double consistency = 0.0;
    double value = 0.0;    // J or J-tilde of the candidate stop under m
    double optimum = 0.0;  // sup over stopping times under m
    VerifyTolerances tol;
};

/// Recomputes the conditional law of `stop` and the optimality gap against the
/// backward-induction oracle under m. Passes iff gap <= eps + tol.gap and
/// consistency <= tol.consistency.
VerifyReport verify_equilibrium(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m,
                                const StopRule& stop, double eps, const VerifyTolerances& tol = {});

enum class Status { Verified, MaxIter, AssumptionViolation, NotVerified };
const char* status_name(Status s);

struct TraceEntry {
    int iter = 0;
    RandomMeasure m;  // iterate after the update
    double distance = 0.0;
    double gap = 0.0;  // gap of the response against the pre-update iterate
};

struct EquilibriumResult {
    RandomMeasure m_star;
    StopRule stop;
    double epsilon = 0.0;
    double gap = 0.0;
    double consistency = 0.0;
    std::vector<TraceEntry> trace;
    Status status = Status::MaxIter;
    VerifyReport report;
    std::vector<std::string> messages;
    int iterations = 0;
};

struct PicardOptions {
    double damping = 0.5;
    int max_iter = 500;
    double cons_tol = 1e-9;
    double gap_tol = 1e-9;
    std::optional<RandomMeasure> start;  // uniform per cell when absent
};

/// Damped fixed-point iteration m <- (1 - lambda) m + lambda * law(tau_eps(m)); the final
/// candidate is verified from scratch and the status reflects that verification only.
EquilibriumResult picard_solve(const RewardSpec& spec, const ScenarioTree& tree, double eps,
                               const PicardOptions& opts = {});

enum class TarskiMap { T, S };
enum class TarskiStart { Bottom, Top };
enum class Direction { Up, Down };

struct TarskiOptions {
    int max_steps = 500;
    double fixed_tol = 1e-12;
    double gap_tol = 1e-9;
    bool check_assumptions = true;
    int n_samples = 20;
    std::uint64_t seed = 0;
};

EquilibriumResult tarski_solve(const RewardSpec& spec, const ScenarioTree& tree, TarskiStart from, TarskiMap map,
                               const TarskiOptions& opts = {});

/// Monotone iteration of `map` from an arbitrary start; every step must move in
/// `dir` (the start is the bottom or top of a sublattice).
EquilibriumResult tarski_iterate(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& start,
                                 TarskiMap map, Direction dir, const TarskiOptions& opts = {});

struct LimitOptions {
    PicardOptions picard;
    double cons_tol = 1e-9;
    double gap_tol = 1e-3;  // the candidate is verified with eps = 0
    int min_cluster = 2;
    bool parallel = true;
};

struct LimitResult {
    EquilibriumResult result;
    std::vector<EquilibriumResult> runs;  // one per eps_k
    std::vector<int> cluster;             // indices of the selected subsequence
    double cluster_tol = 0.0;
};

/// Picard per eps_k, Cauchy selection of a converging subsequence around the last run,
/// averaged measure and averaged embedded A-processes, verified with eps = 0.
LimitResult epsilon_limit_randomized(const RewardSpec& spec, const ScenarioTree& tree,
                                     const std::vector<double>& eps_seq, const LimitOptions& opts = {});

struct OrderVerdict {
    bool holds = true;
    int checked = 0;
    std::string witness;
};

struct ComparativeReport {
    AssumptionReport assumptions;
    OrderVerdict L_order;  // L1 <= L2 node-wise
    OrderVerdict T_order;  // T1(m) >=_p T2(m)
    OrderVerdict S_order;  // S1(m) >=_p S2(m)
    std::optional<EquilibriumResult> t_fixed2;  // fixed point of T2 from bottom
    std::optional<EquilibriumResult> t_fixed1;  // T1 iterated upward from it
    std::optional<EquilibriumResult> s_fixed1;  // fixed point of S1 from top
    std::optional<EquilibriumResult> s_fixed2;  // S2 iterated downward from it
    OrderVerdict fixed_T_order;
    OrderVerdict fixed_S_order;
    bool pass() const;
};

ComparativeReport comparative_statics(const RewardSpec& spec1, const RewardSpec& spec2, const ScenarioTree& tree,
                                      int n_samples, std::uint64_t seed, const TarskiOptions& opts = {});

}  // namespace mfstop
