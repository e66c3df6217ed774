#include "bek.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "error.hpp"

namespace mfstop {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct PolicyEval {
    double value;  // optimal value at level l
    double a;      // E[sum hbar dt + Y_sigma] under the optimal policy
    double b;      // E[sum e^{-rho t} dt] under the optimal policy
};

class ForcedSolver {
  public:
    ForcedSolver(const ScenarioTree& tree, const DiscountedProblem& p) : tree_(tree), p_(p) {}

    // Optimal stopping from node n (stopping at n allowed); the policy stops on ties.
    PolicyEval free(int n, double l) const {
        if (tree_.is_leaf(n)) return {p_.y[n], p_.y[n], 0.0};
        PolicyEval c = cont(n, l);
        if (p_.y[n] >= c.value) return {p_.y[n], p_.y[n], 0.0};
        return c;
    }

    // Continue at n, then act optimally.
    PolicyEval cont(int n, double l) const {
        const int k = tree_.node(n).level;
        const double dt = tree_.grid().step(k);
        const double d = p_.discount[k];
        PolicyEval e{(p_.hbar[n] + d * l) * dt, p_.hbar[n] * dt, d * dt};
        for (int c : tree_.node(n).children) {
            const double pr = tree_.node(c).branch_prob;
            PolicyEval ce = free(c, l);
            e.value += pr * ce.value;
            e.a += pr * ce.a;
            e.b += pr * ce.b;
        }
        return e;
    }

    double excess(int n, double l) const { return cont(n, l).value - p_.y[n]; }

  private:
    const ScenarioTree& tree_;
    const DiscountedProblem& p_;
};

double problem_scale(const ScenarioTree& tree, const DiscountedProblem& p) {
    double s = 1.0;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        s = std::max(s, 1.0 + std::abs(p.y[i]));
        const double d = p.discount[tree.node(static_cast<int>(i)).level];
        s = std::max(s, 1.0 + std::abs(p.hbar[i]) / d);
    }
    return s;
}

double solve_node(const ForcedSolver& fs, const DiscountedProblem& p, int n, double scale,
                  const BekOptions& opts) {
    double lo = -scale;
    double hi = scale;
    int guard = 0;
    while (fs.excess(n, lo) > 0.0) {
        lo *= 2.0;
        if (++guard > opts.max_expansions) throw SolverError("solve_L: lower bracket expansion failed");
    }
    while (fs.excess(n, hi) < 0.0) {
        hi *= 2.0;
        if (++guard > opts.max_expansions) throw SolverError("solve_L: upper bracket expansion failed");
    }
    while (hi - lo > opts.tol * std::max(1.0, std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (fs.excess(n, mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    const double bisected = hi;
    if (!opts.polish) return 0.5 * (lo + hi);

    // Ratio iterations from the upper end: each step moves to l_{n,sigma*} <= l for the
    // sigma optimal at l, and stops at the sigma attaining the minimum ratio.
    double l = hi;
    double r = l;
    for (int it = 0; it < 100; ++it) {
        PolicyEval e = fs.cont(n, l);
        r = (p.y[n] - e.a) / e.b;
        if (r >= l - 1e-15 * std::max(1.0, std::abs(l))) break;
        l = r;
    }
    if (std::abs(r - bisected) > 1e3 * opts.tol * std::max(1.0, std::abs(bisected))) return 0.5 * (lo + hi);
    return r;
}

void check_problem(const ScenarioTree& tree, const DiscountedProblem& p) {
    if (p.y.size() != tree.size() || p.hbar.size() != tree.size() ||
        p.discount.size() != static_cast<std::size_t>(tree.periods() + 1))
        throw std::invalid_argument("problem does not match the tree");
    for (double d : p.discount)
        if (!(d > 0.0)) throw std::invalid_argument("discount weights must be positive");
}

}  // namespace

double forced_continuation_excess(const ScenarioTree& tree, const DiscountedProblem& problem, int node, double l) {
    if (tree.is_leaf(node)) throw std::invalid_argument("no continuation at a leaf");
    return ForcedSolver(tree, problem).excess(node, l);
}

BEKSolution solve_L(const ScenarioTree& tree, const DiscountedProblem& problem, const BekOptions& opts) {
    check_problem(tree, problem);
    ForcedSolver fs(tree, problem);
    const double scale = problem_scale(tree, problem);

    BEKSolution sol;
    sol.L = AdaptedProcess(tree.size(), kNegInf);
    sol.tolerance = opts.tol;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const int n = static_cast<int>(i);
        if (tree.is_leaf(n)) continue;
        try {
            sol.L[i] = solve_node(fs, problem, n, scale, opts);
        } catch (const SolverError& e) {
            throw SolverError(std::string(e.what()) + " at node " + std::to_string(tree.node(n).id));
        }
    }
    sol.M = running_max(tree, sol.L);
    sol.residual = verify_representation(tree, problem, sol.L);
    return sol;
}

double l_closed_form(const ScenarioTree& tree, const DiscountedProblem& problem, int node,
                     const PureStoppingTime& sigma) {
    if (sigma.flagged(node) || sigma.stopped_before(tree, node) || tree.is_leaf(node))
        throw std::invalid_argument("sigma must be strictly later than the node");
    const auto& grid = tree.grid();
    // Expected (a, b) over the subtree under sigma, bottom-up restricted to descendants.
    std::vector<double> a(tree.size(), 0.0), b(tree.size(), 0.0);
    const int k0 = tree.node(node).level;
    for (int k = tree.periods(); k >= k0; --k) {
        for (int n : tree.level(k)) {
            if (k > k0 && (sigma.flagged(n) || tree.is_leaf(n))) {
                a[n] = problem.y[n];
                b[n] = 0.0;
            } else if (!tree.is_leaf(n)) {
                const double dt = grid.step(k);
                a[n] = problem.hbar[n] * dt + tree.child_mean(n, a);
                b[n] = problem.discount[k] * dt + tree.child_mean(n, b);
            }
        }
    }
    return (problem.y[node] - a[node]) / b[node];
}

namespace {

using Options = std::vector<std::pair<double, double>>;

Options continue_options(const ScenarioTree& tree, const DiscountedProblem& p, int n, std::size_t cap);

Options all_options(const ScenarioTree& tree, const DiscountedProblem& p, int n, std::size_t cap) {
    Options out{{p.y[n], 0.0}};
    if (tree.is_leaf(n)) return out;
    auto more = continue_options(tree, p, n, cap);
    out.insert(out.end(), more.begin(), more.end());
    return out;
}

Options continue_options(const ScenarioTree& tree, const DiscountedProblem& p, int n, std::size_t cap) {
    const int k = tree.node(n).level;
    const double dt = tree.grid().step(k);
    Options acc{{p.hbar[n] * dt, p.discount[k] * dt}};
    for (int c : tree.node(n).children) {
        const double pr = tree.node(c).branch_prob;
        auto child = all_options(tree, p, c, cap);
        if (acc.size() * child.size() > cap) throw SolverError("brute_force_L: enumeration too large");
        Options next;
        next.reserve(acc.size() * child.size());
        for (const auto& [a, b] : acc)
            for (const auto& [ca, cb] : child) next.emplace_back(a + pr * ca, b + pr * cb);
        acc = std::move(next);
    }
    return acc;
}

}  // namespace

double brute_force_L(const ScenarioTree& tree, const DiscountedProblem& problem, int node, int max_depth,
                     std::size_t max_candidates) {
    if (tree.is_leaf(node)) throw std::invalid_argument("brute_force_L: leaves carry no index");
    if (tree.periods() - tree.node(node).level > max_depth)
        throw SolverError("brute_force_L: subtree deeper than the enumeration cap");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : continue_options(tree, problem, node, max_candidates))
        best = std::min(best, (problem.y[node] - a) / b);
    return best;
}

namespace {

double represented(const ScenarioTree& tree, const DiscountedProblem& p, const AdaptedProcess& L, int n,
                   double running) {
    if (tree.is_leaf(n)) return p.y[n];
    const int k = tree.node(n).level;
    const double lm = std::max(running, L[n]);
    double v = (p.hbar[n] + p.discount[k] * lm) * tree.grid().step(k);
    for (int c : tree.node(n).children) v += tree.node(c).branch_prob * represented(tree, p, L, c, lm);
    return v;
}

}  // namespace

double verify_representation(const ScenarioTree& tree, const DiscountedProblem& problem, const AdaptedProcess& L) {
    double worst = 0.0;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const int n = static_cast<int>(i);
        if (tree.is_leaf(n)) continue;
        worst = std::max(worst, std::abs(problem.y[n] - represented(tree, problem, L, n, kNegInf)));
    }
    return worst;
}

AdaptedProcess running_max(const ScenarioTree& tree, const AdaptedProcess& L) {
    AdaptedProcess m(tree.size());
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const int p = tree.node(static_cast<int>(i)).parent;
        m[i] = p < 0 ? L[i] : std::max(m[p], L[i]);
    }
    return m;
}

std::pair<PureStoppingTime, PureStoppingTime> hitting_times(const ScenarioTree& tree, const BEKSolution& sol,
                                                            double l, double tie_tol) {
    const double band = tie_tol * std::max(1.0, std::abs(l));
    return {hitting_time(tree, sol.M, l - band, false), hitting_time(tree, sol.M, l + band, true)};
}

double time_weight_integral(double rho, double horizon) {
    if (rho < 0.0 || !(horizon > 0.0)) throw std::invalid_argument("time_weight_integral: need rho >= 0, T > 0");
    const double x = rho * horizon;
    if (x < 1e-2) {
        // 1 - e^{-x}(1 + x) = sum_{n>=2} (-1)^n (n - 1) x^n / n!, divided by rho^2.
        double term = 0.5;  // coefficient of x^2, times T^2 below
        double sum = 0.0;
        double xp = 1.0;
        double fact = 2.0;
        for (int n = 2; n < 12; ++n) {
            term = ((n % 2 == 0) ? 1.0 : -1.0) * (n - 1) / fact;
            sum += term * xp;
            xp *= x;
            fact *= (n + 1);
        }
        return horizon * horizon * sum;
    }
    return -std::expm1(-x) / (rho * rho) - x * std::exp(-x) / (rho * rho);
}

EpsilonHit epsilon_hitting_time(const ScenarioTree& tree, const BEKSolution& sol, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const auto& grid = tree.grid();
    EpsilonHit out;
    out.delta = eps / (3.0 * time_weight_integral(grid.rho, grid.horizon()));
    std::vector<std::uint8_t> f(tree.size(), 0);
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const int n = static_cast<int>(i);
        if (tree.is_leaf(n)) continue;
        f[i] = sol.L[i] + out.delta * grid.times[tree.node(n).level] > 0.0;
    }
    out.stop = PureStoppingTime(std::move(f));
    return out;
}

StepFunctionVPlus running_sup_path(const ScenarioTree& tree, const BEKSolution& sol, int leaf) {
    StepFunctionVPlus v;
    v.knots = tree.grid().times;
    auto path = tree.path(leaf);
    for (int k = 0; k < tree.periods(); ++k) v.values.push_back(sol.M[path[k]]);
    return v;
}

std::vector<double> level_grid(const ScenarioTree& tree, const BEKSolution& sol, int count) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < tree.size(); ++i) {
        if (tree.is_leaf(static_cast<int>(i))) continue;
        lo = std::min(lo, sol.L[i]);
        hi = std::max(hi, sol.L[i]);
    }
    lo -= 1.0;
    hi += 1.0;
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i) out[i] = lo + (hi - lo) * i / (count - 1);
    return out;
}

}  // namespace mfstop
