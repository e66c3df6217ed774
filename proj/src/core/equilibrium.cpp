#include "equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <sstream>
#include <stdexcept>

#include "snell.hpp"

namespace mfstop {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

// First (cell, time) where CDF(a) >= CDF(b) fails, i.e. a <=_p b is violated.
std::string order_witness(const RandomMeasure& a, const RandomMeasure& b) {
    for (std::size_t i = 0; i < a.num_cells(); ++i) {
        auto ca = a.cell(i).cdf();
        auto cb = b.cell(i).cdf();
        for (std::size_t k = 0; k < ca.size(); ++k)
            if (ca[k] < cb[k] - kMeasureTol)
                return "cell " + std::to_string(i) + ", t index " + std::to_string(k) + ": CDF " + fmt(ca[k]) +
                       " < " + fmt(cb[k]);
    }
    return {};
}

RandomMeasure uniform_measure(const ScenarioTree& tree) {
    return RandomMeasure::constant(tree.num_cells(), MeasureOnGrid::uniform(tree.periods() + 1));
}

double stop_distance(const RandomizedStoppingTime& a, const RandomizedStoppingTime& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[static_cast<int>(i)] - b[static_cast<int>(i)]));
    return d;
}

}  // namespace

BestResponse best_response(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m,
                           ResponseMode mode, double eps) {
    auto problem = build_problem(spec, tree, m);
    BestResponse br;
    br.sol = solve_L(tree, problem);
    switch (mode) {
        case ResponseMode::Largest: br.stop = hitting_times(tree, br.sol, 0.0).second; break;
        case ResponseMode::Smallest: br.stop = hitting_times(tree, br.sol, 0.0).first; break;
        case ResponseMode::Epsilon: {
            auto hit = epsilon_hitting_time(tree, br.sol, eps);
            br.stop = std::move(hit.stop);
            br.delta = hit.delta;
            break;
        }
    }
    return br;
}

RandomMeasure T_map(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m) {
    return conditional_law(tree, best_response(spec, tree, m, ResponseMode::Largest).stop);
}

RandomMeasure S_map(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m) {
    return conditional_law(tree, best_response(spec, tree, m, ResponseMode::Smallest).stop);
}

VerifyReport verify_equilibrium(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m,
                                const StopRule& stop, double eps, const VerifyTolerances& tol) {
    VerifyReport r;
    r.epsilon = eps;
    r.tol = tol;
    auto rewards = evaluate(spec, tree, m);
    auto [g, h] = discounted(tree, rewards);
    r.optimum = snell_solve(tree, g, h).value[0];
    std::visit(
        [&](const auto& s) {
            r.value = stopping_value(tree, g, h, s);
            r.consistency = kolmogorov_distance(m, conditional_law(tree, s));
        },
        stop);
    r.gap = r.optimum - r.value;
    r.gap_ok = r.gap <= eps + tol.gap;
    r.consistency_ok = r.consistency <= tol.consistency;
    r.pass = r.gap_ok && r.consistency_ok;
    return r;
}

const char* status_name(Status s) {
    switch (s) {
        case Status::Verified: return "verified";
        case Status::MaxIter: return "max_iter";
        case Status::AssumptionViolation: return "assumption_violation";
        case Status::NotVerified: return "not_verified";
    }
    return "unknown";
}

namespace {

void adopt(EquilibriumResult& r, const RandomMeasure& m, StopRule stop, const VerifyReport& rep) {
    r.m_star = m;
    r.stop = std::move(stop);
    r.report = rep;
    r.gap = rep.gap;
    r.consistency = rep.consistency;
}

}  // namespace

EquilibriumResult picard_solve(const RewardSpec& spec, const ScenarioTree& tree, double eps,
                               const PicardOptions& opts) {
    if (!(eps > 0.0)) throw std::invalid_argument("picard_solve: epsilon must be positive");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw std::invalid_argument("picard_solve: damping must be in (0, 1]");

    EquilibriumResult res;
    res.epsilon = eps;
    RandomMeasure m = opts.start ? *opts.start : uniform_measure(tree);
    const VerifyTolerances tol{opts.gap_tol, opts.cons_tol};

    RandomMeasure cand_m = m;
    PureStoppingTime cand_stop;
    bool converged = false;
    for (int it = 1; it <= opts.max_iter; ++it) {
        auto br = best_response(spec, tree, m, ResponseMode::Epsilon, eps);
        auto law = conditional_law(tree, br.stop);
        const double gap = optimality_gap(tree, evaluate(spec, tree, m), br.stop);
        res.iterations = it;
        cand_m = m;
        cand_stop = br.stop;

        if (kolmogorov_distance(law, m) <= opts.cons_tol) {
            res.trace.push_back({it, m, 0.0, gap});
            converged = true;
            break;
        }
        // Snap: if the law of the response reproduces itself, it is a fixed point.
        auto br_law = best_response(spec, tree, law, ResponseMode::Epsilon, eps);
        if (kolmogorov_distance(conditional_law(tree, br_law.stop), law) <= opts.cons_tol) {
            res.trace.push_back({it, law, kolmogorov_distance(law, m), gap});
            cand_m = law;
            cand_stop = br_law.stop;
            converged = true;
            break;
        }

        auto next = mix(m, law, opts.damping);
        const double dist = kolmogorov_distance(next, m);
        res.trace.push_back({it, next, dist, gap});
        m = std::move(next);
        if (dist <= opts.cons_tol) {
            cand_m = m;
            cand_stop = best_response(spec, tree, m, ResponseMode::Epsilon, eps).stop;
            converged = true;
            break;
        }
    }

    auto rep = verify_equilibrium(spec, tree, cand_m, cand_stop, eps, tol);
    adopt(res, cand_m, cand_stop, rep);
    if (rep.pass)
        res.status = Status::Verified;
    else
        res.status = converged ? Status::NotVerified : Status::MaxIter;
    if (!converged) res.messages.push_back("no fixed point within " + std::to_string(opts.max_iter) + " iterations");
    return res;
}

EquilibriumResult tarski_iterate(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& start,
                                 TarskiMap map, Direction dir, const TarskiOptions& opts) {
    const auto mode = map == TarskiMap::T ? ResponseMode::Largest : ResponseMode::Smallest;
    EquilibriumResult res;
    res.epsilon = 0.0;
    RandomMeasure m = start;
    res.m_star = m;
    for (int step = 1; step <= opts.max_steps; ++step) {
        auto br = best_response(spec, tree, m, mode);
        auto next = conditional_law(tree, br.stop);
        const double dist = kolmogorov_distance(m, next);
        const double gap = optimality_gap(tree, evaluate(spec, tree, m), br.stop);
        res.trace.push_back({step, next, dist, gap});
        res.iterations = step;

        const bool ordered = dir == Direction::Up ? random_fosd_leq(m, next) : random_fosd_leq(next, m);
        if (!ordered) {
            res.status = Status::AssumptionViolation;
            res.m_star = m;
            res.stop = br.stop;
            res.messages.push_back("map is not monotone at step " + std::to_string(step) + ": " +
                                   (dir == Direction::Up ? order_witness(m, next) : order_witness(next, m)));
            return res;
        }
        if (dist <= opts.fixed_tol) {
            auto rep = verify_equilibrium(spec, tree, m, br.stop, 0.0, {opts.gap_tol, opts.fixed_tol});
            adopt(res, m, br.stop, rep);
            res.status = rep.pass ? Status::Verified : Status::NotVerified;
            return res;
        }
        m = std::move(next);
    }
    res.m_star = m;
    res.status = Status::MaxIter;
    res.messages.push_back("no fixed point within " + std::to_string(opts.max_steps) + " steps");
    return res;
}

EquilibriumResult tarski_solve(const RewardSpec& spec, const ScenarioTree& tree, TarskiStart from, TarskiMap map,
                               const TarskiOptions& opts) {
    const auto cells = static_cast<std::size_t>(tree.num_cells());
    const auto times = static_cast<std::size_t>(tree.periods() + 1);
    RandomMeasure start = from == TarskiStart::Bottom ? RandomMeasure::bottom(cells, times) : RandomMeasure::top(cells, times);
    if (opts.check_assumptions) {
        auto rep = check_monotone_assumptions(spec, tree, opts.n_samples, opts.seed);
        if (!rep.pass) {
            EquilibriumResult res;
            res.m_star = start;
            res.status = Status::AssumptionViolation;
            for (const auto& v : rep.violations) res.messages.push_back(v.where + ": " + v.message);
            return res;
        }
    }
    return tarski_iterate(spec, tree, start, map, from == TarskiStart::Bottom ? Direction::Up : Direction::Down, opts);
}

LimitResult epsilon_limit_randomized(const RewardSpec& spec, const ScenarioTree& tree,
                                     const std::vector<double>& eps_seq, const LimitOptions& opts) {
    if (eps_seq.empty()) throw std::invalid_argument("epsilon sequence is empty");
    for (std::size_t k = 0; k < eps_seq.size(); ++k) {
        if (!(eps_seq[k] > 0.0)) throw std::invalid_argument("epsilon sequence must be positive");
        if (k > 0 && !(eps_seq[k] < eps_seq[k - 1]))
            throw std::invalid_argument("epsilon sequence must be strictly decreasing");
    }

    LimitResult out;
    out.runs.resize(eps_seq.size());
    if (opts.parallel) {
        std::vector<std::future<EquilibriumResult>> jobs;
        for (double e : eps_seq)
            jobs.push_back(std::async(std::launch::async, [&, e] { return picard_solve(spec, tree, e, opts.picard); }));
        for (std::size_t k = 0; k < jobs.size(); ++k) out.runs[k] = jobs[k].get();
    } else {
        for (std::size_t k = 0; k < eps_seq.size(); ++k) out.runs[k] = picard_solve(spec, tree, eps_seq[k], opts.picard);
    }

    const std::size_t n = out.runs.size();
    std::vector<RandomizedStoppingTime> a(n);
    for (std::size_t k = 0; k < n; ++k) a[k] = embed_pure(tree, std::get<PureStoppingTime>(out.runs[k].stop));

    // Distances to the anchor (the smallest epsilon).
    const std::size_t anchor = n - 1;
    std::vector<double> dist(n);
    for (std::size_t k = 0; k < n; ++k)
        dist[k] = std::max(kolmogorov_distance(out.runs[k].m_star, out.runs[anchor].m_star), stop_distance(a[k], a[anchor]));

    auto members = [&](double tol) {
        std::vector<int> c;
        for (std::size_t k = 0; k < n; ++k)
            if (dist[k] <= tol) c.push_back(static_cast<int>(k));
        return c;
    };
    double tol = 1.0;
    auto cluster = members(tol);
    for (int h = 0; h < 60; ++h) {
        auto tighter = members(tol / 2);
        if (static_cast<int>(tighter.size()) < opts.min_cluster) break;
        tol /= 2;
        cluster = std::move(tighter);
    }
    out.cluster_tol = tol;
    out.cluster = cluster;

    auto& res = out.result;
    res.epsilon = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        res.trace.push_back({static_cast<int>(k + 1), out.runs[k].m_star, dist[k], out.runs[k].gap});
    res.iterations = static_cast<int>(n);

    if (static_cast<int>(cluster.size()) < opts.min_cluster) {
        res.status = Status::MaxIter;
        res.m_star = out.runs[anchor].m_star;
        res.stop = a[anchor];
        res.messages.push_back("no Cauchy subsequence with at least " + std::to_string(opts.min_cluster) + " members");
        return out;
    }

    RandomMeasure m_bar = out.runs[cluster[0]].m_star;
    std::vector<RandomizedStoppingTime> parts;
    for (std::size_t j = 0; j < cluster.size(); ++j) {
        if (j > 0) m_bar = mix(m_bar, out.runs[cluster[j]].m_star, 1.0 / static_cast<double>(j + 1));
        parts.push_back(a[cluster[j]]);
    }
    std::vector<double> w(parts.size(), 1.0 / static_cast<double>(parts.size()));
    auto a_bar = mix_randomized(parts, w);

    auto rep = verify_equilibrium(spec, tree, m_bar, a_bar, 0.0, {opts.gap_tol, opts.cons_tol});
    adopt(res, m_bar, a_bar, rep);
    res.status = rep.pass ? Status::Verified : Status::NotVerified;
    return out;
}

bool ComparativeReport::pass() const {
    auto verified = [](const std::optional<EquilibriumResult>& r) { return r && r->status == Status::Verified; };
    return assumptions.pass && L_order.holds && T_order.holds && S_order.holds && fixed_T_order.holds &&
           fixed_S_order.holds && verified(t_fixed2) && verified(t_fixed1) && verified(s_fixed1) &&
           verified(s_fixed2);
}

ComparativeReport comparative_statics(const RewardSpec& spec1, const RewardSpec& spec2, const ScenarioTree& tree,
                                      int n_samples, std::uint64_t seed, const TarskiOptions& opts) {
    ComparativeReport rep;
    rep.assumptions = check_comparative_assumptions(spec1, spec2, tree, n_samples, seed);
    if (!rep.assumptions.pass) return rep;

    const auto cells = static_cast<std::size_t>(tree.num_cells());
    const auto times = static_cast<std::size_t>(tree.periods() + 1);
    std::vector<RandomMeasure> samples{RandomMeasure::bottom(cells, times), RandomMeasure::top(cells, times)};
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    for (int i = 0; i < n_samples; ++i) samples.push_back(sample_random_measure(rng, cells, times));

    for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto& m = samples[s];
        auto sol1 = solve_L(tree, build_problem(spec1, tree, m));
        auto sol2 = solve_L(tree, build_problem(spec2, tree, m));
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const int n = static_cast<int>(i);
            if (tree.is_leaf(n)) continue;
            ++rep.L_order.checked;
            if (rep.L_order.holds && sol1.L[i] > sol2.L[i] + 1e-9) {
                rep.L_order.holds = false;
                rep.L_order.witness = "sample " + std::to_string(s) + ", node " + std::to_string(tree.node(n).id) +
                                      ": L1 = " + fmt(sol1.L[i]) + " > L2 = " + fmt(sol2.L[i]);
            }
        }
        auto [s1, t1] = hitting_times(tree, sol1, 0.0);
        auto [s2, t2] = hitting_times(tree, sol2, 0.0);
        auto check = [&](OrderVerdict& v, const PureStoppingTime& lo, const PureStoppingTime& hi) {
            ++v.checked;
            auto law_lo = conditional_law(tree, lo);
            auto law_hi = conditional_law(tree, hi);
            if (v.holds && !random_fosd_leq(law_lo, law_hi)) {
                v.holds = false;
                v.witness = "sample " + std::to_string(s) + ", " + order_witness(law_lo, law_hi);
            }
        };
        check(rep.T_order, t2, t1);
        check(rep.S_order, s2, s1);
    }

    auto fixed_order = [](OrderVerdict& v, const std::optional<EquilibriumResult>& lo,
                          const std::optional<EquilibriumResult>& hi) {
        v.checked = 1;
        if (!lo || !hi || lo->status != Status::Verified || hi->status != Status::Verified) {
            v.holds = false;
            v.witness = "fixed point not verified";
            return;
        }
        if (!random_fosd_leq(lo->m_star, hi->m_star)) {
            v.holds = false;
            v.witness = order_witness(lo->m_star, hi->m_star);
        }
    };

    rep.t_fixed2 = tarski_solve(spec2, tree, TarskiStart::Bottom, TarskiMap::T, opts);
    if (rep.t_fixed2->status == Status::Verified)
        rep.t_fixed1 = tarski_iterate(spec1, tree, rep.t_fixed2->m_star, TarskiMap::T, Direction::Up, opts);
    fixed_order(rep.fixed_T_order, rep.t_fixed2, rep.t_fixed1);

    rep.s_fixed1 = tarski_solve(spec1, tree, TarskiStart::Top, TarskiMap::S, opts);
    if (rep.s_fixed1->status == Status::Verified)
        rep.s_fixed2 = tarski_iterate(spec2, tree, rep.s_fixed1->m_star, TarskiMap::S, Direction::Down, opts);
    fixed_order(rep.fixed_S_order, rep.s_fixed2, rep.s_fixed1);
    return rep;
}

}  // namespace mfstop
