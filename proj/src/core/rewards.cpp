#include "rewards.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace mfstop {

namespace {

constexpr double kOrderTol = 1e-10;

std::string node_label(const ScenarioTree& tree, int n) { return "node " + std::to_string(tree.node(n).id); }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

double PiecewiseLinear::operator()(double v) const {
    if (v <= x.front()) return y.front();
    if (v >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), v);
    auto i = static_cast<std::size_t>(it - x.begin());
    double w = (v - x[i - 1]) / (x[i] - x[i - 1]);
    return (1.0 - w) * y[i - 1] + w * y[i];
}

double PiecewiseLinear::bound() const {
    double b = 0.0;
    for (double v : y) b = std::max(b, std::abs(v));
    return b;
}

void PiecewiseLinear::check() const {
    if (x.empty() || x.size() != y.size()) throw InputError("ghat table needs matching non-empty x and y");
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        if (!(x[i + 1] > x[i])) throw InputError("ghat x values must be strictly increasing");
    for (double v : y)
        if (!std::isfinite(v)) throw InputError("ghat values must be finite");
}

Coupling coupling_from_name(const std::string& name) {
    if (name == "none") return Coupling::None;
    if (name == "mean_time") return Coupling::MeanTime;
    if (name == "variance_time") return Coupling::VarianceTime;
    throw InputError("unknown coupling functional '" + name + "'");
}

const char* coupling_name(Coupling c) {
    switch (c) {
        case Coupling::None: return "none";
        case Coupling::MeanTime: return "mean_time";
        case Coupling::VarianceTime: return "variance_time";
    }
    return "none";
}

std::string RewardSpec::variant_name() const {
    switch (family.index()) {
        case 0: return "Tabular";
        case 1: return "MonotoneFamily";
        default: return "ContinuityFamily";
    }
}

bool RewardSpec::affine_in_m() const {
    if (auto* t = std::get_if<TabularFamily>(&family)) return t->coupling != Coupling::VarianceTime;
    return true;
}

std::vector<double> normalized_time(const TimeGrid& grid) {
    std::vector<double> phi(grid.times.size());
    for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = grid.times[k] / grid.horizon();
    return phi;
}

namespace {

// Per-cell statistic lifted to the leaves, then projected to every node.
AdaptedProcess lift_cells(const ScenarioTree& tree, std::span<const double> per_cell) {
    AdaptedProcess x(tree.size(), 0.0);
    for (int leaf : tree.leaves()) x[leaf] = per_cell[tree.node(leaf).cell];
    return project_to_nodes(tree, x, tree.periods());
}

AdaptedProcess tabular_statistic(const ScenarioTree& tree, const RandomMeasure& m, Coupling c) {
    if (c == Coupling::None) return AdaptedProcess(tree.size(), 0.0);
    auto phi = normalized_time(tree.grid());
    std::vector<double> per_cell(m.num_cells());
    for (std::size_t i = 0; i < m.num_cells(); ++i) {
        double mean = m.cell(i).integrate(phi);
        if (c == Coupling::MeanTime) {
            per_cell[i] = mean;
        } else {
            std::vector<double> sq(phi.size());
            for (std::size_t k = 0; k < phi.size(); ++k) sq[k] = phi[k] * phi[k];
            per_cell[i] = m.cell(i).integrate(sq) - mean * mean;
        }
    }
    return lift_cells(tree, per_cell);
}

void require_cells(const ScenarioTree& tree, const RandomMeasure& m) {
    if (m.num_cells() != static_cast<std::size_t>(tree.num_cells()) ||
        m.num_times() != static_cast<std::size_t>(tree.periods() + 1))
        throw std::invalid_argument("random measure does not match the tree's cells and grid");
}

}  // namespace

AdaptedProcess coupling_statistic(const ScenarioTree& tree, const RandomMeasure& m, std::span<const double> phi) {
    require_cells(tree, m);
    std::vector<double> per_cell(m.num_cells());
    for (std::size_t i = 0; i < m.num_cells(); ++i) per_cell[i] = m.cell(i).integrate(phi);
    return lift_cells(tree, per_cell);
}

RewardProcesses evaluate(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m) {
    require_cells(tree, m);
    const auto n = tree.size();
    RewardProcesses out{AdaptedProcess(n), AdaptedProcess(n)};

    if (const auto* t = std::get_if<TabularFamily>(&spec.family)) {
        auto f = tabular_statistic(tree, m, t->coupling);
        for (std::size_t i = 0; i < n; ++i) {
            out.h[i] = t->h0[i] + t->coef_h[i] * f[i];
            out.g[i] = t->g0[i] + t->coef_g[i] * f[i];
        }
    } else if (const auto* mf = std::get_if<MonotoneFamily>(&spec.family)) {
        auto f = coupling_statistic(tree, m, mf->phi);
        for (std::size_t i = 0; i < n; ++i) {
            out.h[i] = mf->h0[i] + mf->beta * f[i];
            out.g[i] = mf->g0[i] + mf->gamma * f[i];
        }
    } else {
        const auto& cf = std::get<ContinuityFamily>(spec.family);
        auto f = coupling_statistic(tree, m, cf.phi);
        AdaptedProcess x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = cf.x0[i] + cf.slope * f[i];
        const int w = std::max(1, cf.window);
        for (std::size_t i = 0; i < n; ++i) {
            out.g[i] = cf.ghat(x[i]);
            double sum = 0.0;
            int count = 0;
            for (int cur = static_cast<int>(i); cur >= 0 && count < w; cur = tree.node(cur).parent, ++count)
                sum += x[cur];
            out.h[i] = cf.h_offset + cf.h_scale * sum / count;
        }
    }
    return out;
}

DiscountedProblem build_problem(const ScenarioTree& tree, const RewardProcesses& rewards) {
    const auto& grid = tree.grid();
    DiscountedProblem p;
    p.discount.resize(grid.times.size());
    for (int k = 0; k <= grid.periods(); ++k) p.discount[k] = grid.discount(k);

    // Conditional expectation of the discounted terminal payoff.
    AdaptedProcess terminal(tree.size(), 0.0);
    for (int leaf : tree.leaves()) terminal[leaf] = p.discount.back() * rewards.g[leaf];
    terminal = project_to_nodes(tree, terminal, grid.periods());

    p.y = AdaptedProcess(tree.size());
    p.hbar = AdaptedProcess(tree.size());
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const int k = tree.node(static_cast<int>(i)).level;
        p.y[i] = tree.is_leaf(static_cast<int>(i)) ? 0.0 : p.discount[k] * rewards.g[i] - terminal[i];
        p.hbar[i] = p.discount[k] * rewards.h[i];
    }
    p.offset = terminal[0];
    return p;
}

DiscountedProblem build_problem(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m) {
    return build_problem(tree, evaluate(spec, tree, m));
}

void AssumptionReport::fail(std::string where, std::string message) {
    pass = false;
    if (violations.size() < 50) violations.push_back({std::move(where), std::move(message)});
}

RandomMeasure sample_random_measure(std::mt19937_64& rng, std::size_t n_cells, std::size_t n_times) {
    std::exponential_distribution<double> expo(1.0);
    std::bernoulli_distribution drop(0.3);
    std::vector<MeasureOnGrid> cells;
    for (std::size_t c = 0; c < n_cells; ++c) {
        std::vector<double> w(n_times);
        double sum = 0.0;
        for (auto& x : w) {
            x = drop(rng) ? 0.0 : expo(rng);
            sum += x;
        }
        if (sum == 0.0) {
            w[std::uniform_int_distribution<std::size_t>(0, n_times - 1)(rng)] = 1.0;
            sum = 1.0;
        }
        std::vector<double> cdf(n_times);
        double run = 0.0;
        for (std::size_t k = 0; k < n_times; ++k) {
            run += w[k] / sum;
            cdf[k] = run;
        }
        cdf.back() = 1.0;
        cells.push_back(MeasureOnGrid::from_cdf(cdf));
    }
    return RandomMeasure(std::move(cells));
}

std::pair<RandomMeasure, RandomMeasure> sample_ordered_pair(std::mt19937_64& rng, std::size_t n_cells,
                                                            std::size_t n_times) {
    auto m1 = sample_random_measure(rng, n_cells, n_times);
    std::uniform_real_distribution<double> frac(0.0, 1.0);
    std::vector<MeasureOnGrid> shifted;
    for (std::size_t c = 0; c < n_cells; ++c) {
        std::vector<double> w(m1.cell(c).masses().begin(), m1.cell(c).masses().end());
        for (std::size_t k = 0; k + 1 < n_times; ++k) {
            std::size_t to = std::uniform_int_distribution<std::size_t>(k + 1, n_times - 1)(rng);
            double moved = w[k] * frac(rng);
            w[k] -= moved;
            w[to] += moved;
        }
        // Rebuild through the CDF so that the sum stays exactly 1.
        std::vector<double> cdf(n_times);
        double run = 0.0;
        for (std::size_t k = 0; k < n_times; ++k) {
            run += w[k];
            cdf[k] = std::min(run, 1.0);
        }
        cdf.back() = 1.0;
        // Shifting later can only lower the CDF; guard the rounding.
        auto c1 = m1.cell(c).cdf();
        for (std::size_t k = 0; k < n_times; ++k) cdf[k] = std::min(cdf[k], c1[k]);
        shifted.push_back(MeasureOnGrid::from_cdf(cdf));
    }
    return {std::move(m1), RandomMeasure(std::move(shifted))};
}

namespace {

void check_finite(const RewardSpec& spec, const ScenarioTree& tree, const RandomMeasure& m,
                  AssumptionReport& rep) {
    auto r = evaluate(spec, tree, m);
    const auto& grid = tree.grid();
    for (std::size_t i = 0; i < tree.size(); ++i) {
        const int n = static_cast<int>(i);
        if (!std::isfinite(r.h[i])) rep.fail(node_label(tree, n), "running reward h is not finite");
        if (!std::isfinite(r.g[i])) rep.fail(node_label(tree, n), "terminal reward g is not finite");
    }
    // Discounted absolute running reward along each path.
    for (int leaf : tree.leaves()) {
        double acc = 0.0;
        for (int n : tree.path(leaf)) {
            int k = tree.node(n).level;
            acc += grid.discount(k) * std::abs(r.h[n]) * grid.step(k);
        }
        if (!std::isfinite(acc)) rep.fail(node_label(tree, leaf), "discounted running reward not integrable on this path");
    }
}

std::vector<RandomMeasure> default_samples(const ScenarioTree& tree, int n, std::uint64_t seed) {
    const auto cells = static_cast<std::size_t>(tree.num_cells());
    const auto times = static_cast<std::size_t>(tree.periods() + 1);
    std::vector<RandomMeasure> out{RandomMeasure::bottom(cells, times), RandomMeasure::top(cells, times)};
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) out.push_back(sample_random_measure(rng, cells, times));
    return out;
}

}  // namespace

AssumptionReport check_standing_assumptions(const RewardSpec& spec, const ScenarioTree& tree,
                                            std::span<const RandomMeasure> samples) {
    AssumptionReport rep;
    if (!spec.affine_in_m())
        rep.notes.push_back("coupling is nonlinear in m: continuity in m is not guaranteed");
    if (const auto* cf = std::get_if<ContinuityFamily>(&spec.family)) {
        // The declared bound of ghat is the sup of its table; sample it on a fine mesh.
        const double bound = cf->ghat.bound();
        const double lo = cf->ghat.x.front() - 1.0;
        const double hi = cf->ghat.x.back() + 1.0;
        for (int i = 0; i <= 1000; ++i) {
            double v = cf->ghat(lo + (hi - lo) * i / 1000.0);
            if (std::abs(v) > bound + 1e-12) {
                rep.fail("ghat", "sampled value exceeds declared bound");
                break;
            }
        }
    }
    for (const auto& m : samples) check_finite(spec, tree, m, rep);
    return rep;
}

AssumptionReport check_monotone_assumptions(const RewardSpec& spec, const ScenarioTree& tree,
                                            int n_samples, std::uint64_t seed) {
    AssumptionReport rep;
    if (!spec.affine_in_m()) rep.notes.push_back("coupling is nonlinear in m: no monotonicity guarantee");
    if (const auto* mf = std::get_if<MonotoneFamily>(&spec.family)) {
        if (mf->beta < 0.0) rep.notes.push_back("beta < 0");
        if (mf->gamma > 0.0) rep.notes.push_back("gamma > 0");
        for (std::size_t k = 0; k + 1 < mf->phi.size(); ++k)
            if (mf->phi[k + 1] < mf->phi[k]) {
                rep.notes.push_back("phi is not non-decreasing");
                break;
            }
    }

    const auto cells = static_cast<std::size_t>(tree.num_cells());
    const auto times = static_cast<std::size_t>(tree.periods() + 1);
    std::vector<std::pair<RandomMeasure, RandomMeasure>> pairs;
    pairs.emplace_back(RandomMeasure::bottom(cells, times), RandomMeasure::top(cells, times));
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n_samples; ++i) pairs.push_back(sample_ordered_pair(rng, cells, times));

    const auto& grid = tree.grid();
    for (std::size_t s = 0; s < pairs.size() && rep.pass; ++s) {
        const auto& [m1, m2] = pairs[s];
        auto r1 = evaluate(spec, tree, m1);
        auto r2 = evaluate(spec, tree, m2);
        AdaptedProcess d(tree.size());
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const int n = static_cast<int>(i);
            if (r1.h[i] > r2.h[i] + kOrderTol)
                rep.fail(node_label(tree, n), "h(m1) > h(m2) for m1 <=_p m2 (sample " + std::to_string(s) +
                                                  ", gap " + fmt(r1.h[i] - r2.h[i]) + ")");
            d[i] = grid.discount(tree.node(n).level) * (r1.g[i] - r2.g[i]);
        }
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const int n = static_cast<int>(i);
            if (tree.is_leaf(n)) continue;
            double next = tree.child_mean(n, d.values());
            if (next > d[i] + kOrderTol * std::max(1.0, std::abs(d[i])))
                rep.fail(node_label(tree, n), "e^{-rho t}(g(m1) - g(m2)) is not a supermartingale (sample " +
                                                  std::to_string(s) + ", excess " + fmt(next - d[i]) + ")");
        }
    }
    return rep;
}

AssumptionReport check_comparative_assumptions(const RewardSpec& spec1, const RewardSpec& spec2,
                                               const ScenarioTree& tree, int n_samples, std::uint64_t seed) {
    AssumptionReport rep;
    if (!spec1.affine_in_m() || !spec2.affine_in_m())
        rep.notes.push_back("coupling is nonlinear in m: comparative statics not guaranteed");
    const auto& grid = tree.grid();
    auto samples = default_samples(tree, n_samples, seed);
    for (std::size_t s = 0; s < samples.size() && rep.pass; ++s) {
        auto r1 = evaluate(spec1, tree, samples[s]);
        auto r2 = evaluate(spec2, tree, samples[s]);
        AdaptedProcess d(tree.size());
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const int n = static_cast<int>(i);
            if (r1.h[i] < r2.h[i] - kOrderTol)
                rep.fail(node_label(tree, n), "h1 < h2 (sample " + std::to_string(s) + ", gap " +
                                                  fmt(r2.h[i] - r1.h[i]) + ")");
            d[i] = grid.discount(tree.node(n).level) * (r1.g[i] - r2.g[i]);
        }
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const int n = static_cast<int>(i);
            if (tree.is_leaf(n)) continue;
            double next = tree.child_mean(n, d.values());
            if (next < d[i] - kOrderTol * std::max(1.0, std::abs(d[i])))
                rep.fail(node_label(tree, n), "e^{-rho t}(g1 - g2) is not a submartingale (sample " +
                                                  std::to_string(s) + ", deficit " + fmt(d[i] - next) + ")");
        }
    }
    return rep;
}

}  // namespace mfstop
