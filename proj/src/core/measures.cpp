#include "measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfstop {

namespace {

void require_same_shape(const RandomMeasure& a, const RandomMeasure& b) {
    if (a.num_cells() != b.num_cells()) throw std::invalid_argument("random measures differ in cell count");
    if (a.num_times() != b.num_times()) throw std::invalid_argument("random measures differ in grid size");
}

void require_same_grid(const MeasureOnGrid& a, const MeasureOnGrid& b) {
    if (a.size() != b.size()) throw std::invalid_argument("measures live on different grids");
}

}  // namespace

MeasureOnGrid::MeasureOnGrid(std::vector<double> masses) : masses_(std::move(masses)) {
    if (masses_.empty()) throw std::invalid_argument("measure needs at least one atom");
    double sum = 0.0;
    for (double m : masses_) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("negative or non-finite mass");
        sum += m;
    }
    if (std::abs(sum - 1.0) > kMeasureTol) throw std::invalid_argument("masses do not sum to 1");
}

MeasureOnGrid MeasureOnGrid::point_mass(std::size_t n_times, std::size_t k) {
    std::vector<double> m(n_times, 0.0);
    m.at(k) = 1.0;
    return MeasureOnGrid(std::move(m));
}

MeasureOnGrid MeasureOnGrid::uniform(std::size_t n_times) {
    std::vector<double> m(n_times, 1.0 / static_cast<double>(n_times));
    // Put the rounding residue on the last atom so the sum is 1 to the last ulp.
    double head = 0.0;
    for (std::size_t k = 0; k + 1 < n_times; ++k) head += m[k];
    m.back() = 1.0 - head;
    return MeasureOnGrid(std::move(m));
}

MeasureOnGrid MeasureOnGrid::from_cdf(std::span<const double> cdf) {
    std::vector<double> m(cdf.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < cdf.size(); ++k) {
        m[k] = std::max(0.0, cdf[k] - prev);
        prev = cdf[k];
    }
    return MeasureOnGrid(std::move(m));
}

std::vector<double> MeasureOnGrid::cdf() const {
    std::vector<double> c(masses_.size());
    double run = 0.0;
    for (std::size_t k = 0; k < masses_.size(); ++k) {
        run += masses_[k];
        c[k] = run;
    }
    return c;
}

double MeasureOnGrid::integrate(std::span<const double> phi) const {
    if (phi.size() != masses_.size()) throw std::invalid_argument("integrand does not match grid");
    double s = 0.0;
    for (std::size_t k = 0; k < masses_.size(); ++k) s += phi[k] * masses_[k];
    return s;
}

RandomMeasure::RandomMeasure(std::vector<MeasureOnGrid> cells) : cells_(std::move(cells)) {
    for (const auto& c : cells_)
        if (c.size() != cells_.front().size()) throw std::invalid_argument("cells use different grids");
}

RandomMeasure RandomMeasure::constant(std::size_t n_cells, const MeasureOnGrid& m) {
    return RandomMeasure(std::vector<MeasureOnGrid>(n_cells, m));
}

RandomMeasure RandomMeasure::bottom(std::size_t n_cells, std::size_t n_times) {
    return constant(n_cells, MeasureOnGrid::point_mass(n_times, 0));
}

RandomMeasure RandomMeasure::top(std::size_t n_cells, std::size_t n_times) {
    return constant(n_cells, MeasureOnGrid::point_mass(n_times, n_times - 1));
}

bool fosd_leq(const MeasureOnGrid& m1, const MeasureOnGrid& m2) {
    require_same_grid(m1, m2);
    auto c1 = m1.cdf();
    auto c2 = m2.cdf();
    for (std::size_t k = 0; k < c1.size(); ++k)
        if (c1[k] < c2[k] - kMeasureTol) return false;
    return true;
}

bool random_fosd_leq(const RandomMeasure& m1, const RandomMeasure& m2) {
    require_same_shape(m1, m2);
    for (std::size_t i = 0; i < m1.num_cells(); ++i)
        if (!fosd_leq(m1.cell(i), m2.cell(i))) return false;
    return true;
}

MeasureOnGrid fosd_sup(const MeasureOnGrid& m1, const MeasureOnGrid& m2) {
    require_same_grid(m1, m2);
    auto c1 = m1.cdf();
    auto c2 = m2.cdf();
    for (std::size_t k = 0; k < c1.size(); ++k) c1[k] = std::min(c1[k], c2[k]);
    return MeasureOnGrid::from_cdf(c1);
}

MeasureOnGrid fosd_inf(const MeasureOnGrid& m1, const MeasureOnGrid& m2) {
    require_same_grid(m1, m2);
    auto c1 = m1.cdf();
    auto c2 = m2.cdf();
    for (std::size_t k = 0; k < c1.size(); ++k) c1[k] = std::max(c1[k], c2[k]);
    return MeasureOnGrid::from_cdf(c1);
}

RandomMeasure lattice_sup(const RandomMeasure& m1, const RandomMeasure& m2) {
    require_same_shape(m1, m2);
    std::vector<MeasureOnGrid> out;
    for (std::size_t i = 0; i < m1.num_cells(); ++i) out.push_back(fosd_sup(m1.cell(i), m2.cell(i)));
    return RandomMeasure(std::move(out));
}

RandomMeasure lattice_inf(const RandomMeasure& m1, const RandomMeasure& m2) {
    require_same_shape(m1, m2);
    std::vector<MeasureOnGrid> out;
    for (std::size_t i = 0; i < m1.num_cells(); ++i) out.push_back(fosd_inf(m1.cell(i), m2.cell(i)));
    return RandomMeasure(std::move(out));
}

RandomMeasure mix(const RandomMeasure& m1, const RandomMeasure& m2, double w) {
    require_same_shape(m1, m2);
    if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("mixing weight outside [0, 1]");
    std::vector<MeasureOnGrid> out;
    for (std::size_t i = 0; i < m1.num_cells(); ++i) {
        // Mix in CDF space; from_cdf keeps the last atom consistent with CDF(T) = 1.
        auto c1 = m1.cell(i).cdf();
        auto c2 = m2.cell(i).cdf();
        for (std::size_t k = 0; k < c1.size(); ++k) c1[k] = (1.0 - w) * c1[k] + w * c2[k];
        c1.back() = 1.0;
        out.push_back(MeasureOnGrid::from_cdf(c1));
    }
    return RandomMeasure(std::move(out));
}

double kolmogorov_distance(const MeasureOnGrid& m1, const MeasureOnGrid& m2) {
    require_same_grid(m1, m2);
    auto c1 = m1.cdf();
    auto c2 = m2.cdf();
    double d = 0.0;
    for (std::size_t k = 0; k < c1.size(); ++k) d = std::max(d, std::abs(c1[k] - c2[k]));
    return d;
}

double kolmogorov_distance(const RandomMeasure& m1, const RandomMeasure& m2) {
    require_same_shape(m1, m2);
    double d = 0.0;
    for (std::size_t i = 0; i < m1.num_cells(); ++i)
        d = std::max(d, kolmogorov_distance(m1.cell(i), m2.cell(i)));
    return d;
}

double StepFunctionVPlus::operator()(double t) const {
    if (t < 0.0) return -std::numeric_limits<double>::infinity();
    if (t == 0.0) return at_zero;
    if (t >= knots.back()) return values.back();
    // First knot >= t closes the piece containing t.
    auto it = std::lower_bound(knots.begin(), knots.end(), t);
    return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

void StepFunctionVPlus::check() const {
    if (knots.size() < 2 || values.size() + 1 != knots.size())
        throw std::invalid_argument("step function needs n+1 knots for n values");
    if (knots.front() != 0.0) throw std::invalid_argument("step function must start at 0");
    for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        if (!(knots[i + 1] > knots[i])) throw std::invalid_argument("knots not increasing");
    for (std::size_t i = 0; i + 1 < values.size(); ++i)
        if (values[i + 1] < values[i]) throw std::invalid_argument("step function decreases");
    if (at_zero > values.front()) throw std::invalid_argument("value at 0 exceeds the first piece");
}

namespace {

// One side of the Levy envelope: a(t - eps) - eps <= b(t) for every t.
bool below_shifted(const StepFunctionVPlus& a, const StepFunctionVPlus& b, double eps) {
    // Both sides are constant on the pieces of the common refinement, and pieces are
    // closed on the right, so checking right endpoints (plus t = 0) is exhaustive.
    auto ok_at = [&](double t) {
        double lhs = a(t - eps);
        if (lhs == -std::numeric_limits<double>::infinity()) return true;
        return lhs - eps <= b(t);
    };
    if (!ok_at(0.0)) return false;
    for (double s : b.knots)
        if (s > 0.0 && !ok_at(s)) return false;
    for (double s : a.knots)
        if (!ok_at(s + eps)) return false;
    return true;
}

}  // namespace

double levy_distance(const StepFunctionVPlus& v1, const StepFunctionVPlus& v2, double tol) {
    v1.check();
    v2.check();
    auto envelope = [&](double eps) { return below_shifted(v1, v2, eps) && below_shifted(v2, v1, eps); };
    if (envelope(0.0)) return 0.0;

    double lo = 0.0;
    double hi = 1.0;
    while (!envelope(hi)) {
        hi *= 2.0;
        if (hi > 1e300) throw std::runtime_error("levy_distance: no finite envelope");
    }
    while (hi - lo > tol * std::max(1.0, hi)) {
        double mid = 0.5 * (lo + hi);
        if (envelope(mid))
            hi = mid;
        else
            lo = mid;
        if (mid == lo && mid == hi) break;
    }
    return hi;
}

double d_rho(double s, double t, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("d_rho requires rho > 0");
    auto e = [rho](double x) { return std::isinf(x) && x > 0 ? 0.0 : std::exp(-rho * x); };
    return std::abs(e(t) - e(s));
}

}  // namespace mfstop
