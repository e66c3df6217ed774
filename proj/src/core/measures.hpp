#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace mfstop {

/// Absolute tolerance for mass sums and CDF comparisons.
inline constexpr double kMeasureTol = 1e-12;

/// Probability measure on the grid times t_0..t_N.
class MeasureOnGrid {
  public:
    MeasureOnGrid() = default;
    /// Throws std::invalid_argument if a mass is negative or the sum is off by > 1e-12.
    explicit MeasureOnGrid(std::vector<double> masses);

    static MeasureOnGrid point_mass(std::size_t n_times, std::size_t k);
    static MeasureOnGrid uniform(std::size_t n_times);
    /// Masses from a CDF sampled at every grid time (last entry must be 1).
    static MeasureOnGrid from_cdf(std::span<const double> cdf);

    std::size_t size() const noexcept { return masses_.size(); }
    double mass(std::size_t k) const { return masses_[k]; }
    std::span<const double> masses() const noexcept { return masses_; }
    std::vector<double> cdf() const;
    /// Integral of a function sampled on the grid.
    double integrate(std::span<const double> phi) const;

    friend bool operator==(const MeasureOnGrid&, const MeasureOnGrid&) = default;

  private:
    std::vector<double> masses_;
};

/// One measure per common-noise cell (the mean-field interaction term).
class RandomMeasure {
  public:
    RandomMeasure() = default;
    explicit RandomMeasure(std::vector<MeasureOnGrid> cells);

    static RandomMeasure constant(std::size_t n_cells, const MeasureOnGrid& m);
    /// Least element of (RandomMeasure, <=_p): everything stops at t_0.
    static RandomMeasure bottom(std::size_t n_cells, std::size_t n_times);
    /// Greatest element: everything stops at t_N.
    static RandomMeasure top(std::size_t n_cells, std::size_t n_times);

    std::size_t num_cells() const noexcept { return cells_.size(); }
    std::size_t num_times() const noexcept { return cells_.empty() ? 0 : cells_[0].size(); }
    const MeasureOnGrid& cell(std::size_t i) const { return cells_[i]; }
    std::span<const MeasureOnGrid> cells() const noexcept { return cells_; }

    friend bool operator==(const RandomMeasure&, const RandomMeasure&) = default;

  private:
    std::vector<MeasureOnGrid> cells_;
};

/// First-order stochastic dominance: m1 <=_p m2 iff CDF_1 >= CDF_2 everywhere
/// (m1 puts its mass earlier). Near-ties within 1e-12 count as equal.
bool fosd_leq(const MeasureOnGrid& m1, const MeasureOnGrid& m2);
bool random_fosd_leq(const RandomMeasure& m1, const RandomMeasure& m2);

MeasureOnGrid fosd_sup(const MeasureOnGrid& m1, const MeasureOnGrid& m2);
MeasureOnGrid fosd_inf(const MeasureOnGrid& m1, const MeasureOnGrid& m2);
RandomMeasure lattice_sup(const RandomMeasure& m1, const RandomMeasure& m2);
RandomMeasure lattice_inf(const RandomMeasure& m1, const RandomMeasure& m2);

/// Cell-wise convex combination (1 - w) m1 + w m2.
RandomMeasure mix(const RandomMeasure& m1, const RandomMeasure& m2, double w);

double kolmogorov_distance(const MeasureOnGrid& m1, const MeasureOnGrid& m2);
double kolmogorov_distance(const RandomMeasure& m1, const RandomMeasure& m2);

/// Left-continuous non-decreasing step function on [0, T): the value on
/// (knots[i], knots[i+1]] is values[i]; the value at 0 is `at_zero` (-inf by default).
/// Beyond T the last value is continued.
struct StepFunctionVPlus {
    std::vector<double> knots;   // 0 = s_0 < ... < s_n = T
    std::vector<double> values;  // size n, non-decreasing
    double at_zero = -std::numeric_limits<double>::infinity();

    double horizon() const { return knots.back(); }
    double operator()(double t) const;
    /// Throws std::invalid_argument on malformed knots or decreasing values.
    void check() const;
};

/// Levy distance: inf{eps > 0 : v1(t - eps) - eps <= v2(t) <= v1(t + eps) + eps for all t},
/// by bisection on eps with an exact check over the finite breakpoint set.
double levy_distance(const StepFunctionVPlus& v1, const StepFunctionVPlus& v2, double tol = 1e-13);

/// d_rho(s, t) = |exp(-rho t) - exp(-rho s)|, with exp(-rho * inf) = 0.
double d_rho(double s, double t, double rho);

}  // namespace mfstop
