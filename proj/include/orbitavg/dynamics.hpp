// Long-time averages along symbol-generated flows, the secular-equation
// solver, and the global-hypothesis checker.

#pragma once

#include "orbitavg/polysymbol.hpp"

#include <functional>

namespace orbitavg {

/// Autonomous ODE on R^dim.
struct DynamicalSystem {
    int dim;
    std::function<void(const std::vector<double>&, std::vector<double>&)> rhs;
};

using Observable = std::function<double(const std::vector<double>&)>;

/// Hamiltonian flow of a real symbol: xdot = ds/dk, kdot = -ds/dx.
DynamicalSystem canonical_system(const PolySymbol& s);

/// Flow on the unit sphere in R^3 generated by a position-only symbol:
/// ydot = grad s x y.  Tangent to every sphere |y| = const.
DynamicalSystem reduced_sphere_system(const PolySymbol& s);

Observable symbol_observable(const PolySymbol& f);

/// Adaptive Runge-Kutta step control: local error below tol per unit
/// time.  Advances y in place from time 0 to time T.
void integrate(const DynamicalSystem& sys, std::vector<double>& y, double T,
               double tol = 1e-10);

struct TorusSample {
    std::vector<double> point;
    double avg_T;    // (1/T) int_0^T base(flow_t(point)) dt
    double avg_inf;  // long-time limit
};

struct LongTimeAverage {
    double T = 0;
    std::vector<TorusSample> samples;
};

/// Finite-time flow averages of `base` along the system generated by
/// s_avg, plus the T -> infinity limit per sample point (windowed
/// long-time average, T doubling until the drift falls below 1e-8).
LongTimeAverage double_average(const DynamicalSystem& sys, const Observable& base,
                               double T, const std::vector<std::vector<double>>& grid);

/// G(pt) = int_0^T (u/T - 1) base(flow_u(pt)) du, the secular primitive:
/// its derivative along the flow is base - avg_T(base).  The residual of
/// that identity is checked by finite differences along the flow; the
/// largest value over the grid is returned through max_residual.
std::vector<double> solve_secular(const DynamicalSystem& sys, const Observable& base,
                                  double T, const std::vector<std::vector<double>>& grid,
                                  double* max_residual = nullptr);

struct HypothesisScan {
    double T;
    double inf_pos;  // inf of avg_T - avg_inf over the positive band
    double sup_neg;  // sup over the negative band
};

struct HypothesisBandReport {
    double b;
    std::vector<HypothesisScan> scans;
    bool satisfied = false;
    double first_T = 0;   // first T with inf_pos > 0 > sup_neg
    double margin = 0;    // min(inf_pos, -sup_neg) at first_T
};

struct HypothesisReport {
    double a;
    std::vector<HypothesisBandReport> bands;
};

/// Empirical check of the sign-separation hypothesis: for each b the
/// averages over the torus bands F in [b, a] and [-a, -b] are scanned
/// over T in {T0, 2 T0, ...} up to Tmax.  `torus_points` yields sample
/// points of the invariant torus with parameter F.  A band verdict of
/// not-satisfied means undetermined up to Tmax, never refuted.
HypothesisReport check_global_hypothesis(
    const DynamicalSystem& sys, const Observable& base,
    const std::function<std::vector<std::vector<double>>(double)>& torus_points,
    double a, const std::vector<double>& b_list, double T0, double Tmax);

}  // namespace orbitavg
