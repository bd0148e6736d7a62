// Analytic spectral predictors: period profiles, cluster rectangles,
// quasi-eigenvalue lattices, and numerically computed action coordinates.

#pragma once

#include "orbitavg/corrections.hpp"

#include <array>
#include <complex>
#include <functional>
#include <optional>

namespace orbitavg {

/// Energy-dependent period with its cumulative action g (g' = T/2pi,
/// g(0) = 0) and f, the inverse of E -> g(E) - g(E_ref).  E_ref is the
/// window normalization point (1 for the sphere profile, 0 otherwise).
struct PeriodProfile {
    std::function<double(double)> T;
    std::function<double(double)> g;
    std::function<double(double)> f;
    double E_ref = 0.0;
};

PeriodProfile build_profile_constant(double T0);
/// Minimal geodesic period pi/sqrt(E): g(E) = sqrt(E), f(v) = (v+1)^2.
PeriodProfile build_profile_sphere();
/// Piecewise-linear interpolation of (E, T) samples; g by exact
/// integration of the interpolant, f by bisection + Newton to 1e-12.
PeriodProfile build_profile_tabulated(std::vector<std::array<double, 2>> table,
                                      double E_ref = 0.0);

/// Actions and Maslov indices of the invariant torus; theta is always
/// derived, never stored.
struct TorusData {
    std::array<double, 2> S{0.0, 0.0};
    std::array<long, 2> alpha{0, 0};

    std::array<double, 2> theta(double h) const;
};

/// S1 = 2pi, alpha1 = -2: calibrated so the sphere cluster centers come
/// out as h^2 (k + 1/2)^2.
TorusData sphere_torus_defaults();

/// xi_j(k) = h (k - alpha_j/4) - S_j/2pi.  Shared by rectangles and
/// lattices so the zero-correction paths agree bitwise.
double torus_xi(const TorusData& torus, double h, long k, int j);

struct ClusterRectangle {
    long k1;
    double center;
    double half_width_re;
    double half_width_im;
};

struct ClusterRectangles {
    std::vector<ClusterRectangle> rects;
    bool disjoint = true;
};

/// Rectangles centered at f(xi_1(k)) for every k whose center lies in
/// [E_lo, E_hi]; half-widths c_re (eps^2 + h^2) and c_im (eps^2 + eps h),
/// the latter tightened to c_im (eps^3 + eps h) when s_real is set.
ClusterRectangles cluster_rectangles(const PeriodProfile& profile,
                                     const TorusData& torus, double h,
                                     double epsilon, double E_lo, double E_hi,
                                     double c_re = 1.0, double c_im = 1.0,
                                     bool s_real = false);

enum class Regime { thm31, thm42, thm43, thm44 };

struct QuasiEigLattice {
    PeriodProfile profile;
    TorusData torus;
    double h = 0.0;
    double epsilon = 0.0;
    std::function<double(const std::array<double, 2>&)> s_avg;  // null = 0
    std::optional<double> t_avg_inf;
    std::optional<double> im_q1_inf;  // regime thm44 only
    Regime regime = Regime::thm42;
};

struct LatticePoint {
    std::array<long, 2> k;
    std::complex<double> z;
};

/// z(k) = f(xi_1) + eps^2 s_avg(xi) + i eps^3 t_avg_inf
/// [+ i h eps im_q1_inf in regime thm44]; only k with |xi| inside the
/// validity ball are emitted.
std::vector<LatticePoint> quasi_lattice(const QuasiEigLattice& lat,
                                        std::array<long, 2> k1_range,
                                        std::array<long, 2> k2_range,
                                        double validity_radius);

struct BarrierPoint {
    std::array<long, 2> k;
    std::complex<double> E;
    bool in_exclusion;
};

/// Barrier-top resonance string E = E0 - i eps^2 (lambda . xi +
/// i eps^2 s_of_xi(xi)) with xi_j = (h/eps^2)(k_j + 1/2); each point is
/// tagged when it falls inside an exclusion parabola
/// |Re z - E0 - A |Im z|^2| < eta |Im z|^2 for one of the critical
/// values A.
std::vector<BarrierPoint> barrier_lattice(
    const std::vector<long>& lambda,
    const std::function<double(const std::vector<double>&)>& s_of_xi,
    const std::vector<CriticalValue>& critical_values, double E0, double h,
    double epsilon, long k_max, double eta);

/// Normalized action F -> xi_2(1, F) of the level sets of a circle-space
/// polynomial: (1/2pi) times the signed spherical area swept between the
/// level sets {s = F0} and {s = F}, computed by tracing the level curve
/// along the reduced flow and integrating the area one-form
/// (1 - cos theta) dphi about the enclosed critical point.  Sign fixed
/// so the map is increasing.  axis defaults to the sampled maximizer of
/// s_reduced (the enclosed critical point of the band).
std::function<double(double)> action_coordinates(
    const PolySymbol& s_reduced, std::array<double, 2> F_window, double F0,
    std::optional<std::array<double, 3>> axis = std::nullopt);

}  // namespace orbitavg
