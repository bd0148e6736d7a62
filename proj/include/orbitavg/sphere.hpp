// Geodesic averaging on the unit sphere: exact Radon transform of
// polynomials, reduction to the space of oriented great circles, and the
// sphere-specific correction terms.

#pragma once

#include "orbitavg/polysymbol.hpp"

#include <array>

namespace orbitavg {

struct SpherePoint {
    std::array<double, 3> x;
    std::array<double, 3> xi;
};

/// Point on the constraint set with |x| = 1, x.xi = 0 (checked to 1e-12).
SpherePoint make_sphere_point(const std::array<double, 3>& x,
                              const std::array<double, 3>& xi);

/// Great-circle flow (x, xi) -> (cos(|xi|t) x + sin(|xi|t) xi/|xi|,
/// -|xi| sin(|xi|t) x + cos(|xi|t) xi).  Preserves the constraints and
/// |xi|; 2 pi periodic on |xi| = 1.
SpherePoint geodesic_flow(const SpherePoint& pt, double t);

/// Symbol pullback along the flow at |xi| = 1: x -> cos(t) x + sin(t) xi,
/// xi -> -sin(t) x + cos(t) xi.  Valid on the unit momentum shell only.
PolySymbol geodesic_pullback(const PolySymbol& f, double t);

/// Flow average over one period on the unit momentum shell, computed
/// exactly: in z = x + i xi the flow is a phase rotation, so only the
/// balanced z-degrees survive.  Result is reduced modulo the constraints
/// (including xi^2 = 1).  Annihilates odd polynomials.
PolySymbol radon_average(const PolySymbol& q);

/// Numerical quadrature realization of radon_average (test oracle).
PolySymbol radon_average_numeric(const PolySymbol& q, int panels = 256);

/// Express a flow-invariant f as a polynomial g(y) on the sphere of
/// oriented great circles, y = x cross xi: chart substitution with exact
/// denominator clearing, least-squares fit as fallback.  Invariance is
/// checked numerically first.
PolySymbol reduce_to_circle_space(const PolySymbol& f);

/// Evaluate a circle-space polynomial at y = x cross xi (pullback used in
/// round-trip checks).
PolySymbol circle_space_pullback(const PolySymbol& g);

/// Solution of the homological equation along the geodesic flow for an
/// odd position monomial x^alpha (extended linearly to odd polynomials):
/// oscillatory-sum formula in z, returned in (x, xi) form on the unit
/// shell.  Satisfies {x^2 xi^2, G0}_Sigma = q there.
PolySymbol sphere_g0(const PolySymbol& q);

struct SphereCorrection {
    PolySymbol sigma_form;   // on the constraint set, unit momentum shell
    PolySymbol reduced_form; // on the circle space, in y
};

/// <s> = -(1/2) <{G0, q}_Sigma> for odd q, with its circle-space form.
SphereCorrection sphere_second_correction(const PolySymbol& q);

/// Radon transform restricted to the (restrictions of) harmonic
/// homogeneous polynomials of one degree acts as a scalar; returns that
/// scalar after asserting the ratio is constant over a basis.
double radon_schur_check(int degree);

}  // namespace orbitavg
