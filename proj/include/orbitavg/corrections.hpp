// Second and third averaged corrections along a periodic quadratic flow.

#pragma once

#include "orbitavg/flow.hpp"

namespace orbitavg {

struct CorrectionBundle {
    PolySymbol s_avg;
    PolySymbol t_avg;
    PolySymbol G0;
    PolySymbol G1;
    /// Right-hand side of the (unsolved) next homological equation,
    /// retained for audit.
    PolySymbol G2_residual;
};

/// <s> = <r> - (1/2)<{G0, q}> with G0 the time-weighted primitive of q.
/// Requires <q> = 0; the offending invariant monomials are listed in the
/// exception otherwise.  Exact on exact inputs.  `g0_override`, when
/// supplied, replaces the canonical G0 (it must still solve the same
/// homological equation; used to probe gauge independence).
PolySymbol second_correction(const PeriodicFlow& flow, const PolySymbol& q,
                             const PolySymbol& r,
                             const PolySymbol* g0_override = nullptr);

/// Full bundle through third order: <s>, <t> = <f + g + w + k> with the
/// double time integrals evaluated in closed form per monomial pair, plus
/// G0, G1 and the residual that a next-order generator would have to
/// absorb.  Requires <q> = 0.
CorrectionBundle third_correction(const PeriodicFlow& flow, const PolySymbol& q,
                                  const PolySymbol& r, const PolySymbol& w);

/// The barrier-top correction: average of -p4 plus the time-weighted
/// self-bracket of p3.  Coincides with second_correction(flow, p3, -p4);
/// computed here by the explicit monomial double sum so the identity is a
/// meaningful cross-check.
PolySymbol barrier_s(const PeriodicFlow& flow, const PolySymbol& p3,
                     const PolySymbol& p4);

struct CriticalValue {
    double value;
    int hits;  // converged seeds that landed on this value
};

/// Critical values of a flow-invariant symbol restricted to the energy
/// shell p2 = 1 (flow supplied) or to the unit sphere |y| = 1 in R^3
/// (flow absent, position-only input).  Dense seeding plus Newton
/// refinement of the stationarity system; values clustered to 1e-8.
std::vector<CriticalValue> critical_values_on_sphere3(
    const PolySymbol& s_avg, const PeriodicFlow* flow = nullptr,
    int seeds = 10000);

}  // namespace orbitavg
