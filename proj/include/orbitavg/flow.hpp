// Periodic quadratic flows and exact trajectory averaging.

#pragma once

#include "orbitavg/polysymbol.hpp"

#include <optional>

namespace orbitavg {

/// The flow of p2 = sum (lambda_j/2)(x_j^2 + k_j^2) with positive integer
/// frequencies.  In oscillator variables the time-t map multiplies y_j by
/// e^{it lambda_j}, so a monomial y^a eta^b carries the phase
/// nu = lambda.(a-b) and the common period is T = 2 pi / gcd(lambda).
struct PeriodicFlow {
    std::vector<long> lambda;
    long g = 1;           // gcd of the frequencies
    double T = 0;         // 2 pi / g
    /// Minimal-norm nonzero integer vector with lambda.k0 = 0, first
    /// nonzero entry positive, entries coprime.  Absent for nonresonant
    /// frequency vectors.
    std::optional<std::vector<long>> k0;

    explicit PeriodicFlow(std::vector<long> freqs);

    int n() const { return static_cast<int>(lambda.size()); }
    /// lambda.(a - b) for the monomial y^a eta^b.
    long phase(const Monomial& m) const;
};

/// Time-t flow map on symbols; float coefficients in general.
PolySymbol flow_apply(const PeriodicFlow& flow, const PolySymbol& f, double t);

/// Trajectory average (1/T) int_0^T f(exp(tH)) dt: keeps the monomials of
/// phase zero.  Real-canonical inputs are converted through the
/// oscillator frame and back.
PolySymbol average(const PeriodicFlow& flow, const PolySymbol& f);

/// Solution G of {p2, G} = f - average(f).  Nonresonant monomials are
/// divided by i nu; resonant ones get the weight pi/g from the
/// time-weighted integral, so G equals g0_weighted_average(flow, f).
/// With minimal set, resonant terms are dropped instead (smallest
/// solution; average(G) = 0 always).
PolySymbol solve_homological(const PeriodicFlow& flow, const PolySymbol& f,
                             bool minimal = false);

/// (1/T) int_0^T t f(exp(tH)) dt evaluated monomial-wise from the closed
/// form of the integral.
PolySymbol g0_weighted_average(const PeriodicFlow& flow, const PolySymbol& f);

/// Composite-Simpson realization of average(), used as an independent
/// oracle.  Starts at `panels` (power of two, >= 8) and doubles until the
/// max-coefficient change drops below 1e-11, capped at 2^16.
PolySymbol average_numeric(const PeriodicFlow& flow, const PolySymbol& f,
                           int panels = 64);

}  // namespace orbitavg
