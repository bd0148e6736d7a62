#include "orbitavg/flow.hpp"

#include <numeric>

namespace orbitavg {

namespace {

/// Minimal-norm resonance vector by direct search; frequency vectors in
/// practice have entries of size O(1), so a box of radius max(lambda)
/// always contains the minimum when one exists.
std::optional<std::vector<long>> resonance_vector(const std::vector<long>& lambda) {
    int n = static_cast<int>(lambda.size());
    if (n < 2) return std::nullopt;
    long B = *std::max_element(lambda.begin(), lambda.end());
    std::vector<long> k(n, -B), best;
    long best_norm = 0;
    for (;;) {
        long dot = 0, norm = 0;
        for (int j = 0; j < n; ++j) { dot += lambda[j] * k[j]; norm += k[j] * k[j]; }
        if (dot == 0 && norm > 0 && (best.empty() || norm < best_norm)) {
            best = k;
            best_norm = norm;
        }
        int j = 0;
        while (j < n && ++k[j] > B) k[j++] = -B;
        if (j == n) break;
    }
    if (best.empty()) return std::nullopt;
    long c = 0;
    for (long v : best) c = std::gcd(c, std::abs(v));
    for (auto& v : best) v /= c;
    for (long v : best) {
        if (v > 0) break;
        if (v < 0) { for (auto& w : best) w = -w; break; }
    }
    return best;
}

void check_flow_input(const PeriodicFlow& flow, const PolySymbol& f) {
    if (f.n() != flow.n())
        throw std::invalid_argument("flow dimension does not match symbol");
}

/// Closed form of (1/T) int_0^T t e^{it nu} dt: T/2 when nu = 0 (weight
/// pi/g), else 1/(i nu).
Coeff time_weight(const PeriodicFlow& flow, long nu) {
    if (nu == 0) {
        PiPoly w{Ext(Rational(1, flow.g))};
        return Coeff(ExactC(w.times_pi(), PiPoly()));
    }
    return Coeff(ExactC::inv_i(Rational(nu)));
}

template <typename PerMonomial>
PolySymbol map_oscillator(const PeriodicFlow& flow, const PolySymbol& f,
                          PerMonomial&& fn) {
    check_flow_input(flow, f);
    bool convert = f.frame() == Frame::xk;
    PolySymbol osc = convert ? to_oscillator(f) : f;
    PolySymbol r(f.n(), Frame::yeta);
    for (const auto& [m, c] : osc.terms()) {
        Coeff nc = fn(flow.phase(m), c);
        r.add_term(m, nc);
    }
    return convert ? from_oscillator(r) : r;
}

}  // namespace

PeriodicFlow::PeriodicFlow(std::vector<long> freqs) : lambda(std::move(freqs)) {
    if (lambda.empty()) throw std::invalid_argument("PeriodicFlow: empty frequency vector");
    for (long l : lambda)
        if (l <= 0) throw std::invalid_argument("PeriodicFlow: frequencies must be positive");
    g = 0;
    for (long l : lambda) g = std::gcd(g, l);
    T = 2.0 * 3.14159265358979323846264338327950288 / static_cast<double>(g);
    k0 = resonance_vector(lambda);
}

long PeriodicFlow::phase(const Monomial& m) const {
    long nu = 0;
    int nn = n();
    for (int j = 0; j < nn; ++j) nu += lambda[j] * (m.e[j] - m.e[nn + j]);
    return nu;
}

PolySymbol flow_apply(const PeriodicFlow& flow, const PolySymbol& f, double t) {
    check_flow_input(flow, f);
    if (f.frame() != Frame::yeta)
        throw std::invalid_argument("flow_apply: oscillator frame required");
    PolySymbol r(f.n(), Frame::yeta);
    for (const auto& [m, c] : f.terms()) {
        long nu = flow.phase(m);
        if (nu == 0)
            r.add_term(m, c);
        else
            r.add_term(m, c * Coeff(std::polar(1.0, t * static_cast<double>(nu))));
    }
    return r;
}

PolySymbol average(const PeriodicFlow& flow, const PolySymbol& f) {
    return map_oscillator(flow, f, [](long nu, const Coeff& c) {
        return nu == 0 ? c : Coeff(ExactC());
    });
}

PolySymbol solve_homological(const PeriodicFlow& flow, const PolySymbol& f,
                             bool minimal) {
    return map_oscillator(flow, f, [&](long nu, const Coeff& c) {
        if (nu == 0)
            return minimal ? Coeff(ExactC()) : c * time_weight(flow, 0);
        return c * Coeff(ExactC::inv_i(Rational(nu)));
    });
}

PolySymbol g0_weighted_average(const PeriodicFlow& flow, const PolySymbol& f) {
    return map_oscillator(flow, f, [&](long nu, const Coeff& c) {
        return c * time_weight(flow, nu);
    });
}

PolySymbol average_numeric(const PeriodicFlow& flow, const PolySymbol& f,
                           int panels) {
    check_flow_input(flow, f);
    if (panels < 8 || (panels & (panels - 1)))
        throw std::invalid_argument("average_numeric: panels must be a power of two >= 8");
    bool convert = f.frame() == Frame::xk;
    PolySymbol osc = convert ? to_oscillator(f) : f;

    auto simpson = [&](int np) {
        double h = flow.T / np;
        PolySymbol acc(f.n(), Frame::yeta);
        for (int j = 0; j <= np; ++j) {
            double w = (j == 0 || j == np) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            acc = acc + flow_apply(flow, osc, j * h) * Coeff(w * h / 3.0 / flow.T);
        }
        return acc;
    };

    PolySymbol prev = simpson(panels);
    for (int np = 2 * panels; np <= (1 << 16); np *= 2) {
        PolySymbol cur = simpson(np);
        if ((cur - prev).max_abs_coeff() < 1e-11) {
            return convert ? from_oscillator(cur) : cur;
        }
        prev = cur;
    }
    throw std::runtime_error("average_numeric: quadrature did not converge");
}

}  // namespace orbitavg
