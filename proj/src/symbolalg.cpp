#include "orbitavg/polysymbol.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

namespace orbitavg {

std::string PolySymbol::str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    // print highest-order terms first
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [m, c] = *it;
        if (!first) os << " + ";
        first = false;
        std::complex<double> v = c.value();
        os << "(" << v.real();
        if (v.imag() >= 0) os << "+" << v.imag() << "i)";
        else os << v.imag() << "i)";
        const char* pos = frame_ == Frame::xk ? "x" : "y";
        const char* mom = frame_ == Frame::xk ? "k" : "n";
        for (int j = 0; j < n_; ++j) {
            if (m.e[j]) {
                os << "*" << pos << j + 1;
                if (m.e[j] > 1) os << "^" << m.e[j];
            }
        }
        for (int j = 0; j < n_; ++j) {
            if (m.e[n_ + j]) {
                os << "*" << mom << j + 1;
                if (m.e[n_ + j] > 1) os << "^" << m.e[n_ + j];
            }
        }
    }
    return os.str();
}

PolySymbol poisson_bracket(const PolySymbol& f, const PolySymbol& g) {
    if (f.n() != g.n()) throw std::invalid_argument("poisson_bracket: dimension mismatch");
    if (f.frame() != g.frame()) throw std::invalid_argument("poisson_bracket: frame mismatch");
    int n = f.n();
    PolySymbol r(n, f.frame());
    for (int j = 0; j < n; ++j) {
        r = r + f.derivative(n + j) * g.derivative(j) - f.derivative(j) * g.derivative(n + j);
    }
    return r;
}

PolySymbol sphere_h1() {
    PolySymbol h(3, Frame::xk);
    for (int j = 0; j < 3; ++j) {
        Monomial m(3);
        m.e[j] = 2;
        h.add_term(m, Coeff(ExactC(1)));
    }
    h.add_term(Monomial(3), Coeff(ExactC(-1)));
    return h;
}

PolySymbol sphere_h2() {
    PolySymbol h(3, Frame::xk);
    for (int j = 0; j < 3; ++j) {
        Monomial m(3);
        m.e[j] = 1;
        m.e[3 + j] = 1;
        h.add_term(m, Coeff(ExactC(1)));
    }
    return h;
}

PolySymbol constrained_bracket(const PolySymbol& f, const PolySymbol& g) {
    if (f.n() != 3 || g.n() != 3)
        throw std::invalid_argument("constrained_bracket: requires n = 3");
    if (f.frame() != Frame::xk || g.frame() != Frame::xk)
        throw std::invalid_argument("constrained_bracket: requires real-canonical frame");
    static const PolySymbol h1 = sphere_h1();
    static const PolySymbol h2 = sphere_h2();
    Coeff half(ExactC(Rational(1, 2)));
    return poisson_bracket(f, g) +
           half * (poisson_bracket(f, h2) * poisson_bracket(h1, g) -
                   poisson_bracket(f, h1) * poisson_bracket(h2, g));
}

PolySymbol to_oscillator(const PolySymbol& f) {
    if (f.frame() != Frame::xk)
        throw std::invalid_argument("to_oscillator: input already in oscillator frame");
    int n = f.n();
    Coeff inv_sqrt2(ExactC(Ext(Rational(0), Rational(1, 2))));  // sqrt2/2
    Coeff i_unit(ExactC::i());
    std::vector<PolySymbol> img(2 * n);
    for (int j = 0; j < n; ++j) {
        PolySymbol y = PolySymbol::position(n, j, Frame::yeta);
        PolySymbol eta = PolySymbol::momentum(n, j, Frame::yeta);
        img[j] = (y + i_unit * eta) * inv_sqrt2;          // x_j
        img[n + j] = (i_unit * y + eta) * inv_sqrt2;      // xi_j
    }
    return f.substitute(img);
}

PolySymbol from_oscillator(const PolySymbol& f) {
    if (f.frame() != Frame::yeta)
        throw std::invalid_argument("from_oscillator: input not in oscillator frame");
    int n = f.n();
    Coeff inv_sqrt2(ExactC(Ext(Rational(0), Rational(1, 2))));
    Coeff mi(ExactC(Rational(0), Rational(-1)));  // -i
    std::vector<PolySymbol> img(2 * n);
    for (int j = 0; j < n; ++j) {
        PolySymbol x = PolySymbol::position(n, j, Frame::xk);
        PolySymbol xi = PolySymbol::momentum(n, j, Frame::xk);
        img[j] = (x + mi * xi) * inv_sqrt2;               // y_j
        img[n + j] = (xi + mi * x) * inv_sqrt2;           // eta_j
    }
    return f.substitute(img);
}

// ---- reduction modulo the constraint ideal ----

namespace {

const Monomial* leading(const PolySymbol& p) {
    if (p.is_zero()) return nullptr;
    return &p.terms().rbegin()->first;  // map is ascending; last = greatest
}

bool divides(const Monomial& a, const Monomial& b) {
    for (size_t j = 0; j < a.e.size(); ++j)
        if (a.e[j] > b.e[j]) return false;
    return true;
}

Monomial quotient(const Monomial& b, const Monomial& a) {
    Monomial q = b;
    for (size_t j = 0; j < q.e.size(); ++j) q.e[j] -= a.e[j];
    return q;
}

Monomial lcm(const Monomial& a, const Monomial& b) {
    Monomial m = a;
    for (size_t j = 0; j < m.e.size(); ++j) m.e[j] = std::max(a.e[j], b.e[j]);
    return m;
}

PolySymbol mono_poly(int n, const Monomial& m, const Coeff& c) {
    PolySymbol p(n, Frame::xk);
    p.add_term(m, c);
    return p;
}

/// Full normal-form reduction by a list of monic generators.
PolySymbol normal_form(PolySymbol f, const std::vector<PolySymbol>& basis) {
    PolySymbol rem(f.n(), f.frame());
    while (!f.is_zero()) {
        const Monomial lt = *leading(f);
        Coeff lc = f.coeff(lt);
        bool reduced = false;
        for (const auto& g : basis) {
            const Monomial& glt = *leading(g);
            if (divides(glt, lt)) {
                f = f - mono_poly(f.n(), quotient(lt, glt), lc) * g;
                reduced = true;
                break;
            }
        }
        if (!reduced) {
            rem.add_term(lt, lc);
            PolySymbol lt_poly = mono_poly(f.n(), lt, lc);
            f = f - lt_poly;
        }
    }
    return rem;
}

/// Make leading coefficient exactly 1 (generators have rational coeffs).
PolySymbol monic(const PolySymbol& p) {
    const Monomial& lt = *leading(p);
    ExactC lc = p.coeff(lt).exact_value();
    if (!lc.im.is_zero() || !lc.re.is_pi_free() || !lc.re.c[0].is_rational())
        throw std::logic_error("monic: unexpected generator coefficient");
    Rational r = lc.re.c[0].a;
    return p * Coeff(ExactC(Rational(1) / r));
}

/// Buchberger's algorithm for the fixed constraint ideals; inputs are
/// tiny so no pair-selection strategy is needed.
std::vector<PolySymbol> groebner(std::vector<PolySymbol> basis) {
    for (auto& g : basis) g = monic(g);
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t i = 0; i < basis.size(); ++i)
        for (size_t j = i + 1; j < basis.size(); ++j) pairs.emplace_back(i, j);
    while (!pairs.empty()) {
        auto [i, j] = pairs.back();
        pairs.pop_back();
        const Monomial &li = *leading(basis[i]), &lj = *leading(basis[j]);
        Monomial l = lcm(li, lj);
        PolySymbol s = mono_poly(basis[i].n(), quotient(l, li), Coeff(ExactC(1))) * basis[i] -
                       mono_poly(basis[j].n(), quotient(l, lj), Coeff(ExactC(1))) * basis[j];
        PolySymbol r = normal_form(s, basis);
        if (!r.is_zero()) {
            r = monic(r);
            for (size_t k = 0; k < basis.size(); ++k) pairs.emplace_back(k, basis.size());
            basis.push_back(r);
        }
    }
    // inter-reduce for a unique reduced basis
    for (size_t i = 0; i < basis.size(); ++i) {
        std::vector<PolySymbol> others;
        for (size_t j = 0; j < basis.size(); ++j)
            if (j != i) others.push_back(basis[j]);
        PolySymbol r = normal_form(basis[i], others);
        if (r.is_zero()) {
            basis.erase(basis.begin() + i);
            --i;
        } else {
            basis[i] = monic(r);
        }
    }
    return basis;
}

PolySymbol unit_momentum_constraint() {
    PolySymbol h(3, Frame::xk);
    for (int j = 0; j < 3; ++j) {
        Monomial m(3);
        m.e[3 + j] = 2;
        h.add_term(m, Coeff(ExactC(1)));
    }
    h.add_term(Monomial(3), Coeff(ExactC(-1)));
    return h;
}

const std::vector<PolySymbol>& constraint_basis(bool unit_energy) {
    static std::once_flag once[2];
    static std::vector<PolySymbol> gb[2];
    int idx = unit_energy ? 1 : 0;
    std::call_once(once[idx], [idx] {
        std::vector<PolySymbol> gens{sphere_h1(), sphere_h2()};
        if (idx) gens.push_back(unit_momentum_constraint());
        gb[idx] = groebner(std::move(gens));
    });
    return gb[idx];
}

}  // namespace

PolySymbol reduce_mod_constraints(const PolySymbol& f, bool unit_energy) {
    if (f.n() != 3) throw std::invalid_argument("reduce_mod_constraints: requires n = 3");
    if (f.frame() != Frame::xk)
        throw std::invalid_argument("reduce_mod_constraints: requires real-canonical frame");
    return normal_form(f, constraint_basis(unit_energy));
}

bool is_real_on_real_domain(const PolySymbol& f) {
    double tol = f.exact() ? 0.0 : 1e-12 * std::max(1.0, f.max_abs_coeff());
    if (f.frame() == Frame::xk) {
        for (const auto& [m, c] : f.terms()) {
            if (c.exact()) {
                if (!c.exact_value().im.is_zero()) return false;
            } else if (std::abs(c.value().imag()) > tol) {
                return false;
            }
        }
        return true;
    }
    // oscillator frame: real on the real domain iff
    // c(swap(m)) = conj(c(m)) * i^deg(m) for every monomial m,
    // where swap exchanges the y- and eta-exponents.
    int n = f.n();
    for (const auto& [m, c] : f.terms()) {
        Monomial t(n);
        for (int j = 0; j < n; ++j) {
            t.e[j] = m.e[n + j];
            t.e[n + j] = m.e[j];
        }
        Coeff expect = c.conj();
        int p = m.deg() % 4;
        static const ExactC ipow[4] = {ExactC(1), ExactC::i(), ExactC(-1),
                                       ExactC(Rational(0), Rational(-1))};
        expect = expect * Coeff(ipow[p]);
        Coeff actual = f.coeff(t);
        Coeff diff = actual - expect;
        if (diff.exact()) {
            if (!diff.is_zero()) return false;
        } else if (std::abs(diff.value()) > tol) {
            return false;
        }
    }
    return true;
}

}  // namespace orbitavg
