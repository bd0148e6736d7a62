// Sparse exact polynomial algebra on phase space.

#pragma once

#include "orbitavg/exact.hpp"

#include <complex>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace orbitavg {

/// Coordinate frame of a symbol.  Arithmetic never mixes frames.
enum class Frame { xk, yeta };

inline const char* frame_name(Frame f) { return f == Frame::xk ? "xk" : "yeta"; }

/// Monomial x^a k^b (or y^a eta^b): exponent vector of length 2n,
/// positions first.
struct Monomial {
    std::vector<int> e;

    Monomial() = default;
    explicit Monomial(int n) : e(2 * n, 0) {}
    Monomial(std::vector<int> xe, std::vector<int> ke) {
        e = xe;
        e.insert(e.end(), ke.begin(), ke.end());
    }

    int n() const { return static_cast<int>(e.size()) / 2; }
    int deg() const {
        int d = 0;
        for (int v : e) d += v;
        return d;
    }
    int xexp(int j) const { return e[j]; }
    int kexp(int j) const { return e[n() + j]; }

    bool operator==(const Monomial& o) const { return e == o.e; }
};

/// Graded lexicographic order, positions before momenta.  Used both as a
/// term order (leading term = greatest) and for deterministic output.
struct MonoLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        int da = a.deg(), db = b.deg();
        if (da != db) return da < db;
        // lexicographic: first differing exponent decides; bigger exponent
        // on an earlier variable means a bigger monomial
        for (size_t j = 0; j < a.e.size(); ++j)
            if (a.e[j] != b.e[j]) return a.e[j] < b.e[j];
        return false;
    }
};

/// Sparse polynomial on phase space with exact-or-float coefficients.
/// Canonical form: no stored coefficient is zero.
class PolySymbol {
public:
    using Terms = std::map<Monomial, Coeff, MonoLess>;

    PolySymbol() : n_(1), frame_(Frame::xk) {}
    explicit PolySymbol(int n, Frame frame = Frame::xk) : n_(n), frame_(frame) {
        if (n < 1) throw std::invalid_argument("PolySymbol: n must be >= 1");
    }

    int n() const { return n_; }
    Frame frame() const { return frame_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    size_t size() const { return terms_.size(); }

    bool exact() const {
        for (const auto& [m, c] : terms_)
            if (!c.exact()) return false;
        return true;
    }

    int degree() const {
        int d = 0;
        for (const auto& [m, c] : terms_) d = std::max(d, m.deg());
        return d;
    }

    void add_term(const Monomial& m, const Coeff& c) {
        if (static_cast<int>(m.e.size()) != 2 * n_)
            throw std::invalid_argument("PolySymbol: monomial dimension mismatch");
        if (c.is_zero()) return;
        auto it = terms_.find(m);
        if (it == terms_.end()) {
            terms_.emplace(m, c);
        } else {
            Coeff s = it->second + c;
            if (s.is_zero())
                terms_.erase(it);
            else
                it->second = s;
        }
    }

    Coeff coeff(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Coeff(ExactC()) : it->second;
    }

    static PolySymbol constant(int n, const Coeff& c, Frame f = Frame::xk) {
        PolySymbol p(n, f);
        p.add_term(Monomial(n), c);
        return p;
    }
    /// Position variable x_{j+1} (or y_{j+1}), j zero-based.
    static PolySymbol position(int n, int j, Frame f = Frame::xk) {
        PolySymbol p(n, f);
        Monomial m(n);
        m.e[j] = 1;
        p.add_term(m, Coeff(ExactC(1)));
        return p;
    }
    /// Momentum variable k_{j+1} (or eta_{j+1}).
    static PolySymbol momentum(int n, int j, Frame f = Frame::xk) {
        PolySymbol p(n, f);
        Monomial m(n);
        m.e[n + j] = 1;
        p.add_term(m, Coeff(ExactC(1)));
        return p;
    }

    PolySymbol operator-() const {
        PolySymbol r(n_, frame_);
        for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
        return r;
    }
    PolySymbol operator+(const PolySymbol& o) const {
        check_compatible(o);
        PolySymbol r = *this;
        for (const auto& [m, c] : o.terms_) r.add_term(m, c);
        return r;
    }
    PolySymbol operator-(const PolySymbol& o) const {
        check_compatible(o);
        PolySymbol r = *this;
        for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
        return r;
    }
    PolySymbol operator*(const PolySymbol& o) const {
        check_compatible(o);
        PolySymbol r(n_, frame_);
        for (const auto& [ma, ca] : terms_)
            for (const auto& [mb, cb] : o.terms_) {
                Monomial m(n_);
                for (size_t j = 0; j < m.e.size(); ++j) m.e[j] = ma.e[j] + mb.e[j];
                r.add_term(m, ca * cb);
            }
        return r;
    }
    PolySymbol operator*(const Coeff& s) const {
        PolySymbol r(n_, frame_);
        for (const auto& [m, c] : terms_) r.add_term(m, c * s);
        return r;
    }

    bool operator==(const PolySymbol& o) const {
        return n_ == o.n_ && frame_ == o.frame_ && (*this - o).is_zero();
    }

    /// Max |coefficient| over terms, as doubles.
    double max_abs_coeff() const {
        double m = 0;
        for (const auto& [mo, c] : terms_) m = std::max(m, std::abs(c.value()));
        return m;
    }

    /// Drop float coefficients of magnitude <= tol (cleanup after
    /// numerical passes).  Exact coefficients are untouched.
    PolySymbol chop(double tol) const {
        PolySymbol r(n_, frame_);
        for (const auto& [m, c] : terms_)
            if (c.exact() || std::abs(c.value()) > tol) r.add_term(m, c);
        return r;
    }

    PolySymbol to_float() const {
        PolySymbol r(n_, frame_);
        for (const auto& [m, c] : terms_) r.add_term(m, c.to_float());
        return r;
    }

    /// Partial derivative with respect to variable slot `idx` in [0, 2n).
    PolySymbol derivative(int idx) const {
        PolySymbol r(n_, frame_);
        for (const auto& [m, c] : terms_) {
            if (m.e[idx] == 0) continue;
            Monomial d = m;
            d.e[idx] -= 1;
            r.add_term(d, c * Coeff(ExactC(m.e[idx])));
        }
        return r;
    }

    /// Evaluate at a point (x_1..x_n, k_1..k_n), deterministic
    /// (lexicographic) summation order.
    std::complex<double> evaluate(const std::vector<std::complex<double>>& pt) const {
        if (pt.size() != static_cast<size_t>(2 * n_))
            throw std::invalid_argument("evaluate: point length mismatch");
        // power tables
        int dmax = degree();
        std::vector<std::vector<std::complex<double>>> pw(2 * n_);
        for (int j = 0; j < 2 * n_; ++j) {
            pw[j].resize(dmax + 1);
            pw[j][0] = 1.0;
            for (int d = 1; d <= dmax; ++d) pw[j][d] = pw[j][d - 1] * pt[j];
        }
        std::complex<double> s = 0.0;
        for (const auto& [m, c] : terms_) {
            std::complex<double> t = c.value();
            for (int j = 0; j < 2 * n_; ++j)
                if (m.e[j]) t *= pw[j][m.e[j]];
            s += t;
        }
        return s;
    }
    std::complex<double> evaluate_real(const std::vector<double>& pt) const {
        std::vector<std::complex<double>> z(pt.begin(), pt.end());
        return evaluate(z);
    }

    /// Substitute each variable slot by the given symbol (all images share
    /// one frame/dimension).
    PolySymbol substitute(const std::vector<PolySymbol>& images) const {
        if (images.size() != static_cast<size_t>(2 * n_))
            throw std::invalid_argument("substitute: need one image per variable");
        int nn = images[0].n();
        Frame ff = images[0].frame();
        PolySymbol r(nn, ff);
        for (const auto& [m, c] : terms_) {
            PolySymbol t = PolySymbol::constant(nn, c, ff);
            for (int j = 0; j < 2 * n_; ++j)
                for (int d = 0; d < m.e[j]; ++d) t = t * images[j];
            r = r + t;
        }
        return r;
    }

    std::string str() const;

private:
    void check_compatible(const PolySymbol& o) const {
        if (n_ != o.n_)
            throw std::invalid_argument("PolySymbol: dimension mismatch");
        if (frame_ != o.frame_)
            throw std::invalid_argument("PolySymbol: frame mismatch");
    }

    int n_;
    Frame frame_;
    Terms terms_;
};

inline PolySymbol operator*(const Coeff& s, const PolySymbol& p) { return p * s; }

// ---- symbolalg operations (src/symbolalg.cpp) ----

/// {f,g} = sum_j df/dk_j dg/dx_j - df/dx_j dg/dk_j.  Same formula in both
/// frames; the oscillator substitution is symplectic for it.
PolySymbol poisson_bracket(const PolySymbol& f, const PolySymbol& g);

/// Poisson bracket of restrictions to Sigma = {x^2=1, x.xi=0} in T*R^3.
PolySymbol constrained_bracket(const PolySymbol& f, const PolySymbol& g);

/// Frame changes x = (y + i eta)/sqrt2, xi = (iy + eta)/sqrt2.
PolySymbol to_oscillator(const PolySymbol& f);
PolySymbol from_oscillator(const PolySymbol& f);

/// Canonical representative modulo the ideal (x^2-1, x.xi); when
/// unit_energy is set, also modulo xi^2-1.  Two polynomials agree on
/// Sigma iff their reduced forms agree (exactly for exact inputs).
PolySymbol reduce_mod_constraints(const PolySymbol& f, bool unit_energy = false);

/// True when f takes real values for real (x,xi).  In the oscillator
/// frame this is the conjugation symmetry c(m,k) = conj(c(k,m)) i^{|k|+|m|}.
bool is_real_on_real_domain(const PolySymbol& f);

/// h1 = x^2 - 1 and h2 = x.xi on T*R^3.
PolySymbol sphere_h1();
PolySymbol sphere_h2();

}  // namespace orbitavg
