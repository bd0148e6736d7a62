// orbitavg: averaging calculus for periodic Hamiltonian flows
//
// Exact scalar arithmetic.  Coefficients produced by the averaging
// calculus live in Q(i)[sqrt2, pi]: rational numbers extended by sqrt(2)
// (oscillator-frame substitutions) and by pi (time-weighted averages of
// resonant monomials).  A coefficient silently degrades to a double once
// any floating input enters an expression.

#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace orbitavg {

using Rational = mpq_class;

inline double to_double(const Rational& q) { return q.get_d(); }

/// Element of Q[sqrt2]: a + b*sqrt(2).
struct Ext {
    Rational a{0}, b{0};

    Ext() = default;
    Ext(long v) : a(v) {}
    Ext(const Rational& v) : a(v) {}
    Ext(const Rational& v, const Rational& w) : a(v), b(w) {}

    bool is_zero() const { return a == 0 && b == 0; }
    bool is_rational() const { return b == 0; }

    Ext operator-() const { return Ext(-a, -b); }
    Ext operator+(const Ext& o) const { return Ext(a + o.a, b + o.b); }
    Ext operator-(const Ext& o) const { return Ext(a - o.a, b - o.b); }
    Ext operator*(const Ext& o) const {
        return Ext(a * o.a + 2 * b * o.b, a * o.b + b * o.a);
    }
    Ext inverse() const {
        Rational n = a * a - 2 * b * b;
        if (n == 0) throw std::domain_error("Ext::inverse of zero");
        return Ext(a / n, -b / n);
    }
    bool operator==(const Ext& o) const { return a == o.a && b == o.b; }

    double value() const { return a.get_d() + b.get_d() * std::sqrt(2.0); }

    /// sqrt(2)^k for k >= -? (k may be negative).
    static Ext sqrt2_pow(long k) {
        Ext r(1);
        bool inv = k < 0;
        if (inv) k = -k;
        // sqrt2^k = 2^(k/2) * sqrt2^(k%2)
        Rational p = 1;
        for (long i = 0; i < k / 2; ++i) p *= 2;
        r.a = p;
        if (k % 2) { r.b = r.a; r.a = 0; }
        if (inv) r = r.inverse();
        return r;
    }
};

/// Polynomial in pi with Q[sqrt2] coefficients.  Degree stays tiny: pi
/// enters only through the weight on resonant monomials in time-weighted
/// averages.
struct PiPoly {
    std::vector<Ext> c;  // c[k] * pi^k

    PiPoly() = default;
    PiPoly(const Ext& e) { if (!e.is_zero()) c.push_back(e); }

    void trim() {
        while (!c.empty() && c.back().is_zero()) c.pop_back();
    }
    bool is_zero() const {
        for (const auto& e : c) if (!e.is_zero()) return false;
        return true;
    }
    bool is_pi_free() const { return c.size() <= 1; }

    PiPoly operator-() const {
        PiPoly r = *this;
        for (auto& e : r.c) e = -e;
        return r;
    }
    PiPoly operator+(const PiPoly& o) const {
        PiPoly r;
        r.c.resize(std::max(c.size(), o.c.size()));
        for (size_t k = 0; k < r.c.size(); ++k) {
            if (k < c.size()) r.c[k] = r.c[k] + c[k];
            if (k < o.c.size()) r.c[k] = r.c[k] + o.c[k];
        }
        r.trim();
        return r;
    }
    PiPoly operator-(const PiPoly& o) const { return *this + (-o); }
    PiPoly operator*(const PiPoly& o) const {
        PiPoly r;
        if (c.empty() || o.c.empty()) return r;
        r.c.resize(c.size() + o.c.size() - 1);
        for (size_t j = 0; j < c.size(); ++j)
            for (size_t k = 0; k < o.c.size(); ++k)
                r.c[j + k] = r.c[j + k] + c[j] * o.c[k];
        r.trim();
        return r;
    }
    bool operator==(const PiPoly& o) const { return (*this - o).is_zero(); }

    double value() const {
        static const double PI = 3.14159265358979323846264338327950288;
        double v = 0, p = 1;
        for (const auto& e : c) { v += e.value() * p; p *= PI; }
        return v;
    }
    /// Shift pi-degree up by one (multiply by pi).
    PiPoly times_pi() const {
        PiPoly r;
        if (is_zero()) return r;
        r.c.resize(c.size() + 1);
        for (size_t k = 0; k < c.size(); ++k) r.c[k + 1] = c[k];
        return r;
    }
};

/// Exact complex scalar: re + i*im with re, im in Q[sqrt2][pi].
struct ExactC {
    PiPoly re, im;

    ExactC() = default;
    ExactC(long v) : re(Ext(v)) {}
    ExactC(const Rational& r) : re(Ext(r)) {}
    ExactC(const Rational& r, const Rational& i) : re(Ext(r)), im(Ext(i)) {}
    ExactC(const Ext& r) : re(r) {}
    ExactC(const Ext& r, const Ext& i) : re(r), im(i) {}
    ExactC(const PiPoly& r, const PiPoly& i) : re(r), im(i) {}

    bool is_zero() const { return re.is_zero() && im.is_zero(); }

    ExactC operator-() const { return ExactC(-re, -im); }
    ExactC operator+(const ExactC& o) const { return ExactC(re + o.re, im + o.im); }
    ExactC operator-(const ExactC& o) const { return ExactC(re - o.re, im - o.im); }
    ExactC operator*(const ExactC& o) const {
        return ExactC(re * o.re - im * o.im, re * o.im + im * o.re);
    }
    bool operator==(const ExactC& o) const { return re == o.re && im == o.im; }

    ExactC conj() const { return ExactC(re, -im); }
    std::complex<double> value() const { return {re.value(), im.value()}; }

    static ExactC i() { return ExactC(Rational(0), Rational(1)); }
    /// 1 / (i*nu) = -i/nu for a nonzero rational nu.
    static ExactC inv_i(const Rational& nu) {
        if (nu == 0) throw std::domain_error("inv_i(0)");
        return ExactC(Rational(0), Rational(-1) / nu);
    }
};

/// Coefficient of one monomial: exact when every input that produced it
/// was exact, otherwise a double-precision complex.
class Coeff {
public:
    Coeff() : exact_(true) {}
    Coeff(const ExactC& e) : exact_(true), ex_(e) {}
    Coeff(long v) : exact_(true), ex_(v) {}
    Coeff(const Rational& r) : exact_(true), ex_(r) {}
    Coeff(std::complex<double> z) : exact_(false), fl_(z) {}
    Coeff(double x) : exact_(false), fl_(x) {}

    bool exact() const { return exact_; }
    const ExactC& exact_value() const {
        if (!exact_) throw std::logic_error("Coeff: not exact");
        return ex_;
    }
    std::complex<double> value() const { return exact_ ? ex_.value() : fl_; }

    bool is_zero() const {
        return exact_ ? ex_.is_zero() : (fl_ == std::complex<double>(0.0, 0.0));
    }

    Coeff operator-() const {
        return exact_ ? Coeff(-ex_) : Coeff(-fl_);
    }
    Coeff operator+(const Coeff& o) const {
        if (exact_ && o.exact_) return Coeff(ex_ + o.ex_);
        return Coeff(value() + o.value());
    }
    Coeff operator-(const Coeff& o) const {
        if (exact_ && o.exact_) return Coeff(ex_ - o.ex_);
        return Coeff(value() - o.value());
    }
    Coeff operator*(const Coeff& o) const {
        if (exact_ && o.exact_) return Coeff(ex_ * o.ex_);
        return Coeff(value() * o.value());
    }
    bool operator==(const Coeff& o) const {
        if (exact_ && o.exact_) return ex_ == o.ex_;
        return value() == o.value();
    }

    Coeff conj() const {
        return exact_ ? Coeff(ex_.conj()) : Coeff(std::conj(fl_));
    }
    Coeff to_float() const { return Coeff(value()); }

private:
    bool exact_;
    ExactC ex_;
    std::complex<double> fl_{0.0, 0.0};
};

}  // namespace orbitavg
