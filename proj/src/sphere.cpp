#include "orbitavg/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace orbitavg {

namespace {

constexpr double PI = 3.14159265358979323846264338327950288;

void check_n3_xk(const PolySymbol& f, const char* who) {
    if (f.n() != 3 || f.frame() != Frame::xk)
        throw std::invalid_argument(std::string(who) +
                                    ": expected a symbol on T*R^3 in (x, xi)");
}

// ---- z-calculus: z = x + i xi on the unit momentum shell ----

/// x_j = (z_j + zbar_j)/2, xi_j = -i (z_j - zbar_j)/2; the z-frame reuses
/// the symbol container with z in the position slots and zbar in the
/// momentum slots.
PolySymbol to_z(const PolySymbol& f) {
    Coeff half(ExactC(Rational(1, 2)));
    Coeff mi_half(ExactC(Rational(0), Rational(-1, 2)));
    Coeff i_half(ExactC(Rational(0), Rational(1, 2)));
    std::vector<PolySymbol> img(6);
    for (int j = 0; j < 3; ++j) {
        PolySymbol Z = PolySymbol::position(3, j);
        PolySymbol W = PolySymbol::momentum(3, j);
        img[j] = half * (Z + W);
        img[3 + j] = mi_half * Z + i_half * W;
    }
    return f.substitute(img);
}

PolySymbol from_z(const PolySymbol& g) {
    Coeff i_unit(ExactC::i());
    Coeff mi(ExactC(Rational(0), Rational(-1)));
    std::vector<PolySymbol> img(6);
    for (int j = 0; j < 3; ++j) {
        PolySymbol x = PolySymbol::position(3, j);
        PolySymbol xi = PolySymbol::momentum(3, j);
        img[j] = x + i_unit * xi;
        img[3 + j] = x + mi * xi;
    }
    return g.substitute(img);
}

/// Phase of a z-monomial under the great-circle flow: z rotates by
/// e^{-it}, so z^b zbar^c evolves with e^{it(|c| - |b|)}.
long z_phase(const Monomial& m) {
    long b = 0, c = 0;
    for (int j = 0; j < 3; ++j) { b += m.e[j]; c += m.e[3 + j]; }
    return c - b;
}

/// xi-derivative of the homogeneous-degree-h extension of a shell
/// polynomial: a monomial with xi-degree b extends as m |xi|^{h-b}, so on
/// |xi| = 1 its derivative is the plain one plus (h-b) m xi_j.
PolySymbol homog_xi_derivative(const PolySymbol& f, int j, int h) {
    PolySymbol out = f.derivative(3 + j);
    PolySymbol xij = PolySymbol::momentum(3, j);
    for (const auto& [m, c] : f.terms()) {
        int b = m.e[3] + m.e[4] + m.e[5];
        PolySymbol t(3, Frame::xk);
        t.add_term(m, c * Coeff(ExactC(h - b)));
        out = out + t * xij;
    }
    return out;
}

/// Poisson bracket on Sigma of f (extended homogeneous of degree -1 in
/// xi, as G0 is) against a plain polynomial g, evaluated on the unit
/// momentum shell.  The radial xi-dependence of f contributes whenever
/// H_g moves |xi|.
PolySymbol sigma_bracket_deg_m1(const PolySymbol& f, const PolySymbol& g) {
    PolySymbol h1 = sphere_h1(), h2 = sphere_h2();
    std::vector<PolySymbol> fx(3), fxi(3);
    for (int j = 0; j < 3; ++j) {
        fx[j] = f.derivative(j);
        fxi[j] = homog_xi_derivative(f, j, -1);
    }
    auto bracket_f = [&](const PolySymbol& w) {
        PolySymbol r(3, Frame::xk);
        for (int j = 0; j < 3; ++j)
            r = r + fxi[j] * w.derivative(j) - fx[j] * w.derivative(3 + j);
        return r;
    };
    auto bracket_plain = [&](const PolySymbol& u, const PolySymbol& w) {
        PolySymbol r(3, Frame::xk);
        for (int j = 0; j < 3; ++j)
            r = r + u.derivative(3 + j) * w.derivative(j) -
                u.derivative(j) * w.derivative(3 + j);
        return r;
    };
    Coeff half(ExactC(Rational(1, 2)));
    return bracket_f(g) +
           half * (bracket_f(h2) * bracket_plain(h1, g) -
                   bracket_f(h1) * bracket_plain(h2, g));
}

PolySymbol sphere_p_tilde() {
    PolySymbol x2(3, Frame::xk), xi2(3, Frame::xk);
    for (int j = 0; j < 3; ++j) {
        Monomial a(3), b(3);
        a.e[j] = 2;
        b.e[3 + j] = 2;
        x2.add_term(a, Coeff(ExactC(1)));
        xi2.add_term(b, Coeff(ExactC(1)));
    }
    return x2 * xi2;
}

// ---- circle-space helpers: polynomials in y live in the position
// slots of an n = 3 symbol ----

/// Normal form modulo |y|^2 = 1: rewrite y3^2 -> 1 - y1^2 - y2^2.
PolySymbol reduce_unit_y(const PolySymbol& g) {
    PolySymbol rel(3, Frame::xk);  // 1 - y1^2 - y2^2
    rel.add_term(Monomial(3), Coeff(ExactC(1)));
    for (int j = 0; j < 2; ++j) {
        Monomial m(3);
        m.e[j] = 2;
        rel.add_term(m, Coeff(ExactC(-1)));
    }
    PolySymbol out(3, Frame::xk), cur = g;
    bool changed = true;
    while (changed) {
        changed = false;
        PolySymbol next(3, Frame::xk);
        for (const auto& [m, c] : cur.terms()) {
            if (m.e[2] >= 2) {
                Monomial r = m;
                r.e[2] -= 2;
                PolySymbol t(3, Frame::xk);
                t.add_term(r, c);
                next = next + t * rel;
                changed = true;
            } else {
                next.add_term(m, c);
            }
        }
        cur = next;
    }
    return cur;
}

bool rational_real(const Coeff& c) {
    if (!c.exact()) return false;
    const ExactC& e = c.exact_value();
    return e.im.is_zero() && e.re.is_pi_free() &&
           (e.re.c.empty() || e.re.c[0].is_rational());
}

Rational rational_of(const Coeff& c) {
    const PiPoly& p = c.exact_value().re;
    return p.c.empty() ? Rational(0) : p.c[0].a;
}

/// Exact dense solve of an overdetermined consistent system over Q;
/// false when inconsistent or rank-deficient in a way that leaves the
/// solution undetermined.
bool solve_rational(std::vector<std::vector<Rational>> A, std::vector<Rational> b,
                    std::vector<Rational>& out) {
    size_t rows = A.size(), cols = rows ? A[0].size() : 0;
    out.assign(cols, Rational(0));
    std::vector<int> pivot_col;
    size_t r = 0;
    for (size_t c = 0; c < cols && r < rows; ++c) {
        size_t p = r;
        while (p < rows && A[p][c] == 0) ++p;
        if (p == rows) continue;
        std::swap(A[p], A[r]);
        std::swap(b[p], b[r]);
        Rational inv = Rational(1) / A[r][c];
        for (size_t j = c; j < cols; ++j) A[r][j] *= inv;
        b[r] *= inv;
        for (size_t i = 0; i < rows; ++i) {
            if (i == r || A[i][c] == 0) continue;
            Rational f = A[i][c];
            for (size_t j = c; j < cols; ++j) A[i][j] -= f * A[r][j];
            b[i] -= f * b[r];
        }
        pivot_col.push_back(static_cast<int>(c));
        ++r;
    }
    for (size_t i = r; i < rows; ++i)
        if (b[i] != 0) return false;
    if (pivot_col.size() != cols) return false;
    for (size_t i = 0; i < cols; ++i) out[pivot_col[i]] = b[i];
    return true;
}

/// Monomials in y of total degree <= dmax with y3-exponent <= 1 (the
/// normal-form basis on the sphere).
std::vector<Monomial> reduced_basis(int dmax) {
    std::vector<Monomial> basis;
    for (int d = 0; d <= dmax; ++d)
        for (int a = 0; a <= d; ++a)
            for (int b = 0; a + b <= d; ++b) {
                int c = d - a - b;
                if (c > 1) continue;
                Monomial m(3);
                m.e[0] = a;
                m.e[1] = b;
                m.e[2] = c;
                basis.push_back(m);
            }
    return basis;
}

/// Chart (x(y), xi(y)) away from the poles; rotation sigma cycles the
/// roles of the axes so every y is covered by some chart.
void chart_point(const std::vector<double>& y, int sigma, std::vector<double>& pt) {
    auto at = [&](int j) { return y[(j + sigma) % 3]; };
    double s = std::sqrt(at(0) * at(0) + at(1) * at(1));
    double xr[3] = {-at(1) / s, at(0) / s, 0.0};
    double yr[3] = {at(0), at(1), at(2)};
    double kr[3] = {yr[1] * xr[2] - yr[2] * xr[1], yr[2] * xr[0] - yr[0] * xr[2],
                    yr[0] * xr[1] - yr[1] * xr[0]};
    pt.assign(6, 0.0);
    for (int j = 0; j < 3; ++j) {
        pt[(j + sigma) % 3] = xr[j];
        pt[3 + ((j + sigma) % 3)] = kr[j];
    }
}

std::vector<std::vector<double>> fibonacci_sphere(int count) {
    std::vector<std::vector<double>> pts;
    const double ga = PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / count;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        pts.push_back({r * std::cos(ga * i), r * std::sin(ga * i), z});
    }
    return pts;
}

SpherePoint random_sigma_point(std::mt19937& rng) {
    std::normal_distribution<double> nd;
    std::array<double, 3> x{}, xi{};
    double nx = 0;
    for (auto& v : x) { v = nd(rng); }
    nx = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    for (auto& v : x) v /= nx;
    double dot = 0;
    for (int j = 0; j < 3; ++j) { xi[j] = nd(rng); dot += xi[j] * x[j]; }
    for (int j = 0; j < 3; ++j) xi[j] -= dot * x[j];
    double nk = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    for (auto& v : xi) v /= nk;
    return SpherePoint{x, xi};
}

double eval_at(const PolySymbol& f, const SpherePoint& p) {
    std::vector<double> pt{p.x[0], p.x[1], p.x[2], p.xi[0], p.xi[1], p.xi[2]};
    return f.evaluate_real(pt).real();
}

void check_invariant(const PolySymbol& f) {
    std::mt19937 rng(7771);
    std::uniform_real_distribution<double> tu(0.0, 2 * PI);
    double scale = std::max(1.0, f.max_abs_coeff());
    for (int trial = 0; trial < 100; ++trial) {
        SpherePoint p = random_sigma_point(rng);
        double v0 = eval_at(f, p);
        double v1 = eval_at(f, geodesic_flow(p, tu(rng)));
        if (std::abs(v1 - v0) > 1e-10 * scale)
            throw std::invalid_argument(
                "reduce_to_circle_space: input is not flow-invariant");
    }
}

}  // namespace

SpherePoint make_sphere_point(const std::array<double, 3>& x,
                              const std::array<double, 3>& xi) {
    double nx = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    double dot = x[0] * xi[0] + x[1] * xi[1] + x[2] * xi[2];
    if (std::abs(nx - 1.0) > 1e-12 || std::abs(dot) > 1e-12)
        throw std::invalid_argument("make_sphere_point: constraints violated");
    return SpherePoint{x, xi};
}

SpherePoint geodesic_flow(const SpherePoint& pt, double t) {
    double n = std::sqrt(pt.xi[0] * pt.xi[0] + pt.xi[1] * pt.xi[1] +
                         pt.xi[2] * pt.xi[2]);
    if (n == 0) throw std::invalid_argument("geodesic_flow: xi = 0");
    double c = std::cos(n * t), s = std::sin(n * t);
    SpherePoint out;
    for (int j = 0; j < 3; ++j) {
        out.x[j] = c * pt.x[j] + s * pt.xi[j] / n;
        out.xi[j] = -n * s * pt.x[j] + c * pt.xi[j];
    }
    return out;
}

PolySymbol geodesic_pullback(const PolySymbol& f, double t) {
    check_n3_xk(f, "geodesic_pullback");
    double c = std::cos(t), s = std::sin(t);
    std::vector<PolySymbol> img(6);
    for (int j = 0; j < 3; ++j) {
        PolySymbol x = PolySymbol::position(3, j);
        PolySymbol xi = PolySymbol::momentum(3, j);
        img[j] = Coeff(c) * x + Coeff(s) * xi;
        img[3 + j] = Coeff(-s) * x + Coeff(c) * xi;
    }
    return f.substitute(img);
}

PolySymbol radon_average(const PolySymbol& q) {
    check_n3_xk(q, "radon_average");
    PolySymbol z = to_z(q);
    PolySymbol kept(3, Frame::xk);
    for (const auto& [m, c] : z.terms())
        if (z_phase(m) == 0) kept.add_term(m, c);
    return reduce_mod_constraints(from_z(kept), true);
}

PolySymbol radon_average_numeric(const PolySymbol& q, int panels) {
    check_n3_xk(q, "radon_average_numeric");
    double h = 2 * PI / panels;
    PolySymbol acc(3, Frame::xk);
    for (int j = 0; j <= panels; ++j) {
        double w = (j == 0 || j == panels) ? 1.0 : (j % 2 ? 4.0 : 2.0);
        acc = acc + geodesic_pullback(q, j * h) * Coeff(w * h / 3.0 / (2 * PI));
    }
    return acc;
}

PolySymbol circle_space_pullback(const PolySymbol& g) {
    check_n3_xk(g, "circle_space_pullback");
    std::vector<PolySymbol> img(6, PolySymbol(3, Frame::xk));
    for (int j = 0; j < 3; ++j) {
        int a = (j + 1) % 3, b = (j + 2) % 3;
        img[j] = PolySymbol::position(3, a) * PolySymbol::momentum(3, b) -
                 PolySymbol::position(3, b) * PolySymbol::momentum(3, a);
    }
    return g.substitute(img);
}

PolySymbol sphere_g0(const PolySymbol& q) {
    check_n3_xk(q, "sphere_g0");
    for (const auto& [m, c] : q.terms()) {
        int xdeg = 0, kdeg = 0;
        for (int j = 0; j < 3; ++j) { xdeg += m.e[j]; kdeg += m.e[3 + j]; }
        if (kdeg != 0)
            throw std::invalid_argument("sphere_g0: expected a polynomial in x only");
        if (xdeg % 2 == 0)
            throw std::invalid_argument("sphere_g0: monomial degrees must be odd");
    }
    PolySymbol z = to_z(q);
    PolySymbol g(3, Frame::xk);
    Coeff half(ExactC(Rational(1, 2)));
    for (const auto& [m, c] : z.terms()) {
        long nu = z_phase(m);  // odd, never zero
        g.add_term(m, c * half * Coeff(ExactC::inv_i(Rational(nu))));
    }
    return reduce_mod_constraints(from_z(g), true);
}

SphereCorrection sphere_second_correction(const PolySymbol& q) {
    check_n3_xk(q, "sphere_second_correction");
    if (!radon_average(q).is_zero())
        throw std::invalid_argument(
            "sphere_second_correction: flow average of q must vanish");
    SphereCorrection out{PolySymbol(3, Frame::xk), PolySymbol(3, Frame::xk)};
    if (q.is_zero()) return out;
    PolySymbol G0 = sphere_g0(q);
    Coeff mhalf(ExactC(Rational(-1, 2)));
    out.sigma_form = mhalf * radon_average(sigma_bracket_deg_m1(G0, q));
    out.reduced_form = reduce_to_circle_space(out.sigma_form);
    return out;
}

PolySymbol reduce_to_circle_space(const PolySymbol& f) {
    check_n3_xk(f, "reduce_to_circle_space");
    if (f.is_zero()) return PolySymbol(3, Frame::xk);
    check_invariant(f);
    int dmax = f.degree();
    auto basis = reduced_basis(dmax);

    bool exact_ok = true;
    for (const auto& [m, c] : f.terms())
        if (!rational_real(c)) { exact_ok = false; break; }

    if (exact_ok) {
        // chart numerators: x = (-y2, y1, 0)/s, xi = y x x, s^2 = y1^2+y2^2
        std::vector<PolySymbol> xnum(3, PolySymbol(3, Frame::xk));
        std::vector<PolySymbol> knum(3, PolySymbol(3, Frame::xk));
        xnum[0] = -PolySymbol::position(3, 1);
        xnum[1] = PolySymbol::position(3, 0);
        // xnum[2] = 0
        PolySymbol y1 = PolySymbol::position(3, 0), y2 = PolySymbol::position(3, 1),
                   y3 = PolySymbol::position(3, 2);
        knum[0] = -(y1 * y3);
        knum[1] = -(y2 * y3);
        knum[2] = y1 * y1 + y2 * y2;
        PolySymbol s2 = y1 * y1 + y2 * y2;

        int D = 0;
        for (const auto& [m, c] : f.terms()) {
            int k = 0;
            for (int j = 0; j < 3; ++j) k += m.e[j] + m.e[3 + j];
            D = std::max(D, k);
        }
        int E = D + (D % 2);
        PolySymbol A(3, Frame::xk), B(3, Frame::xk);
        bool clearable = true;
        for (const auto& [m, c] : f.terms()) {
            int k = 0;
            PolySymbol term = PolySymbol::constant(3, c);
            for (int j = 0; j < 3 && clearable; ++j) {
                for (int e = 0; e < m.e[j]; ++e) term = term * xnum[j];
                for (int e = 0; e < m.e[3 + j]; ++e) term = term * knum[j];
                k += m.e[j] + m.e[3 + j];
            }
            int deficit = E - k;
            for (int e = 0; e < deficit / 2; ++e) term = term * s2;
            if (deficit % 2)
                B = B + term;
            else
                A = A + term;
        }
        A = reduce_unit_y(A);
        B = reduce_unit_y(B);
        if (clearable && B.is_zero()) {
            // solve g * (y1^2+y2^2)^{E/2} = A in the quotient ring
            PolySymbol s2r = reduce_unit_y(s2);
            std::map<Monomial, size_t, MonoLess> row_of;
            auto row_index = [&](const Monomial& m) {
                auto it = row_of.find(m);
                if (it == row_of.end())
                    it = row_of.emplace(m, row_of.size()).first;
                return it->second;
            };
            std::vector<std::vector<Rational>> cols;
            for (const auto& bm : basis) {
                PolySymbol g(3, Frame::xk);
                g.add_term(bm, Coeff(ExactC(1)));
                for (int e = 0; e < E / 2; ++e) g = reduce_unit_y(g * s2);
                std::vector<Rational> col;
                for (const auto& [m, c] : g.terms()) {
                    size_t r = row_index(m);
                    if (col.size() <= r) col.resize(r + 1, Rational(0));
                    col[r] = rational_of(c);
                }
                cols.push_back(std::move(col));
            }
            std::vector<Rational> rhs;
            for (const auto& [m, c] : A.terms()) {
                size_t r = row_index(m);
                if (rhs.size() <= r) rhs.resize(r + 1, Rational(0));
                rhs[r] = rational_of(c);
            }
            size_t rows = row_of.size();
            std::vector<std::vector<Rational>> M(rows,
                std::vector<Rational>(basis.size(), Rational(0)));
            for (size_t j = 0; j < cols.size(); ++j)
                for (size_t r = 0; r < cols[j].size(); ++r) M[r][j] = cols[j][r];
            rhs.resize(rows, Rational(0));
            std::vector<Rational> sol;
            if (solve_rational(M, rhs, sol)) {
                PolySymbol g(3, Frame::xk);
                for (size_t j = 0; j < basis.size(); ++j)
                    g.add_term(basis[j], Coeff(ExactC(sol[j])));
                return g;
            }
        }
    }

    // least-squares fit over a sphere sampling, using a rotated chart
    // near the poles of the primary one
    auto ys = fibonacci_sphere(600);
    size_t nb = basis.size();
    std::vector<double> N(nb * nb, 0.0), rhsv(nb, 0.0);
    std::vector<double> bv(nb), pt;
    double scale = std::max(1.0, f.max_abs_coeff());
    std::vector<std::pair<std::vector<double>, double>> samples;
    for (const auto& y : ys) {
        int sigma = (y[0] * y[0] + y[1] * y[1] > 0.2) ? 0 : 1;
        chart_point(y, sigma, pt);
        double val = f.evaluate_real(pt).real();
        samples.push_back({y, val});
        std::vector<double> yy{y[0], y[1], y[2], 0, 0, 0};
        for (size_t j = 0; j < nb; ++j) {
            double v = 1;
            for (int l = 0; l < 3; ++l)
                for (int e = 0; e < basis[j].e[l]; ++e) v *= y[l];
            bv[j] = v;
        }
        for (size_t a = 0; a < nb; ++a) {
            rhsv[a] += bv[a] * val;
            for (size_t b2 = 0; b2 < nb; ++b2) N[a * nb + b2] += bv[a] * bv[b2];
        }
    }
    // plain Gauss with partial pivoting on the normal equations
    {
        int n = static_cast<int>(nb);
        for (int c = 0; c < n; ++c) {
            int piv = c;
            for (int r2 = c + 1; r2 < n; ++r2)
                if (std::abs(N[r2 * n + c]) > std::abs(N[piv * n + c])) piv = r2;
            if (std::abs(N[piv * n + c]) < 1e-13)
                throw std::runtime_error("reduce_to_circle_space: singular fit");
            if (piv != c) {
                for (int j = 0; j < n; ++j) std::swap(N[c * n + j], N[piv * n + j]);
                std::swap(rhsv[c], rhsv[piv]);
            }
            for (int r2 = c + 1; r2 < n; ++r2) {
                double m = N[r2 * n + c] / N[c * n + c];
                for (int j = c; j < n; ++j) N[r2 * n + j] -= m * N[c * n + j];
                rhsv[r2] -= m * rhsv[c];
            }
        }
        for (int r2 = n - 1; r2 >= 0; --r2) {
            double v = rhsv[r2];
            for (int j = r2 + 1; j < n; ++j) v -= N[r2 * n + j] * rhsv[j];
            rhsv[r2] = v / N[r2 * n + r2];
        }
    }
    PolySymbol g(3, Frame::xk);
    for (size_t j = 0; j < nb; ++j) g.add_term(basis[j], Coeff(rhsv[j]));
    g = g.chop(1e-12 * scale);
    for (const auto& [y, val] : samples) {
        std::vector<double> yy{y[0], y[1], y[2], 0, 0, 0};
        if (std::abs(g.evaluate_real(yy).real() - val) > 1e-10 * scale)
            throw std::runtime_error("reduce_to_circle_space: fit residual too large");
    }
    return g;
}

double radon_schur_check(int degree) {
    if (degree < 0 || degree > 8)
        throw std::invalid_argument("radon_schur_check: degree must be in [0, 8]");
    // homogeneous monomials of the given degree
    std::vector<Monomial> monos;
    for (int a = 0; a <= degree; ++a)
        for (int b = 0; a + b <= degree; ++b) {
            Monomial m(3);
            m.e[0] = a;
            m.e[1] = b;
            m.e[2] = degree - a - b;
            monos.push_back(m);
        }
    // harmonic = kernel of the Laplacian, computed exactly
    std::vector<PolySymbol> harmonics;
    if (degree < 2) {
        for (const auto& m : monos) {
            PolySymbol h(3, Frame::xk);
            h.add_term(m, Coeff(ExactC(1)));
            harmonics.push_back(h);
        }
    } else {
        std::map<Monomial, size_t, MonoLess> row_of;
        std::vector<std::vector<Rational>> cols;
        for (const auto& m : monos) {
            PolySymbol h(3, Frame::xk);
            h.add_term(m, Coeff(ExactC(1)));
            PolySymbol lap(3, Frame::xk);
            for (int j = 0; j < 3; ++j) lap = lap + h.derivative(j).derivative(j);
            std::vector<Rational> col;
            for (const auto& [mm, c] : lap.terms()) {
                auto it = row_of.find(mm);
                if (it == row_of.end()) it = row_of.emplace(mm, row_of.size()).first;
                if (col.size() <= it->second) col.resize(it->second + 1, Rational(0));
                col[it->second] = rational_of(c);
            }
            cols.push_back(std::move(col));
        }
        size_t rows = row_of.size(), nc = monos.size();
        std::vector<std::vector<Rational>> M(rows, std::vector<Rational>(nc, Rational(0)));
        for (size_t j = 0; j < nc; ++j)
            for (size_t r = 0; r < cols[j].size(); ++r) M[r][j] = cols[j][r];
        // kernel by row reduction
        std::vector<int> pivot_of_col(nc, -1);
        size_t r = 0;
        for (size_t c = 0; c < nc && r < rows; ++c) {
            size_t p = r;
            while (p < rows && M[p][c] == 0) ++p;
            if (p == rows) continue;
            std::swap(M[p], M[r]);
            Rational inv = Rational(1) / M[r][c];
            for (size_t j = 0; j < nc; ++j) M[r][j] *= inv;
            for (size_t i = 0; i < rows; ++i) {
                if (i == r || M[i][c] == 0) continue;
                Rational fac = M[i][c];
                for (size_t j = 0; j < nc; ++j) M[i][j] -= fac * M[r][j];
            }
            pivot_of_col[c] = static_cast<int>(r);
            ++r;
        }
        for (size_t c = 0; c < nc; ++c) {
            if (pivot_of_col[c] != -1) continue;
            PolySymbol h(3, Frame::xk);
            h.add_term(monos[c], Coeff(ExactC(1)));
            for (size_t c2 = 0; c2 < nc; ++c2)
                if (pivot_of_col[c2] != -1)
                    h.add_term(monos[c2], Coeff(ExactC(-M[pivot_of_col[c2]][c])));
            harmonics.push_back(h);
        }
    }

    bool have = false;
    double multiplier = 0;
    for (const auto& h : harmonics) {
        PolySymbol r = reduce_to_circle_space(radon_average(h));
        // compare against h itself written in y and reduced to the same
        // normal form
        PolySymbol hy = reduce_unit_y(h);
        double m = 0;
        bool set = false;
        for (const auto& [mm, c] : hy.terms()) {
            double hv = c.value().real();
            double rv = r.coeff(mm).value().real();
            if (std::abs(hv) < 1e-12) continue;
            double ratio = rv / hv;
            if (!set) { m = ratio; set = true; }
            else if (std::abs(ratio - m) > 1e-10)
                throw std::runtime_error("radon_schur_check: not a scalar multiple");
        }
        // every coefficient of r must be accounted for
        if ((r - hy * Coeff(m)).max_abs_coeff() > 1e-10)
            throw std::runtime_error("radon_schur_check: not a scalar multiple");
        if (!have) { multiplier = m; have = true; }
        else if (std::abs(m - multiplier) > 1e-10)
            throw std::runtime_error("radon_schur_check: multiplier varies over basis");
    }
    return multiplier;
}

}  // namespace orbitavg
