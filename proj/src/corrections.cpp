#include "orbitavg/corrections.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace orbitavg {

namespace {

void require_mean_zero(const PeriodicFlow& flow, const PolySymbol& q,
                       const char* who) {
    PolySymbol avg = average(flow, q);
    if (avg.is_zero()) return;
    PolySymbol osc = avg.frame() == Frame::xk ? to_oscillator(avg) : avg;
    std::string msg = std::string(who) + ": trajectory average of q must vanish;"
                      " invariant monomials:";
    for (const auto& [m, c] : osc.terms()) {
        msg += " y^(";
        for (int j = 0; j < osc.n(); ++j)
            msg += (j ? "," : "") + std::to_string(m.e[j]);
        msg += ")eta^(";
        for (int j = 0; j < osc.n(); ++j)
            msg += (j ? "," : "") + std::to_string(m.e[osc.n() + j]);
        msg += ")";
    }
    throw std::invalid_argument(msg);
}

/// (1/T) int_0^T u e^{iu nu} du: pi/g at resonance, 1/(i nu) otherwise.
Coeff weight(const PeriodicFlow& flow, long nu) {
    if (nu == 0) {
        PiPoly w{Ext(Rational(1, flow.g))};
        return Coeff(ExactC(w.times_pi(), PiPoly()));
    }
    return Coeff(ExactC::inv_i(Rational(nu)));
}

PolySymbol to_frame(const PolySymbol& p, Frame fr) {
    if (p.frame() == fr) return p;
    return fr == Frame::yeta ? to_oscillator(p) : from_oscillator(p);
}

PolySymbol mono_symbol(int n, const Monomial& m, const Coeff& c) {
    PolySymbol p(n, Frame::yeta);
    p.add_term(m, c);
    return p;
}

}  // namespace

PolySymbol second_correction(const PeriodicFlow& flow, const PolySymbol& q,
                             const PolySymbol& r, const PolySymbol* g0_override) {
    require_mean_zero(flow, q, "second_correction");
    Frame out = q.frame();
    PolySymbol qo = to_frame(q, Frame::yeta);
    PolySymbol ro = to_frame(r, Frame::yeta);
    PolySymbol G0 = g0_override ? to_frame(*g0_override, Frame::yeta)
                                : g0_weighted_average(flow, qo);
    Coeff half(ExactC(Rational(1, 2)));
    PolySymbol s = average(flow, ro) -
                   half * average(flow, poisson_bracket(G0, qo));
    return to_frame(s, out);
}

CorrectionBundle third_correction(const PeriodicFlow& flow, const PolySymbol& q,
                                  const PolySymbol& r, const PolySymbol& w) {
    require_mean_zero(flow, q, "third_correction");
    Frame out = q.frame();
    PolySymbol qo = to_frame(q, Frame::yeta);
    PolySymbol ro = to_frame(r, Frame::yeta);
    PolySymbol wo = to_frame(w, Frame::yeta);
    int n = qo.n();

    PolySymbol G0 = g0_weighted_average(flow, qo);
    Coeff half(ExactC(Rational(1, 2)));
    Coeff quarter(ExactC(Rational(1, 4)));
    Coeff twelfth(ExactC(Rational(1, 12)));

    PolySymbol bG0q = poisson_bracket(G0, qo);
    PolySymbol s_avg = average(flow, ro) - half * average(flow, bG0q);

    // G1 solves {p2, G1} = (1/2)({G0,q} - <{G0,q}>) - (r - <r>)
    PolySymbol G1 = g0_weighted_average(flow, half * bG0q - ro);

    // f carries the iterated self-bracket with both time weights sitting
    // on q-monomials, which makes it the weighted primitive twice over
    PolySymbol f = -twelfth * poisson_bracket(G0, bG0q);

    // g needs a genuine pair sum: the second weight depends on the phase
    // of the product monomial
    PolySymbol g(n, Frame::yeta);
    for (const auto& [mm, cm] : qo.terms()) {
        long num = flow.phase(mm);
        PolySymbol Mm = mono_symbol(n, mm, cm * weight(flow, num));
        for (const auto& [mk, ck] : qo.terms()) {
            long nuk = flow.phase(mk);
            PolySymbol Mk = mono_symbol(n, mk, ck * weight(flow, num + nuk));
            g = g - quarter * poisson_bracket(poisson_bracket(Mm, Mk), qo);
        }
    }

    PolySymbol k = half * (poisson_bracket(G0, ro) +
                           poisson_bracket(g0_weighted_average(flow, ro), qo));

    PolySymbol t_avg = average(flow, f + g + wo + k);

    // everything in the third-order coefficient that a next generator
    // would have to absorb
    PolySymbol residual = wo - half * poisson_bracket(G1, qo) -
                          twelfth * poisson_bracket(G0, bG0q) -
                          quarter * poisson_bracket(G0, average(flow, bG0q)) +
                          half * poisson_bracket(G0, ro) +
                          half * poisson_bracket(G0, average(flow, ro)) - t_avg;

    CorrectionBundle b{to_frame(s_avg, out), to_frame(t_avg, out),
                       to_frame(G0, out), to_frame(G1, out),
                       to_frame(residual, out)};
    return b;
}

PolySymbol barrier_s(const PeriodicFlow& flow, const PolySymbol& p3,
                     const PolySymbol& p4) {
    require_mean_zero(flow, p3, "barrier_s");
    Frame out = p3.frame();
    PolySymbol q = to_frame(p3, Frame::yeta);
    PolySymbol r = to_frame(p4, Frame::yeta);
    Coeff half(ExactC(Rational(1, 2)));
    PolySymbol s(q.n(), Frame::yeta);
    for (const auto& [m, c] : q.terms()) {
        PolySymbol M = mono_symbol(q.n(), m, c * weight(flow, flow.phase(m)));
        s = s - half * average(flow, poisson_bracket(M, q));
    }
    s = s - average(flow, r);
    return to_frame(s, out);
}

// ---- critical values on compact shells ----

namespace {

struct Shell {
    int dim;                     // ambient dimension
    std::vector<double> scale;   // u_j = scale_j * v_j maps |v| = 1 to the shell
};

double eval_s(const PolySymbol& s, const Shell& sh, const std::vector<double>& v) {
    std::vector<double> u(static_cast<size_t>(2 * s.n()), 0.0);
    for (int j = 0; j < sh.dim; ++j) u[j] = sh.scale[j] * v[j];
    return s.evaluate_real(u).real();
}

/// Gradient and Hessian of F(v) = s(scale .* v) in the first sh.dim slots.
void grad_hess(const PolySymbol& s, const std::vector<PolySymbol>& ds,
               const std::vector<std::vector<PolySymbol>>& dds, const Shell& sh,
               const std::vector<double>& v, std::vector<double>& gr,
               std::vector<double>& H) {
    std::vector<double> u(static_cast<size_t>(2 * s.n()), 0.0);
    for (int j = 0; j < sh.dim; ++j) u[j] = sh.scale[j] * v[j];
    for (int j = 0; j < sh.dim; ++j)
        gr[j] = sh.scale[j] * ds[j].evaluate_real(u).real();
    for (int j = 0; j < sh.dim; ++j)
        for (int l = 0; l < sh.dim; ++l)
            H[j * sh.dim + l] =
                sh.scale[j] * sh.scale[l] * dds[j][l].evaluate_real(u).real();
}

bool solve_dense(std::vector<double>& A, std::vector<double>& b, int n) {
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int rr = c + 1; rr < n; ++rr)
            if (std::abs(A[rr * n + c]) > std::abs(A[piv * n + c])) piv = rr;
        if (std::abs(A[piv * n + c]) < 1e-14) return false;
        if (piv != c) {
            for (int j = 0; j < n; ++j) std::swap(A[c * n + j], A[piv * n + j]);
            std::swap(b[c], b[piv]);
        }
        for (int rr = c + 1; rr < n; ++rr) {
            double m = A[rr * n + c] / A[c * n + c];
            for (int j = c; j < n; ++j) A[rr * n + j] -= m * A[c * n + j];
            b[rr] -= m * b[c];
        }
    }
    for (int rr = n - 1; rr >= 0; --rr) {
        double v = b[rr];
        for (int j = rr + 1; j < n; ++j) v -= A[rr * n + j] * b[j];
        b[rr] = v / A[rr * n + rr];
    }
    return true;
}

}  // namespace

std::vector<CriticalValue> critical_values_on_sphere3(const PolySymbol& s_avg,
                                                      const PeriodicFlow* flow,
                                                      int seeds) {
    Shell sh;
    if (flow) {
        int n = s_avg.n();
        if (n != flow->n())
            throw std::invalid_argument("critical_values_on_sphere3: dimension mismatch");
        sh.dim = 2 * n;
        sh.scale.resize(sh.dim);
        for (int j = 0; j < n; ++j)
            sh.scale[j] = sh.scale[n + j] =
                std::sqrt(2.0 / static_cast<double>(flow->lambda[j]));
    } else {
        if (s_avg.n() != 3)
            throw std::invalid_argument("critical_values_on_sphere3: expected n = 3");
        sh.dim = 3;
        sh.scale.assign(3, 1.0);
    }

    int d = sh.dim;
    std::vector<PolySymbol> ds(d, PolySymbol(s_avg.n(), s_avg.frame()));
    std::vector<std::vector<PolySymbol>> dds(
        d, std::vector<PolySymbol>(d, PolySymbol(s_avg.n(), s_avg.frame())));
    for (int j = 0; j < d; ++j) ds[j] = s_avg.derivative(j);
    for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) dds[j][l] = ds[j].derivative(l);

    // seed points: spherical Fibonacci lattice on S^2, seeded Gaussian
    // directions in higher dimension
    std::vector<std::vector<double>> pts;
    pts.reserve(seeds);
    if (d == 3) {
        const double ga = 3.14159265358979323846 * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < seeds; ++i) {
            double z = 1.0 - 2.0 * (i + 0.5) / seeds;
            double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
            pts.push_back({rr * std::cos(ga * i), rr * std::sin(ga * i), z});
        }
    } else {
        std::mt19937 rng(12345);
        std::normal_distribution<double> nd;
        for (int i = 0; i < seeds; ++i) {
            std::vector<double> v(d);
            double nrm = 0;
            for (auto& x : v) { x = nd(rng); nrm += x * x; }
            nrm = std::sqrt(nrm);
            for (auto& x : v) x /= nrm;
            pts.push_back(std::move(v));
        }
    }

    // residual of the stationarity condition: r = (I - vv^T) grad F
    auto residual = [&](const std::vector<double>& v, std::vector<double>& gr,
                        std::vector<double>& H, std::vector<double>& r,
                        double& c) {
        grad_hess(s_avg, ds, dds, sh, v, gr, H);
        c = 0;
        for (int j = 0; j < d; ++j) c += v[j] * gr[j];
        double h = 0;
        for (int j = 0; j < d; ++j) {
            r[j] = gr[j] - c * v[j];
            h += r[j] * r[j];
        }
        return h;
    };

    std::vector<double> values;
    std::vector<double> gr(d), H(d * d), r(d);
    // Levenberg-Marquardt on |r|^2 along the sphere; tolerates critical
    // manifolds of positive dimension (the LM damping absorbs the rank
    // drop in the tangent direction)
    for (auto v : pts) {
        double c = 0;
        double h = residual(v, gr, H, r, c);
        double mu = 1e-8;
        bool ok = false;
        for (int it = 0; it < 120; ++it) {
            if (std::sqrt(h) < 1e-10 * std::max(1.0, std::sqrt(std::abs(c)))) {
                ok = true;
                break;
            }
            // J = P H P - c P restricted to the tangent space
            std::vector<double> J(d * d, 0.0);
            for (int a = 0; a < d; ++a)
                for (int b2 = 0; b2 < d; ++b2) {
                    double sum = 0;
                    for (int l = 0; l < d; ++l) {
                        double Pa = (a == l ? 1.0 : 0.0) - v[a] * v[l];
                        for (int m2 = 0; m2 < d; ++m2) {
                            double Pb = (m2 == b2 ? 1.0 : 0.0) - v[m2] * v[b2];
                            sum += Pa * H[l * d + m2] * Pb;
                        }
                    }
                    double Pab = (a == b2 ? 1.0 : 0.0) - v[a] * v[b2];
                    J[a * d + b2] = sum - c * Pab;
                }
            bool advanced = false;
            for (int tries = 0; tries < 12; ++tries) {
                std::vector<double> A(d * d), b(d, 0.0);
                for (int a = 0; a < d; ++a)
                    for (int b2 = 0; b2 < d; ++b2) {
                        double s = 0;
                        for (int l = 0; l < d; ++l)
                            s += J[l * d + a] * J[l * d + b2];
                        A[a * d + b2] = s + (a == b2 ? mu : 0.0);
                    }
                for (int a = 0; a < d; ++a) {
                    double s = 0;
                    for (int l = 0; l < d; ++l) s += J[l * d + a] * r[l];
                    b[a] = -s;
                }
                if (!solve_dense(A, b, d)) { mu *= 10; continue; }
                std::vector<double> vn(d);
                double nrm = 0;
                for (int j = 0; j < d; ++j) { vn[j] = v[j] + b[j]; nrm += vn[j] * vn[j]; }
                nrm = std::sqrt(nrm);
                for (auto& x : vn) x /= nrm;
                std::vector<double> gr2(d), H2(d * d), r2(d);
                double c2 = 0;
                double h2 = residual(vn, gr2, H2, r2, c2);
                if (h2 < h) {
                    v = vn; gr = gr2; H = H2; r = r2; c = c2; h = h2;
                    mu = std::max(mu / 3.0, 1e-12);
                    advanced = true;
                    break;
                }
                mu *= 10;
            }
            if (!advanced) break;
        }
        if (ok) values.push_back(eval_s(s_avg, sh, v));
    }

    std::sort(values.begin(), values.end());
    std::vector<CriticalValue> out;
    for (double val : values) {
        if (!out.empty() && std::abs(val - out.back().value) < 1e-8) {
            ++out.back().hits;
        } else {
            out.push_back({val, 1});
        }
    }
    return out;
}

}  // namespace orbitavg
