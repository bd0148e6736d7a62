#include "orbitavg/verify.hpp"

#include "orbitavg/sphere.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

namespace orbitavg {

namespace {

using cd = std::complex<double>;

constexpr double PI = 3.14159265358979323846264338327950288;

// ---- Gauss-Legendre nodes on [-1, 1] ----

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = 0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) * z * p1 - j * p2) / (j + 1);
            }
            pp = n * (z * p0 - p1) / (z * z - 1);
            double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1 - z * z) * pp * pp);
    }
}

/// Theta-normalized associated Legendre values p-hat_l^m(x) for all
/// 0 <= m <= l <= L, with int_{-1}^{1} p-hat^2 dx = 1.  table[l][m].
std::vector<std::vector<double>> legendre_table(int L, double x) {
    std::vector<std::vector<double>> p(L + 1);
    for (int l = 0; l <= L; ++l) p[l].assign(l + 1, 0.0);
    double s = std::sqrt(std::max(0.0, 1.0 - x * x));
    p[0][0] = std::sqrt(0.5);
    for (int m = 1; m <= L; ++m)
        p[m][m] = std::sqrt((2.0 * m + 1) / (2.0 * m)) * s * p[m - 1][m - 1];
    for (int m = 0; m < L; ++m)
        p[m + 1][m] = std::sqrt(2.0 * m + 3) * x * p[m][m];
    for (int m = 0; m <= L; ++m)
        for (int l = m + 2; l <= L; ++l) {
            double a = std::sqrt((2.0 * l + 1) * (2.0 * l - 1) /
                                 (double(l - m) * (l + m)));
            double b = std::sqrt((2.0 * l + 1) * (l - 1.0 - m) * (l - 1.0 + m) /
                                 ((2.0 * l - 3) * (l - m) * (l + m)));
            p[l][m] = a * x * p[l - 1][m] - b * p[l - 2][m];
        }
    return p;
}

int basis_index(const std::vector<BasisFunction>& basis, int l, int m, bool sine) {
    // basis is ordered by l, then m, cos before sin; compute directly
    int l0 = basis.front().l;
    int off = 0;
    for (int ll = l0; ll < l; ++ll) off += 2 * ll + 1;
    if (l < l0 || l > basis.back().l) return -1;
    int idx = off + (m == 0 ? 0 : 2 * m - 1 + (sine ? 1 : 0));
    return idx;
}

// azimuthal factor of <m', type' | cos phi or sin phi | m, type>
double phi_factor(int mp, bool sp, int m, bool s, bool use_sin) {
    if (!use_sin) {  // cos phi: type preserved
        if (sp != s) return 0.0;
        if (std::abs(mp - m) != 1) return 0.0;
        if (s && (m == 0 || mp == 0)) return 0.0;
        if (m == 0 || mp == 0) return 1.0 / std::sqrt(2.0);
        return 0.5;
    }
    // sin phi: flips cos <-> sin
    if (sp == s) return 0.0;
    if (std::abs(mp - m) != 1) return 0.0;
    if (m == 0 || mp == 0) return 1.0 / std::sqrt(2.0);
    // <m+1, s | sin | m, c> = +1/2, <m-1, s | sin | m, c> = -1/2 and the
    // symmetric transposes
    int mc = s ? mp : m;    // the cos-side order
    int ms = s ? m : mp;    // the sin-side order
    return ms == mc + 1 ? 0.5 : -0.5;
}

struct QuadContext {
    std::vector<double> nodes, weights;
    std::vector<std::vector<std::vector<double>>> leg;  // [node][l][m]
    int L;
};

QuadContext make_quad(int L) {
    QuadContext q;
    q.L = L;
    gauss_legendre(L + 6, q.nodes, q.weights);
    q.leg.reserve(q.nodes.size());
    for (double x : q.nodes) q.leg.push_back(legendre_table(L, x));
    return q;
}

double theta_integral(const QuadContext& q, int lp, int mp, int l, int m,
                      bool with_x) {
    double acc = 0;
    for (size_t k = 0; k < q.nodes.size(); ++k) {
        double x = q.nodes[k];
        double w = with_x ? x : std::sqrt(std::max(0.0, 1 - x * x));
        acc += q.weights[k] * q.leg[k][lp][mp] * q.leg[k][l][m] * w;
    }
    return acc;
}

// ---- dense complex eigenvalue machinery ----

void balance(ComplexMatrix& A) {
    int n = A.n;
    bool done = false;
    while (!done) {
        done = true;
        for (int i = 0; i < n; ++i) {
            double r = 0, c = 0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(A.at(j, i));
                r += std::abs(A.at(i, j));
            }
            if (c == 0 || r == 0) continue;
            double g = r / 2.0, f = 1.0, sc = c + r;
            while (c < g) { f *= 2.0; c *= 4.0; }
            g = r * 2.0;
            while (c > g) { f /= 2.0; c /= 4.0; }
            if ((c + r) / f < 0.95 * sc) {
                done = false;
                for (int j = 0; j < n; ++j) A.at(i, j) /= f;
                for (int j = 0; j < n; ++j) A.at(j, i) *= f;
            }
        }
    }
}

void hessenberg(ComplexMatrix& A) {
    int n = A.n;
    for (int k = 0; k + 2 < n; ++k) {
        double nx = 0;
        for (int i = k + 1; i < n; ++i) nx += std::norm(A.at(i, k));
        nx = std::sqrt(nx);
        if (nx < 1e-300) continue;
        cd x0 = A.at(k + 1, k);
        cd phase = std::abs(x0) > 0 ? x0 / std::abs(x0) : cd(1.0);
        cd alpha = -phase * nx;
        std::vector<cd> v(n - k - 1);
        for (int i = k + 1; i < n; ++i) v[i - k - 1] = A.at(i, k);
        v[0] -= alpha;
        double vn = 0;
        for (const auto& e : v) vn += std::norm(e);
        if (vn < 1e-300) continue;
        double beta = 2.0 / vn;
        // A := P A, rows k+1..n-1
        for (int j = k; j < n; ++j) {
            cd s = 0;
            for (int i = k + 1; i < n; ++i) s += std::conj(v[i - k - 1]) * A.at(i, j);
            s *= beta;
            for (int i = k + 1; i < n; ++i) A.at(i, j) -= s * v[i - k - 1];
        }
        // A := A P, columns k+1..n-1
        for (int i = 0; i < n; ++i) {
            cd s = 0;
            for (int j = k + 1; j < n; ++j) s += A.at(i, j) * v[j - k - 1];
            s *= beta;
            for (int j = k + 1; j < n; ++j) A.at(i, j) -= s * std::conj(v[j - k - 1]);
        }
        A.at(k + 1, k) = alpha;
        for (int i = k + 2; i < n; ++i) A.at(i, k) = 0.0;
    }
}

std::vector<cd> hessenberg_qr(ComplexMatrix& H) {
    int n = H.n;
    std::vector<cd> eigs;
    eigs.reserve(n);
    int hi = n - 1;
    long total_iters = 0, cap = 30L * n + 100;
    int its = 0;
    while (hi >= 0) {
        // deflation scan
        int lo = hi;
        while (lo > 0) {
            double sub = std::abs(H.at(lo, lo - 1));
            double sc = std::abs(H.at(lo - 1, lo - 1)) + std::abs(H.at(lo, lo));
            if (sub <= 1e-15 * sc + 1e-300) {
                H.at(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            eigs.push_back(H.at(hi, hi));
            --hi;
            its = 0;
            continue;
        }
        if (++total_iters > cap)
            throw std::runtime_error("eigensolve: QR stuck on block [" +
                                     std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
        // Wilkinson shift from the trailing 2x2
        cd a = H.at(hi - 1, hi - 1), b = H.at(hi - 1, hi);
        cd c = H.at(hi, hi - 1), d = H.at(hi, hi);
        cd tr = a + d, det = a * d - b * c;
        cd disc = std::sqrt(tr * tr - 4.0 * det);
        cd m1 = (tr + disc) / 2.0, m2 = (tr - disc) / 2.0;
        cd mu = std::abs(m1 - d) < std::abs(m2 - d) ? m1 : m2;
        if (++its % 20 == 0)  // exceptional shift
            mu = d + std::abs(H.at(hi, hi - 1)) * cd(1.0, 0.5);
        for (int i = lo; i <= hi; ++i) H.at(i, i) -= mu;
        struct Rot { cd f, g; double d; };
        std::vector<Rot> rots(hi - lo);
        for (int i = lo; i < hi; ++i) {
            cd f = H.at(i, i), g = H.at(i + 1, i);
            double dd = std::sqrt(std::norm(f) + std::norm(g));
            if (dd < 1e-300) { f = 1.0; g = 0.0; dd = 1.0; }
            rots[i - lo] = {f, g, dd};
            for (int j = i; j <= hi; ++j) {
                cd u = H.at(i, j), v = H.at(i + 1, j);
                H.at(i, j) = (std::conj(f) * u + std::conj(g) * v) / dd;
                H.at(i + 1, j) = (-g * u + f * v) / dd;
            }
        }
        for (int i = lo; i < hi; ++i) {
            const Rot& r = rots[i - lo];
            int rmax = std::min(i + 1, hi);
            for (int row = lo; row <= rmax; ++row) {
                cd u = H.at(row, i), v = H.at(row, i + 1);
                H.at(row, i) = (u * r.f + v * r.g) / r.d;
                H.at(row, i + 1) = (-u * std::conj(r.g) + v * std::conj(r.f)) / r.d;
            }
        }
        for (int i = lo; i <= hi; ++i) H.at(i, i) += mu;
    }
    return eigs;
}

std::vector<cd> dense_eigen(ComplexMatrix M) {
    if (M.n == 0) return {};
    if (M.n == 1) return {M.at(0, 0)};
    balance(M);
    hessenberg(M);
    return hessenberg_qr(M);
}

std::vector<std::vector<int>> connected_components(const ComplexMatrix& A) {
    int n = A.n;
    std::vector<int> comp(n, -1);
    std::vector<std::vector<int>> out;
    for (int seed = 0; seed < n; ++seed) {
        if (comp[seed] != -1) continue;
        std::vector<int> stack{seed}, members;
        comp[seed] = static_cast<int>(out.size());
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            members.push_back(i);
            for (int j = 0; j < n; ++j) {
                if (comp[j] != -1) continue;
                if (std::abs(A.at(i, j)) > 0 || std::abs(A.at(j, i)) > 0) {
                    comp[j] = comp[i];
                    stack.push_back(j);
                }
            }
        }
        std::sort(members.begin(), members.end());
        out.push_back(std::move(members));
    }
    return out;
}

// LU with partial pivoting; solves in place
struct LU {
    int n;
    std::vector<cd> a;
    std::vector<int> piv;

    explicit LU(const ComplexMatrix& A) : n(A.n), a(A.a), piv(A.n) {
        for (int i = 0; i < n; ++i) piv[i] = i;
        for (int k = 0; k < n; ++k) {
            int p = k;
            for (int i = k + 1; i < n; ++i)
                if (std::abs(a[size_t(i) * n + k]) > std::abs(a[size_t(p) * n + k]))
                    p = i;
            if (p != k) {
                for (int j = 0; j < n; ++j)
                    std::swap(a[size_t(k) * n + j], a[size_t(p) * n + j]);
                std::swap(piv[k], piv[p]);
            }
            cd pivval = a[size_t(k) * n + k];
            if (std::abs(pivval) < 1e-300) pivval = a[size_t(k) * n + k] = 1e-300;
            for (int i = k + 1; i < n; ++i) {
                cd m = a[size_t(i) * n + k] / pivval;
                a[size_t(i) * n + k] = m;
                for (int j = k + 1; j < n; ++j)
                    a[size_t(i) * n + j] -= m * a[size_t(k) * n + j];
            }
        }
    }
    void solve(std::vector<cd>& b) const {
        std::vector<cd> x(n);
        for (int i = 0; i < n; ++i) x[i] = b[piv[i]];
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) x[i] -= a[size_t(i) * n + j] * x[j];
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= a[size_t(i) * n + j] * x[j];
            x[i] /= a[size_t(i) * n + i];
        }
        b = x;
    }
};

void jacobi_symmetric(std::vector<double>& a, int n, std::vector<double>& eig) {
    auto at = [&](int i, int j) -> double& { return a[size_t(i) * n + j]; };
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (std::sqrt(off) < 1e-13 * (1 + std::abs(at(0, 0)))) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(at(p, q)) < 1e-300) continue;
                double theta = (at(q, q) - at(p, p)) / (2 * at(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1));
                double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
    }
    eig.resize(n);
    for (int i = 0; i < n; ++i) eig[i] = at(i, i);
    std::sort(eig.begin(), eig.end());
}

void matmul(const std::vector<double>& A, const std::vector<double>& B,
            std::vector<double>& C, int n) {
    C.assign(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            double aik = A[size_t(i) * n + k];
            if (aik == 0.0) continue;
            const double* brow = &B[size_t(k) * n];
            double* crow = &C[size_t(i) * n];
            for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
}

}  // namespace

int worker_count() {
    if (const char* env = std::getenv("ORBITAVG_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(std::min(hw, 8u)) : 4;
}

std::vector<BasisFunction> harmonic_basis(int l_lo, int l_hi) {
    std::vector<BasisFunction> basis;
    for (int l = l_lo; l <= l_hi; ++l) {
        basis.push_back({l, 0, false});
        for (int m = 1; m <= l; ++m) {
            basis.push_back({l, m, false});
            basis.push_back({l, m, true});
        }
    }
    return basis;
}

std::vector<double> coordinate_matrix(const std::vector<BasisFunction>& basis,
                                      int axis) {
    if (axis < 0 || axis > 2)
        throw std::invalid_argument("coordinate_matrix: axis must be 0, 1, or 2");
    int n = static_cast<int>(basis.size());
    int L = basis.back().l;
    QuadContext quad = make_quad(L);
    std::vector<double> M(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        const BasisFunction& b = basis[i];
        for (int lp : {b.l - 1, b.l + 1}) {
            if (lp < basis.front().l || lp > L) continue;
            if (axis == 2) {
                int j = basis_index(basis, lp, b.m, b.sine);
                if (j < 0 || b.m > lp) continue;
                M[size_t(j) * n + i] =
                    theta_integral(quad, lp, b.m, b.l, b.m, true);
            } else {
                for (int mp : {b.m - 1, b.m + 1}) {
                    if (mp < 0 || mp > lp) continue;
                    for (bool sp : {false, true}) {
                        if (mp == 0 && sp) continue;
                        double pf = phi_factor(mp, sp, b.m, b.sine, axis == 1);
                        if (pf == 0.0) continue;
                        int j = basis_index(basis, lp, mp, sp);
                        if (j < 0) continue;
                        M[size_t(j) * n + i] =
                            pf * theta_integral(quad, lp, mp, b.l, b.m, false);
                    }
                }
            }
        }
    }
    return M;
}

std::vector<double> multiplication_matrix(const std::vector<BasisFunction>& basis,
                                          const PolySymbol& q) {
    int n = static_cast<int>(basis.size());
    std::vector<std::vector<double>> X(3);
    auto coord = [&](int j) -> const std::vector<double>& {
        if (X[j].empty()) X[j] = coordinate_matrix(basis, j);
        return X[j];
    };
    std::vector<double> Q(size_t(n) * n, 0.0);
    for (const auto& [m, c] : q.terms()) {
        if (m.n() != 3)
            throw std::invalid_argument("multiplication_matrix: q must live in 3d");
        for (int j = 0; j < 3; ++j)
            if (m.kexp(j) != 0)
                throw std::invalid_argument(
                    "multiplication_matrix: q must depend on x only");
        std::complex<double> cv = c.value();
        if (std::abs(cv.imag()) > 1e-14 * (1 + std::abs(cv.real())))
            throw std::invalid_argument("multiplication_matrix: q must be real");
        int deg = m.deg();
        if (deg == 0) {
            for (int i = 0; i < n; ++i) Q[size_t(i) * n + i] += cv.real();
            continue;
        }
        std::vector<double> prod;
        bool first = true;
        std::vector<double> tmp;
        for (int j = 0; j < 3; ++j)
            for (int e = 0; e < m.e[j]; ++e) {
                if (first) {
                    prod = coord(j);
                    first = false;
                } else {
                    matmul(prod, coord(j), tmp, n);
                    prod.swap(tmp);
                }
            }
        for (size_t k = 0; k < Q.size(); ++k) Q[k] += cv.real() * prod[k];
    }
    // the coordinate matrices only commute up to window truncation, so
    // products pick up an antisymmetric edge artifact; the exact
    // multiplication operator is symmetric, so symmetrize (exact in the
    // interior, absorbed by the pad at the edges)
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double s = 0.5 * (Q[size_t(i) * n + j] + Q[size_t(j) * n + i]);
            Q[size_t(i) * n + j] = Q[size_t(j) * n + i] = s;
        }
    return Q;
}

SphereOperator assemble(const SphereOperatorSpec& spec) {
    int degq = spec.q.degree();
    if (degq > 3)
        throw std::invalid_argument("assemble: q must have degree <= 3");
    if (spec.pad < 2 * degq)
        throw std::invalid_argument("assemble: pad must be >= 2 deg(q)");
    if (spec.l_min < 0 || spec.l_min > spec.l_max)
        throw std::invalid_argument("assemble: bad degree window");
    if (spec.h <= 0)
        throw std::invalid_argument("assemble: h must be positive");
    SphereOperator op;
    op.spec = spec;
    int l_lo = std::max(0, spec.l_min - spec.pad);
    int l_hi = spec.l_max + spec.pad;
    op.basis = harmonic_basis(l_lo, l_hi);
    int n = static_cast<int>(op.basis.size());
    if (n > 4096) throw std::invalid_argument("assemble: dimension guard (4096)");
    op.diag.resize(n);
    for (int i = 0; i < n; ++i) {
        double l = op.basis[i].l;
        op.diag[i] = spec.h * spec.h * l * (l + 1);
    }
    op.A = ComplexMatrix::zero(n);
    if (!spec.q.is_zero() && spec.epsilon != 0.0) {
        std::vector<double> Q = multiplication_matrix(op.basis, spec.q);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                op.A.at(i, j) = cd(0.0, spec.epsilon * Q[size_t(i) * n + j]);
    }
    for (int i = 0; i < n; ++i) op.A.at(i, i) += op.diag[i];
    return op;
}

std::vector<cd> eigensolve(const ComplexMatrix& A) {
    if (A.n > 4096) throw std::invalid_argument("eigensolve: dimension guard (4096)");
    auto comps = connected_components(A);
    std::vector<std::vector<cd>> results(comps.size());
    std::atomic<size_t> next{0};
    auto work = [&]() {
        for (;;) {
            size_t c = next.fetch_add(1);
            if (c >= comps.size()) return;
            const auto& idx = comps[c];
            ComplexMatrix sub = ComplexMatrix::zero(static_cast<int>(idx.size()));
            for (size_t i = 0; i < idx.size(); ++i)
                for (size_t j = 0; j < idx.size(); ++j)
                    sub.at(static_cast<int>(i), static_cast<int>(j)) =
                        A.at(idx[i], idx[j]);
            results[c] = dense_eigen(std::move(sub));
        }
    };
    int nw = std::min<int>(worker_count(), static_cast<int>(comps.size()));
    if (nw <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nw; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    std::vector<cd> eigs;
    for (auto& r : results) eigs.insert(eigs.end(), r.begin(), r.end());
    std::sort(eigs.begin(), eigs.end(), [](cd a, cd b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return eigs;
}

double residual_probe(const ComplexMatrix& A, cd z) {
    ComplexMatrix S = A;
    for (int i = 0; i < S.n; ++i) S.at(i, i) -= z;
    LU lu(S);
    std::mt19937 rng(2026);
    std::normal_distribution<double> nd;
    std::vector<cd> x(S.n);
    for (auto& v : x) v = cd(nd(rng), nd(rng));
    for (int it = 0; it < 4; ++it) {
        double nx = 0;
        for (const auto& v : x) nx += std::norm(v);
        nx = std::sqrt(nx);
        for (auto& v : x) v /= nx;
        lu.solve(x);
    }
    double nx = 0;
    for (const auto& v : x) nx += std::norm(v);
    nx = std::sqrt(nx);
    for (auto& v : x) v /= nx;
    // residual of the unit vector: an upper bound on sigma_min
    std::vector<cd> r(S.n, 0.0);
    for (int i = 0; i < S.n; ++i)
        for (int j = 0; j < S.n; ++j) r[i] += S.at(i, j) * x[j];
    double nr = 0;
    for (const auto& v : r) nr += std::norm(v);
    return std::sqrt(nr);
}

ClusterReport extract_clusters(const std::vector<cd>& eigs,
                               const ClusterRectangles& rects, double h,
                               double epsilon,
                               const std::vector<LatticePoint>* lattice) {
    if (!rects.disjoint)
        throw std::invalid_argument(
            "extract_clusters: overlapping rectangles (regime violation)");
    ClusterReport rep;
    rep.h = h;
    rep.epsilon = epsilon;
    for (const auto& r : rects.rects) {
        Cluster c;
        c.k1 = r.k1;
        c.center = r.center;
        rep.clusters.push_back(c);
    }
    double e2 = epsilon * epsilon;
    for (cd z : eigs) {
        size_t best = 0;
        double bd = 1e300;
        for (size_t j = 0; j < rects.rects.size(); ++j) {
            double d = std::abs(z.real() - rects.rects[j].center);
            if (d < bd) { bd = d; best = j; }
        }
        const auto& r = rects.rects[best];
        if (bd <= r.half_width_re && std::abs(z.imag()) <= r.half_width_im) {
            Cluster& c = rep.clusters[best];
            c.eigenvalues.push_back(z);
            c.width_re = std::max(c.width_re, bd);
            c.width_im = std::max(c.width_im, std::abs(z.imag()));
            c.subcluster_values.push_back((z.real() - r.center) / e2);
            rep.empirical_c_re =
                std::max(rep.empirical_c_re, bd / (e2 + h * h));
            rep.empirical_c_im =
                std::max(rep.empirical_c_im, std::abs(z.imag()) / (epsilon * h));
        } else {
            ++rep.unassigned;
        }
        if (lattice && !lattice->empty()) {
            double dmin = 1e300;
            for (const auto& p : *lattice) dmin = std::min(dmin, std::abs(z - p.z));
            rep.lattice_distance = std::max(rep.lattice_distance, dmin);
        }
    }
    return rep;
}

double subcluster_distribution_test(const Cluster& cluster,
                                    const PolySymbol& s_reduced) {
    if (cluster.subcluster_values.size() < 20)
        throw std::invalid_argument(
            "subcluster_distribution_test: need at least 20 values");
    // pushforward law of the uniform sphere measure under s_reduced,
    // via an equidistributed sample
    const int N = 40000;
    PolySymbol s = s_reduced.to_float();
    std::vector<double> law;
    law.reserve(N);
    const double ga = PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < N; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / N;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        std::vector<double> y{r * std::cos(ga * i), r * std::sin(ga * i), z,
                              0,  0,  0};
        law.push_back(s.evaluate_real(y).real());
    }
    std::sort(law.begin(), law.end());
    auto cdf = [&](double v) {
        return static_cast<double>(std::upper_bound(law.begin(), law.end(), v) -
                                   law.begin()) /
               N;
    };
    std::vector<double> emp = cluster.subcluster_values;
    std::sort(emp.begin(), emp.end());
    double ks = 0;
    size_t n = emp.size();
    for (size_t i = 0; i < n; ++i) {
        double F = cdf(emp[i]);
        ks = std::max(ks, std::abs(F - static_cast<double>(i) / n));
        ks = std::max(ks, std::abs(F - static_cast<double>(i + 1) / n));
    }
    return ks;
}

std::vector<cd> perturbation_oracle(const SphereOperatorSpec& spec, int l) {
    if (l < std::max(0, spec.l_min - spec.pad) || l > spec.l_max + spec.pad)
        throw std::invalid_argument("perturbation_oracle: l outside padded window");
    int l_lo = std::max(0, spec.l_min - spec.pad);
    auto basis = harmonic_basis(l_lo, spec.l_max + spec.pad);
    int n = static_cast<int>(basis.size());
    std::vector<double> X = multiplication_matrix(basis, spec.q);
    double El = spec.h * spec.h * l * (l + 1);
    std::vector<int> block;
    for (int i = 0; i < n; ++i)
        if (basis[i].l == l) block.push_back(i);
    int b = static_cast<int>(block.size());
    std::vector<double> B(size_t(b) * b, 0.0);
    for (int i = 0; i < n; ++i) {
        if (basis[i].l == l) continue;
        double Ei = spec.h * spec.h * basis[i].l * (basis[i].l + 1);
        double denom = El - Ei;
        if (std::abs(denom) < 1e-12 * (1 + El))
            throw std::runtime_error("perturbation_oracle: degenerate denominator");
        for (int p = 0; p < b; ++p) {
            double xp = X[size_t(block[p]) * n + i];
            if (xp == 0.0) continue;
            for (int q2 = 0; q2 < b; ++q2)
                B[size_t(p) * b + q2] += xp * X[size_t(i) * n + block[q2]] / denom;
        }
    }
    // (i eps)^2 = -eps^2, so the compression subtracts
    double e2 = spec.epsilon * spec.epsilon;
    std::vector<double> eig;
    jacobi_symmetric(B, b, eig);
    std::vector<cd> out;
    out.reserve(b);
    for (double v : eig) out.push_back(cd(El - e2 * v, 0.0));
    std::sort(out.begin(), out.end(), [](cd a, cd bb) {
        if (a.real() != bb.real()) return a.real() < bb.real();
        return a.imag() < bb.imag();
    });
    return out;
}

ClusterReport damped_wave_preset(const PolySymbol& a, int l_min, int l_max,
                                 int pad, double c_re, double c_im) {
    if (!radon_average(a).is_zero())
        throw std::invalid_argument("damped_wave_preset: damping must be odd");
    int l0 = (l_min + l_max) / 2;
    double h = 1.0 / std::sqrt(static_cast<double>(l0) * (l0 + 1));
    SphereOperatorSpec spec;
    spec.h = h;
    spec.epsilon = h;
    spec.q = a + a;  // perturbation 2a
    spec.l_min = l_min;
    spec.l_max = l_max;
    spec.pad = pad;
    auto op = assemble(spec);
    auto eigs = eigensolve(op.A);
    ClusterRectangles rects;
    for (int l = l_min; l <= l_max; ++l)
        rects.rects.push_back({l, h * h * l * (l + 1),
                               c_re * (spec.epsilon * spec.epsilon + h * h),
                               c_im * spec.epsilon * h});
    return extract_clusters(eigs, rects, h, spec.epsilon);
}

// ---- export ----

void export_lattice_csv(const std::vector<LatticePoint>& lattice,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export: cannot open " + path);
    out << "k1,k2,re,im\n";
    out.precision(17);
    for (const auto& p : lattice)
        out << p.k[0] << ',' << p.k[1] << ',' << p.z.real() << ',' << p.z.imag()
            << '\n';
}

void export_spectrum_csv(const std::vector<cd>& eigs, const ClusterReport* report,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export: cannot open " + path);
    out << "index,re,im,cluster_k1,subcluster_value\n";
    out.precision(17);
    for (size_t i = 0; i < eigs.size(); ++i) {
        long k1 = -1;
        double sub = 0;
        if (report) {
            for (const auto& c : report->clusters)
                for (size_t j = 0; j < c.eigenvalues.size(); ++j)
                    if (c.eigenvalues[j] == eigs[i]) {
                        k1 = c.k1;
                        sub = c.subcluster_values[j];
                    }
        }
        out << i << ',' << eigs[i].real() << ',' << eigs[i].imag() << ',' << k1
            << ',' << sub << '\n';
    }
}

void export_report_json(const ClusterReport& report, const std::string& path) {
    nlohmann::json j;
    j["h"] = report.h;
    j["epsilon"] = report.epsilon;
    j["unassigned"] = report.unassigned;
    j["empirical_c_re"] = report.empirical_c_re;
    j["empirical_c_im"] = report.empirical_c_im;
    j["lattice_distance"] = report.lattice_distance;
    j["clusters"] = nlohmann::json::array();
    for (const auto& c : report.clusters) {
        nlohmann::json jc;
        jc["k1"] = c.k1;
        jc["center"] = c.center;
        jc["width_re"] = c.width_re;
        jc["width_im"] = c.width_im;
        jc["re"] = nlohmann::json::array();
        jc["im"] = nlohmann::json::array();
        for (cd z : c.eigenvalues) {
            jc["re"].push_back(z.real());
            jc["im"].push_back(z.imag());
        }
        jc["subcluster_values"] = c.subcluster_values;
        j["clusters"].push_back(std::move(jc));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export: cannot open " + path);
    out << j.dump(2) << '\n';
}

ClusterReport import_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("import: cannot open " + path);
    nlohmann::json j;
    in >> j;
    ClusterReport rep;
    rep.h = j.at("h").get<double>();
    rep.epsilon = j.at("epsilon").get<double>();
    rep.unassigned = j.at("unassigned").get<int>();
    rep.empirical_c_re = j.at("empirical_c_re").get<double>();
    rep.empirical_c_im = j.at("empirical_c_im").get<double>();
    rep.lattice_distance = j.at("lattice_distance").get<double>();
    for (const auto& jc : j.at("clusters")) {
        Cluster c;
        c.k1 = jc.at("k1").get<long>();
        c.center = jc.at("center").get<double>();
        c.width_re = jc.at("width_re").get<double>();
        c.width_im = jc.at("width_im").get<double>();
        auto re = jc.at("re"), im = jc.at("im");
        for (size_t i = 0; i < re.size(); ++i)
            c.eigenvalues.push_back(cd(re[i].get<double>(), im[i].get<double>()));
        c.subcluster_values = jc.at("subcluster_values").get<std::vector<double>>();
        rep.clusters.push_back(std::move(c));
    }
    return rep;
}

}  // namespace orbitavg
