#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "orbitavg/io.hpp"
#include "orbitavg/verify.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>

using namespace orbitavg;
using cd = std::complex<double>;

namespace {

// independent evaluation of the normalized basis for quadrature oracles

double phat(int l, int m, double x) {
    double p = std::sqrt(0.5);
    double s = std::sqrt(std::max(0.0, 1 - x * x));
    for (int k = 1; k <= m; ++k)
        p *= std::sqrt((2.0 * k + 1) / (2.0 * k)) * s;
    if (l == m) return p;
    double pm1 = p, pcur = std::sqrt(2.0 * m + 3) * x * p;
    for (int ll = m + 2; ll <= l; ++ll) {
        double a = std::sqrt((2.0 * ll + 1) * (2.0 * ll - 1) /
                             (double(ll - m) * (ll + m)));
        double b = std::sqrt((2.0 * ll + 1) * (ll - 1.0 - m) * (ll - 1.0 + m) /
                             ((2.0 * ll - 3) * (ll - m) * (ll + m)));
        double next = a * x * pcur - b * pm1;
        pm1 = pcur;
        pcur = next;
    }
    return pcur;
}

double basis_eval(const BasisFunction& b, double ct, double phi) {
    double ang;
    if (b.m == 0)
        ang = 1.0 / std::sqrt(2 * M_PI);
    else if (b.sine)
        ang = std::sin(b.m * phi) / std::sqrt(M_PI);
    else
        ang = std::cos(b.m * phi) / std::sqrt(M_PI);
    return phat(b.l, b.m, ct) * ang;
}

void gl_nodes(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
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
        x[i] = z;
        w[i] = 2.0 / ((1 - z * z) * pp * pp);
    }
}

/// brute-force sphere integral of B_i * f(x) * B_j
double sphere_integral(const BasisFunction& bi, const BasisFunction& bj,
                       int axis) {
    std::vector<double> xs, ws;
    gl_nodes(40, xs, ws);
    const int NP = 128;
    double acc = 0;
    for (int k = 0; k < 40; ++k) {
        double ct = xs[k], st = std::sqrt(std::max(0.0, 1 - ct * ct));
        for (int p = 0; p < NP; ++p) {
            double phi = 2 * M_PI * p / NP;
            double coord = axis == 0   ? st * std::cos(phi)
                           : axis == 1 ? st * std::sin(phi)
                           : axis == 2 ? ct
                                       : 1.0;
            acc += ws[k] * (2 * M_PI / NP) * basis_eval(bi, ct, phi) * coord *
                   basis_eval(bj, ct, phi);
        }
    }
    return acc;
}

ComplexMatrix random_matrix(std::mt19937& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> nd;
    ComplexMatrix A = ComplexMatrix::zero(n);
    for (auto& v : A.a) v = scale * cd(nd(rng), nd(rng));
    return A;
}

}  // namespace

TEST_CASE("basis is orthonormal under the sphere measure") {
    auto basis = harmonic_basis(0, 4);
    REQUIRE(basis.size() == 25);
    for (size_t i = 0; i < basis.size(); ++i)
        for (size_t j = i; j < basis.size(); ++j) {
            double g = sphere_integral(basis[i], basis[j], -1);
            CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-12);
        }
}

TEST_CASE("coordinate matrices match brute-force quadrature") {
    auto basis = harmonic_basis(0, 5);
    int n = static_cast<int>(basis.size());
    for (int axis = 0; axis < 3; ++axis) {
        auto M = coordinate_matrix(basis, axis);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double ref = sphere_integral(basis[i], basis[j], axis);
                CHECK(std::abs(M[size_t(i) * n + j] - ref) < 1e-10);
            }
    }
    CHECK_THROWS_AS(coordinate_matrix(basis, 3), std::invalid_argument);
}

TEST_CASE("x3 matrix elements have the closed form") {
    auto basis = harmonic_basis(0, 10);
    int n = static_cast<int>(basis.size());
    auto M = coordinate_matrix(basis, 2);
    auto idx = [&](int l, int m, bool s) {
        for (int i = 0; i < n; ++i)
            if (basis[i].l == l && basis[i].m == m && basis[i].sine == s)
                return i;
        return -1;
    };
    for (int l = 0; l < 10; ++l)
        for (int m = 0; m <= l; ++m)
            for (bool s : {false, true}) {
                if (m == 0 && s) continue;
                double expect = std::sqrt((double(l + 1) * (l + 1) - m * m) /
                                          ((2.0 * l + 1) * (2.0 * l + 3)));
                int i = idx(l, m, s), j = idx(l + 1, m, s);
                CHECK(std::abs(M[size_t(j) * n + i] - expect) < 1e-12);
                CHECK(std::abs(M[size_t(i) * n + j] - expect) < 1e-12);
            }
}

TEST_CASE("multiplication matrix rejects bad symbols") {
    auto basis = harmonic_basis(0, 6);
    CHECK_THROWS_AS(multiplication_matrix(basis, parse_expression("k1", 3)),
                    std::invalid_argument);
    CHECK_THROWS_AS(multiplication_matrix(basis, parse_expression("i*x1", 3)),
                    std::invalid_argument);
    // real combinations pass and are symmetric
    auto M = multiplication_matrix(basis, parse_expression("x1*x2 + x3", 3));
    int n = static_cast<int>(basis.size());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            CHECK(std::abs(M[size_t(i) * n + j] - M[size_t(j) * n + i]) < 1e-12);
}

TEST_CASE("assembled operator at eps = 0 is the exact Laplacian spectrum") {
    SphereOperatorSpec spec;
    spec.h = 0.1;
    spec.epsilon = 0.0;
    spec.q = parse_expression("x1", 3);
    spec.l_min = 2;
    spec.l_max = 4;
    spec.pad = 2;
    auto op = assemble(spec);
    auto eigs = eigensolve(op.A);
    REQUIRE(eigs.size() == op.basis.size());
    size_t at = 0;
    for (int l = 0; l <= 6; ++l) {
        double El = spec.h * spec.h * l * (l + 1);
        for (int mult = 0; mult < 2 * l + 1; ++mult, ++at) {
            CHECK(std::abs(eigs[at].real() - El) < 1e-12);
            CHECK(std::abs(eigs[at].imag()) < 1e-12);
        }
    }
}

TEST_CASE("assembly validation") {
    SphereOperatorSpec spec;
    spec.h = 0.1;
    spec.epsilon = 0.01;
    spec.q = parse_expression("x1^4", 3);
    spec.l_min = 2;
    spec.l_max = 4;
    spec.pad = 8;
    CHECK_THROWS_AS(assemble(spec), std::invalid_argument);
    spec.q = parse_expression("x1", 3);
    spec.pad = 1;
    CHECK_THROWS_AS(assemble(spec), std::invalid_argument);
    spec.pad = 2;
    spec.h = 0.0;
    CHECK_THROWS_AS(assemble(spec), std::invalid_argument);
    spec.h = 0.1;
    auto op = assemble(spec);
    int n = static_cast<int>(op.basis.size());
    // complex symmetric: D real plus i eps times a real symmetric part
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            CHECK(std::abs(op.A.at(i, j) - op.A.at(j, i)) < 1e-15);
            if (i != j) CHECK(std::abs(op.A.at(i, j).real()) < 1e-15);
        }
}

TEST_CASE("eigensolve agrees with a unitary-conjugation construction") {
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
        int n = 5 + static_cast<int>(rng() % 36);
        // T upper triangular with a well-separated known diagonal and a
        // bounded non-normal part, conjugated by the Householder
        // reflector of a random vector (exactly unitary)
        ComplexMatrix T = ComplexMatrix::zero(n);
        for (int i = 0; i < n; ++i) {
            T.at(i, i) = cd(i + 0.2 * nd(rng), 0.2 * nd(rng));
            for (int j = i + 1; j < n; ++j)
                T.at(i, j) = 0.3 * cd(nd(rng), nd(rng));
        }
        std::vector<cd> v(n);
        double vn = 0;
        for (auto& e : v) {
            e = cd(nd(rng), nd(rng));
            vn += std::norm(e);
        }
        ComplexMatrix Q = ComplexMatrix::zero(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                Q.at(i, j) = (i == j ? 1.0 : 0.0) -
                             2.0 * v[i] * std::conj(v[j]) / vn;
        ComplexMatrix QT = ComplexMatrix::zero(n), A = ComplexMatrix::zero(n);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    QT.at(i, j) += Q.at(i, k) * T.at(k, j);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int j = 0; j < n; ++j)
                    A.at(i, j) += QT.at(i, k) * std::conj(Q.at(j, k));
        std::vector<cd> expect(n);
        for (int i = 0; i < n; ++i) expect[i] = T.at(i, i);
        std::sort(expect.begin(), expect.end(), [](cd a, cd b) {
            if (a.real() != b.real()) return a.real() < b.real();
            return a.imag() < b.imag();
        });
        auto eigs = eigensolve(A);
        REQUIRE(eigs.size() == expect.size());
        double fro = 0;
        for (const auto& e : A.a) fro += std::norm(e);
        fro = std::sqrt(fro);
        for (int i = 0; i < n; ++i)
            CHECK(std::abs(eigs[i] - expect[i]) < 1e-9 * std::max(1.0, fro));
    }
}

TEST_CASE("eigensolve conserves the trace and passes the residual audit") {
    std::mt19937 rng(11);
    ComplexMatrix A = random_matrix(rng, 30);
    double norm = 0;
    for (const auto& v : A.a) norm = std::max(norm, std::abs(v));
    auto eigs = eigensolve(A);
    cd trace = 0, esum = 0;
    for (int i = 0; i < 30; ++i) trace += A.at(i, i);
    for (cd e : eigs) esum += e;
    CHECK(std::abs(trace - esum) < 1e-10 * 30 * norm);
    for (cd z : eigs) CHECK(residual_probe(A, z) < 1e-8 * norm);
    // a point far from the spectrum is not an eigenvalue
    CHECK(residual_probe(A, cd(1e3, 1e3)) > 1.0);
}

TEST_CASE("eigensolve guard") {
    CHECK_THROWS_AS(eigensolve(ComplexMatrix::zero(4097)),
                    std::invalid_argument);
}

TEST_CASE("cluster extraction at eps = 0 recovers exact multiplicities") {
    SphereOperatorSpec spec;
    spec.h = 0.1;
    spec.epsilon = 0.01;
    spec.q = PolySymbol(3);
    spec.l_min = 3;
    spec.l_max = 5;
    spec.pad = 2;
    auto op = assemble(spec);  // q = 0: diagonal
    auto eigs = eigensolve(op.A);
    ClusterRectangles rects;
    for (int l = 3; l <= 5; ++l)
        rects.rects.push_back(
            {l, spec.h * spec.h * l * (l + 1),
             3 * (spec.epsilon * spec.epsilon + spec.h * spec.h),
             10 * spec.epsilon * spec.h});
    auto rep = extract_clusters(eigs, rects, spec.h, spec.epsilon);
    REQUIRE(rep.clusters.size() == 3);
    for (const auto& c : rep.clusters) {
        CHECK(static_cast<int>(c.eigenvalues.size()) == 2 * c.k1 + 1);
        CHECK(c.width_re < 1e-12);
        CHECK(c.width_im < 1e-12);
    }
    int total = rep.unassigned;
    for (const auto& c : rep.clusters)
        total += static_cast<int>(c.eigenvalues.size());
    CHECK(total == static_cast<int>(eigs.size()));
    CHECK(rep.empirical_c_re < 1e-9);

    ClusterRectangles overlap = rects;
    overlap.disjoint = false;
    CHECK_THROWS_AS(extract_clusters(eigs, overlap, spec.h, spec.epsilon),
                    std::invalid_argument);
}

TEST_CASE("subcluster distribution test against the x1 law") {
    // law of 3/8 y1^2 - 1/8 under the uniform sphere measure: y1 uniform
    // on [-1, 1], so v = (3 u^2 - 1)/8 with u = |y1| uniform on [0, 1]
    PolySymbol s = parse_expression("3/8*x1^2 - 1/8", 3);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    Cluster c;
    c.k1 = 0;
    for (int i = 0; i < 400; ++i) {
        double u = ud(rng);
        c.subcluster_values.push_back((3 * u * u - 1) / 8);
    }
    CHECK(subcluster_distribution_test(c, s) < 0.08);
    // a shifted sample is far from the law
    for (auto& v : c.subcluster_values) v += 0.15;
    CHECK(subcluster_distribution_test(c, s) > 0.5);
    Cluster tiny;
    tiny.subcluster_values.assign(5, 0.0);
    CHECK_THROWS_AS(subcluster_distribution_test(tiny, s),
                    std::invalid_argument);
}

TEST_CASE("perturbation oracle matches the full diagonalization") {
    SphereOperatorSpec spec;
    spec.h = 1.0;
    spec.epsilon = 0.01;
    spec.q = parse_expression("x1", 3);
    spec.l_min = 3;
    spec.l_max = 5;
    spec.pad = 2;
    auto op = assemble(spec);
    auto eigs = eigensolve(op.A);
    for (int l = 3; l <= 5; ++l) {
        double El = l * (l + 1.0);
        std::vector<double> near;
        for (cd z : eigs)
            if (std::abs(z.real() - El) < 1.0) near.push_back(z.real());
        REQUIRE(static_cast<int>(near.size()) == 2 * l + 1);
        std::sort(near.begin(), near.end());
        auto oracle = perturbation_oracle(spec, l);
        REQUIRE(oracle.size() == near.size());
        for (size_t i = 0; i < near.size(); ++i)
            CHECK(std::abs(near[i] - oracle[i].real()) < 1e-6);
    }
    CHECK_THROWS_AS(perturbation_oracle(spec, 100), std::invalid_argument);
}

TEST_CASE("perturbation oracle at eps = 0 is the bare level") {
    SphereOperatorSpec spec;
    spec.h = 0.2;
    spec.epsilon = 0.0;
    spec.q = parse_expression("x3", 3);
    spec.l_min = 4;
    spec.l_max = 4;
    spec.pad = 2;
    auto oracle = perturbation_oracle(spec, 4);
    REQUIRE(oracle.size() == 9);
    for (cd z : oracle)
        CHECK(z.real() == doctest::Approx(0.2 * 0.2 * 20).epsilon(1e-14));
}

TEST_CASE("damped wave preset clusters by level") {
    auto rep = damped_wave_preset(parse_expression("x1", 3), 8, 12, 2);
    REQUIRE(rep.clusters.size() == 5);
    int inside = 0;
    for (const auto& c : rep.clusters) {
        CHECK(static_cast<int>(c.eigenvalues.size()) == 2 * c.k1 + 1);
        inside += static_cast<int>(c.eigenvalues.size());
        // odd damping: the spectrum is closed under conjugation
        for (cd z : c.eigenvalues) {
            double best = 1e300;
            for (cd w : c.eigenvalues)
                best = std::min(best, std::abs(std::conj(z) - w));
            CHECK(best < 1e-9);
        }
    }
    // everything else is padding (levels 6, 7, 13, 14)
    CHECK(rep.unassigned == 189 - inside);
    CHECK(rep.empirical_c_re < 3.0);
    CHECK(rep.empirical_c_im < 10.0);
    CHECK_THROWS_AS(damped_wave_preset(parse_expression("x1^2", 3), 8, 12, 4),
                    std::invalid_argument);
}

TEST_CASE("window padding has converged") {
    SphereOperatorSpec spec;
    spec.h = 0.1;
    spec.epsilon = 0.02;
    spec.q = parse_expression("x1", 3);
    spec.l_min = 10;
    spec.l_max = 12;
    spec.pad = 2;
    auto e1 = eigensolve(assemble(spec).A);
    spec.pad = 4;
    auto e2 = eigensolve(assemble(spec).A);
    // compare the eigenvalues inside the reported window
    auto window = [&](const std::vector<cd>& e) {
        std::vector<cd> out;
        for (cd z : e) {
            double El10 = spec.h * spec.h * 10 * 11;
            double El12 = spec.h * spec.h * 12 * 13;
            if (z.real() > El10 - 0.05 && z.real() < El12 + 0.05)
                out.push_back(z);
        }
        return out;
    };
    auto w1 = window(e1), w2 = window(e2);
    REQUIRE(w1.size() == w2.size());
    REQUIRE(w1.size() == 69);  // (2l+1) for l = 10, 11, 12
    for (size_t i = 0; i < w1.size(); ++i)
        CHECK(std::abs(w1[i] - w2[i]) < 1e-8);
}

TEST_CASE("report export round trip") {
    ClusterReport rep;
    rep.h = 0.03;
    rep.epsilon = 0.0071;
    rep.unassigned = 4;
    rep.empirical_c_re = 1.25;
    rep.empirical_c_im = 0.5;
    rep.lattice_distance = 1e-4;
    Cluster c;
    c.k1 = 40;
    c.center = 1.476;
    c.width_re = 2e-4;
    c.width_im = 3e-5;
    c.eigenvalues = {cd(1.4759, 1e-5), cd(1.4761, -1e-5)};
    c.subcluster_values = {-0.11, 0.2};
    rep.clusters.push_back(c);
    std::string path = "verify_roundtrip.json";
    export_report_json(rep, path);
    auto back = import_report_json(path);
    CHECK(back.h == rep.h);
    CHECK(back.epsilon == rep.epsilon);
    CHECK(back.unassigned == rep.unassigned);
    CHECK(back.empirical_c_re == rep.empirical_c_re);
    CHECK(back.lattice_distance == rep.lattice_distance);
    REQUIRE(back.clusters.size() == 1);
    CHECK(back.clusters[0].k1 == 40);
    CHECK(back.clusters[0].center == c.center);
    CHECK(back.clusters[0].eigenvalues == c.eigenvalues);
    CHECK(back.clusters[0].subcluster_values == c.subcluster_values);
    std::remove(path.c_str());

    std::vector<cd> eigs = {cd(1.4759, 1e-5), cd(1.4761, -1e-5), cd(9.0, 0.0)};
    export_spectrum_csv(eigs, &rep, "verify_spec.csv");
    std::ifstream in("verify_spec.csv");
    std::string line, last;
    int rows = 0;
    std::getline(in, line);
    CHECK(line == "index,re,im,cluster_k1,subcluster_value");
    while (std::getline(in, line))
        if (!line.empty()) {
            ++rows;
            last = line;
        }
    CHECK(rows == 3);
    CHECK(last.find(",-1,") != std::string::npos);  // the unassigned point
    std::remove("verify_spec.csv");

    std::vector<LatticePoint> lat{{{40, 0}, cd(1.476, -2e-5)}};
    export_lattice_csv(lat, "verify_lat.csv");
    std::ifstream in2("verify_lat.csv");
    std::getline(in2, line);
    CHECK(line == "k1,k2,re,im");
    std::getline(in2, line);
    CHECK(line.substr(0, 5) == "40,0,");
    std::remove("verify_lat.csv");
}

TEST_CASE("worker count respects the environment cap") {
    setenv("ORBITAVG_THREADS", "2", 1);
    CHECK(worker_count() == 2);
    unsetenv("ORBITAVG_THREADS");
    CHECK(worker_count() >= 1);
}
