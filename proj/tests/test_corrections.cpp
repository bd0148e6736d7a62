#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "orbitavg/corrections.hpp"
#include "orbitavg/dynamics.hpp"
#include "orbitavg/io.hpp"

#include <random>

using namespace orbitavg;

namespace {

constexpr double PI = 3.14159265358979323846;

PolySymbol random_mean_zero_cubic(std::mt19937& rng, const PeriodicFlow& flow) {
    std::uniform_int_distribution<int> cd(-4, 4);
    PolySymbol p(flow.n(), Frame::yeta);
    for (int trial = 0; trial < 40 && p.size() < 6; ++trial) {
        Monomial m(flow.n());
        int left = 3;
        for (auto& e : m.e) { e = cd(rng) < 0 ? 0 : cd(rng) % (left + 1); left -= e; }
        if (flow.phase(m) == 0) continue;
        p.add_term(m, Coeff(ExactC(Rational(cd(rng)), Rational(cd(rng)))));
    }
    return p;
}

/// Real-valued random polynomial (real rational coefficients, xk frame).
PolySymbol random_real_poly(std::mt19937& rng, int n, int maxdeg) {
    std::uniform_int_distribution<int> cd(-4, 4);
    PolySymbol p(n, Frame::xk);
    for (int t = 0; t < 6; ++t) {
        Monomial m(n);
        int left = maxdeg;
        for (auto& e : m.e) { e = std::abs(cd(rng)) % (left + 1); left -= e; }
        p.add_term(m, Coeff(ExactC(Rational(cd(rng)))));
    }
    return p;
}

/// 2-D Simpson oracle for the second correction straight from the
/// double-integral form.
PolySymbol second_oracle_at(const PeriodicFlow& flow, const PolySymbol& q,
                            const PolySymbol& r, int panels) {
    double T = flow.T, h = T / panels;
    auto sw = [&](int j) { return (j == 0 || j == panels) ? 1.0 : (j % 2 ? 4.0 : 2.0); };
    PolySymbol acc(q.n(), Frame::yeta);
    for (int ju = 0; ju <= panels; ++ju) {
        double u = ju * h;
        PolySymbol inner(q.n(), Frame::yeta);
        for (int jv = 0; jv <= panels; ++jv) {
            double v = jv * h;
            auto b = poisson_bracket(flow_apply(flow, q, v + u), flow_apply(flow, q, v));
            inner = inner + b * Coeff(sw(jv) * h / 3.0);
        }
        acc = acc + inner * Coeff(sw(ju) * h / 3.0 * u);
    }
    return average_numeric(flow, r) - acc * Coeff(1.0 / (2.0 * T * T));
}

/// Two Romberg levels on top of composite Simpson; removes the h^4 and
/// h^6 terms, which matters once the monomial phases reach ~10.
PolySymbol second_oracle(const PeriodicFlow& flow, const PolySymbol& q,
                         const PolySymbol& r, int panels = 64) {
    auto s0 = second_oracle_at(flow, q, r, panels);
    auto s1 = second_oracle_at(flow, q, r, 2 * panels);
    auto s2 = second_oracle_at(flow, q, r, 4 * panels);
    auto r0 = s1 + (s1 - s0) * Coeff(1.0 / 15.0);
    auto r1 = s2 + (s2 - s1) * Coeff(1.0 / 15.0);
    return r1 + (r1 - r0) * Coeff(1.0 / 63.0);
}

/// Nested Simpson oracle for the third correction from the double and
/// single time integrals.
PolySymbol third_oracle_at(const PeriodicFlow& flow, const PolySymbol& q,
                           const PolySymbol& r, const PolySymbol& w,
                           int panels) {
    double T = flow.T, h = T / panels;
    auto sw = [&](int j) { return (j == 0 || j == panels) ? 1.0 : (j % 2 ? 4.0 : 2.0); };
    int n = q.n();
    PolySymbol f(n, Frame::yeta), g(n, Frame::yeta), k(n, Frame::yeta);
    for (int ju = 0; ju <= panels; ++ju) {
        double u = ju * h;
        double cu = sw(ju) * h / 3.0 * u;
        PolySymbol qu = flow_apply(flow, q, u);
        PolySymbol fin(n, Frame::yeta), gin(n, Frame::yeta);
        for (int jv = 0; jv <= panels; ++jv) {
            double v = jv * h;
            double cv = sw(jv) * h / 3.0 * v;
            fin = fin + poisson_bracket(flow_apply(flow, q, v),
                                        poisson_bracket(qu, q)) * Coeff(cv);
            gin = gin + poisson_bracket(
                            poisson_bracket(flow_apply(flow, q, u + v), qu), q) *
                            Coeff(cv);
        }
        f = f + fin * Coeff(cu);
        g = g + gin * Coeff(cu);
        k = k + (poisson_bracket(qu, r) +
                 poisson_bracket(flow_apply(flow, r, u), q)) * Coeff(cu);
    }
    f = f * Coeff(-1.0 / (12.0 * T * T));
    g = g * Coeff(-1.0 / (4.0 * T * T));
    k = k * Coeff(1.0 / (2.0 * T));
    return average_numeric(flow, f + g + w + k);
}

PolySymbol third_oracle(const PeriodicFlow& flow, const PolySymbol& q,
                        const PolySymbol& r, const PolySymbol& w,
                        int panels = 64) {
    auto coarse = third_oracle_at(flow, q, r, w, panels);
    auto fine = third_oracle_at(flow, q, r, w, 2 * panels);
    return fine + (fine - coarse) * Coeff(1.0 / 15.0);
}

double dist(const PolySymbol& a, const PolySymbol& b) {
    return (a - b).max_abs_coeff();
}

}  // namespace

TEST_CASE("second correction golden value: cubic at the 1:1 resonance") {
    PeriodicFlow flow({1, 1});
    auto q = parse_expression("x1^3", 2);
    PolySymbol zero(2, Frame::xk);
    auto s = second_correction(flow, q, zero);
    // (15/4)((x1^2 + k1^2)/2)^2
    auto expect = parse_expression("15/16*(x1^2 + k1^2)^2", 2);
    CHECK(s == expect);

    auto s_osc = second_correction(flow, to_oscillator(q), PolySymbol(2, Frame::yeta));
    CHECK(s_osc == parse_expression("-15/4*y1^2*n1^2", 2));
    CHECK(from_oscillator(s_osc) == expect);
}

TEST_CASE("second correction with q = 0 returns the average of r") {
    PeriodicFlow flow({1, 2});
    std::mt19937 rng(3);
    auto r = random_real_poly(rng, 2, 4);
    CHECK(second_correction(flow, PolySymbol(2, Frame::xk), r) == average(flow, r));
}

TEST_CASE("second correction rejects resonant q and lists the monomials") {
    PeriodicFlow flow({1, 1});
    auto q = parse_expression("y1*n1 + y1^3", 2);
    try {
        second_correction(flow, q, PolySymbol(2, Frame::yeta));
        FAIL("expected rejection");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("y^(1,0)eta^(1,0)") != std::string::npos);
    }
}

TEST_CASE("second correction matches the double-integral quadrature oracle") {
    PeriodicFlow flow({1, 2});
    std::mt19937 rng(11);
    for (int trial = 0; trial < 2; ++trial) {
        auto q = random_mean_zero_cubic(rng, flow);
        auto r = to_oscillator(random_real_poly(rng, 2, 4));
        auto s = second_correction(flow, q, r);
        CHECK(dist(s.to_float(), second_oracle(flow, q, r)) < 1e-9);
    }
}

TEST_CASE("second correction output commutes with p2") {
    PeriodicFlow flow({1, 2});
    auto p2 = parse_expression("i*y1*n1 + 2*i*y2*n2", 2);
    std::mt19937 rng(13);
    for (int trial = 0; trial < 6; ++trial) {
        auto q = random_mean_zero_cubic(rng, flow);
        auto r = to_oscillator(random_real_poly(rng, 2, 4));
        auto s = second_correction(flow, q, r);
        CHECK(poisson_bracket(p2, s).is_zero());
    }
}

TEST_CASE("gauge independence of the second correction") {
    PeriodicFlow flow({1, 2});
    std::mt19937 rng(17);
    for (int trial = 0; trial < 6; ++trial) {
        auto q = random_mean_zero_cubic(rng, flow);
        auto r = to_oscillator(random_real_poly(rng, 2, 4));
        auto s = second_correction(flow, q, r);
        // any flow-invariant shift of G0 must leave <s> unchanged
        auto G0 = g0_weighted_average(flow, q);
        auto shift = average(flow, to_oscillator(random_real_poly(rng, 2, 4)));
        auto G0b = G0 + shift;
        CHECK(second_correction(flow, q, r, &G0b) == s);
    }
}

TEST_CASE("third correction: zero inputs") {
    PeriodicFlow flow({1, 1});
    PolySymbol z(2, Frame::yeta);
    auto b = third_correction(flow, z, z, z);
    CHECK(b.s_avg.is_zero());
    CHECK(b.t_avg.is_zero());
    CHECK(b.G0.is_zero());
    CHECK(b.G1.is_zero());
    CHECK(b.G2_residual.is_zero());
}

TEST_CASE("third correction golden case matches the nested quadrature oracle") {
    PeriodicFlow flow({1, 1});
    auto q = to_oscillator(parse_expression("x1^3", 2));
    PolySymbol z(2, Frame::yeta);
    auto b = third_correction(flow, q, z, z);
    CHECK(dist(b.t_avg.to_float(), third_oracle(flow, q, z, z)) < 1e-8);
    CHECK(is_real_on_real_domain(b.t_avg));
}

TEST_CASE("third correction matches the oracle on random inputs") {
    std::mt19937 rng(19);
    PeriodicFlow flow11({1, 1});
    {
        auto q = random_mean_zero_cubic(rng, flow11);
        auto r = to_oscillator(random_real_poly(rng, 2, 4));
        auto w = to_oscillator(random_real_poly(rng, 2, 3));
        auto b = third_correction(flow11, q, r, w);
        CHECK(dist(b.t_avg.to_float(), third_oracle(flow11, q, r, w, 128)) < 1e-8);
    }
    PeriodicFlow flow12({1, 2});
    auto q = random_mean_zero_cubic(rng, flow12);
    auto r = to_oscillator(random_real_poly(rng, 2, 4));
    auto w = to_oscillator(random_real_poly(rng, 2, 3));
    auto b = third_correction(flow12, q, r, w);
    CHECK(dist(b.t_avg.to_float(), third_oracle(flow12, q, r, w, 128)) < 1e-8);
}

TEST_CASE("third correction: exact identities of the bundle") {
    PeriodicFlow flow({1, 2});
    auto p2 = parse_expression("i*y1*n1 + 2*i*y2*n2", 2);
    Coeff half(ExactC(Rational(1, 2)));
    Coeff twelfth(ExactC(Rational(1, 12)));
    std::mt19937 rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        auto q = random_mean_zero_cubic(rng, flow);
        auto r = to_oscillator(random_real_poly(rng, 2, 4));
        auto w = to_oscillator(random_real_poly(rng, 2, 3));
        auto b = third_correction(flow, q, r, w);
        CHECK(b.s_avg == second_correction(flow, q, r));
        CHECK(poisson_bracket(p2, b.s_avg).is_zero());
        CHECK(poisson_bracket(p2, b.t_avg).is_zero());
        // G1 solves its homological equation
        auto bG0q = poisson_bracket(b.G0, q);
        auto rhs = half * (bG0q - average(flow, bG0q)) - (r - average(flow, r));
        CHECK((poisson_bracket(p2, b.G1) - rhs).is_zero());
        // independent exact route to <t>
        auto direct = average(flow,
            w - half * poisson_bracket(b.G1, q) -
            twelfth * poisson_bracket(b.G0, bG0q) +
            half * poisson_bracket(b.G0, r));
        CHECK(b.t_avg == direct);
        // the stored residual averages to zero
        CHECK(average(flow, b.G2_residual).is_zero());
    }
}

TEST_CASE("third correction: reality is preserved") {
    PeriodicFlow flow({1, 1});
    std::mt19937 rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        auto q = random_real_poly(rng, 2, 3) - PolySymbol::constant(2, Coeff(ExactC(1)));
        q = q - from_oscillator(average(flow, to_oscillator(q)));
        auto r = random_real_poly(rng, 2, 4);
        auto w = random_real_poly(rng, 2, 3);
        REQUIRE(is_real_on_real_domain(q));
        auto b = third_correction(flow, q, r, w);
        CHECK(is_real_on_real_domain(b.s_avg));
        CHECK(is_real_on_real_domain(b.t_avg));
    }
}

TEST_CASE("barrier correction equals the second correction with r = -p4") {
    std::mt19937 rng(31);
    for (auto lam : {std::vector<long>{1, 1}, std::vector<long>{1, 2}}) {
        PeriodicFlow flow(lam);
        for (int trial = 0; trial < 5; ++trial) {
            auto p3 = random_mean_zero_cubic(rng, flow);
            auto p4 = to_oscillator(random_real_poly(rng, 2, 4));
            CHECK(barrier_s(flow, p3, p4) == second_correction(flow, p3, -p4));
        }
    }
}

TEST_CASE("barrier correction golden values") {
    PeriodicFlow flow({1, 1});
    auto p3 = parse_expression("x1^3", 2);
    PolySymbol zero(2, Frame::xk);
    CHECK(barrier_s(flow, p3, zero) == parse_expression("15/16*(x1^2 + k1^2)^2", 2));

    std::mt19937 rng(37);
    auto p4 = random_real_poly(rng, 2, 4);
    CHECK(barrier_s(flow, zero, p4) == -average(flow, p4));

    // the 1:2 resonance with the cubic squaring the fast variable; the
    // slow-fast ordering makes every monomial phase odd, so the average
    // vanishes
    PeriodicFlow flow21({2, 1});
    auto p3b = parse_expression("x1^2*x2", 2);
    REQUIRE(average(flow21, p3b).is_zero());
    auto s = barrier_s(flow21, p3b, zero);
    CHECK(dist(to_oscillator(s).to_float(),
               second_oracle(flow21, to_oscillator(p3b),
                             PolySymbol(2, Frame::yeta))) < 1e-9);
}

TEST_CASE("critical values: quartic on the 1:1 energy shell") {
    PeriodicFlow flow({1, 1});
    auto s = parse_expression("15/16*(x1^2 + k1^2)^2", 2);
    auto vals = critical_values_on_sphere3(s, &flow, 4000);
    REQUIRE(vals.size() == 2);
    CHECK(vals[0].value == doctest::Approx(0.0).epsilon(1e-7));
    CHECK(vals[1].value == doctest::Approx(15.0 / 4.0).epsilon(1e-9));
}

TEST_CASE("critical values: reduced-sphere quadratic") {
    auto s = parse_expression("3/8*x1^2 - 1/8", 3);
    auto vals = critical_values_on_sphere3(s);
    REQUIRE(vals.size() == 2);
    CHECK(vals[0].value == doctest::Approx(-1.0 / 8.0).epsilon(1e-9));
    CHECK(vals[1].value == doctest::Approx(1.0 / 4.0).epsilon(1e-9));
}

TEST_CASE("critical values: constant symbol") {
    auto s = parse_expression("7/3", 3);
    auto vals = critical_values_on_sphere3(s, nullptr, 500);
    REQUIRE(vals.size() == 1);
    CHECK(vals[0].value == doctest::Approx(7.0 / 3.0));
}

// ---- dynamics ----

TEST_CASE("double average: flow-invariant observable passes through") {
    // circle flow in the x2 angle; k2 itself is invariant
    auto sys = canonical_system(parse_expression("k2", 2));
    auto base = symbol_observable(parse_expression("k2", 2));
    std::vector<std::vector<double>> grid{{0.0, 0.3, 0.0, 0.7},
                                          {0.0, 2.1, 0.0, -0.4}};
    auto lt = double_average(sys, base, 12.0, grid);
    for (const auto& s : lt.samples) {
        CHECK(s.avg_T == doctest::Approx(s.point[3]).epsilon(1e-9));
        CHECK(s.avg_inf == doctest::Approx(s.point[3]).epsilon(1e-7));
    }
}

TEST_CASE("double average of cos along the circle flow") {
    auto sys = canonical_system(parse_expression("k2", 2));
    Observable base = [](const std::vector<double>& y) { return std::cos(y[1]); };
    std::vector<std::vector<double>> grid{{0.0, 0.5, 0.0, 1.0}};
    double T = 13.0;
    auto lt = double_average(sys, base, T, grid);
    double x2 = 0.5;
    double expect = (std::sin(x2 + T) - std::sin(x2)) / T;
    CHECK(lt.samples[0].avg_T == doctest::Approx(expect).epsilon(1e-8));
    CHECK(lt.samples[0].avg_inf == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("long-time limit equals the torus mean") {
    // ergodic line flow on the 2-torus with irrational slope
    auto sys = canonical_system(parse_expression("k1 + 61/45*k2", 2));
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> u(0.0, 2 * PI);
    Observable base = [](const std::vector<double>& y) {
        return std::cos(y[0]) * std::cos(y[0]) + 0.25 * std::sin(y[1]);
    };
    // torus mean of cos^2 is 1/2, of sin is 0
    std::vector<std::vector<double>> grid{{u(rng), u(rng), 1.0, 1.0}};
    auto lt = double_average(sys, base, 10.0, grid);
    CHECK(lt.samples[0].avg_inf == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("secular solve: closed-form primitive on the circle flow") {
    auto sys = canonical_system(parse_expression("k2", 2));
    Observable base = [](const std::vector<double>& y) { return std::cos(y[1]); };
    double T = 20.0;
    std::vector<std::vector<double>> grid;
    for (int j = 0; j < 8; ++j) grid.push_back({0.0, j * 0.7, 0.0, 1.0});
    double res = 0;
    auto G = solve_secular(sys, base, T, grid, &res);
    CHECK(res < 1e-6);
    for (int j = 0; j < 8; ++j) {
        double x2 = j * 0.7;
        double expect = std::sin(x2) + (std::cos(x2 + T) - std::cos(x2)) / T;
        CHECK(G[j] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("secular solve: invariant base gives zero") {
    auto sys = canonical_system(parse_expression("k2", 2));
    auto base = symbol_observable(parse_expression("k2", 2));
    std::vector<std::vector<double>> grid{{0.0, 1.0, 0.0, 0.8}};
    double res = 0;
    auto G = solve_secular(sys, base, 16.0, grid, &res);
    // k(u) integrates to -T/2, so G is a constant multiple of the base
    CHECK(G[0] == doctest::Approx(-16.0 / 2.0 * 0.8).epsilon(1e-8));
    CHECK(res < 1e-6);
}

TEST_CASE("hypothesis checker: invariant observable separates immediately") {
    auto sys = canonical_system(parse_expression("k2", 2));
    auto base = symbol_observable(parse_expression("k2", 2));
    auto torus = [](double F) {
        std::vector<std::vector<double>> pts;
        for (int j = 0; j < 4; ++j) pts.push_back({0.0, j * 1.5, 0.0, F});
        return pts;
    };
    auto rep = check_global_hypothesis(sys, base, torus, 0.05, {0.01, 0.02}, 8.0, 32.0);
    REQUIRE(rep.bands.size() == 2);
    for (const auto& band : rep.bands) {
        CHECK(band.satisfied);
        CHECK(band.first_T == doctest::Approx(8.0));
        CHECK(band.margin == doctest::Approx(band.b).epsilon(1e-6));
    }
}

TEST_CASE("hypothesis checker: zero observable is undetermined") {
    auto sys = canonical_system(parse_expression("k2", 2));
    Observable base = [](const std::vector<double>&) { return 0.0; };
    auto torus = [](double F) {
        return std::vector<std::vector<double>>{{0.0, 0.4, 0.0, F}};
    };
    auto rep = check_global_hypothesis(sys, base, torus, 0.05, {0.01}, 8.0, 16.0);
    CHECK(!rep.bands[0].satisfied);
    for (const auto& scan : rep.bands[0].scans) {
        CHECK(std::abs(scan.inf_pos) < 1e-10);
        CHECK(std::abs(scan.sup_neg) < 1e-10);
    }
}

TEST_CASE("drift envelope: windowed limit converges monotonically enough") {
    // plain finite-T averages approach the limit with an O(1/T) envelope
    auto sys = canonical_system(parse_expression("k2", 2));
    Observable base = [](const std::vector<double>& y) { return std::cos(y[1]); };
    std::vector<double> pt{0.0, 0.9, 0.0, 1.0};
    auto lt = double_average(sys, base, 10.0, {pt});
    double inf = lt.samples[0].avg_inf;
    double prev = 1e300;
    for (double T : {10.0, 20.0, 40.0, 80.0}) {
        auto cur = double_average(sys, base, T, {pt});
        double drift = std::abs(cur.samples[0].avg_T - inf);
        CHECK(drift <= 1.1 * std::max(prev, 2.0 / T));
        prev = drift;
    }
}
