#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "orbitavg/flow.hpp"
#include "orbitavg/io.hpp"

#include <random>

using namespace orbitavg;

namespace {

PolySymbol random_poly(std::mt19937& rng, int n, Frame fr, int nterms, int maxdeg) {
    std::uniform_int_distribution<int> ed(0, maxdeg);
    std::uniform_int_distribution<int> cd(-5, 5);
    PolySymbol p(n, fr);
    for (int t = 0; t < nterms; ++t) {
        Monomial m(n);
        int left = maxdeg;
        for (auto& e : m.e) { e = ed(rng) % (left + 1); left -= e; }
        p.add_term(m, Coeff(ExactC(Rational(cd(rng)), Rational(cd(rng)))));
    }
    return p;
}

PolySymbol random_cubic(std::mt19937& rng, int n, Frame fr) {
    return random_poly(rng, n, fr, 6, 3);
}

PolySymbol oscillator_p2(const std::vector<long>& lam) {
    int n = static_cast<int>(lam.size());
    PolySymbol p(n, Frame::yeta);
    for (int j = 0; j < n; ++j) {
        Monomial m(n);
        m.e[j] = 1;
        m.e[n + j] = 1;
        p.add_term(m, Coeff(ExactC(Rational(0), Rational(lam[j]))));
    }
    return p;
}

double dist(const PolySymbol& a, const PolySymbol& b) {
    return (a - b).max_abs_coeff();
}

}  // namespace

TEST_CASE("flow data: period and resonance vector") {
    PeriodicFlow f11({1, 1});
    CHECK(f11.g == 1);
    CHECK(f11.T == doctest::Approx(2 * 3.14159265358979323846));
    REQUIRE(f11.k0.has_value());
    CHECK(*f11.k0 == std::vector<long>{1, -1});

    PeriodicFlow f12({1, 2});
    REQUIRE(f12.k0.has_value());
    CHECK(*f12.k0 == std::vector<long>{2, -1});

    PeriodicFlow f22({2, 2});
    CHECK(f22.g == 2);
    CHECK(*f22.k0 == std::vector<long>{1, -1});

    CHECK(!PeriodicFlow({3}).k0.has_value());
    CHECK_THROWS(PeriodicFlow({1, 0}));
    CHECK_THROWS(PeriodicFlow({}));
}

TEST_CASE("flow_apply basics") {
    PeriodicFlow flow({1, 1});
    auto inv = parse_expression("y1*n1", 2);
    CHECK(dist(flow_apply(flow, inv, 1.7), inv) == 0.0);

    auto y1 = parse_expression("y1", 2);
    CHECK(dist(flow_apply(flow, y1, 3.14159265358979323846), -y1) < 1e-14);
}

TEST_CASE("flow_apply group law") {
    PeriodicFlow flow({1, 2});
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> tu(-3.0, 3.0);
    for (int trial = 0; trial < 10; ++trial) {
        auto f = random_cubic(rng, 2, Frame::yeta);
        double t = tu(rng), s = tu(rng);
        auto a = flow_apply(flow, flow_apply(flow, f, t), s);
        auto b = flow_apply(flow, f, t + s);
        CHECK(dist(a, b) < 1e-12 * std::max(1.0, f.max_abs_coeff()));
    }
}

TEST_CASE("average: cubic polynomials vanish for lambda=(1,1)") {
    PeriodicFlow flow({1, 1});
    std::mt19937 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        PolySymbol p3(2, Frame::xk);
        std::uniform_int_distribution<int> cd(-5, 5);
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; a + b <= 3; ++b)
                for (int c = 0; a + b + c <= 3; ++c) {
                    int d = 3 - a - b - c;
                    Monomial m(std::vector<int>{a, b}, std::vector<int>{c, d});
                    p3.add_term(m, Coeff(ExactC(Rational(cd(rng)))));
                }
        CHECK(average(flow, p3).is_zero());
    }
    auto cube = parse_expression("x1^3", 2);
    CHECK(average(flow, cube).is_zero());
}

TEST_CASE("average is an exact projection commuting with the flow") {
    PeriodicFlow flow({1, 2});
    auto p2 = oscillator_p2({1, 2});
    std::mt19937 rng(19);
    for (int trial = 0; trial < 8; ++trial) {
        auto f = random_poly(rng, 2, Frame::yeta, 6, 4);
        auto af = average(flow, f);
        CHECK(af.exact());
        CHECK(average(flow, af) == af);
        CHECK(poisson_bracket(p2, af).is_zero());
    }
}

TEST_CASE("average annihilates brackets with invariants") {
    PeriodicFlow flow({1, 2});
    std::mt19937 rng(29);
    for (int trial = 0; trial < 6; ++trial) {
        auto h = average(flow, random_poly(rng, 2, Frame::yeta, 6, 4));
        auto f = random_poly(rng, 2, Frame::yeta, 6, 4);
        CHECK(average(flow, poisson_bracket(h, f)) ==
              poisson_bracket(h, average(flow, f)));
    }
}

TEST_CASE("solve_homological: x1^3 coefficients for lambda=(1,1)") {
    PeriodicFlow flow({1, 1});
    auto q = to_oscillator(parse_expression("x1^3", 2));
    auto G = solve_homological(flow, q);
    // each monomial y1^k eta1^(3-k) divided by i(2k-3)
    for (const auto& [m, c] : q.terms()) {
        long k = m.e[0];
        Coeff expect = c * Coeff(ExactC::inv_i(Rational(2 * k - 3)));
        CHECK(G.coeff(m) == expect);
    }
    CHECK(G.size() == q.size());
    CHECK(average(flow, G).is_zero());
}

TEST_CASE("solve_homological: exact residual identity on random cubics") {
    PeriodicFlow flow({1, 2});
    auto p2 = oscillator_p2({1, 2});
    std::mt19937 rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        auto f = random_cubic(rng, 2, Frame::yeta);
        for (bool minimal : {false, true}) {
            auto G = solve_homological(flow, f, minimal);
            CHECK((poisson_bracket(p2, G) + average(flow, f) - f).is_zero());
            if (minimal) CHECK(average(flow, G).is_zero());
        }
    }
}

TEST_CASE("solve_homological: invariant input") {
    PeriodicFlow flow({1, 1});
    auto f = parse_expression("y1*n1 + 2*y2*n2", 2);
    auto p2 = oscillator_p2({1, 1});
    auto G = solve_homological(flow, f);
    CHECK(poisson_bracket(p2, G).is_zero());
    CHECK((f - average(flow, f)).is_zero());
    CHECK(solve_homological(flow, f, true).is_zero());
}

TEST_CASE("solve_homological is linear") {
    PeriodicFlow flow({1, 2});
    std::mt19937 rng(61);
    for (int trial = 0; trial < 6; ++trial) {
        auto f = random_cubic(rng, 2, Frame::yeta);
        auto g = random_cubic(rng, 2, Frame::yeta);
        CHECK(solve_homological(flow, f + g) ==
              solve_homological(flow, f) + solve_homological(flow, g));
    }
}

TEST_CASE("g0_weighted_average coincides with solve_homological") {
    std::mt19937 rng(67);
    for (auto lam : {std::vector<long>{1, 1}, std::vector<long>{1, 2},
                     std::vector<long>{2, 2}}) {
        PeriodicFlow flow(lam);
        for (int trial = 0; trial < 6; ++trial) {
            auto f = random_poly(rng, 2, Frame::yeta, 6, 4);
            CHECK(g0_weighted_average(flow, f) == solve_homological(flow, f));
            if (average(flow, f).is_zero())
                CHECK(average(flow, g0_weighted_average(flow, f)).is_zero());
        }
    }
}

TEST_CASE("g0_weighted_average: mean-zero input has mean-zero output") {
    PeriodicFlow flow({1, 1});
    std::mt19937 rng(71);
    for (int trial = 0; trial < 10; ++trial) {
        auto f = random_poly(rng, 2, Frame::yeta, 6, 4);
        f = f - average(flow, f);
        CHECK(average(flow, g0_weighted_average(flow, f)).is_zero());
    }
}

TEST_CASE("g0_weighted_average: constant input") {
    PeriodicFlow flow({2, 2});
    auto c = PolySymbol::constant(2, Coeff(ExactC(Rational(3))), Frame::yeta);
    auto G = c * Coeff(ExactC(PiPoly(Ext(Rational(1, 2))).times_pi(), PiPoly()));
    CHECK(g0_weighted_average(flow, c) == G);  // 3 * pi/2
    auto p2 = oscillator_p2({2, 2});
    CHECK((poisson_bracket(p2, g0_weighted_average(flow, c)) +
           average(flow, c) - c).is_zero());
}

TEST_CASE("g0_weighted_average matches time-weighted quadrature") {
    PeriodicFlow flow({1, 2});
    std::mt19937 rng(73);
    for (int trial = 0; trial < 5; ++trial) {
        auto f = random_cubic(rng, 2, Frame::yeta);
        // Simpson quadrature of (1/T) int t f(exp(tH)) dt
        int np = 1 << 12;
        double h = flow.T / np;
        PolySymbol acc(2, Frame::yeta);
        for (int j = 0; j <= np; ++j) {
            double w = (j == 0 || j == np) ? 1.0 : (j % 2 ? 4.0 : 2.0);
            double t = j * h;
            acc = acc + flow_apply(flow, f, t) * Coeff(w * h / 3.0 * t / flow.T);
        }
        CHECK(dist(acc, g0_weighted_average(flow, f)) < 1e-10);
    }
}

TEST_CASE("average_numeric agrees with average") {
    PeriodicFlow flow({1, 1});
    std::mt19937 rng(79);
    for (int trial = 0; trial < 100; ++trial) {
        auto f = random_cubic(rng, 2, Frame::yeta);
        CHECK(dist(average_numeric(flow, f), average(flow, f)) < 1e-10);
    }
    PeriodicFlow flow12({1, 2});
    for (int trial = 0; trial < 10; ++trial) {
        auto f = random_poly(rng, 2, Frame::yeta, 6, 4);
        CHECK(dist(average_numeric(flow12, f), average(flow12, f)) < 1e-10);
    }
}

TEST_CASE("average_numeric: invariant symbols pass through") {
    PeriodicFlow flow({1, 2});
    auto f = parse_expression("y1*n1 - 3*y2*n2 + y1^2*n1^2", 2);
    CHECK(dist(average_numeric(flow, f), f) < 1e-13);
}

TEST_CASE("average_numeric rejects bad panel counts") {
    PeriodicFlow flow({1, 1});
    auto f = parse_expression("y1", 2);
    CHECK_THROWS(average_numeric(flow, f, 7));
    CHECK_THROWS(average_numeric(flow, f, 48));
}

TEST_CASE("real-canonical round trip inside average") {
    PeriodicFlow flow({1, 1});
    std::mt19937 rng(83);
    for (int trial = 0; trial < 6; ++trial) {
        auto f = random_poly(rng, 2, Frame::xk, 6, 4);
        auto af = average(flow, f);
        CHECK(af.frame() == Frame::xk);
        CHECK(af == from_oscillator(average(flow, to_oscillator(f))));
    }
}
