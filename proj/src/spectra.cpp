#include "orbitavg/spectra.hpp"

#include "orbitavg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace orbitavg {

namespace {

constexpr double PI = 3.14159265358979323846264338327950288;

std::vector<std::array<double, 3>> fibonacci_sphere(int count) {
    std::vector<std::array<double, 3>> pts;
    const double ga = PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / count;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        pts.push_back({r * std::cos(ga * i), r * std::sin(ga * i), z});
    }
    return pts;
}

}  // namespace

PeriodProfile build_profile_constant(double T0) {
    if (T0 <= 0) throw std::invalid_argument("build_profile: period must be positive");
    PeriodProfile p;
    p.E_ref = 0.0;
    p.T = [T0](double) { return T0; };
    p.g = [T0](double E) { return T0 * E / (2 * PI); };
    p.f = [T0](double v) { return 2 * PI * v / T0; };
    return p;
}

PeriodProfile build_profile_sphere() {
    PeriodProfile p;
    p.E_ref = 1.0;
    p.T = [](double E) {
        if (E <= 0) throw std::domain_error("sphere profile: E must be positive");
        return PI / std::sqrt(E);
    };
    p.g = [](double E) { return std::sqrt(E); };
    p.f = [](double v) { return (v + 1.0) * (v + 1.0); };
    return p;
}

PeriodProfile build_profile_tabulated(std::vector<std::array<double, 2>> table,
                                      double E_ref) {
    if (table.size() < 2 || table.front()[0] != 0.0)
        throw std::invalid_argument("build_profile: table must start at E = 0");
    for (size_t j = 0; j < table.size(); ++j) {
        if (table[j][1] <= 0)
            throw std::invalid_argument("build_profile: non-monotone action (T <= 0)");
        if (j && table[j][0] <= table[j - 1][0])
            throw std::invalid_argument("build_profile: energies must increase");
    }
    // prefix integrals of the piecewise-linear interpolant of T/2pi
    auto tbl = std::make_shared<std::vector<std::array<double, 2>>>(std::move(table));
    auto pre = std::make_shared<std::vector<double>>(tbl->size(), 0.0);
    for (size_t j = 1; j < tbl->size(); ++j)
        (*pre)[j] = (*pre)[j - 1] +
                    ((*tbl)[j][0] - (*tbl)[j - 1][0]) *
                        ((*tbl)[j][1] + (*tbl)[j - 1][1]) / (4 * PI);
    auto interpT = [tbl](double E) {
        if (E < (*tbl).front()[0] || E > (*tbl).back()[0])
            throw std::domain_error("build_profile: E outside the tabulated window");
        size_t j = 1;
        while (j + 1 < tbl->size() && (*tbl)[j][0] < E) ++j;
        double t = (E - (*tbl)[j - 1][0]) / ((*tbl)[j][0] - (*tbl)[j - 1][0]);
        return (1 - t) * (*tbl)[j - 1][1] + t * (*tbl)[j][1];
    };
    auto action = [tbl, pre, interpT](double E) {
        size_t j = 1;
        while (j + 1 < tbl->size() && (*tbl)[j][0] < E) ++j;
        double E0 = (*tbl)[j - 1][0];
        return (*pre)[j - 1] + (E - E0) * ((*tbl)[j - 1][1] + interpT(E)) / (4 * PI);
    };
    PeriodProfile p;
    p.E_ref = E_ref;
    p.T = interpT;
    p.g = action;
    double gref = action(E_ref);
    double Emax = tbl->back()[0];
    p.f = [action, interpT, gref, Emax](double v) {
        double lo = 0.0, hi = Emax;
        double target = v + gref;
        if (target < 0 || target > action(Emax))
            throw std::domain_error("profile inverse: value outside the window");
        for (int it = 0; it < 200 && hi - lo > 1e-15 * (1 + hi); ++it) {
            double mid = 0.5 * (lo + hi);
            (action(mid) < target ? lo : hi) = mid;
        }
        double E = 0.5 * (lo + hi);
        for (int it = 0; it < 4; ++it)
            E -= (action(E) - target) / (interpT(E) / (2 * PI));
        return std::clamp(E, 0.0, Emax);
    };
    return p;
}

std::array<double, 2> TorusData::theta(double h) const {
    return {S[0] / (2 * PI * h) + alpha[0] / 4.0,
            S[1] / (2 * PI * h) + alpha[1] / 4.0};
}

TorusData sphere_torus_defaults() {
    TorusData t;
    t.S = {2 * PI, 0.0};
    t.alpha = {-2, 0};
    return t;
}

double torus_xi(const TorusData& torus, double h, long k, int j) {
    return h * (static_cast<double>(k) - torus.alpha[j] / 4.0) -
           torus.S[j] / (2 * PI);
}

ClusterRectangles cluster_rectangles(const PeriodProfile& profile,
                                     const TorusData& torus, double h,
                                     double epsilon, double E_lo, double E_hi,
                                     double c_re, double c_im, bool s_real) {
    if (h <= 0 || epsilon <= 0)
        throw std::invalid_argument("cluster_rectangles: h, epsilon must be positive");
    double xi_lo = profile.g(E_lo) - profile.g(profile.E_ref);
    double xi_hi = profile.g(E_hi) - profile.g(profile.E_ref);
    long k_lo = static_cast<long>(
        std::ceil((xi_lo + torus.S[0] / (2 * PI)) / h + torus.alpha[0] / 4.0 - 1e-9));
    long k_hi = static_cast<long>(
        std::floor((xi_hi + torus.S[0] / (2 * PI)) / h + torus.alpha[0] / 4.0 + 1e-9));
    double hw_re = c_re * (epsilon * epsilon + h * h);
    double hw_im = c_im * (s_real ? epsilon * epsilon * epsilon + epsilon * h
                                  : epsilon * epsilon + epsilon * h);
    ClusterRectangles out;
    for (long k = k_lo; k <= k_hi; ++k) {
        double center = profile.f(torus_xi(torus, h, k, 0));
        if (center < E_lo || center > E_hi) continue;
        out.rects.push_back({k, center, hw_re, hw_im});
    }
    for (size_t j = 1; j < out.rects.size(); ++j)
        if (out.rects[j].center - out.rects[j - 1].center <=
            out.rects[j].half_width_re + out.rects[j - 1].half_width_re)
            out.disjoint = false;
    return out;
}

std::vector<LatticePoint> quasi_lattice(const QuasiEigLattice& lat,
                                        std::array<long, 2> k1_range,
                                        std::array<long, 2> k2_range,
                                        double validity_radius) {
    if ((lat.regime == Regime::thm43 || lat.regime == Regime::thm44) &&
        !lat.t_avg_inf)
        throw std::invalid_argument("quasi_lattice: regime requires t_avg_inf");
    if (lat.regime == Regime::thm44 && !lat.im_q1_inf)
        throw std::invalid_argument("quasi_lattice: regime thm44 requires im_q1_inf");
    std::vector<LatticePoint> out;
    for (long k1 = k1_range[0]; k1 <= k1_range[1]; ++k1)
        for (long k2 = k2_range[0]; k2 <= k2_range[1]; ++k2) {
            std::array<double, 2> xi{torus_xi(lat.torus, lat.h, k1, 0),
                                     torus_xi(lat.torus, lat.h, k2, 1)};
            if (std::hypot(xi[0], xi[1]) > validity_radius) continue;
            std::complex<double> z(lat.profile.f(xi[0]), 0.0);
            if (lat.s_avg) z += lat.epsilon * lat.epsilon * lat.s_avg(xi);
            if (lat.t_avg_inf)
                z += std::complex<double>(
                    0.0, lat.epsilon * lat.epsilon * lat.epsilon * *lat.t_avg_inf);
            if (lat.regime == Regime::thm44)
                z += std::complex<double>(0.0, lat.h * lat.epsilon * *lat.im_q1_inf);
            out.push_back({{k1, k2}, z});
        }
    return out;
}

std::vector<BarrierPoint> barrier_lattice(
    const std::vector<long>& lambda,
    const std::function<double(const std::vector<double>&)>& s_of_xi,
    const std::vector<CriticalValue>& critical_values, double E0, double h,
    double epsilon, long k_max, double eta) {
    if (lambda.size() != 2)
        throw std::invalid_argument("barrier_lattice: expected two frequencies");
    double ht = h / (epsilon * epsilon);
    std::vector<BarrierPoint> out;
    for (long k1 = 0; k1 <= k_max; ++k1)
        for (long k2 = 0; k2 <= k_max; ++k2) {
            std::vector<double> xi{ht * (k1 + 0.5), ht * (k2 + 0.5)};
            double action = lambda[0] * xi[0] + lambda[1] * xi[1];
            double s = s_of_xi ? s_of_xi(xi) : 0.0;
            // -i eps^2 (lambda.xi + i eps^2 s)
            std::complex<double> E(E0 + epsilon * epsilon * epsilon * epsilon * s,
                                   -epsilon * epsilon * action);
            double im2 = (E.imag()) * (E.imag());
            bool excl = false;
            for (const auto& cv : critical_values)
                if (std::abs(E.real() - E0 - cv.value * im2) < eta * im2) excl = true;
            out.push_back({{k1, k2}, E, excl});
        }
    return out;
}

std::function<double(double)> action_coordinates(
    const PolySymbol& s_reduced, std::array<double, 2> F_window, double F0,
    std::optional<std::array<double, 3>> axis) {
    if (s_reduced.n() != 3)
        throw std::invalid_argument("action_coordinates: expected n = 3");
    if (F0 < F_window[0] || F0 > F_window[1])
        throw std::invalid_argument("action_coordinates: F0 outside the window");
    PolySymbol s = s_reduced.to_float();
    auto val = [s](const std::array<double, 3>& y) {
        std::vector<double> pt{y[0], y[1], y[2], 0, 0, 0};
        return s.evaluate_real(pt).real();
    };
    // enclosed critical point of the band: sampled extremum beyond the
    // window on one side
    double sign = -1.0;  // area about a maximum shrinks as F grows
    std::array<double, 3> a{};
    if (axis) {
        a = *axis;
        if (val(a) <= F_window[1]) sign = 1.0;
    } else {
        auto pts = fibonacci_sphere(4000);
        double best_max = -1e300, best_min = 1e300;
        std::array<double, 3> argmax{}, argmin{};
        for (const auto& y : pts) {
            double v = val(y);
            if (v > best_max) { best_max = v; argmax = y; }
            if (v < best_min) { best_min = v; argmin = y; }
        }
        if (best_max > F_window[1]) {
            a = argmax;
        } else if (best_min < F_window[0]) {
            a = argmin;
            sign = 1.0;
        } else {
            throw std::invalid_argument(
                "action_coordinates: no enclosed critical point found");
        }
    }
    double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    for (auto& v : a) v /= na;

    DynamicalSystem reduced = reduced_sphere_system(s);
    auto area_of = [=](double F) {
        if (F <= F_window[0] || F >= F_window[1])
            throw std::domain_error("action_coordinates: F outside the open window");
        // seed on the level set along a great circle through the axis
        std::array<double, 3> u{-a[1], a[0], 0.0};
        double nu = std::sqrt(u[0] * u[0] + u[1] * u[1]);
        if (nu < 1e-8) { u = {1, 0, 0}; nu = 1; }
        for (auto& v : u) v /= nu;
        auto arc = [&](double tau) {
            std::array<double, 3> y;
            for (int j = 0; j < 3; ++j)
                y[j] = std::cos(tau) * a[j] + std::sin(tau) * u[j];
            return y;
        };
        double side0 = val(a) - F;
        double lo = 0, hi = -1;
        for (int j = 1; j <= 400; ++j) {
            double tau = PI * j / 400.0;
            if ((val(arc(tau)) - F) * side0 < 0) { hi = tau; lo = PI * (j - 1) / 400.0; break; }
        }
        if (hi < 0)
            throw std::runtime_error("action_coordinates: level set not found");
        for (int it = 0; it < 100; ++it) {
            double mid = 0.5 * (lo + hi);
            ((val(arc(mid)) - F) * side0 > 0 ? lo : hi) = mid;
        }
        std::array<double, 3> y0 = arc(0.5 * (lo + hi));

        // unit-speed tracing with the area and winding one-forms
        DynamicalSystem sys;
        sys.dim = 5;
        auto base = reduced.rhs;
        std::array<double, 3> ax = a;
        sys.rhs = [base, ax](const std::vector<double>& st, std::vector<double>& d) {
            std::vector<double> y{st[0], st[1], st[2]}, v;
            base(y, v);
            double sp = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            if (sp < 1e-13)
                throw std::runtime_error("action_coordinates: level curve stalls");
            for (auto& w : v) w /= sp;
            double ct = y[0] * ax[0] + y[1] * ax[1] + y[2] * ax[2];
            double uxsq = std::max(1e-14, 1.0 - ct * ct);
            double cx = y[1] * v[2] - y[2] * v[1];
            double cy = y[2] * v[0] - y[0] * v[2];
            double cz = y[0] * v[1] - y[1] * v[0];
            double dphi = (ax[0] * cx + ax[1] * cy + ax[2] * cz) / uxsq;
            d = {v[0], v[1], v[2], (1.0 - ct) * dphi, dphi};
        };
        std::vector<double> st{y0[0], y0[1], y0[2], 0.0, 0.0};
        double step = 0.05;
        int guard = 0;
        while (std::abs(st[4]) < 2 * PI) {
            std::vector<double> prev = st;
            integrate(sys, st, step, 1e-11);
            if (++guard > 20000)
                throw std::runtime_error("action_coordinates: tracing did not close");
            if (std::abs(st[4]) >= 2 * PI) {
                // bisect the final partial step to land exactly on 2 pi
                double tlo = 0, thi = step;
                for (int it = 0; it < 60; ++it) {
                    double tm = 0.5 * (tlo + thi);
                    std::vector<double> probe = prev;
                    integrate(sys, probe, tm, 1e-11);
                    (std::abs(probe[4]) < 2 * PI ? tlo : thi) = tm;
                }
                st = prev;
                integrate(sys, st, 0.5 * (tlo + thi), 1e-11);
                break;
            }
        }
        return std::abs(st[3]);
    };
    double A0 = area_of(F0);
    return [area_of, A0, sign](double F) {
        return sign * (area_of(F) - A0) / (2 * PI);
    };
}

}  // namespace orbitavg
