#include "orbitavg/dynamics.hpp"

#include <cmath>
#include <memory>

namespace orbitavg {

namespace {

constexpr double PI = 3.14159265358979323846264338327950288;

/// Time-dependent right-hand side f(t, y, dy).
using Rhs = std::function<void(double, const std::vector<double>&,
                               std::vector<double>&)>;

void rk4(const Rhs& f, double t, double h, const std::vector<double>& y,
         std::vector<double>& out) {
    size_t n = y.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    f(t, y, k1);
    for (size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
    f(t + 0.5 * h, tmp, k2);
    for (size_t j = 0; j < n; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
    f(t + 0.5 * h, tmp, k3);
    for (size_t j = 0; j < n; ++j) tmp[j] = y[j] + h * k3[j];
    f(t + h, tmp, k4);
    out.resize(n);
    for (size_t j = 0; j < n; ++j)
        out[j] = y[j] + h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
}

/// Step-doubling adaptive RK4 from t = 0 to t = T.
void integrate_rhs(const Rhs& f, std::vector<double>& y, double T, double tol) {
    if (T == 0) return;
    double dir = T > 0 ? 1.0 : -1.0;
    double t = 0, h = dir * std::min(0.1, std::abs(T));
    std::vector<double> full, half, two;
    int rejects = 0;
    while (dir * (T - t) > 1e-14 * std::abs(T)) {
        if (dir * (t + h) > dir * T) h = T - t;
        rk4(f, t, h, y, full);
        rk4(f, t, h / 2, y, half);
        rk4(f, t + h / 2, h / 2, half, two);
        double err = 0;
        for (size_t j = 0; j < y.size(); ++j)
            err = std::max(err, std::abs(two[j] - full[j]) / 15.0);
        double allowed = tol * std::abs(h);
        if (err <= allowed || std::abs(h) < 1e-12) {
            t += h;
            // local extrapolation: the two half steps carry the smaller error
            for (size_t j = 0; j < y.size(); ++j)
                y[j] = two[j] + (two[j] - full[j]) / 15.0;
            rejects = 0;
        } else if (++rejects > 60) {
            throw std::runtime_error("integrate: step control failed");
        }
        double fac = err > 0 ? 0.9 * std::pow(allowed / err, 0.25) : 2.0;
        h *= std::min(2.0, std::max(0.2, fac));
    }
}

/// (1/T) int_0^T weight(t/T) base(flow_t(pt)) dt via an augmented
/// quadrature variable.
double flow_average(const DynamicalSystem& sys, const Observable& base,
                    const std::vector<double>& pt, double T,
                    const std::function<double(double)>& weight) {
    std::vector<double> y = pt;
    y.push_back(0.0);
    std::vector<double> state(sys.dim), ds(sys.dim);
    Rhs f = [&](double t, const std::vector<double>& yy, std::vector<double>& dy) {
        for (int j = 0; j < sys.dim; ++j) state[j] = yy[j];
        sys.rhs(state, ds);
        dy.resize(sys.dim + 1);
        for (int j = 0; j < sys.dim; ++j) dy[j] = ds[j];
        dy[sys.dim] = weight(t / T) * base(state);
    };
    integrate_rhs(f, y, T, 1e-10);
    return y[sys.dim] / T;
}

double plain_average(const DynamicalSystem& sys, const Observable& base,
                     const std::vector<double>& pt, double T) {
    return flow_average(sys, base, pt, T, [](double) { return 1.0; });
}

/// Long-time limit: windowed (Fejer-type) average with T doubling.  The
/// window kills the oscillating O(1/T) tail of the plain average, so the
/// drift criterion converges at moderate T.
double limit_average(const DynamicalSystem& sys, const Observable& base,
                     const std::vector<double>& pt, double T0) {
    auto window = [](double u) { return 1.0 - std::cos(2.0 * PI * u); };
    double T = std::max(T0, 8.0);
    double prev = flow_average(sys, base, pt, T, window);
    for (int it = 0; it < 12; ++it) {
        T *= 2;
        double cur = flow_average(sys, base, pt, T, window);
        if (std::abs(cur - prev) < 1e-8) return cur;
        prev = cur;
    }
    throw std::runtime_error("double_average: long-time limit did not converge");
}

}  // namespace

DynamicalSystem canonical_system(const PolySymbol& s) {
    if (s.frame() != Frame::xk)
        throw std::invalid_argument("canonical_system: real-canonical frame required");
    int n = s.n();
    auto dx = std::make_shared<std::vector<PolySymbol>>();
    for (int j = 0; j < 2 * n; ++j) dx->push_back(s.derivative(j).to_float());
    DynamicalSystem sys;
    sys.dim = 2 * n;
    sys.rhs = [n, dx](const std::vector<double>& y, std::vector<double>& dy) {
        dy.resize(2 * n);
        for (int j = 0; j < n; ++j) {
            dy[j] = (*dx)[n + j].evaluate_real(y).real();
            dy[n + j] = -(*dx)[j].evaluate_real(y).real();
        }
    };
    return sys;
}

DynamicalSystem reduced_sphere_system(const PolySymbol& s) {
    if (s.n() != 3)
        throw std::invalid_argument("reduced_sphere_system: expected n = 3");
    auto dx = std::make_shared<std::vector<PolySymbol>>();
    for (int j = 0; j < 3; ++j) dx->push_back(s.derivative(j).to_float());
    DynamicalSystem sys;
    sys.dim = 3;
    sys.rhs = [dx](const std::vector<double>& y, std::vector<double>& dy) {
        std::vector<double> full{y[0], y[1], y[2], 0, 0, 0};
        double g[3];
        for (int j = 0; j < 3; ++j) g[j] = (*dx)[j].evaluate_real(full).real();
        dy.resize(3);
        dy[0] = g[1] * y[2] - g[2] * y[1];
        dy[1] = g[2] * y[0] - g[0] * y[2];
        dy[2] = g[0] * y[1] - g[1] * y[0];
    };
    return sys;
}

Observable symbol_observable(const PolySymbol& f) {
    auto p = std::make_shared<PolySymbol>(f.to_float());
    return [p](const std::vector<double>& y) { return p->evaluate_real(y).real(); };
}

void integrate(const DynamicalSystem& sys, std::vector<double>& y, double T,
               double tol) {
    Rhs f = [&sys](double, const std::vector<double>& yy, std::vector<double>& dy) {
        sys.rhs(yy, dy);
    };
    integrate_rhs(f, y, T, tol);
}

LongTimeAverage double_average(const DynamicalSystem& sys, const Observable& base,
                               double T,
                               const std::vector<std::vector<double>>& grid) {
    LongTimeAverage out;
    out.T = T;
    out.samples.reserve(grid.size());
    for (const auto& pt : grid) {
        TorusSample s;
        s.point = pt;
        s.avg_T = plain_average(sys, base, pt, T);
        s.avg_inf = limit_average(sys, base, pt, T);
        out.samples.push_back(std::move(s));
    }
    return out;
}

std::vector<double> solve_secular(const DynamicalSystem& sys, const Observable& base,
                                  double T,
                                  const std::vector<std::vector<double>>& grid,
                                  double* max_residual) {
    auto kernel = [](double u) { return u - 1.0; };  // k(u) on [0,1], 0 outside
    auto G = [&](const std::vector<double>& pt) {
        // int_0^T k(u/T) base du; note no 1/T normalization on G itself
        return T * flow_average(sys, base, pt, T, kernel);
    };
    std::vector<double> vals;
    vals.reserve(grid.size());
    double worst = 0;
    for (const auto& pt : grid) {
        vals.push_back(G(pt));
        // residual of H_s G = base - avg_T by central differences along
        // the flow
        double h = 1e-4;
        std::vector<double> fwd = pt, bwd = pt;
        integrate(sys, fwd, h);
        integrate(sys, bwd, -h);
        double deriv = (G(fwd) - G(bwd)) / (2 * h);
        double target = base(pt) - plain_average(sys, base, pt, T);
        worst = std::max(worst, std::abs(deriv - target));
    }
    if (max_residual) *max_residual = worst;
    if (worst > 1e-6)
        throw std::runtime_error("solve_secular: residual check failed");
    return vals;
}

HypothesisReport check_global_hypothesis(
    const DynamicalSystem& sys, const Observable& base,
    const std::function<std::vector<std::vector<double>>(double)>& torus_points,
    double a, const std::vector<double>& b_list, double T0, double Tmax) {
    HypothesisReport rep;
    rep.a = a;
    static const int kBandSamples = 5;
    // the reference level is the long-time limit on the central torus
    // F = 0, which is constant there; use the mean over its samples
    double ref = 0;
    {
        auto central = torus_points(0.0);
        if (central.empty())
            throw std::invalid_argument("check_global_hypothesis: empty central torus");
        for (const auto& pt : central)
            ref += limit_average(sys, base, pt, T0);
        ref /= static_cast<double>(central.size());
    }
    for (double b : b_list) {
        HypothesisBandReport band;
        band.b = b;
        // band sample tori at F in [b, a] and the mirror band
        std::vector<std::vector<double>> pos, neg;
        for (int j = 0; j < kBandSamples; ++j) {
            double F = b + (a - b) * j / (kBandSamples - 1.0);
            for (auto& pt : torus_points(F)) pos.push_back(pt);
            for (auto& pt : torus_points(-F)) neg.push_back(pt);
        }
        for (double T = T0; T <= Tmax + 1e-12; T *= 2) {
            HypothesisScan scan;
            scan.T = T;
            scan.inf_pos = 1e300;
            scan.sup_neg = -1e300;
            for (const auto& pt : pos)
                scan.inf_pos = std::min(scan.inf_pos,
                                        plain_average(sys, base, pt, T) - ref);
            for (const auto& pt : neg)
                scan.sup_neg = std::max(scan.sup_neg,
                                        plain_average(sys, base, pt, T) - ref);
            band.scans.push_back(scan);
            if (!band.satisfied && scan.inf_pos > 0 && scan.sup_neg < 0) {
                band.satisfied = true;
                band.first_T = T;
                band.margin = std::min(scan.inf_pos, -scan.sup_neg);
            }
        }
        rep.bands.push_back(std::move(band));
    }
    return rep;
}

}  // namespace orbitavg
