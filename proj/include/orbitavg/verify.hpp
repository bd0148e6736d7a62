// Ground-truth spectral computation: assemble -h^2 Delta + i eps q(x) in
// a real spherical-harmonic basis, diagonalize, extract clusters, and
// compare against the analytic predictions.

#pragma once

#include "orbitavg/polysymbol.hpp"
#include "orbitavg/spectra.hpp"

#include <complex>
#include <string>

namespace orbitavg {

struct SphereOperatorSpec {
    double h = 0.0;
    double epsilon = 0.0;
    PolySymbol q;     // polynomial in x only, degree <= 3
    int l_min = 0;    // reported window
    int l_max = 0;
    int pad = 0;      // extra degrees retained on each side, >= 2 deg(q)
};

/// Real spherical harmonic label: p-hat_l^m(cos theta) times cos(m phi),
/// sin(m phi), or the constant for m = 0.
struct BasisFunction {
    int l = 0;
    int m = 0;
    bool sine = false;
};

struct ComplexMatrix {
    int n = 0;
    std::vector<std::complex<double>> a;

    static ComplexMatrix zero(int n) {
        return ComplexMatrix{n, std::vector<std::complex<double>>(
                                    static_cast<size_t>(n) * n)};
    }
    std::complex<double>& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
    const std::complex<double>& at(int i, int j) const {
        return a[static_cast<size_t>(i) * n + j];
    }
};

std::vector<BasisFunction> harmonic_basis(int l_lo, int l_hi);

/// Multiplication matrix of the coordinate x_axis (0-based) over the
/// basis, by Gauss-Legendre quadrature in cos theta and the analytic
/// azimuthal integrals.  Real symmetric; couples l with l +- 1 only.
std::vector<double> coordinate_matrix(const std::vector<BasisFunction>& basis,
                                      int axis);

/// Multiplication matrix of a real position polynomial (repeated
/// application of the coordinate matrices within the basis window).
std::vector<double> multiplication_matrix(const std::vector<BasisFunction>& basis,
                                          const PolySymbol& q);

struct SphereOperator {
    SphereOperatorSpec spec;
    std::vector<BasisFunction> basis;  // padded window
    std::vector<double> diag;          // h^2 l (l+1)
    ComplexMatrix A;                   // diag + i eps q
};

SphereOperator assemble(const SphereOperatorSpec& spec);

/// All eigenvalues of a dense complex matrix: balancing, connected-
/// component splitting, Householder Hessenberg reduction, shifted QR
/// with deflation.  Deterministic ordering (by real, then imaginary
/// part).  Components solved in parallel, capped by ORBITAVG_THREADS.
std::vector<std::complex<double>> eigensolve(const ComplexMatrix& A);

/// Upper bound on the smallest singular value of A - z I via a few
/// inverse-iteration steps (residual audit).
double residual_probe(const ComplexMatrix& A, std::complex<double> z);

struct Cluster {
    long k1 = 0;
    double center = 0;
    std::vector<std::complex<double>> eigenvalues;
    double width_re = 0;  // max |Re z - center|
    double width_im = 0;  // max |Im z|
    std::vector<double> subcluster_values;  // eps^-2 (Re z - center)
};

struct ClusterReport {
    double h = 0, epsilon = 0;
    std::vector<Cluster> clusters;
    int unassigned = 0;
    double empirical_c_re = 0;       // max |Re z - center| / (eps^2 + h^2)
    double empirical_c_im = 0;       // max |Im z| / (eps h)
    double lattice_distance = -1.0;  // sup_z min_lattice |z - w|, if supplied
};

ClusterReport extract_clusters(const std::vector<std::complex<double>>& eigs,
                               const ClusterRectangles& rects, double h,
                               double epsilon,
                               const std::vector<LatticePoint>* lattice = nullptr);

/// Kolmogorov-Smirnov distance between the sub-cluster values of one
/// cluster and the pushforward of the uniform measure on |y| = 1 under
/// s_reduced.
double subcluster_distribution_test(const Cluster& cluster,
                                    const PolySymbol& s_reduced);

/// Second-order degenerate perturbation theory on the degree-l
/// eigenspace: eigenvalues of E_l + (i eps)^2 P_l X (E_l - D)^-1 X P_l.
std::vector<std::complex<double>> perturbation_oracle(const SphereOperatorSpec& spec,
                                                      int l);

/// Damped-wave preset: the pipeline at eps = h with perturbation 2a,
/// a odd.  Rectangles centered at the exact h^2 l (l+1).
ClusterReport damped_wave_preset(const PolySymbol& a, int l_min, int l_max,
                                 int pad, double c_re = 3.0, double c_im = 10.0);

// ---- export ----

void export_lattice_csv(const std::vector<LatticePoint>& lattice,
                        const std::string& path);
/// Columns: index, re, im, cluster_k1 (-1 when unassigned),
/// subcluster_value.
void export_spectrum_csv(const std::vector<std::complex<double>>& eigs,
                         const ClusterReport* report, const std::string& path);
void export_report_json(const ClusterReport& report, const std::string& path);
ClusterReport import_report_json(const std::string& path);

int worker_count();

}  // namespace orbitavg
