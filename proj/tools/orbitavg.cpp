// Command-line front end: averaging, corrections, sphere reductions,
// quasi-eigenvalue lattices, and the spectral verification pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include "orbitavg/corrections.hpp"
#include "orbitavg/dynamics.hpp"
#include "orbitavg/io.hpp"
#include "orbitavg/sphere.hpp"
#include "orbitavg/spectra.hpp"
#include "orbitavg/verify.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace orbitavg;
using nlohmann::json;

namespace {

std::vector<long> parse_flow(const std::string& s) {
    std::vector<long> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stol(tok));
    return out;
}

PolySymbol load_symbol(const std::string& path, const std::string& expr, int n) {
    if (!expr.empty()) return parse_expression(expr, n);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return symbol_from_json(j);
}

void emit(const json& j, const std::string& out) {
    if (out.empty()) {
        std::cout << j.dump(2) << std::endl;
    } else {
        std::ofstream o(out);
        if (!o) throw std::runtime_error("cannot open " + out);
        o << j.dump(2) << '\n';
    }
}

json bundle_to_json(const CorrectionBundle& b) {
    json j;
    j["s_avg"] = symbol_to_json(b.s_avg);
    j["t_avg"] = symbol_to_json(b.t_avg);
    j["G0"] = symbol_to_json(b.G0);
    j["G1"] = symbol_to_json(b.G1);
    j["G2_residual"] = symbol_to_json(b.G2_residual);
    return j;
}

json hypothesis_to_json(const HypothesisReport& rep) {
    json j;
    j["a"] = rep.a;
    j["bands"] = json::array();
    for (const auto& band : rep.bands) {
        json jb;
        jb["b"] = band.b;
        jb["satisfied"] = band.satisfied;
        jb["first_T"] = band.first_T;
        jb["margin"] = band.margin;
        jb["scans"] = json::array();
        for (const auto& s : band.scans)
            jb["scans"].push_back(
                {{"T", s.T}, {"inf_pos", s.inf_pos}, {"sup_neg", s.sup_neg}});
        j["bands"].push_back(std::move(jb));
    }
    j["note"] = "thresholds are artifact-chosen; not-satisfied means "
                "undetermined up to Tmax";
    return j;
}

std::vector<std::complex<double>> load_spectrum_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::complex<double>> eigs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() < 3) throw std::runtime_error("bad spectrum row: " + line);
        eigs.emplace_back(std::stod(cols[1]), std::stod(cols[2]));
    }
    return eigs;
}

std::vector<LatticePoint> load_lattice_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line);
    std::vector<LatticePoint> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> cols;
        while (std::getline(ss, tok, ',')) cols.push_back(tok);
        if (cols.size() < 4) throw std::runtime_error("bad lattice row: " + line);
        pts.push_back({{std::stol(cols[0]), std::stol(cols[1])},
                       {std::stod(cols[2]), std::stod(cols[3])}});
    }
    return pts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"averaging calculus and spectral verification on the sphere"};
    app.set_config("--config", "", "plain-text key = value configuration file");
    app.require_subcommand(1);

    // ---- average / homological ----
    std::string flow_str = "1,1", poly_path, expr, out_path;
    int expr_n = 0;
    bool numeric = false;
    int panels = 4096;
    auto add_symbol_opts = [&](CLI::App* sub, bool with_numeric) {
        sub->add_option("--flow", flow_str, "frequency vector, e.g. 1,1");
        sub->add_option("--poly", poly_path, "polynomial JSON file");
        sub->add_option("--expr", expr, "inline expression instead of --poly");
        sub->add_option("--n", expr_n, "variable count for --expr");
        sub->add_option("--out", out_path, "output file (default: stdout)");
        if (with_numeric) {
            sub->add_flag("--numeric", numeric, "quadrature instead of exact");
            sub->add_option("--panels", panels, "quadrature panel count");
        }
    };
    auto* cmd_avg = app.add_subcommand("average", "trajectory average");
    add_symbol_opts(cmd_avg, true);
    auto* cmd_hom =
        app.add_subcommand("homological", "solve {p2, G} = f - <f>");
    add_symbol_opts(cmd_hom, false);

    // ---- corrections ----
    auto* cmd_cor =
        app.add_subcommand("corrections", "second/third averaged corrections");
    std::string q_path, r_path, w_path, q_expr;
    cmd_cor->add_option("--flow", flow_str, "frequency vector");
    cmd_cor->add_option("--q", q_path, "perturbation symbol JSON");
    cmd_cor->add_option("--q-expr", q_expr, "inline perturbation expression");
    cmd_cor->add_option("--n", expr_n, "variable count for --q-expr");
    cmd_cor->add_option("--r", r_path, "second-order symbol JSON");
    cmd_cor->add_option("--w", w_path, "third-order symbol JSON");
    cmd_cor->add_option("--out", out_path, "output file");

    // ---- hypothesis ----
    auto* cmd_hyp = app.add_subcommand(
        "hypothesis", "sign-separation scan for a sphere correction bundle");
    std::string bundle_path;
    double hyp_a = 0.05, hyp_t0 = 10.0, hyp_tmax = 160.0;
    std::vector<double> hyp_b{0.01};
    cmd_hyp->add_option("--bundle", bundle_path, "correction bundle JSON")
        ->required();
    cmd_hyp->add_option("--a", hyp_a, "outer band level");
    cmd_hyp->add_option("--b", hyp_b, "inner band levels")->delimiter(',');
    cmd_hyp->add_option("--t0", hyp_t0, "first averaging time");
    cmd_hyp->add_option("--tmax", hyp_tmax, "last averaging time");
    cmd_hyp->add_option("--out", out_path, "output file");

    // ---- sphere ----
    auto* cmd_radon = app.add_subcommand("sphere-radon", "great-circle average");
    cmd_radon->add_option("--q", q_path, "symbol JSON (n = 3)");
    cmd_radon->add_option("--q-expr", q_expr, "inline expression");
    cmd_radon->add_option("--out", out_path, "output file");
    auto* cmd_ss =
        app.add_subcommand("sphere-s", "second correction on the sphere");
    cmd_ss->add_option("--q", q_path, "symbol JSON (n = 3)");
    cmd_ss->add_option("--q-expr", q_expr, "inline expression");
    cmd_ss->add_option("--out", out_path, "output file");

    // ---- lattice ----
    auto* cmd_lat = app.add_subcommand("lattice", "quasi-eigenvalue lattice CSV");
    std::string regime_str = "thm4.2", profile_str = "sphere", savg_path;
    double lat_h = 0, lat_eps = 0, lat_radius = 0.2;
    std::string S_str, alpha_str, window_str;
    double t_avg_inf = 0, im_q1_inf = 0;
    bool has_t = false, has_imq1 = false;
    cmd_lat->add_option("--regime", regime_str,
                        "thm3.1 | thm4.2 | thm4.3 | thm4.4");
    cmd_lat->add_option("--profile", profile_str, "sphere or constant:T0");
    cmd_lat->set_help_flag("--help", "print help");  // frees -h for the parameter
    cmd_lat->add_option("--h", lat_h, "semiclassical parameter")->required();
    cmd_lat->add_option("--eps", lat_eps, "coupling")->required();
    cmd_lat->add_option("--s-avg", savg_path,
                        "reduced correction, polynomial JSON in xi1, xi2");
    cmd_lat->add_option("--S", S_str, "actions S1,S2 (default sphere)");
    cmd_lat->add_option("--alpha", alpha_str, "Maslov indices a1,a2");
    cmd_lat->add_option("--window", window_str, "k1lo,k1hi,k2lo,k2hi")
        ->required();
    cmd_lat->add_option("--radius", lat_radius, "validity ball radius");
    cmd_lat->add_option("--t-avg-inf", t_avg_inf, "third-order constant")
        ->each([&](const std::string&) { has_t = true; });
    cmd_lat->add_option("--im-q1-inf", im_q1_inf, "subprincipal constant")
        ->each([&](const std::string&) { has_imq1 = true; });
    cmd_lat->add_option("--out", out_path, "output CSV")->required();

    // ---- spectrum / verify ----
    auto* cmd_spec =
        app.add_subcommand("spectrum", "diagonalize -h^2 Laplacian + i eps q");
    double sp_h = 0, sp_eps = 0;
    int lmin = 0, lmax = 0, pad = 0;
    cmd_spec->set_help_flag("--help", "print help");
    cmd_spec->add_option("--h", sp_h, "semiclassical parameter")->required();
    cmd_spec->add_option("--eps", sp_eps, "coupling")->required();
    cmd_spec->add_option("--q", q_path, "perturbation symbol JSON");
    cmd_spec->add_option("--q-expr", q_expr, "inline expression");
    cmd_spec->add_option("--lmin", lmin, "window lower degree")->required();
    cmd_spec->add_option("--lmax", lmax, "window upper degree")->required();
    cmd_spec->add_option("--pad", pad, "padding degrees")->required();
    cmd_spec->add_option("--out", out_path, "output CSV")->required();

    auto* cmd_ver = app.add_subcommand("verify", "cluster extraction report");
    std::string spec_csv, rect_json, lattice_csv;
    cmd_ver->add_option("--spectrum", spec_csv, "spectrum CSV")->required();
    cmd_ver->add_option("--rectangles", rect_json,
                        "rectangle JSON with h, epsilon, rects[]")
        ->required();
    cmd_ver->add_option("--lattice", lattice_csv, "predicted lattice CSV");
    cmd_ver->add_option("--out", out_path, "report JSON")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_avg->parsed() || cmd_hom->parsed()) {
            PeriodicFlow flow(parse_flow(flow_str));
            PolySymbol f =
                load_symbol(poly_path, expr, expr_n ? expr_n : flow.n());
            PolySymbol result;
            if (cmd_hom->parsed())
                result = solve_homological(flow, f);
            else if (numeric)
                result = average_numeric(flow, f, panels);
            else
                result = average(flow, f);
            emit(symbol_to_json(result), out_path);
        } else if (cmd_cor->parsed()) {
            PeriodicFlow flow(parse_flow(flow_str));
            PolySymbol q = load_symbol(q_path, q_expr, expr_n ? expr_n : flow.n());
            PolySymbol r(q.n()), w(q.n());
            if (!r_path.empty()) r = load_symbol(r_path, "", q.n());
            if (!w_path.empty()) w = load_symbol(w_path, "", q.n());
            emit(bundle_to_json(third_correction(flow, q, r, w)), out_path);
        } else if (cmd_hyp->parsed()) {
            std::ifstream in(bundle_path);
            if (!in) throw std::runtime_error("cannot open " + bundle_path);
            json jb;
            in >> jb;
            PolySymbol s_red =
                reduce_to_circle_space(symbol_from_json(jb.at("s_avg")));
            PolySymbol t_red =
                reduce_to_circle_space(symbol_from_json(jb.at("t_avg")));
            auto sys = reduced_sphere_system(s_red);
            PolySymbol t_float = t_red.to_float();
            Observable base = [t_float](const std::vector<double>& y) {
                std::vector<double> full{y[0], y[1], y[2], 0, 0, 0};
                return t_float.evaluate_real(full).real();
            };
            // level tori of the reduced correction, parametrized by the
            // offset from its F = 0 level circle
            PolySymbol s_float = s_red.to_float();
            auto torus = [s_float](double F) {
                // bisect along y1 for the level; q = x1 style bands have
                // s increasing in |y1|
                std::vector<std::vector<double>> pts;
                for (double sgn : {1.0, -1.0}) {
                    double lo = 0.0, hi = 1.0;
                    auto val = [&](double u) {
                        std::vector<double> p{sgn * u,
                                              std::sqrt(std::max(0.0, 1 - u * u)),
                                              0, 0, 0, 0};
                        return s_float.evaluate_real(p).real();
                    };
                    if ((val(lo) - F) * (val(hi) - F) > 0) continue;
                    for (int it = 0; it < 80; ++it) {
                        double mid = (lo + hi) / 2;
                        if ((val(lo) - F) * (val(mid) - F) <= 0)
                            hi = mid;
                        else
                            lo = mid;
                    }
                    double u = (lo + hi) / 2,
                           r = std::sqrt(std::max(0.0, 1 - u * u));
                    for (int j = 0; j < 6; ++j) {
                        double phi = 2 * M_PI * j / 6;
                        pts.push_back({sgn * u, r * std::cos(phi),
                                       r * std::sin(phi)});
                    }
                }
                return pts;
            };
            auto rep = check_global_hypothesis(sys, base, torus, hyp_a, hyp_b,
                                               hyp_t0, hyp_tmax);
            emit(hypothesis_to_json(rep), out_path);
        } else if (cmd_radon->parsed() || cmd_ss->parsed()) {
            PolySymbol q = load_symbol(q_path, q_expr, 3);
            json j;
            if (cmd_radon->parsed()) {
                PolySymbol sigma = radon_average(q);
                j["sigma_form"] = symbol_to_json(sigma);
                j["reduced_form"] = symbol_to_json(reduce_to_circle_space(sigma));
            } else {
                auto corr = sphere_second_correction(q);
                j["sigma_form"] = symbol_to_json(corr.sigma_form);
                j["reduced_form"] = symbol_to_json(corr.reduced_form);
            }
            emit(j, out_path);
        } else if (cmd_lat->parsed()) {
            QuasiEigLattice lat;
            if (profile_str == "sphere")
                lat.profile = build_profile_sphere();
            else if (profile_str.rfind("constant:", 0) == 0)
                lat.profile =
                    build_profile_constant(std::stod(profile_str.substr(9)));
            else
                throw std::runtime_error("unknown profile " + profile_str);
            lat.torus = sphere_torus_defaults();
            if (!S_str.empty()) {
                auto v = parse_flow(S_str);
                lat.torus.S = {double(v[0]), double(v[1])};
            }
            if (!alpha_str.empty()) {
                auto v = parse_flow(alpha_str);
                lat.torus.alpha = {double(v[0]), double(v[1])};
            }
            lat.h = lat_h;
            lat.epsilon = lat_eps;
            if (regime_str == "thm3.1")
                lat.regime = Regime::thm31;
            else if (regime_str == "thm4.2")
                lat.regime = Regime::thm42;
            else if (regime_str == "thm4.3")
                lat.regime = Regime::thm43;
            else if (regime_str == "thm4.4")
                lat.regime = Regime::thm44;
            else
                throw std::runtime_error("unknown regime " + regime_str);
            if (has_t) lat.t_avg_inf = t_avg_inf;
            if (has_imq1) lat.im_q1_inf = im_q1_inf;
            if (!savg_path.empty()) {
                PolySymbol s = load_symbol(savg_path, "", 2).to_float();
                lat.s_avg = [s](const std::array<double, 2>& xi) {
                    return s.evaluate_real({xi[0], xi[1], 0, 0}).real();
                };
            }
            auto w = parse_flow(window_str);
            if (w.size() != 4) throw std::runtime_error("bad --window");
            auto pts = quasi_lattice(lat, {w[0], w[1]}, {w[2], w[3]}, lat_radius);
            export_lattice_csv(pts, out_path);
        } else if (cmd_spec->parsed()) {
            SphereOperatorSpec spec;
            spec.h = sp_h;
            spec.epsilon = sp_eps;
            spec.q = load_symbol(q_path, q_expr, 3);
            spec.l_min = lmin;
            spec.l_max = lmax;
            spec.pad = pad;
            auto op = assemble(spec);
            auto eigs = eigensolve(op.A);
            export_spectrum_csv(eigs, nullptr, out_path);
        } else if (cmd_ver->parsed()) {
            auto eigs = load_spectrum_csv(spec_csv);
            std::ifstream in(rect_json);
            if (!in) throw std::runtime_error("cannot open " + rect_json);
            json jr;
            in >> jr;
            double h = jr.at("h").get<double>();
            double eps = jr.at("epsilon").get<double>();
            ClusterRectangles rects;
            rects.disjoint = jr.value("disjoint", true);
            for (const auto& r : jr.at("rects"))
                rects.rects.push_back({r.at("k1").get<long>(),
                                       r.at("center").get<double>(),
                                       r.at("half_width_re").get<double>(),
                                       r.at("half_width_im").get<double>()});
            std::vector<LatticePoint> lattice;
            ClusterReport rep;
            if (!lattice_csv.empty()) {
                lattice = load_lattice_csv(lattice_csv);
                rep = extract_clusters(eigs, rects, h, eps, &lattice);
            } else {
                rep = extract_clusters(eigs, rects, h, eps);
            }
            export_report_json(rep, out_path);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
