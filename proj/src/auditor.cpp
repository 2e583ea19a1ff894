#include "condlimit/auditor.hpp"

#include "condlimit/errors.hpp"
#include "condlimit/numeric.hpp"
#include "condlimit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace condlimit {

namespace {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t power_of_two_intervals(double length, double pitch) {
    std::size_t n = 1;
    while (length / static_cast<double>(n) > pitch) n *= 2;
    return n;
}

std::vector<double> symmetric_points(double half_width, int points) {
    std::vector<double> out(static_cast<std::size_t>(points));
    if (points == 1) {
        out[0] = 0.0;
        return out;
    }
    const double step = 2.0 * half_width / (points - 1);
    for (int i = 0; i < points; ++i) out[static_cast<std::size_t>(i)] = -half_width + i * step;
    return out;
}

void require_grid(const GridSpec& grid) {
    if (!(grid.pitch > 0.0) || grid.pitch > 0.01) throw DomainError("grid pitch must lie in (0, 0.01]");
    if (grid.points < 2) throw DomainError("grid needs at least 2 points per axis");
}

double min_over(const std::vector<double>& v) {
    double out = kInf;
    for (double x : v) out = std::min(out, x);
    return out;
}

struct LemmaSetup {
    CharacteristicFunction cf;
    double sigma_x;
    double tau;
    double rho_x_ratio;
    double rho_yp_ratio;
    double root_n;
    double s_max;
    double t_max;
};

LemmaSetup lemma_setup(const ExperimentSpec& spec) {
    const MomentSummary mom = joint_moments(spec.joint());
    const ProjectionParams proj = project_y_prime(spec.joint());
    if (!(proj.tau > 0.0)) throw DegenerateError("lemma checks: Y' is degenerate (tau = 0)");
    const ProjectedMoments pm = projected_moments(spec.joint(), proj);
    const double root_n = std::sqrt(static_cast<double>(spec.n()));
    return {CharacteristicFunction(spec.joint(), proj),
            mom.sigma_x,
            proj.tau,
            mom.rho_x / std::pow(mom.sigma_x, 3),
            pm.rho / std::pow(proj.tau, 3),
            root_n,
            kPi * mom.sigma_x * root_n,
            spec.eta0() * proj.tau * root_n};
}

}  // namespace

// ---------------------------------------------------------------------------
// Audit

double estimate_c7(const JointLatticePMF& joint, const ProjectionParams& proj, double eta0,
                   const GridSpec& grid) {
    require_grid(grid);
    if (!(eta0 > 0.0)) throw DomainError("estimate_c7: eta0 must be positive");
    const std::size_t nx = joint.x_width();
    const std::size_t ny = joint.y_width();
    const double mass = joint.mass();
    const double xc = proj.x_center - static_cast<double>(joint.x_offset());
    const double yc = proj.y_center - static_cast<double>(joint.y_offset());
    const double var_x = [&] {
        CompensatedSum acc;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            double row = 0.0;
            for (std::size_t iy = 0; iy < ny; ++iy) row += joint.cell(ix, iy);
            const double d = static_cast<double>(ix) - xc;
            acc.add(row * d * d);
        }
        return acc.value() / mass;
    }();
    const double tau_sq = proj.tau * proj.tau;

    const std::size_t ns = power_of_two_intervals(2.0 * kPi, grid.pitch);
    const std::size_t nt = power_of_two_intervals(2.0 * eta0, grid.pitch);
    const double hs = 2.0 * kPi / static_cast<double>(ns);
    const double ht = 2.0 * eta0 / static_cast<double>(nt);

    std::vector<double> row_min(nt + 1, kInf);
    parallel_for(nt + 1, [&](std::size_t it) {
        const double t = -eta0 + static_cast<double>(it) * ht;
        // phi(s, t) = sum_x e^{i (s - t slope)(x - EX)} g_x(t)
        std::vector<cplx> g(nx);
        std::vector<double> dx(nx);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            cplx acc{0.0, 0.0};
            for (std::size_t iy = 0; iy < ny; ++iy) {
                const double w = joint.cell(ix, iy);
                if (w != 0.0) acc += w * std::polar(1.0, t * (static_cast<double>(iy) - yc));
            }
            g[ix] = acc / mass;
            dx[ix] = static_cast<double>(ix) - xc;
        }
        double best = kInf;
        for (std::size_t is = 0; is <= ns; ++is) {
            const double s = -kPi + static_cast<double>(is) * hs;
            const double denom = var_x * s * s + tau_sq * t * t;
            if (!(denom > 0.0)) continue;
            const double s_eff = s - t * proj.slope;
            cplx phi{0.0, 0.0};
            for (std::size_t ix = 0; ix < nx; ++ix) phi += g[ix] * std::polar(1.0, s_eff * dx[ix]);
            best = std::min(best, (1.0 - std::abs(phi)) / denom);
        }
        row_min[it] = best;
    });
    const double inf = min_over(row_min);
    return std::isfinite(inf) ? std::max(0.0, inf) : 0.0;
}

AssumptionReport audit(const ExperimentSpec& spec, const GridSpec& grid) {
    require_grid(grid);
    const JointLatticePMF& joint = spec.joint();
    const MomentSummary mom = joint_moments(joint);
    const ProjectionParams proj = project_y_prime(joint);
    const double root_n = std::sqrt(static_cast<double>(spec.n()));

    AssumptionReport rep;
    rep.n = spec.n();
    rep.m = spec.m();
    rep.eta0 = spec.eta0();
    rep.grid_pitch = grid.pitch;
    rep.gamma_n = 2.0 * kPi * mom.sigma_x * root_n * spec.prob().value;
    rep.sigma_x = mom.sigma_x;
    rep.sigma_y = mom.sigma_y;
    rep.rho_x_ratio = mom.rho_x / std::pow(mom.sigma_x, 3);
    rep.rho_y_ratio = mom.rho_y / std::pow(mom.sigma_y, 3);
    rep.r_abs = std::fabs(mom.r);
    rep.tau = proj.tau;
    if (proj.tau > 0.0) {
        rep.rho_yprime_ratio = projected_moments(joint, proj).rho / std::pow(proj.tau, 3);
    } else {
        rep.rho_yprime_ratio = kInf;
    }
    rep.l1 = rep.rho_x_ratio / root_n;
    rep.l2 = rep.rho_yprime_ratio / root_n;
    rep.span_ok = gcd_of_gaps(joint.marginal_x().support()) == 1;
    rep.c7_est = estimate_c7(joint, proj, spec.eta0(), grid);

    if (!(rep.gamma_n > 0.0)) rep.violations.emplace_back("A1: gamma_n is zero");
    if (rep.r_abs >= 1.0 - 1e-12 || proj.tau == 0.0) {
        rep.violations.emplace_back("A6: |r| = 1, Y is affine in X");
    }
    if (!(rep.c7_est > 0.0)) rep.violations.emplace_back("A7: no positive c7 on the grid");
    if (!rep.span_ok) rep.violations.emplace_back("span: X is not span 1");
    return rep;
}

void emit_report(std::ostream& os, const AssumptionReport& rep) {
    char buf[64];
    auto put = [&](const char* name, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << name << " = " << buf << '\n';
    };
    os << "N = " << rep.n << '\n';
    os << "m = " << rep.m << '\n';
    put("gamma_n", rep.gamma_n);
    put("sigma_x", rep.sigma_x);
    put("sigma_y", rep.sigma_y);
    put("rho_x_ratio", rep.rho_x_ratio);
    put("rho_y_ratio", rep.rho_y_ratio);
    put("r_abs", rep.r_abs);
    put("c7_est", rep.c7_est);
    put("eta0", rep.eta0);
    put("l1", rep.l1);
    put("l2", rep.l2);
    os << "span_ok = " << (rep.span_ok ? "true" : "false") << '\n';
    put("tau", rep.tau);
    put("rho_yprime_ratio", rep.rho_yprime_ratio);
    put("grid_pitch", rep.grid_pitch);
    os << "violations = ";
    for (std::size_t i = 0; i < rep.violations.size(); ++i) {
        if (i) os << ';';
        os << rep.violations[i];
    }
    os << '\n';
}

AssumptionReport parse_report(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto strip = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        kv[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
    }
    auto real = [&](const char* name) {
        const auto it = kv.find(name);
        if (it == kv.end()) throw DomainError(std::string("audit report: missing ") + name);
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw DomainError(std::string("audit report: bad value for ") + name);
        }
    };
    AssumptionReport rep;
    rep.n = static_cast<std::int64_t>(real("N"));
    rep.m = static_cast<std::int64_t>(real("m"));
    rep.gamma_n = real("gamma_n");
    rep.sigma_x = real("sigma_x");
    rep.sigma_y = real("sigma_y");
    rep.rho_x_ratio = real("rho_x_ratio");
    rep.rho_y_ratio = real("rho_y_ratio");
    rep.r_abs = real("r_abs");
    rep.c7_est = real("c7_est");
    rep.eta0 = real("eta0");
    rep.l1 = real("l1");
    rep.l2 = real("l2");
    rep.span_ok = kv["span_ok"] == "true";
    if (kv.count("tau")) rep.tau = real("tau");
    if (kv.count("rho_yprime_ratio")) rep.rho_yprime_ratio = real("rho_yprime_ratio");
    if (kv.count("grid_pitch")) rep.grid_pitch = real("grid_pitch");
    std::stringstream viol(kv["violations"]);
    std::string item;
    while (std::getline(viol, item, ';')) {
        if (!item.empty()) rep.violations.push_back(item);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Constants

ConstantInputs ConstantInputs::from_audit(const AssumptionReport& rep) {
    return from_audits({rep});
}

ConstantInputs ConstantInputs::from_audits(const std::vector<AssumptionReport>& reps) {
    if (reps.empty()) throw DomainError("from_audits: no reports");
    ConstantInputs in;
    in.c1 = kInf;
    in.c4_tilde = kInf;
    in.c7 = kInf;
    for (const auto& r : reps) {
        in.c1 = std::min(in.c1, 0.9 * r.gamma_n);
        in.c2 = std::max(in.c2, r.sigma_x);
        in.c3 = std::max(in.c3, r.rho_x_ratio);
        in.c4 = std::max(in.c4, r.sigma_y);
        in.c4_tilde = std::min(in.c4_tilde, r.sigma_y);
        in.c5 = std::max(in.c5, r.rho_y_ratio);
        in.c6 = std::max(in.c6, r.r_abs);
        in.c7 = std::min(in.c7, r.c7_est);
    }
    in.c2_tilde = 1.0 / (4.0 * in.c3);
    in.eta0 = reps.front().eta0;
    return in;
}

double gauss_moment2(double a) { return std::sqrt(kPi) / (2.0 * std::pow(a, 1.5)); }
double gauss_moment4(double a) { return 3.0 * std::sqrt(kPi) / (4.0 * std::pow(a, 2.5)); }
double gauss_abs_moment1(double a) { return 1.0 / a; }

double cubic_double_integral() {
    // (a + b + 1)^3 = sum 3!/(i! j! k!) a^i b^j, and the integral of |s|^k e^{-s^2/24}
    // over R is 24^{(k+1)/2} Gamma((k+1)/2).
    double mk[4];
    for (int k = 0; k < 4; ++k) mk[k] = std::pow(24.0, (k + 1) / 2.0) * std::tgamma((k + 1) / 2.0);
    const double fact[4] = {1, 1, 2, 6};
    CompensatedSum acc;
    for (int i = 0; i <= 3; ++i) {
        for (int j = 0; i + j <= 3; ++j) {
            const int k = 3 - i - j;
            acc.add(6.0 / (fact[i] * fact[j] * fact[k]) * mk[i] * mk[j]);
        }
    }
    return acc.value();
}

double cubic_double_integral_quadrature() {
    const double L = std::sqrt(24.0 * 60.0);
    const int panels = 48;
    const double quadrant = integrate_composite(
        [&](double s) {
            return integrate_composite(
                [&](double u) {
                    const double v = s + u + 1.0;
                    return v * v * v * std::exp(-(s * s + u * u) / 24.0);
                },
                0.0, L, panels);
        },
        0.0, L, panels);
    return 4.0 * quadrant;
}

double shifted_gaussian_sup(double k) {
    if (!(k >= 0.0)) throw DomainError("shifted_gaussian_sup: k must be >= 0");
    const double b = 0.5 - k;
    const double x = -b + std::sqrt(b * b + 2.0 * k + 4.0);
    const double e = x / 2.0 - k;
    return (x + 1.0) * std::exp(-e * e / 2.0);
}

std::vector<GaussianCheck> gaussian_integral_checks(double c7) {
    if (!(c7 > 0.0)) throw DomainError("gaussian_integral_checks: c7 must be positive");
    auto quad = [](auto f, double a) {
        const double L = std::sqrt(60.0 / a);
        return 2.0 * integrate_composite(f, 0.0, L, 64);
    };
    std::vector<GaussianCheck> out;
    for (const auto& [name, a] : {std::pair<const char*, double>{"s2_exp_2c7_3", 2.0 * c7 / 3.0},
                                  {"s2_exp_c7_3", c7 / 3.0}}) {
        out.push_back({name, gauss_moment2(a),
                       quad([a](double s) { return s * s * std::exp(-a * s * s); }, a)});
    }
    {
        const double a = c7 / 3.0;
        out.push_back({"s4_exp_c7_3", gauss_moment4(a),
                       quad([a](double s) { return s * s * s * s * std::exp(-a * s * s); }, a)});
    }
    {
        const double a = 2.0 * c7 / 3.0;
        out.push_back({"abs_s_exp_2c7_3", gauss_abs_moment1(a),
                       quad([a](double s) { return s * std::exp(-a * s * s); }, a)});
    }
    out.push_back({"cubic_double", cubic_double_integral(), cubic_double_integral_quadrature()});
    return out;
}

ConstantSet constants(const ConstantInputs& in) {
    for (double v : {in.c1, in.c2, in.c2_tilde, in.c3, in.c4, in.c4_tilde, in.c5, in.c7, in.eta0}) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("constants: inputs must be positive and finite");
    }
    if (!(in.c6 >= 0.0) || !(in.c6 < 1.0)) throw DomainError("constants: c6 must lie in [0, 1)");

    ConstantSet c;
    c.c1 = in.c1;
    c.c2 = in.c2;
    c.c2_tilde = in.c2_tilde;
    c.c3 = in.c3;
    c.c4 = in.c4;
    c.c4_tilde = in.c4_tilde;
    c.c5 = in.c5;
    c.c6 = in.c6;
    c.c7 = in.c7;
    c.eta0 = in.eta0;

    const double one_minus = 1.0 - in.c6 * in.c6;
    c.c4_prime = in.c4;
    c.c4_tilde_prime = in.c4_tilde * std::sqrt(one_minus);
    c.c5_prime = std::pow(one_minus, -1.5) * std::pow(std::cbrt(in.c3) + std::cbrt(in.c5), 3);
    c.c6_prime = 0.0;

    const double c1 = in.c1, c2 = in.c2, c2t = in.c2_tilde, c3 = in.c3, c7 = in.c7;
    const double c4 = c.c4_prime, c4t = c.c4_tilde_prime, c5 = c.c5_prime;

    c.eta = std::min(2.0 / 9.0 / (c4 * c5), in.eta0);
    c.eta_alt = std::min(2.0 / 9.0 * c4 * c5, in.eta0);
    c.epsilon = std::min(2.0 / 9.0 / (c2 * c3), kPi);

    c.d1 = 0.5 * std::pow(c3, 2.0 / 3.0) * c4 * std::cbrt(c5) / c1 * gauss_moment2(2.0 * c7 / 3.0);
    c.d2pp = std::pow(c3, 4.0 / 3.0) * c4 * c4 * std::pow(c5, 2.0 / 3.0) / (4.0 * c1) *
             gauss_moment4(c7 / 3.0);
    c.d2ppp = c4 * c4 / c1 * (std::pow(c5, 2.0 / 3.0) * std::cbrt(c3) + 1.0) *
              gauss_abs_moment1(2.0 * c7 / 3.0);
    c.d2 = c.d1 * c.d1 + c.d2pp + c.d2ppp;

    c.double_integral = cubic_double_integral();
    c.C1 = c.C4 * (c3 + c5) * c.double_integral / c1;

    const double mc = std::min(1.0, c7);
    c.C2p = 1.0 / (c1 * c7) * (std::sqrt(2.0 * kPi) / std::sqrt(mc) + 4.0 / (mc * c.epsilon * c2t));
    c.C2pp = c2t * c2t / 2.0 * c7 * c.epsilon * c.epsilon;
    c.C2 = c.C2p / std::sqrt(c.C2pp) * std::sqrt(0.5) * std::exp(-0.5);

    const double lead = 24.0 / (c4t * kPi * std::sqrt(2.0 * kPi));
    const double floor_terms =
        std::max({std::pow(12.0, 1.5) * c3, std::pow(12.0, 1.5) * c5, std::sqrt(2.0)});
    c.C_final = std::max(c.C1 + c.C2 + lead / c.eta, floor_terms);
    c.C_final_alt = std::max(c.C1 + c.C2 + lead / c.eta_alt, floor_terms);

    const double k = c.d1 / c4t;
    c.C_prime = 1.0 / std::sqrt(2.0 * kPi) * std::max(c.d2 / (c4t * c4t), k) * shifted_gaussian_sup(k);
    c.C_tilde = c.C_final + std::max(c.C_prime, 2.0 * c.d2 / (c4t * c4t));
    return c;
}

void emit_constants(std::ostream& os, const ConstantSet& c) {
    char buf[64];
    auto put = [&](const char* name, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << name << " = " << buf << '\n';
    };
    put("c1", c.c1);
    put("c2", c.c2);
    put("c2_tilde", c.c2_tilde);
    put("c3", c.c3);
    put("c4", c.c4);
    put("c4_tilde", c.c4_tilde);
    put("c5", c.c5);
    put("c6", c.c6);
    put("c7", c.c7);
    put("eta0", c.eta0);
    put("c4_prime", c.c4_prime);
    put("c4_tilde_prime", c.c4_tilde_prime);
    put("c5_prime", c.c5_prime);
    put("c6_prime", c.c6_prime);
    put("eta", c.eta);
    put("eta_alt", c.eta_alt);
    put("epsilon", c.epsilon);
    put("d1", c.d1);
    put("d2", c.d2);
    put("d2pp", c.d2pp);
    put("d2ppp", c.d2ppp);
    put("C1", c.C1);
    put("C2", c.C2);
    put("C2p", c.C2p);
    put("C2pp", c.C2pp);
    put("C4", c.C4);
    put("C_final", c.C_final);
    put("C_final_alt", c.C_final_alt);
    put("C_prime", c.C_prime);
    put("C_tilde", c.C_tilde);
}

// ---------------------------------------------------------------------------
// Lemma grid checks

double check_phi_power_bound(const ExperimentSpec& spec, std::int64_t l, double c7,
                             const GridSpec& grid) {
    if (l < 0 || l > spec.n()) throw DomainError("check_phi_power_bound: l must lie in [0, N]");
    if (!(c7 >= 0.0)) throw DomainError("check_phi_power_bound: c7 must be >= 0");
    if (grid.points < 2) throw DomainError("grid needs at least 2 points per axis");
    const LemmaSetup L = lemma_setup(spec);
    const auto s_pts = symmetric_points(L.s_max, grid.points);
    const auto t_pts = symmetric_points(L.t_max, grid.points);
    const double n = static_cast<double>(spec.n());
    const double power = n - static_cast<double>(l);
    std::vector<double> row_min(s_pts.size(), kInf);
    parallel_for(s_pts.size(), [&](std::size_t is) {
        const double s = s_pts[is];
        double best = kInf;
        for (double t : t_pts) {
            const double a = std::abs(L.cf.value(s / (L.sigma_x * L.root_n), t / (L.tau * L.root_n)));
            const double lhs = power == 0.0 ? 1.0 : (a == 0.0 ? 0.0 : std::exp(power * std::log(a)));
            const double bound = std::exp(-(s * s + t * t) * c7 * power / n);
            best = std::min(best, bound - lhs);
        }
        row_min[is] = best;
    });
    return min_over(row_min);
}

std::pair<double, double> check_dphi_bounds(const ExperimentSpec& spec, const GridSpec& grid) {
    if (grid.points < 2) throw DomainError("grid needs at least 2 points per axis");
    const LemmaSetup L = lemma_setup(spec);
    const auto s_pts = symmetric_points(L.s_max, grid.points);
    const auto t_pts = symmetric_points(L.t_max, grid.points);
    const double n = static_cast<double>(spec.n());
    const double a = L.rho_x_ratio;
    const double b = L.rho_yp_ratio;
    const double k_ss = 0.5 * std::pow(a, 2.0 / 3.0) * std::cbrt(b);
    const double k_st = std::cbrt(a) * std::pow(b, 2.0 / 3.0);
    const double k_tt = 0.5 * b;
    std::vector<double> min1(s_pts.size(), kInf);
    std::vector<double> min2(s_pts.size(), kInf);
    parallel_for(s_pts.size(), [&](std::size_t is) {
        const double s = s_pts[is];
        double b1 = kInf;
        double b2 = kInf;
        for (double t : t_pts) {
            const double lhs =
                std::abs(L.cf.derivative(s / (L.sigma_x * L.root_n), t / (L.tau * L.root_n), 1));
            const double linear = L.tau / L.root_n * (std::fabs(s) + std::fabs(t));
            const double second = L.tau / L.root_n * std::fabs(t) +
                                  L.tau / n * (k_ss * s * s + k_st * std::fabs(s * t) + k_tt * t * t);
            b1 = std::min(b1, linear - lhs);
            b2 = std::min(b2, second - lhs);
        }
        min1[is] = b1;
        min2[is] = b2;
    });
    return {min_over(min1), min_over(min2)};
}

QrCheck check_qr_lemma(const ExperimentSpec& spec, const GridSpec& grid) {
    if (grid.points < 2) throw DomainError("grid needs at least 2 points per axis");
    const LemmaSetup L = lemma_setup(spec);
    QrCheck out;
    out.l1 = L.rho_x_ratio / L.root_n;
    out.l2 = L.rho_yp_ratio / L.root_n;
    const double cap = std::pow(12.0, -1.5);
    if (out.l1 > cap || out.l2 > cap) {
        out.status = QrCheck::Status::Skipped;
        out.reason = "l1 or l2 exceeds 12^{-3/2}";
        return out;
    }
    out.status = QrCheck::Status::Evaluated;
    // Shrink slightly so the open region R is respected at the edges.
    const double shrink = 1.0 - 1e-9;
    const double s_max = shrink * std::min(L.s_max, 2.0 / (9.0 * out.l1));
    const double t_max = shrink * std::min(L.t_max, 2.0 / (9.0 * out.l2));
    const auto s_pts = symmetric_points(s_max, grid.points);
    const auto t_pts = symmetric_points(t_max, grid.points);
    const double n = static_cast<double>(spec.n());
    const double lsum = out.l1 + out.l2;
    std::vector<double> row_min(s_pts.size(), kInf);
    parallel_for(s_pts.size(), [&](std::size_t is) {
        const double s = s_pts[is];
        double best = kInf;
        for (double t : t_pts) {
            const double su = s / (L.sigma_x * L.root_n);
            const double tu = t / (L.tau * L.root_n);
            const cplx p = L.cf.value(su, tu);
            const cplx dp = L.cf.derivative(su, tu, 1);
            const double inner = std::abs(t * p + L.root_n / L.tau * dp);
            const double ap = std::abs(p);
            double lhs = 0.0;
            if (inner > 0.0 && ap > 0.0) {
                lhs = std::exp((n - 1.0) * std::log(ap) + (s * s + t * t) / 24.0 + std::log(inner));
            }
            const double v = std::fabs(s) + std::fabs(t) + 1.0;
            best = std::min(best, 161.0 * v * v * v * lsum - lhs);
        }
        row_min[is] = best;
    });
    out.slack = min_over(row_min);
    return out;
}

}  // namespace condlimit
