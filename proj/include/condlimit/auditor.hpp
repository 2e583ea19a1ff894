#pragma once

#include "condlimit/fourier.hpp"
#include "condlimit/lattice.hpp"

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace condlimit {

struct GridSpec {
    double pitch = 0.01;  ///< largest step of the c7 scan in s and t
    int points = 200;     ///< points per axis of the lemma grid checks
};

struct AssumptionReport {
    std::int64_t n = 0;
    std::int64_t m = 0;
    double gamma_n = 0.0;
    double sigma_x = 0.0;
    double sigma_y = 0.0;
    double rho_x_ratio = 0.0;
    double rho_y_ratio = 0.0;
    double r_abs = 0.0;
    double c7_est = 0.0;
    double eta0 = 1.0;
    double l1 = 0.0;
    double l2 = 0.0;  ///< from the moments of Y', the variable the lemmas are applied to
    bool span_ok = false;
    double tau = 0.0;               ///< sd of Y'
    double rho_yprime_ratio = 0.0;  ///< E|Y'|^3 / tau^3
    double grid_pitch = 0.0;
    std::vector<std::string> violations;
};

/// Audits one experiment: moments, gamma_n, span, and c7 on the (X, Y') pair.
AssumptionReport audit(const ExperimentSpec& spec, const GridSpec& grid = {});

/// Infimum over a product grid of (1 - |E exp(i(sX + tY'))|) / (sigma_X^2 s^2 + tau^2 t^2)
/// on [-pi, pi] x [-eta0, eta0], floored at 0. Points with a zero denominator are
/// skipped. The per-axis interval counts are powers of two, so halving the pitch
/// refines the grid to a superset.
double estimate_c7(const JointLatticePMF& joint, const ProjectionParams& proj, double eta0,
                   const GridSpec& grid = {});

/// `name = value` lines; violations are joined with ';'.
void emit_report(std::ostream& os, const AssumptionReport& rep);
AssumptionReport parse_report(std::istream& is);

struct ConstantInputs {
    double c1 = 0.0;
    double c2 = 0.0;
    double c2_tilde = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
    double c4_tilde = 0.0;
    double c5 = 0.0;
    double c6 = 0.0;
    double c7 = 0.0;
    double eta0 = 1.0;

    /// c1 = 0.9 gamma_n, c2 = sigma_X, c2~ = 1/(4 c3), c3 = rho_X / sigma_X^3,
    /// c4 = c4~ = sigma_Y, c5 = rho_Y / sigma_Y^3, c6 = |r|, c7 = c7_est.
    static ConstantInputs from_audit(const AssumptionReport& rep);
    /// The same, taking the worst value of each quantity over several audits.
    static ConstantInputs from_audits(const std::vector<AssumptionReport>& reps);
};

struct ConstantSet {
    double c1 = 0, c2 = 0, c2_tilde = 0, c3 = 0, c4 = 0, c4_tilde = 0, c5 = 0, c6 = 0, c7 = 0;
    double eta0 = 0;
    /// Values after passing to (X, Y'): c4, c4~ sqrt(1 - c6^2), (1 - c6^2)^{-3/2} (c3^{1/3} + c5^{1/3})^3, 0.
    double c4_prime = 0, c4_tilde_prime = 0, c5_prime = 0, c6_prime = 0;
    double eta = 0;
    double eta_alt = 0;  ///< min(2/9 c4 c5, eta0), the reading of the final display
    double epsilon = 0;
    double d1 = 0, d2 = 0, d2pp = 0, d2ppp = 0;
    double C1 = 0, C2 = 0, C2p = 0, C2pp = 0;
    double C4 = 161.0;
    double C_final = 0;
    double C_final_alt = 0;  ///< C_final with eta_alt in place of eta
    double C_prime = 0;
    double C_tilde = 0;
    double double_integral = 0;  ///< integral over R^2 of (|s| + |u| + 1)^3 exp(-(s^2 + u^2)/24)
};

/// All constants of the two distance bounds and the moment estimates.
/// Throws DomainError on non-positive inputs or c6 >= 1.
ConstantSet constants(const ConstantInputs& in);

void emit_constants(std::ostream& os, const ConstantSet& c);

/// Integral of s^2 exp(-a s^2) over R.
double gauss_moment2(double a);
/// Integral of s^4 exp(-a s^2) over R.
double gauss_moment4(double a);
/// Integral of |s| exp(-a s^2) over R.
double gauss_abs_moment1(double a);
/// Closed form of the (|s| + |u| + 1)^3 double integral.
double cubic_double_integral();
/// The same by composite Gauss-Legendre quadrature.
double cubic_double_integral_quadrature();
/// sup over x of (|x| + 1) exp(-(|x|/2 - k)^2 / 2), k >= 0, from the stationarity condition.
double shifted_gaussian_sup(double k);

struct GaussianCheck {
    std::string name;
    double closed_form = 0.0;
    double quadrature = 0.0;
};

/// Each Gaussian-type integral used by `constants` at the given c7, in
/// closed form and by quadrature.
std::vector<GaussianCheck> gaussian_integral_checks(double c7);

/// min over a points x points grid on |s| <= pi sigma_X sqrt(N), |t| <= eta0 tau sqrt(N) of
/// exp(-(s^2 + t^2) c7 (N - l) / N) - |phi^{N-l}(s / (sigma_X sqrt N), t / (tau sqrt N))|,
/// with phi the characteristic function of (X - EX, Y').
double check_phi_power_bound(const ExperimentSpec& spec, std::int64_t l, double c7,
                             const GridSpec& grid = {});

/// Worst slack of the two bounds on |d phi / dt| (the linear one and the
/// second-order one), over the same grid as check_phi_power_bound.
std::pair<double, double> check_dphi_bounds(const ExperimentSpec& spec, const GridSpec& grid = {});

struct QrCheck {
    enum class Status { Evaluated, Skipped };
    Status status = Status::Skipped;
    double slack = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    std::string reason;
};

/// Grid check of the t-derivative bound for exp((s^2 + t^2)/2) phi^N with C4 = 161,
/// on R = {|s| < 2/(9 l1), |t| < 2/(9 l2)} intersected with the phi domain.
/// Slack is (bound - |derivative|) exp(-11 (s^2 + t^2) / 24), which has the sign of the
/// plain difference and stays finite. Skipped when l1 or l2 exceeds 12^{-3/2}.
QrCheck check_qr_lemma(const ExperimentSpec& spec, const GridSpec& grid = {});

}  // namespace condlimit
