#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "condlimit/auditor.hpp"
#include "condlimit/errors.hpp"
#include "condlimit/models.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace condlimit;

namespace {

constexpr double kPi = std::numbers::pi;

bool has_violation(const AssumptionReport& rep, const std::string& tag) {
    return std::any_of(rep.violations.begin(), rep.violations.end(),
                       [&](const std::string& v) { return v.rfind(tag, 0) == 0; });
}

ConstantInputs unit_inputs() {
    ConstantInputs in;
    in.c1 = 1.0;
    in.c2 = 1.0;
    in.c2_tilde = 0.25;
    in.c3 = 1.0;
    in.c4 = 1.0;
    in.c4_tilde = 1.0;
    in.c5 = 1.0;
    in.c6 = 0.0;
    in.c7 = 0.5;
    in.eta0 = 1.0;
    return in;
}

}  // namespace

TEST_CASE("audit of the occupancy model") {
    const ExperimentSpec spec(occupancy_joint(1.0), 100, 100);
    const AssumptionReport rep = audit(spec);
    CHECK(rep.gamma_n == doctest::Approx(2 * kPi * 10 * oracle::poisson_point(100.0, 100)).epsilon(1e-12));
    CHECK(rep.gamma_n == doctest::Approx(2.5046).epsilon(1e-4));
    CHECK(rep.span_ok);
    CHECK(rep.r_abs == doctest::Approx(std::sqrt(std::exp(-1.0) / (1 - std::exp(-1.0)))).epsilon(1e-12));
    CHECK(rep.c7_est > 0.0);
    CHECK(rep.c7_est <= 0.5 + 1e-3);
    CHECK(rep.l1 == doctest::Approx(rep.rho_x_ratio / 10).epsilon(1e-15));
    CHECK(rep.l2 == doctest::Approx(rep.rho_yprime_ratio / 10).epsilon(1e-15));
    CHECK(rep.violations.empty());
    CHECK_THROWS_AS(audit(spec, {0.02, 200}), DomainError);
}

TEST_CASE("audit flags violated assumptions") {
    SUBCASE("span 2") {
        const auto j = independent_joint(LatticePMF(0, {0.3, 0.0, 0.4, 0.0, 0.3}), LatticePMF(0, {0.5, 0.5}));
        const AssumptionReport rep = audit(ExperimentSpec(j, 2, 4));
        CHECK_FALSE(rep.span_ok);
        CHECK(has_violation(rep, "span"));
    }
    SUBCASE("Y = X") {
        const auto j = function_joint(poisson_pmf(1.0), [](std::int64_t x) { return x; });
        const AssumptionReport rep = audit(ExperimentSpec(j, 10, 10));
        CHECK(rep.r_abs == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(has_violation(rep, "A6"));
    }
}

TEST_CASE("c7 estimate") {
    // X and Y independent fair coins: phi = cos(s/2) cos(t/2), variances 1/4
    const auto coins = independent_joint(LatticePMF(0, {0.5, 0.5}), LatticePMF(0, {0.5, 0.5}));
    const ProjectionParams proj = project_y_prime(coins);
    SUBCASE("two-point law at s = pi") {
        // on a thin t-window the infimum sits at s = pi, t = 0
        const double c7 = estimate_c7(coins, proj, 1e-3);
        CHECK(c7 <= 4 / (kPi * kPi) + 1e-15);
        CHECK(c7 == doctest::Approx(4 / (kPi * kPi)).epsilon(1e-5));
        CHECK(4 / (kPi * kPi) == doctest::Approx(0.405).epsilon(1e-3));
    }
    SUBCASE("full window") {
        // corner s = pi, t = 1: 1 / (pi^2/4 + 1/4)
        const double c7 = estimate_c7(coins, proj, 1.0);
        CHECK(c7 == doctest::Approx(1 / (kPi * kPi / 4 + 0.25)).epsilon(1e-12));
    }
    SUBCASE("refinement never raises the infimum") {
        const auto occ = occupancy_joint(1.0);
        const ProjectionParams p = project_y_prime(occ);
        const double coarse = estimate_c7(occ, p, 1.0, {0.01, 200});
        const double fine = estimate_c7(occ, p, 1.0, {0.005, 200});
        CHECK(fine <= coarse);
        CHECK(fine > 0.0);
        CHECK(fine == doctest::Approx(coarse).epsilon(1e-3));
    }
    SUBCASE("Taylor limit near the origin") {
        // the ratio at (s, 0) tends to 1/2; the infimum is below any sampled value
        const auto occ = occupancy_joint(1.0);
        const ProjectionParams p = project_y_prime(occ);
        const double s = 1e-3;
        const double var_x = joint_moments(occ).sigma_x * joint_moments(occ).sigma_x;
        const double ratio = (1 - std::abs(CharacteristicFunction(occ, p).value(s, 0.0))) / (var_x * s * s);
        CHECK(ratio == doctest::Approx(0.5).epsilon(1e-4));
        CHECK(estimate_c7(occ, p, 1.0) <= ratio);
    }
    CHECK_THROWS_AS(estimate_c7(coins, proj, 0.0), DomainError);
}

TEST_CASE("Gaussian integrals") {
    // s^2 exp(-s^2/3): sqrt(pi) / (2 (1/3)^{3/2})
    CHECK(gauss_moment2(1.0 / 3) == doctest::Approx(std::sqrt(kPi) / (2 * std::pow(1.0 / 3, 1.5))).epsilon(1e-15));
    CHECK(gauss_moment2(1.0 / 3) == doctest::Approx(4.605).epsilon(1e-3));
    for (double c7 : {0.5, 0.0742, 2.0}) {
        for (const GaussianCheck& g : gaussian_integral_checks(c7)) {
            CAPTURE(g.name);
            CHECK(std::fabs(g.closed_form - g.quadrature) <= 1e-10 * std::max(1.0, std::fabs(g.closed_form)));
        }
    }
    // (a + b + 1)^3 expanded; a_k is the integral of |s|^k exp(-s^2/24) over R
    const double a0 = std::sqrt(24 * kPi);
    const double a1 = 24.0;
    const double a2 = 12.0 * a0;
    const double a3 = 576.0;
    const double expansion = 2 * a3 * a0 + 6 * a2 * a1 + 6 * a2 * a0 + 6 * a1 * a1 + 6 * a1 * a0 + a0 * a0;
    CHECK(cubic_double_integral() == doctest::Approx(expansion).epsilon(1e-14));
    CHECK(std::fabs(cubic_double_integral() - cubic_double_integral_quadrature()) <= 1e-10 * cubic_double_integral());
}

TEST_CASE("shifted Gaussian supremum") {
    for (double k : {0.0, 0.3, 1.0, 4.0, 20.0}) {
        double brute = 0.0;
        for (int i = 0; i <= 1000000; ++i) {
            const double x = i * 1e-4;
            const double e = x / 2 - k;
            brute = std::max(brute, (x + 1) * std::exp(-e * e / 2));
        }
        CHECK(shifted_gaussian_sup(k) >= brute - 1e-14);
        CHECK(shifted_gaussian_sup(k) == doctest::Approx(brute).epsilon(1e-7));
    }
    CHECK_THROWS_AS(shifted_gaussian_sup(-1.0), DomainError);
}

TEST_CASE("constant calculator") {
    SUBCASE("eta branches") {
        ConstantInputs in = unit_inputs();
        // c3 = c5 = 1/8, c6 = 0: c5' = (1/2 + 1/2)^3 = 1, so c4 c5' = 1
        in.c3 = 0.125;
        in.c5 = 0.125;
        in.eta0 = 10.0;
        const ConstantSet c = constants(in);
        CHECK(c.c5_prime == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(c.eta == doctest::Approx(2.0 / 9).epsilon(1e-15));
        in.eta0 = 0.1;
        CHECK(constants(in).eta == 0.1);
    }
    SUBCASE("epsilon branches") {
        ConstantInputs in = unit_inputs();
        in.c2 = 10.0;
        CHECK(constants(in).epsilon == doctest::Approx(2.0 / 90).epsilon(1e-15));
        in.c2 = 0.01;
        in.c3 = 0.01;
        CHECK(constants(in).epsilon == kPi);
    }
    SUBCASE("identities") {
        ConstantInputs in = unit_inputs();
        in.c6 = 0.6;
        const ConstantSet c = constants(in);
        CHECK(c.d2 == c.d1 * c.d1 + c.d2pp + c.d2ppp);
        CHECK(c.c4_tilde_prime == doctest::Approx(0.8).epsilon(1e-15));
        CHECK(c.c5_prime == doctest::Approx(8 / std::pow(0.64, 1.5)).epsilon(1e-14));
        CHECK(c.C1 == doctest::Approx(161 * (1 + c.c5_prime) * cubic_double_integral()).epsilon(1e-14));
        CHECK(c.C_final >= std::sqrt(2.0));
        CHECK(c.C_final >= std::pow(12.0, 1.5) * c.c5_prime);
        CHECK(c.C_tilde >= c.C_final);
        CHECK(c.C_tilde - c.C_final >= 2 * c.d2 / (c.c4_tilde_prime * c.c4_tilde_prime) - 1e-9 * c.C_tilde);
        // d1 with c1 = c3 = c4 = 1, c5' as above, c7 = 1/2
        CHECK(c.d1 == doctest::Approx(0.5 * std::cbrt(c.c5_prime) * gauss_moment2(1.0 / 3)).epsilon(1e-14));
    }
    SUBCASE("bad inputs") {
        ConstantInputs in = unit_inputs();
        in.c6 = 1.0;
        CHECK_THROWS_AS(constants(in), DomainError);
        in = unit_inputs();
        in.c7 = 0.0;
        CHECK_THROWS_AS(constants(in), DomainError);
    }
    SUBCASE("inputs from audits") {
        AssumptionReport a;
        a.gamma_n = 2.5;
        a.sigma_x = 1.0;
        a.sigma_y = 0.5;
        a.rho_x_ratio = 2.0;
        a.rho_y_ratio = 1.5;
        a.r_abs = 0.7;
        a.c7_est = 0.08;
        a.eta0 = 1.0;
        AssumptionReport b = a;
        b.gamma_n = 2.4;
        b.sigma_y = 0.6;
        b.c7_est = 0.07;
        const ConstantInputs in = ConstantInputs::from_audits({a, b});
        CHECK(in.c1 == doctest::Approx(0.9 * 2.4));
        CHECK(in.c4 == 0.6);
        CHECK(in.c4_tilde == 0.5);
        CHECK(in.c7 == 0.07);
        CHECK(in.c2_tilde == doctest::Approx(0.125));
        CHECK(ConstantInputs::from_audit(a).c1 == doctest::Approx(2.25));
        CHECK_THROWS_AS(ConstantInputs::from_audits({}), DomainError);
    }
}

TEST_CASE("report round trip") {
    const AssumptionReport rep = audit(ExperimentSpec(occupancy_joint(1.0), 50, 50));
    std::stringstream ss;
    emit_report(ss, rep);
    const AssumptionReport back = parse_report(ss);
    CHECK(back.n == rep.n);
    CHECK(back.m == rep.m);
    CHECK(back.gamma_n == rep.gamma_n);
    CHECK(back.c7_est == rep.c7_est);
    CHECK(back.l2 == rep.l2);
    CHECK(back.tau == rep.tau);
    CHECK(back.span_ok == rep.span_ok);
    CHECK(back.violations == rep.violations);

    AssumptionReport bad = rep;
    bad.violations = {"A1: x", "span: y"};
    std::stringstream s2;
    emit_report(s2, bad);
    CHECK(parse_report(s2).violations == bad.violations);

    std::stringstream empty("N = 3\n");
    CHECK_THROWS_AS(parse_report(empty), DomainError);
}

TEST_CASE("lemma grid checks") {
    const auto occ = occupancy_joint(1.0);
    const ExperimentSpec spec(occ, 64, 64);
    const double c7 = audit(spec).c7_est;
    SUBCASE("power bound") {
        CHECK(check_phi_power_bound(spec, 1, c7) >= -1e-12);
        CHECK(check_phi_power_bound(spec, 0, c7) >= -1e-12);
        CHECK(check_phi_power_bound(spec, 64, c7) == doctest::Approx(0.0).epsilon(1e-15));
        // a c7 well above the true infimum must fail somewhere
        CHECK(check_phi_power_bound(spec, 1, 0.6) < 0.0);
        CHECK_THROWS_AS(check_phi_power_bound(spec, 65, c7), DomainError);
    }
    SUBCASE("derivative bounds") {
        const auto [lin, second] = check_dphi_bounds(spec);
        CHECK(lin >= -1e-12);
        CHECK(second >= -1e-12);
        for (std::uint64_t seed = 40; seed < 52; ++seed) {
            const auto j = oracle::random_joint(seed, 3 + seed % 4, 2 + seed % 3);
            const ExperimentSpec rs(j, 20, 20 * j.x_offset() + static_cast<std::int64_t>(j.x_width()) * 10);
            const auto [a, b] = check_dphi_bounds(rs, {0.01, 60});
            CHECK(a >= -1e-12);
            CHECK(b >= -1e-12);
        }
    }
    SUBCASE("QR lemma") {
        const QrCheck small = check_qr_lemma(spec);
        CHECK(small.status == QrCheck::Status::Skipped);
        CHECK_FALSE(small.reason.empty());
        // l1 at N = 4096 is still just above 12^{-3/2}
        const QrCheck mid = check_qr_lemma(ExperimentSpec(occ, 4096, 4096), {0.01, 20});
        CHECK(mid.status == QrCheck::Status::Skipped);
        CHECK(mid.l1 > std::pow(12.0, -1.5));
        const QrCheck big = check_qr_lemma(ExperimentSpec(occ, 8192, 8192), {0.01, 100});
        CHECK(big.status == QrCheck::Status::Evaluated);
        CHECK(big.slack >= -1e-12);
    }
    SUBCASE("degenerate Y'") {
        const auto yx = function_joint(poisson_pmf(1.0), [](std::int64_t x) { return 2 * x; });
        CHECK_THROWS_AS(check_dphi_bounds(ExperimentSpec(yx, 10, 10)), DegenerateError);
    }
}
