#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "condlimit/errors.hpp"
#include "condlimit/fourier.hpp"
#include "condlimit/models.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace condlimit;

TEST_CASE("phi basic values") {
    const auto occ = occupancy_joint(1.0);
    CHECK(std::abs(phi(occ, 0.0, 0.0) - std::complex<double>(1.0 - occ.defect(), 0.0)) < 1e-15);

    const auto coin = function_joint(LatticePMF(0, {0.5, 0.5}), [](std::int64_t) { return 0; });
    for (double s : {0.3, 1.0, 2.5}) CHECK(std::abs(phi(coin, s, 0.0) - std::cos(s / 2)) < 1e-15);

    CHECK(std::abs(phi(occ, 0.3, 0.2) - oracle::phi_double_loop(occ, 0.3, 0.2)) < 1e-14);

    const MomentSummary mom = joint_moments(occ);
    const double ey2 = mom.sigma_y * mom.sigma_y + mom.mean_y * mom.mean_y;
    CHECK(std::abs(phi_dt(occ, 0, 0, 1) - std::complex<double>(0.0, mom.mean_y)) < 1e-15);
    CHECK(std::abs(phi_dt(occ, 0, 0, 2) - std::complex<double>(-ey2, 0.0)) < 1e-15);
}

TEST_CASE("characteristic function modulus stays below one") {
    const auto j = oracle::random_joint(11, 7, 5);
    const CharacteristicFunction cf(j, project_y_prime(j));
    std::vector<double> s, t;
    for (int i = -20; i <= 20; ++i) s.push_back(i * 0.157);
    for (int i = -10; i <= 10; ++i) t.push_back(i * 0.3);
    const CharFnGrid g = char_fn_grid(cf, s, t);
    for (const auto& v : g.values) CHECK(std::abs(v) <= 1.0 + 1e-12);
    CHECK(std::abs(g.at(20, 10) - 1.0) < 1e-14);
    // Y' is centered, so its derivative at the origin vanishes.
    CHECK(std::abs(cf.derivative(0.0, 0.0, 1)) < 1e-14);
}

TEST_CASE("point probabilities") {
    const LatticePMF pois = poisson_pmf(1.0);
    CHECK(prob_s_eq_m(pois, 1, 3) == pois.at(3));
    CHECK(prob_s_eq_m(pois, 100, 100) == doctest::Approx(oracle::poisson_point(100.0, 100)).epsilon(1e-12));
    CHECK(prob_s_eq_m(pois, 100, 100) == doctest::Approx(0.039861).epsilon(1e-4));
    CHECK(prob_s_eq_m(LatticePMF(0, {0.5, 0.5}), 8, 3) == doctest::Approx(0.21875).epsilon(1e-14));
    CHECK(prob_s_eq_m(LatticePMF(0, {0.5, 0.5}), 8, 9) == 0.0);
    CHECK(prob_s_eq_m(LatticePMF(0, {0.5, 0.5}), 8, -1) == 0.0);

    const LatticePMF odd(-3, {0.2, 0.0, 0.3, 0.1, 0.4});
    std::int64_t off = 0;
    const auto direct = oracle::iterated_convolution(odd, 9, off);
    for (std::size_t k = 0; k < direct.size(); ++k) {
        CHECK(std::fabs(prob_s_eq_m(odd, 9, off + static_cast<std::int64_t>(k)) - direct[k]) < 1e-14);
    }
    const PointProbability rep = prob_s_eq_m_report(pois, 50, 50);
    CHECK(rep.error_budget >= 50 * pois.defect());
    CHECK(rep.error_budget < 1e-12);
}

TEST_CASE("joint law of (S_N, T_N) against direct convolution") {
    SUBCASE("spec examples") {
        const auto j = occupancy_joint(1.0);
        CHECK(joint_law_sn_tn(j, 1).law == j);
        const auto yx = function_joint(LatticePMF(0, {0.5, 0.5}), [](std::int64_t x) { return x; });
        CHECK(joint_law_sn_tn(yx, 2).law.at(1, 1) == doctest::Approx(0.5).epsilon(1e-15));
        const auto law = joint_law_sn_tn(j, 6).law;
        const auto direct = oracle::iterated_convolution(j, 6);
        for (std::int64_t x = 0; x < 130; ++x)
            for (std::int64_t y = 0; y <= 6; ++y) CHECK(std::fabs(law.at(x, y) - direct.at(x, y)) < 1e-10);
    }
    SUBCASE("random laws") {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            const auto j = oracle::random_joint(seed, 2 + seed % 5, 2 + (seed * 3) % 6);
            const std::int64_t n = static_cast<std::int64_t>(3 + 5 * seed);
            const auto law = joint_law_sn_tn(j, n).law;
            const auto direct = oracle::iterated_convolution(j, n);
            double worst = 0.0;
            for (std::size_t ix = 0; ix < direct.nx; ++ix)
                for (std::size_t iy = 0; iy < direct.ny; ++iy) {
                    const auto x = direct.x0 + static_cast<std::int64_t>(ix);
                    const auto y = direct.y0 + static_cast<std::int64_t>(iy);
                    worst = std::max(worst, std::fabs(law.at(x, y) - direct.at(x, y)));
                }
            CHECK(worst < 1e-10);
            // S-marginal equals the point probabilities
            const LatticePMF sx = law.marginal_x();
            const LatticePMF px = j.marginal_x();
            for (std::int64_t m = sx.min_support(); m <= sx.max_support(); ++m) {
                CHECK(std::fabs(sx.at(m) - prob_s_eq_m(px, n, m)) < 1e-10);
            }
        }
    }
    SUBCASE("memory budget") {
        CHECK_THROWS_AS(joint_law_sn_tn(occupancy_joint(1.0), 200, 1000), ResourceError);
    }
}

TEST_CASE("conditional slices") {
    SUBCASE("two balls in two urns") {
        for (double lambda : {0.3, 1.0, 2.7}) {
            const LatticePMF law = conditional_slice(occupancy_joint(lambda), 2, 2);
            CHECK(law.at(0) == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(law.at(1) == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    SUBCASE("Y = X gives a point mass") {
        const auto yx = function_joint(poisson_pmf(1.5), [](std::int64_t x) { return x; });
        const LatticePMF law = conditional_slice(yx, 10, 13);
        // the rest of the row is DFT roundoff only
        CHECK(law.at(13) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(1.0 - law.at(13) < 1e-12);
    }
    SUBCASE("stars and bars") {
        // 3 balls in 2 urns, 4 equally likely compositions; one urn is empty in 2 of them
        for (double p : {0.3, 0.6}) {
            const auto j = indicator_joint(geometric_pmf(p), 0);
            const LatticePMF law = conditional_slice(j, 2, 3);
            CHECK(law.at(0) == doctest::Approx(0.5).epsilon(1e-12));
            CHECK(law.at(1) == doctest::Approx(0.5).epsilon(1e-12));
        }
    }
    SUBCASE("random laws match the direct row") {
        for (std::uint64_t seed = 20; seed < 26; ++seed) {
            const auto j = oracle::random_joint(seed, 4, 3);
            const std::int64_t n = 12;
            const std::int64_t m = n * j.x_offset() + 15;
            const LatticePMF fast = conditional_slice(j, n, m);
            const LatticePMF slow = oracle::conditional_row(j, n, m);
            CHECK(oracle::total_variation(fast, slow) < 1e-10);
            CHECK(fast.mass() == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
    SUBCASE("unreachable m") {
        CHECK_THROWS_AS(conditional_slice(occupancy_joint(1.0), 3, -1), IllConditionedError);
        const auto coin = function_joint(LatticePMF(0, {0.5, 0.0, 0.5}), [](std::int64_t x) { return x; });
        CHECK_THROWS_AS(conditional_slice(coin, 3, 3), IllConditionedError);
    }
}

TEST_CASE("experiment spec validation") {
    const auto j = occupancy_joint(1.0);
    CHECK_NOTHROW(ExperimentSpec(j, 10, 10));
    CHECK_THROWS_AS(ExperimentSpec(j, 0, 0), DomainError);
    CHECK_THROWS_AS(ExperimentSpec(j, 10, -3), DomainError);
    CHECK_THROWS_AS(ExperimentSpec(j, 10, 10, 0.0), DomainError);
}

TEST_CASE("Bartlett inversion") {
    const auto j = occupancy_joint(1.0);
    const ExperimentSpec spec(j, 64, 64);
    const double p = spec.prob().value;
    const BartlettResult b0 = psi_bartlett(spec, 0.0);
    CHECK(std::fabs(b0.value.real() - 2 * std::numbers::pi * p) <= 1e-8 * 2 * std::numbers::pi * p);
    CHECK(std::fabs(b0.value.imag()) < 1e-12);
    const BartlettResult b1 = psi_bartlett(spec, 0.1);
    CHECK(std::abs(b1.value) <= std::abs(b0.value) + 1e-14);

    const LatticePMF law = conditional_slice(j, 64, 64);
    for (double t : {0.1, 0.5, 1.3}) {
        std::complex<double> ecf{0.0, 0.0};
        for (std::int64_t k = law.min_support(); k <= law.max_support(); ++k) {
            ecf += law.at(k) * std::exp(std::complex<double>(0.0, t * static_cast<double>(k)));
        }
        const auto psi = psi_bartlett(spec, t).value / (2 * std::numbers::pi * p);
        CHECK(std::abs(psi - ecf) < 1e-8);
        CHECK(std::abs(conditional_cf_exact(j, 64, 64, t) - ecf) < 1e-12);
    }
}
