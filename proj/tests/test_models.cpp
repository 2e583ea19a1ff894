#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "condlimit/errors.hpp"
#include "condlimit/fourier.hpp"
#include "condlimit/models.hpp"
#include "oracles.hpp"

#include <cmath>
#include <map>

using namespace condlimit;

namespace {

// Empty-urn count by listing all N^m placements.
std::vector<double> brute_empty_urns(int m, int n) {
    std::vector<double> counts(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<int> place(static_cast<std::size_t>(m), 0);
    double total = 0.0;
    while (true) {
        std::vector<char> hit(static_cast<std::size_t>(n), 0);
        for (int p : place) hit[static_cast<std::size_t>(p)] = 1;
        int empty = 0;
        for (char h : hit) empty += h ? 0 : 1;
        counts[static_cast<std::size_t>(empty)] += 1.0;
        total += 1.0;
        int i = 0;
        while (i < m && ++place[static_cast<std::size_t>(i)] == n) place[static_cast<std::size_t>(i++)] = 0;
        if (i == m) break;
    }
    for (double& c : counts) c /= total;
    return counts;
}

}  // namespace

TEST_CASE("parametric families") {
    for (double lambda : {0.5, 1.0, 3.0}) {
        const LatticePMF p = poisson_pmf(lambda);
        CHECK(p.at(0) == doctest::Approx(std::exp(-lambda)).epsilon(1e-15));
        const Moments m = moments(p);
        CHECK(std::fabs(m.mean - lambda) < 1e-10);
        CHECK(std::fabs(m.sigma * m.sigma - lambda) < 1e-10);
    }
    CHECK(poisson_pmf(std::int64_t{3}, std::int64_t{4}) == poisson_pmf(0.75));
    CHECK_THROWS_AS(poisson_pmf(std::int64_t{0}, std::int64_t{4}), DomainError);
    CHECK_THROWS_AS(poisson_pmf(-1.0), DomainError);

    const LatticePMF g = geometric_pmf(0.5);
    CHECK(g.at(0) == 0.5);
    CHECK(g.at(2) == doctest::Approx(0.125).epsilon(1e-15));
    for (double p : {0.2, 0.7}) CHECK(std::fabs(moments(geometric_pmf(p)).mean - (1 - p) / p) < 1e-10);
    CHECK_THROWS_AS(geometric_pmf(1.0), DomainError);

    const LatticePMF b = borel_pmf(0.5);
    CHECK(b.min_support() == 1);
    CHECK(b.at(1) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(b.at(1) == doctest::Approx(0.60653).epsilon(1e-5));
    CHECK(b.at(2) == doctest::Approx(std::exp(-1.0) / 2).epsilon(1e-15));
    CHECK(b.at(2) == doctest::Approx(0.18394).epsilon(1e-4));
    // Borel mean is 1 / (1 - mu)
    CHECK(std::fabs(moments(b).mean - 2.0) < 1e-10);
    double prev = 1.0;
    for (double tol : {1e-6, 1e-10, 1e-14}) {
        const LatticePMF t = borel_pmf(0.9, tol);
        CHECK(t.defect() <= tol);
        CHECK(1.0 - t.mass() <= prev);
        prev = 1.0 - t.mass();
    }
    CHECK_THROWS_AS(borel_pmf(1.0), DomainError);

    for (OffspringLaw law : {OffspringLaw::Poisson1, OffspringLaw::Uniform02, OffspringLaw::Binomial2}) {
        CHECK(std::fabs(moments(offspring_pmf(law)).mean - 1.0) < 1e-12);
    }
}

TEST_CASE("indicator joints") {
    const LatticePMF pois = poisson_pmf(1.0);
    const auto occ = occupancy_joint(1.0);
    CHECK(occ.at(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(occ.at(0, 0) == 0.0);
    CHECK(occ.marginal_x() == pois);

    const auto k3 = indicator_joint(pois, 3);
    CHECK(k3.marginal_y().at(1) == doctest::Approx(std::exp(-1.0) / 6).epsilon(1e-15));
    CHECK(k3.marginal_x() == pois);
}

TEST_CASE("linear probing displacements") {
    CHECK(displacement_enumerate(1) == LatticePMF::point_mass(0));
    CHECK(displacement_enumerate(2) == LatticePMF::point_mass(0));
    const LatticePMF d3 = displacement_enumerate(3);
    CHECK(d3.at(0) == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(d3.at(1) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(d3.max_support() == 1);
    CHECK_THROWS_AS(displacement_enumerate(9), DomainError);

    SUBCASE("simulation matches enumeration") {
        for (int l : {4, 5}) {
            const LatticePMF exact = displacement_enumerate(l);
            const std::int64_t draws = l == 4 ? 1'000'000 : 200'000;
            std::map<std::int64_t, double> hist;
            CounterRng rng(99, static_cast<std::uint64_t>(l));
            for (std::int64_t i = 0; i < draws; ++i) hist[hashing_simulate(l, l - 1, rng)] += 1.0;
            for (std::int64_t k = 0; k <= exact.max_support(); ++k) {
                const double p = exact.at(k);
                const double se = std::sqrt(p * (1 - p) / static_cast<double>(draws));
                CHECK(std::fabs(hist[k] / static_cast<double>(draws) - p) <= 3 * se + 1e-12);
            }
            for (const auto& [k, c] : hist) CHECK(exact.at(k) > 0.0);
        }
    }
    SUBCASE("simulator edge cases") {
        CounterRng rng(5, 0);
        for (int i = 0; i < 100; ++i) CHECK(hashing_simulate(7, 1, rng) == 0);
        const std::int64_t draws = 100'000;
        double ones = 0.0;
        for (std::int64_t i = 0; i < draws; ++i) ones += hashing_simulate(3, 2, rng) == 1 ? 1.0 : 0.0;
        const double se = std::sqrt((1.0 / 3) * (2.0 / 3) / draws);
        CHECK(std::fabs(ones / draws - 1.0 / 3) <= 3 * se);
        CHECK_THROWS_AS(hashing_simulate(3, 3, rng), DomainError);
    }
}

TEST_CASE("hashing joint") {
    SUBCASE("exact rows only") {
        const HashingJoint h = hashing_joint(0.5, 6, 0, 1);
        CHECK_FALSE(h.approximate);
        const LatticePMF b = borel_pmf(0.5);
        double kept = 0.0;
        for (std::int64_t l = 1; l <= 6; ++l) kept += b.at(l);
        CHECK(h.joint.at(1, 0) == doctest::Approx(b.at(1) / kept).epsilon(1e-14));
        CHECK(h.joint.at(1, 1) == 0.0);
        CHECK(h.joint.at(3, 1) / h.joint.at(3, 0) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(h.joint.mass() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(h.joint.marginal_x().max_support() == 6);
    }
    SUBCASE("with simulated tail rows") {
        const HashingJoint h = hashing_joint(0.5, 8, 10'000, 3);
        CHECK(h.approximate);
        CHECK(h.std_error_budget > 0.0);
        const LatticePMF bx = h.joint.marginal_x();
        const LatticePMF b = borel_pmf(0.5, 1e-6);
        for (std::int64_t l = 1; l <= b.max_support(); ++l) CHECK(std::fabs(bx.at(l) - b.at(l)) < 1e-12);
        // same seed, same joint
        CHECK(hashing_joint(0.5, 8, 10'000, 3).joint == h.joint);
        CHECK_THROWS_AS(hashing_joint(0.5, 8, 500, 3), DomainError);
    }
}

TEST_CASE("occupancy oracle") {
    const LatticePMF two = occupancy_oracle(2, 2);
    CHECK(two.at(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(two.at(1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(occupancy_oracle(3, 3).at(0) == doctest::Approx(6.0 / 27).epsilon(1e-15));
    for (int n = 1; n <= 5; ++n) {
        for (int m = 0; m <= 6; ++m) {
            const LatticePMF o = occupancy_oracle(m, n);
            const std::vector<double> brute = brute_empty_urns(m, n);
            for (int k = 0; k <= n; ++k) CHECK(std::fabs(o.at(k) - brute[static_cast<std::size_t>(k)]) < 1e-15);
            if (m < n) CHECK(o.min_support() >= n - m);
        }
    }
    CHECK(occupancy_oracle(0, 4) == LatticePMF::point_mass(4));
    CHECK_THROWS_AS(occupancy_oracle(2, 0), DomainError);

    for (double lambda : {0.5, 2.0}) {
        const LatticePMF engine = conditional_slice(occupancy_joint(lambda), 6, 8);
        CHECK(oracle::total_variation(engine, occupancy_oracle(8, 6)) < 1e-12);
    }
}

TEST_CASE("Bose-Einstein oracle") {
    const LatticePMF id = bose_einstein_oracle(3, 2, Statistic::identity());
    CHECK(id == LatticePMF::point_mass(3));
    const LatticePMF zero = bose_einstein_oracle(3, 2, Statistic::zero());
    CHECK(zero == LatticePMF::point_mass(0));
    // one urn empty in 2 of the 4 compositions of 3 into 2 parts
    const LatticePMF ind = bose_einstein_oracle(3, 2, Statistic::indicator(0));
    CHECK(ind.at(1) == doctest::Approx(0.5).epsilon(1e-15));
    // Z_1 is uniform on {0, 1, 2, 3}, so each level is hit by 2 * 1/4 urns on average
    for (std::int64_t k = 0; k <= 3; ++k) {
        const LatticePMF c = bose_einstein_oracle(3, 2, Statistic::indicator(k));
        CHECK(c.at(1) + 2 * c.at(2) == doctest::Approx(0.5).epsilon(1e-15));
    }

    for (double p : {0.3, 0.5, 0.7}) {
        for (const Statistic& f : {Statistic::indicator(0), Statistic::indicator(2), Statistic::identity()}) {
            const auto j = function_joint(geometric_pmf(p), [f](std::int64_t x) { return f(x); });
            const LatticePMF engine = conditional_slice(j, 4, 7);
            CHECK(oracle::total_variation(engine, bose_einstein_oracle(7, 4, f)) < 1e-10);
        }
    }
    CHECK_THROWS_AS(bose_einstein_oracle(60, 40, Statistic::identity()), ResourceError);
}

TEST_CASE("branching oracle") {
    const LatticePMF uni = offspring_pmf(OffspringLaw::Uniform02);
    const BranchingReport r = branching_oracle(uni, 3);
    CHECK(r.plain_sequences == 3);
    CHECK(r.ballot_sequences == 1);
    CHECK(r.gap == 0.0);
    CHECK(r.plain_prob == doctest::Approx(3.0 / 8).epsilon(1e-15));
    CHECK(r.ballot_prob == doctest::Approx(1.0 / 8).epsilon(1e-15));

    const BranchingReport one = branching_oracle(offspring_pmf(OffspringLaw::Poisson1), 1);
    CHECK(one.gap == 0.0);
    CHECK(one.plain_prob == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    for (std::int64_t n = 1; n <= 6; ++n) {
        CHECK(branching_oracle(offspring_pmf(OffspringLaw::Poisson1, 1e-12), n).gap <= 1e-12);
        CHECK(branching_oracle(offspring_pmf(OffspringLaw::Binomial2), n).gap <= 1e-12);
    }
    // the ballot event is a 1/N share of the plain one
    const BranchingReport b5 = branching_oracle(offspring_pmf(OffspringLaw::Binomial2), 5);
    CHECK(b5.ballot_prob == doctest::Approx(b5.plain_prob / 5).epsilon(1e-13));

    CHECK_THROWS_AS(branching_oracle(uni, 9), DomainError);
    CHECK_THROWS_AS(branching_oracle(LatticePMF::point_mass(2), 3), IllConditionedError);
}

TEST_CASE("model specs") {
    const ModelSpec occ = parse_model_spec("occupancy:lambda=1.0");
    CHECK(occ.kind == ModelKind::Occupancy);
    CHECK(occ.lambda == 1.0);
    const ModelSpec bose = parse_model_spec("bose:p=0.5,f=identity");
    CHECK(bose.statistic.kind == Statistic::Kind::Identity);
    const ModelSpec br = parse_model_spec("branching:offspring=poisson1,K=3");
    CHECK(br.statistic.level == 3);
    const ModelSpec forest = parse_model_spec(" forest:mu=0.5, K=2 ");
    CHECK(forest.mu == 0.5);
    CHECK(forest.statistic.level == 2);
    const ModelSpec hash = parse_model_spec("hashing:mu=0.5,lmax=8,mc=100000");
    CHECK(hash.mc == 100000);
    CHECK(hash.tail_tol == 1e-6);
    CHECK(parse_model_spec("forest").statistic.level == 1);

    for (const char* text : {"occupancy:lambda=0.3", "bose:p=0.25,f=indicator,K=2", "bose:f=zero",
                             "branching:offspring=binomial2,K=0", "forest:mu=0.75,K=1,tol=1e-12",
                             "hashing:mu=0.4,lmax=5,mc=0,seed=9"}) {
        const std::string once = to_string(parse_model_spec(text));
        CHECK(to_string(parse_model_spec(once)) == once);
    }

    for (const char* bad : {"", "urns:lambda=1", "occupancy:lambda", "occupancy:lambda=x", "occupancy:p=0.5",
                            "occupancy:lambda=-1", "bose:p=1.5", "bose:f=square", "forest:mu=1",
                            "branching:offspring=poisson2", "hashing:lmax=9", "hashing:mc=10",
                            "occupancy:tol=0.5", "forest:K=1.5"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_model_spec(bad), DomainError);
    }
}

TEST_CASE("building joints and choosing m") {
    for (const char* text : {"occupancy:lambda=1", "bose:p=0.5", "branching:offspring=binomial2,K=0",
                             "forest:mu=0.5,K=1", "hashing:mu=0.5,lmax=6"}) {
        const ModelSpec spec = parse_model_spec(text);
        const auto j = build_joint(spec);
        CHECK(j.mass() == doctest::Approx(1.0).epsilon(1e-5));
        const LatticePMF px = j.marginal_x();
        const std::int64_t m = default_m(spec, 40, px);
        CHECK(prob_s_eq_m(px, 40, m) > 0.0);
        if (spec.kind == ModelKind::Branching) CHECK(m == 39);
        else CHECK(std::llabs(m - std::llround(40 * moments(px).mean)) <= 3);
    }
    CHECK(default_m(parse_model_spec("occupancy:lambda=1"), 100, poisson_pmf(1.0)) == 100);
    // span 2 offspring: S_N = N - 1 is impossible for even N
    const ModelSpec uni = parse_model_spec("branching:offspring=uniform02");
    CHECK_THROWS_AS(default_m(uni, 4, offspring_pmf(OffspringLaw::Uniform02)), IllConditionedError);
    CHECK_THROWS_AS(default_m(uni, 0, offspring_pmf(OffspringLaw::Uniform02)), DomainError);

    // the conditional law does not depend on the free parameter
    const LatticePMF a = conditional_slice(build_joint(parse_model_spec("forest:mu=0.3,K=1")), 12, 20);
    const LatticePMF b = conditional_slice(build_joint(parse_model_spec("forest:mu=0.6,K=1")), 12, 20);
    CHECK(oracle::total_variation(a, b) < 1e-9);
}
