#pragma once

#include "condlimit/lattice.hpp"
#include "condlimit/random.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace condlimit {

/// Default tail tolerance for infinite-support families.
inline constexpr double kDefaultTailTolerance = 1e-16;

/// Per-urn statistic f in U = sum f(Z_i).
struct Statistic {
    enum class Kind { Identity, Indicator, Zero };
    Kind kind = Kind::Indicator;
    std::int64_t level = 0;  ///< for Indicator: f(x) = 1{x = level}

    std::int64_t operator()(std::int64_t x) const noexcept {
        switch (kind) {
            case Kind::Identity: return x;
            case Kind::Indicator: return x == level ? 1 : 0;
            case Kind::Zero: return 0;
        }
        return 0;
    }

    static Statistic identity() { return {Kind::Identity, 0}; }
    static Statistic indicator(std::int64_t level) { return {Kind::Indicator, level}; }
    static Statistic zero() { return {Kind::Zero, 0}; }
};

enum class ModelKind { Occupancy, BoseEinstein, Branching, RandomForest, Hashing };
enum class OffspringLaw { Poisson1, Uniform02, Binomial2 };

struct ModelSpec {
    ModelKind kind = ModelKind::Occupancy;
    double lambda = 1.0;                      ///< occupancy
    double p = 0.5;                           ///< Bose-Einstein
    double mu = 0.5;                          ///< forests and hashing
    OffspringLaw offspring = OffspringLaw::Poisson1;
    Statistic statistic = Statistic::indicator(0);
    int lmax = 8;                             ///< hashing: rows enumerated exactly
    std::int64_t mc = 0;                      ///< hashing: MC draws per tail row; 0 = exact rows only
    std::uint64_t seed = 1;
    double tail_tol = kDefaultTailTolerance;

    void validate() const;
};

/// Parses `kind:key=value,...`, e.g. `occupancy:lambda=1.0`, `bose:p=0.5,f=identity`,
/// `branching:offspring=poisson1,K=3`, `forest:mu=0.5,K=2`,
/// `hashing:mu=0.5,lmax=8,mc=100000`. Optional keys on every model: tol, seed.
ModelSpec parse_model_spec(std::string_view text);
std::string to_string(const ModelSpec& spec);

LatticePMF poisson_pmf(double lambda, double tail_tol = kDefaultTailTolerance);
/// Ratio form lambda = m / N.
LatticePMF poisson_pmf(std::int64_t m, std::int64_t n, double tail_tol = kDefaultTailTolerance);
/// P(X = k) = p (1 - p)^k on k >= 0.
LatticePMF geometric_pmf(double p, double tail_tol = kDefaultTailTolerance);
/// P(X = l) = exp(-mu l) (mu l)^(l-1) / l! on l >= 1, evaluated in log space.
LatticePMF borel_pmf(double mu, double tail_tol = kDefaultTailTolerance);
LatticePMF offspring_pmf(OffspringLaw law, double tail_tol = kDefaultTailTolerance);

/// (X, 1{X = level}).
JointLatticePMF indicator_joint(const LatticePMF& pmf_x, std::int64_t level);
/// X ~ Poisson(lambda), Y = 1{X = 0}.
JointLatticePMF occupancy_joint(double lambda, double tail_tol = kDefaultTailTolerance);

/// Exact law of the total displacement d_{l, l-1}: l - 1 balls hashed
/// uniformly into l circular urns with clockwise linear probing. 1 <= l <= 8.
LatticePMF displacement_enumerate(int l);

/// One draw of d_{m, n}; requires 0 <= n < m.
std::int64_t hashing_simulate(std::int64_t m, std::int64_t n, CounterRng& rng);

struct HashingJoint {
    JointLatticePMF joint;
    bool approximate = false;
    /// Standard error of each joint cell, max over cells of each MC row.
    std::vector<double> row_std_error;
    double std_error_budget = 0.0;  ///< sum of per-row maxima
};

/// (X, Y) with X ~ Borel(mu) and Y | X = l ~ d_{l, l-1}. Rows l <= lmax are
/// enumerated; rows above use mc_samples simulated draws each. mc_samples = 0
/// keeps the exact rows only, with X conditioned on X <= lmax.
HashingJoint hashing_joint(double mu, int lmax, std::int64_t mc_samples, std::uint64_t seed,
                           double tail_tol = 1e-6);

/// Exact law of the number of empty urns when m balls go uniformly into N urns,
/// by the surjection-count recursion (independent of Poisson conditioning).
LatticePMF occupancy_oracle(std::int64_t m, std::int64_t n);

/// Law of sum f(Z_i) under the uniform law on weak compositions of m into N parts.
LatticePMF bose_einstein_oracle(std::int64_t m, std::int64_t n, const Statistic& f);

struct BranchingReport {
    double gap = 0.0;               ///< total variation between the two multiset laws
    double plain_prob = 0.0;        ///< P(S_N = N - 1)
    double ballot_prob = 0.0;       ///< P(ballot condition and S_N = N - 1)
    std::size_t plain_sequences = 0;
    std::size_t ballot_sequences = 0;
};

/// Compares the law of the sorted offspring multiset under the ballot
/// conditioning {S_k >= k for k < N, S_N = N - 1} and under {S_N = N - 1}.
BranchingReport branching_oracle(const LatticePMF& offspring, std::int64_t n);

/// Joint law of (X, Y) for a model.
JointLatticePMF build_joint(const ModelSpec& spec);

/// Conditioning value for sample size N: N - 1 for branching, else
/// round(N E[X]) with a scan of up to 3 lattice steps if that point has zero mass.
std::int64_t default_m(const ModelSpec& spec, std::int64_t n, const LatticePMF& marginal_x);

}  // namespace condlimit
