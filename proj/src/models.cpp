#include "condlimit/models.hpp"

#include "condlimit/errors.hpp"
#include "condlimit/fourier.hpp"
#include "condlimit/numeric.hpp"
#include "condlimit/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace condlimit {

// ---------------------------------------------------------------------------
// Families

LatticePMF poisson_pmf(double lambda, double tail_tol) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("poisson_pmf: lambda must be > 0");
    const double log_lambda = std::log(lambda);
    DiscreteFamily fam;
    fam.support_min = 0;
    fam.log_pmf = [=](std::int64_t k) {
        const double kk = static_cast<double>(k);
        return kk * log_lambda - lambda - std::lgamma(kk + 1.0);
    };
    fam.ratio_bound = [=](std::int64_t k) { return lambda / (static_cast<double>(k) + 1.0); };
    return truncate_family(fam, tail_tol);
}

LatticePMF poisson_pmf(std::int64_t m, std::int64_t n, double tail_tol) {
    if (m <= 0 || n <= 0) throw DomainError("poisson_pmf: ratio form needs m > 0 and N > 0");
    return poisson_pmf(static_cast<double>(m) / static_cast<double>(n), tail_tol);
}

LatticePMF geometric_pmf(double p, double tail_tol) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("geometric_pmf: p must lie in (0, 1)");
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    DiscreteFamily fam;
    fam.support_min = 0;
    fam.log_pmf = [=](std::int64_t k) { return log_p + static_cast<double>(k) * log_q; };
    fam.ratio_bound = [=](std::int64_t) { return 1.0 - p; };
    return truncate_family(fam, tail_tol);
}

LatticePMF borel_pmf(double mu, double tail_tol) {
    if (!(mu > 0.0 && mu < 1.0)) throw DomainError("borel_pmf: mu must lie in (0, 1)");
    const double log_mu = std::log(mu);
    DiscreteFamily fam;
    fam.support_min = 1;
    fam.log_pmf = [=](std::int64_t l) {
        const double ll = static_cast<double>(l);
        return -mu * ll + (ll - 1.0) * (log_mu + std::log(ll)) - std::lgamma(ll + 1.0);
    };
    // P(l+1)/P(l) = mu e^{-mu} (1 + 1/l)^{l-1} increases to mu e^{1-mu} < 1
    const double limit = mu * std::exp(1.0 - mu);
    fam.ratio_bound = [=](std::int64_t) { return limit; };
    return truncate_family(fam, tail_tol);
}

LatticePMF offspring_pmf(OffspringLaw law, double tail_tol) {
    switch (law) {
        case OffspringLaw::Poisson1: return poisson_pmf(1.0, tail_tol);
        case OffspringLaw::Uniform02: return LatticePMF(0, {0.5, 0.0, 0.5});
        case OffspringLaw::Binomial2: return LatticePMF(0, {0.25, 0.5, 0.25});
    }
    throw DomainError("offspring_pmf: unknown law");
}

JointLatticePMF indicator_joint(const LatticePMF& pmf_x, std::int64_t level) {
    // Build both rows explicitly so a level outside the support still yields
    // a (degenerate) valid joint.
    return function_joint(pmf_x, [level](std::int64_t x) -> std::int64_t { return x == level ? 1 : 0; });
}

JointLatticePMF occupancy_joint(double lambda, double tail_tol) {
    return indicator_joint(poisson_pmf(lambda, tail_tol), 0);
}

// ---------------------------------------------------------------------------
// Hashing with linear probing

namespace {

void enumerate_placements(int ball, int balls, int urns, std::uint32_t occupied, int displacement,
                          std::vector<std::uint64_t>& counts) {
    if (ball == balls) {
        ++counts[static_cast<std::size_t>(displacement)];
        return;
    }
    for (int h = 0; h < urns; ++h) {
        int pos = h;
        int moved = 0;
        while (occupied & (1u << pos)) {
            pos = (pos + 1) % urns;
            ++moved;
        }
        enumerate_placements(ball + 1, balls, urns, occupied | (1u << pos), displacement + moved,
                             counts);
    }
}

}  // namespace

LatticePMF displacement_enumerate(int l) {
    if (l < 1 || l > 8) throw DomainError("displacement_enumerate: l must lie in [1, 8]");
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(l * l + 1), 0);
    enumerate_placements(0, l - 1, l, 0u, 0, counts);
    double total = 1.0;
    for (int i = 0; i < l - 1; ++i) total *= l;
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) w[i] = static_cast<double>(counts[i]) / total;
    return LatticePMF(0, std::move(w));
}

std::int64_t hashing_simulate(std::int64_t m, std::int64_t n, CounterRng& rng) {
    if (m < 1 || n < 0 || n >= m) throw DomainError("hashing_simulate: requires 0 <= n < m");
    std::vector<char> occupied(static_cast<std::size_t>(m), 0);
    std::int64_t total = 0;
    for (std::int64_t ball = 0; ball < n; ++ball) {
        auto pos = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(m)));
        while (occupied[pos]) {
            pos = pos + 1 == occupied.size() ? 0 : pos + 1;
            ++total;
        }
        occupied[pos] = 1;
    }
    return total;
}

HashingJoint hashing_joint(double mu, int lmax, std::int64_t mc_samples, std::uint64_t seed,
                           double tail_tol) {
    if (!(mu > 0.0 && mu < 1.0)) throw DomainError("hashing_joint: mu must lie in (0, 1)");
    if (lmax < 1 || lmax > 8) throw DomainError("hashing_joint: lmax must lie in [1, 8]");
    if (mc_samples != 0 && mc_samples < 10'000) {
        throw DomainError("hashing_joint: at least 1e4 Monte Carlo draws per row are required");
    }
    HashingJoint out{JointLatticePMF(1, 0, 1, 1, {1.0}), false, {}, 0.0};

    if (mc_samples == 0) {
        const double log_mu = std::log(mu);
        std::vector<double> px(static_cast<std::size_t>(lmax));
        CompensatedSum z;
        for (int l = 1; l <= lmax; ++l) {
            const double ll = l;
            px[static_cast<std::size_t>(l - 1)] =
                std::exp(-mu * ll + (ll - 1.0) * (log_mu + std::log(ll)) - std::lgamma(ll + 1.0));
            z.add(px[static_cast<std::size_t>(l - 1)]);
        }
        const std::size_t ny = static_cast<std::size_t>((lmax - 1) * (lmax - 2) / 2 + 1);
        std::vector<double> w(static_cast<std::size_t>(lmax) * ny, 0.0);
        for (int l = 1; l <= lmax; ++l) {
            const LatticePMF d = displacement_enumerate(l);
            for (std::size_t k = 0; k < d.width(); ++k) {
                w[static_cast<std::size_t>(l - 1) * ny + static_cast<std::size_t>(d.offset()) + k] =
                    px[static_cast<std::size_t>(l - 1)] / z.value() * d.weights()[k];
            }
        }
        out.joint = JointLatticePMF(1, 0, static_cast<std::size_t>(lmax), ny, std::move(w));
        return out;
    }

    const LatticePMF borel = borel_pmf(mu, tail_tol);
    const std::int64_t l_top = borel.max_support();
    const std::size_t nx = static_cast<std::size_t>(l_top);
    const std::size_t ny = static_cast<std::size_t>((l_top - 1) * (l_top - 2) / 2 + 1);
    std::vector<double> w(nx * ny, 0.0);
    std::vector<double> row_se(nx, 0.0);
    parallel_for(nx, [&](std::size_t row) {
        const auto l = static_cast<std::int64_t>(row) + 1;
        const double pl = borel.at(l);
        if (pl == 0.0) return;
        if (l <= lmax) {
            const LatticePMF d = displacement_enumerate(static_cast<int>(l));
            for (std::size_t k = 0; k < d.width(); ++k) {
                w[row * ny + static_cast<std::size_t>(d.offset()) + k] = pl * d.weights()[k];
            }
            return;
        }
        CounterRng rng(seed, static_cast<std::uint64_t>(l));
        std::vector<std::int64_t> counts(ny, 0);
        for (std::int64_t i = 0; i < mc_samples; ++i) {
            ++counts[static_cast<std::size_t>(hashing_simulate(l, l - 1, rng))];
        }
        double worst = 0.0;
        const double draws = static_cast<double>(mc_samples);
        for (std::size_t k = 0; k < ny; ++k) {
            const double q = static_cast<double>(counts[k]) / draws;
            w[row * ny + k] = pl * q;
            worst = std::max(worst, pl * std::sqrt(q * (1.0 - q) / draws));
        }
        row_se[row] = worst;
    });
    out.joint = JointLatticePMF(1, 0, nx, ny, std::move(w), borel.defect());
    out.approximate = l_top > lmax;
    out.row_std_error = std::move(row_se);
    for (double se : out.row_std_error) out.std_error_budget += se;
    return out;
}

// ---------------------------------------------------------------------------
// Oracles

LatticePMF occupancy_oracle(std::int64_t m, std::int64_t n) {
    if (m < 0 || n < 1) throw DomainError("occupancy_oracle: requires m >= 0 and N >= 1");
    // occupied[j] = P(j distinct urns hit); the transition is the Stirling
    // recursion j! S(b+1, j) = j * j! S(b, j) + j * (j-1)! S(b, j-1), normalized by N^b.
    const auto nn = static_cast<std::size_t>(n);
    std::vector<double> occupied(nn + 1, 0.0);
    occupied[0] = 1.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::int64_t ball = 0; ball < m; ++ball) {
        const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(ball) + 1, nn);
        for (std::size_t j = top; j >= 1; --j) {
            occupied[j] = occupied[j] * static_cast<double>(j) * inv_n +
                          occupied[j - 1] * static_cast<double>(nn - j + 1) * inv_n;
        }
        occupied[0] = 0.0;
    }
    std::vector<double> empty(nn + 1);
    for (std::size_t u = 0; u <= nn; ++u) empty[u] = occupied[nn - u];
    return LatticePMF(0, std::move(empty));
}

namespace {

void enumerate_compositions(std::int64_t remaining, std::int64_t parts_left, std::int64_t acc,
                            const Statistic& f, std::map<std::int64_t, std::uint64_t>& counts) {
    if (parts_left == 1) {
        ++counts[acc + f(remaining)];
        return;
    }
    for (std::int64_t z = 0; z <= remaining; ++z) {
        enumerate_compositions(remaining - z, parts_left - 1, acc + f(z), f, counts);
    }
}

}  // namespace

LatticePMF bose_einstein_oracle(std::int64_t m, std::int64_t n, const Statistic& f) {
    if (m < 0 || n < 1) throw DomainError("bose_einstein_oracle: requires m >= 0 and N >= 1");
    const double log_count = std::lgamma(static_cast<double>(m + n)) -
                             std::lgamma(static_cast<double>(m + 1)) -
                             std::lgamma(static_cast<double>(n));
    if (log_count > std::log(1e7) + 1e-9) {
        throw ResourceError("bose_einstein_oracle: more than 1e7 compositions");
    }
    std::map<std::int64_t, std::uint64_t> counts;
    enumerate_compositions(m, n, 0, f, counts);
    std::uint64_t total = 0;
    for (const auto& [v, c] : counts) total += c;
    const std::int64_t lo = counts.begin()->first;
    const std::int64_t hi = counts.rbegin()->first;
    std::vector<double> w(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (const auto& [v, c] : counts) {
        w[static_cast<std::size_t>(v - lo)] = static_cast<double>(c) / static_cast<double>(total);
    }
    return LatticePMF(lo, std::move(w));
}

namespace {

struct BranchingWalk {
    const LatticePMF& offspring;
    std::int64_t n;
    std::vector<std::int64_t> seq;
    std::map<std::vector<std::int64_t>, double> plain;
    std::map<std::vector<std::int64_t>, double> ballot;
    std::size_t plain_count = 0;
    std::size_t ballot_count = 0;

    void run(std::int64_t depth, std::int64_t sum, double weight, bool ballot_ok) {
        const std::int64_t target = n - 1;
        if (depth == n) {
            if (sum != target) return;
            std::vector<std::int64_t> key = seq;
            std::sort(key.begin(), key.end());
            plain[key] += weight;
            ++plain_count;
            if (ballot_ok) {
                ballot[key] += weight;
                ++ballot_count;
            }
            return;
        }
        for (std::int64_t x = offspring.min_support(); x <= offspring.max_support(); ++x) {
            const double p = offspring.at(x);
            if (p == 0.0 || sum + x > target) continue;
            seq.push_back(x);
            const std::int64_t k = depth + 1;  // S_k >= k is required for k = 1 .. N-1
            const bool ok = ballot_ok && (k == n || sum + x >= k);
            run(depth + 1, sum + x, weight * p, ok);
            seq.pop_back();
        }
    }
};

}  // namespace

BranchingReport branching_oracle(const LatticePMF& offspring, std::int64_t n) {
    if (n < 1 || n > 8) throw DomainError("branching_oracle: N must lie in [1, 8]");
    if (offspring.min_support() < 0) throw DomainError("branching_oracle: offspring counts must be >= 0");
    BranchingWalk walk{offspring, n, {}, {}, {}, 0, 0};
    walk.run(0, 0, 1.0, true);
    BranchingReport rep;
    for (const auto& [k, w] : walk.plain) rep.plain_prob += w;
    for (const auto& [k, w] : walk.ballot) rep.ballot_prob += w;
    rep.plain_sequences = walk.plain_count;
    rep.ballot_sequences = walk.ballot_count;
    if (!(rep.plain_prob > 0.0) || !(rep.ballot_prob > 0.0)) {
        throw IllConditionedError("branching_oracle: conditioning event has probability zero");
    }
    CompensatedSum tv;
    for (const auto& [key, w] : walk.plain) {
        const auto it = walk.ballot.find(key);
        const double q = it == walk.ballot.end() ? 0.0 : it->second / rep.ballot_prob;
        tv.add(std::fabs(w / rep.plain_prob - q));
    }
    for (const auto& [key, w] : walk.ballot) {
        if (!walk.plain.count(key)) tv.add(w / rep.ballot_prob);
    }
    rep.gap = 0.5 * tv.value();
    return rep;
}

// ---------------------------------------------------------------------------
// Model specs

void ModelSpec::validate() const {
    switch (kind) {
        case ModelKind::Occupancy:
            if (!(lambda > 0.0)) throw DomainError("occupancy: lambda must be > 0");
            break;
        case ModelKind::BoseEinstein:
            if (!(p > 0.0 && p < 1.0)) throw DomainError("bose: p must lie in (0, 1)");
            break;
        case ModelKind::RandomForest:
        case ModelKind::Hashing:
            if (!(mu > 0.0 && mu < 1.0)) throw DomainError("mu must lie in (0, 1)");
            break;
        case ModelKind::Branching: break;
    }
    if (kind == ModelKind::Hashing) {
        if (lmax < 1 || lmax > 8) throw DomainError("hashing: lmax must lie in [1, 8]");
        if (mc != 0 && mc < 10'000) throw DomainError("hashing: mc must be 0 or >= 1e4");
    }
    validate_tail_tolerance(tail_tol);
}

JointLatticePMF build_joint(const ModelSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ModelKind::Occupancy: return occupancy_joint(spec.lambda, spec.tail_tol);
        case ModelKind::BoseEinstein: {
            const Statistic f = spec.statistic;
            return function_joint(geometric_pmf(spec.p, spec.tail_tol), [f](std::int64_t x) { return f(x); });
        }
        case ModelKind::Branching: {
            const LatticePMF off = offspring_pmf(spec.offspring, spec.tail_tol);
            const Moments mom = moments(off);
            if (std::fabs(mom.mean - 1.0) > 1e-12) {
                throw DomainError("branching: offspring mean must equal 1");
            }
            return indicator_joint(off, spec.statistic.level);
        }
        case ModelKind::RandomForest:
            return indicator_joint(borel_pmf(spec.mu, spec.tail_tol), spec.statistic.level);
        case ModelKind::Hashing:
            return hashing_joint(spec.mu, spec.lmax, spec.mc, spec.seed, spec.tail_tol).joint;
    }
    throw DomainError("build_joint: unknown model");
}

namespace {

// same threshold as conditional_slice
bool reachable(const LatticePMF& pmf, std::int64_t n, std::int64_t m) {
    const PointProbability p = prob_s_eq_m_report(pmf, n, m);
    return p.value > 10.0 * p.error_budget;
}

}  // namespace

std::int64_t default_m(const ModelSpec& spec, std::int64_t n, const LatticePMF& marginal_x) {
    if (n < 1) throw DomainError("default_m: N must be positive");
    if (spec.kind == ModelKind::Branching) {
        if (!reachable(marginal_x, n, n - 1)) {
            throw IllConditionedError("default_m: P(S_N = N - 1) = 0 for this offspring law");
        }
        return n - 1;
    }
    const double mean = moments(marginal_x).mean;
    const std::int64_t centre = std::llround(static_cast<double>(n) * mean);
    for (std::int64_t step = 0; step <= 3; ++step) {
        for (std::int64_t cand : {centre - step, centre + step}) {
            if (reachable(marginal_x, n, cand)) return cand;
            if (step == 0) break;
        }
    }
    throw IllConditionedError("default_m: no m within 3 steps of N E[X] has positive probability");
}

namespace {

double parse_double(std::string_view key, std::string_view v) {
    try {
        std::size_t used = 0;
        const std::string s(v);
        const double d = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw DomainError("model spec: bad real value for '" + std::string(key) + "'");
    }
}

std::int64_t parse_int(std::string_view key, std::string_view v) {
    std::int64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw DomainError("model spec: bad integer value for '" + std::string(key) + "'");
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view text) {
    text = trim(text);
    const auto colon = text.find(':');
    const std::string_view kind = trim(text.substr(0, colon));
    ModelSpec spec;
    if (kind == "occupancy") {
        spec.kind = ModelKind::Occupancy;
    } else if (kind == "bose") {
        spec.kind = ModelKind::BoseEinstein;
    } else if (kind == "branching") {
        spec.kind = ModelKind::Branching;
        spec.statistic = Statistic::indicator(3);
    } else if (kind == "forest") {
        spec.kind = ModelKind::RandomForest;
        spec.statistic = Statistic::indicator(1);
    } else if (kind == "hashing") {
        spec.kind = ModelKind::Hashing;
        spec.tail_tol = 1e-6;
    } else {
        throw DomainError("model spec: unknown model '" + std::string(kind) + "'");
    }
    std::string f_kind;
    std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw DomainError("model spec: expected key=value, got '" + std::string(item) + "'");
        const std::string_view key = trim(item.substr(0, eq));
        const std::string_view val = trim(item.substr(eq + 1));
        if (key == "lambda" && spec.kind == ModelKind::Occupancy) {
            spec.lambda = parse_double(key, val);
        } else if (key == "p" && spec.kind == ModelKind::BoseEinstein) {
            spec.p = parse_double(key, val);
        } else if (key == "mu" && (spec.kind == ModelKind::RandomForest || spec.kind == ModelKind::Hashing)) {
            spec.mu = parse_double(key, val);
        } else if (key == "K" && spec.kind != ModelKind::Occupancy && spec.kind != ModelKind::Hashing) {
            spec.statistic.level = parse_int(key, val);
        } else if (key == "f" && spec.kind == ModelKind::BoseEinstein) {
            f_kind = std::string(val);
        } else if (key == "offspring" && spec.kind == ModelKind::Branching) {
            if (val == "poisson1") spec.offspring = OffspringLaw::Poisson1;
            else if (val == "uniform02") spec.offspring = OffspringLaw::Uniform02;
            else if (val == "binomial2") spec.offspring = OffspringLaw::Binomial2;
            else throw DomainError("model spec: unknown offspring law '" + std::string(val) + "'");
        } else if (key == "lmax" && spec.kind == ModelKind::Hashing) {
            spec.lmax = static_cast<int>(parse_int(key, val));
        } else if (key == "mc" && spec.kind == ModelKind::Hashing) {
            spec.mc = parse_int(key, val);
        } else if (key == "seed") {
            spec.seed = static_cast<std::uint64_t>(parse_int(key, val));
        } else if (key == "tol") {
            spec.tail_tol = parse_double(key, val);
        } else {
            throw DomainError("model spec: key '" + std::string(key) + "' not valid for model '" +
                              std::string(kind) + "'");
        }
    }
    if (!f_kind.empty()) {
        if (f_kind == "identity") spec.statistic = Statistic::identity();
        else if (f_kind == "indicator") spec.statistic.kind = Statistic::Kind::Indicator;
        else if (f_kind == "zero") spec.statistic = Statistic::zero();
        else throw DomainError("model spec: unknown statistic '" + f_kind + "'");
    }
    spec.validate();
    return spec;
}

std::string to_string(const ModelSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    switch (spec.kind) {
        case ModelKind::Occupancy: os << "occupancy:lambda=" << spec.lambda; break;
        case ModelKind::BoseEinstein:
            os << "bose:p=" << spec.p << ",f=";
            switch (spec.statistic.kind) {
                case Statistic::Kind::Identity: os << "identity"; break;
                case Statistic::Kind::Indicator: os << "indicator,K=" << spec.statistic.level; break;
                case Statistic::Kind::Zero: os << "zero"; break;
            }
            break;
        case ModelKind::Branching:
            os << "branching:offspring="
               << (spec.offspring == OffspringLaw::Poisson1    ? "poisson1"
                   : spec.offspring == OffspringLaw::Uniform02 ? "uniform02"
                                                               : "binomial2")
               << ",K=" << spec.statistic.level;
            break;
        case ModelKind::RandomForest: os << "forest:mu=" << spec.mu << ",K=" << spec.statistic.level; break;
        case ModelKind::Hashing:
            os << "hashing:mu=" << spec.mu << ",lmax=" << spec.lmax << ",mc=" << spec.mc
               << ",seed=" << spec.seed;
            break;
    }
    os << ",tol=" << spec.tail_tol;
    return os.str();
}

}  // namespace condlimit
