#include "condlimit/harness.hpp"

#include "condlimit/conditional.hpp"
#include "condlimit/errors.hpp"
#include "condlimit/numeric.hpp"
#include "condlimit/parallel.hpp"
#include "condlimit/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace condlimit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RateRow failed_row(std::int64_t n, std::int64_t m, const std::string& what) {
    RateRow row;
    row.n = n;
    row.m = m;
    row.gamma_n = row.dist_affine = row.dist_natural = kNaN;
    row.scaled_affine = row.scaled_natural = row.dev1 = row.dev2 = kNaN;
    row.ok = false;
    row.error = what;
    return row;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

Config parse_config(std::istream& is) {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw DomainError("config line " + std::to_string(lineno) + ": expected section.key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "engine.tail_tol") {
                cfg.tail_tol = std::stod(val);
            } else if (key == "audit.eta0") {
                cfg.eta0 = std::stod(val);
            } else if (key == "audit.grid_pitch") {
                cfg.grid_pitch = std::stod(val);
            } else if (key == "mc.reps") {
                cfg.mc_reps = std::stoll(val);
            } else if (key == "mc.seed") {
                cfg.mc_seed = std::stoull(val);
            } else {
                throw DomainError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
            }
        } catch (const std::logic_error&) {
            throw DomainError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
        }
    }
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file " + path);
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Rate experiments

std::vector<RateRow> run_rate_experiment(const ModelSpec& model, const std::vector<std::int64_t>& n_grid,
                                         const Config& config) {
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 1) throw DomainError("run_rate_experiment: N must be positive");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
            throw DomainError("run_rate_experiment: N grid must be strictly increasing");
        }
    }
    ModelSpec spec = model;
    if (config.tail_tol > 0.0) spec.tail_tol = config.tail_tol;
    const JointLatticePMF joint = build_joint(spec);
    const LatticePMF marginal = joint.marginal_x();
    const MomentSummary mom = joint_moments(joint);

    std::vector<RateRow> rows;
    rows.reserve(n_grid.size());
    for (const std::int64_t n : n_grid) {
        std::int64_t m = 0;
        try {
            m = default_m(spec, n, marginal);
            const ConditionalLaw cond = conditional_slice_report(joint, n, m);
            RateRow row;
            row.n = n;
            row.m = m;
            row.gamma_n = 2.0 * std::numbers::pi * mom.sigma_x * std::sqrt(static_cast<double>(n)) * cond.prob;
            const DistanceReport da = kolmogorov_distance(cond.law, paper_affine(mom, n, m), n);
            const DistanceReport dn = kolmogorov_distance(cond.law, natural(cond.law), n);
            row.dist_affine = da.distance;
            row.dist_natural = dn.distance;
            row.scaled_affine = da.scaled;
            row.scaled_natural = dn.scaled;
            if (n >= 3) {
                const MomentDeviation dev = moment_deviation(mom, n, m, cond.law);
                row.dev1 = dev.dev1;
                row.dev2 = dev.dev2;
            } else {
                row.dev1 = row.dev2 = kNaN;
            }
            if (config.mc_reps > 0) {
                const ExperimentSpec es(joint, n, m, config.eta0);
                row.mc_accept_rate = mc_conditional_sample(es, config.mc_reps, config.mc_seed).accept_rate;
            }
            rows.push_back(std::move(row));
        } catch (const Error& e) {
            rows.push_back(failed_row(n, m, e.what()));
        }
    }
    return rows;
}

std::optional<RateFit> fit_rate_points(const std::vector<double>& n, const std::vector<double>& dist) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < std::min(n.size(), dist.size()); ++i) {
        if (std::isfinite(dist[i]) && dist[i] > 1e-13 && n[i] > 0.0) {
            lx.push_back(std::log(n[i]));
            ly.push_back(std::log(dist[i]));
        }
    }
    if (lx.size() < 4) return std::nullopt;
    const double k = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) return std::nullopt;
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return fit;
}

RateFits fit_rate(const std::vector<RateRow>& rows) {
    std::vector<double> n, da, dn;
    for (const auto& r : rows) {
        if (!r.ok) continue;
        n.push_back(static_cast<double>(r.n));
        da.push_back(r.dist_affine);
        dn.push_back(r.dist_natural);
    }
    return {fit_rate_points(n, da), fit_rate_points(n, dn)};
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

struct AliasTable {
    std::vector<double> prob;
    std::vector<std::uint32_t> alias;
    std::vector<std::int64_t> x;
    std::vector<std::int64_t> y;
};

AliasTable build_alias(const JointLatticePMF& joint) {
    AliasTable t;
    std::vector<double> w;
    for (std::size_t ix = 0; ix < joint.x_width(); ++ix) {
        for (std::size_t iy = 0; iy < joint.y_width(); ++iy) {
            const double c = joint.cell(ix, iy);
            if (c <= 0.0) continue;
            w.push_back(c);
            t.x.push_back(joint.x_offset() + static_cast<std::int64_t>(ix));
            t.y.push_back(joint.y_offset() + static_cast<std::int64_t>(iy));
        }
    }
    const std::size_t k = w.size();
    const double scale = static_cast<double>(k) / joint.mass();
    t.prob.assign(k, 1.0);
    t.alias.resize(k);
    std::vector<double> q(k);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < k; ++i) {
        q[i] = w[i] * scale;
        t.alias[i] = static_cast<std::uint32_t>(i);
        (q[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
        const std::uint32_t s = small.back();
        small.pop_back();
        const std::uint32_t l = large.back();
        t.prob[s] = q[s];
        t.alias[s] = l;
        q[l] = (q[l] + q[s]) - 1.0;
        if (q[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    return t;
}

struct BlockResult {
    std::vector<std::uint32_t> index;  // proposal index within the block
    std::vector<std::int64_t> t;
};

constexpr std::uint64_t kBlock = 8192;
constexpr std::size_t kWave = 16;

}  // namespace

McSample mc_conditional_sample(const ExperimentSpec& spec, std::int64_t reps, std::uint64_t seed) {
    if (reps < 10'000) throw DomainError("mc_conditional_sample: reps must be >= 1e4");
    const AliasTable table = build_alias(spec.joint());
    const std::int64_t n = spec.n();
    const std::int64_t m = spec.m();
    const std::int64_t xmin = spec.joint().x_offset();
    const std::int64_t xmax = xmin + static_cast<std::int64_t>(spec.joint().x_width()) - 1;
    const auto cells = static_cast<std::uint64_t>(table.prob.size());

    auto run_block = [&](std::uint64_t block) {
        BlockResult res;
        CounterRng rng(seed, block);
        for (std::uint64_t p = 0; p < kBlock; ++p) {
            std::int64_t s = 0;
            std::int64_t t = 0;
            bool alive = true;
            for (std::int64_t i = 0; i < n; ++i) {
                const std::uint64_t k = rng.below(cells);
                const std::size_t c = rng.uniform01() < table.prob[k] ? k : table.alias[k];
                s += table.x[c];
                t += table.y[c];
                const std::int64_t left = n - i - 1;
                if (s + left * xmin > m || s + left * xmax < m) {
                    alive = false;
                    break;
                }
            }
            if (alive && s == m) {
                res.index.push_back(static_cast<std::uint32_t>(p));
                res.t.push_back(t);
            }
        }
        return res;
    };

    std::vector<std::int64_t> draws;
    draws.reserve(static_cast<std::size_t>(reps));
    std::uint64_t proposals = 0;
    std::uint64_t next_block = 0;
    while (static_cast<std::int64_t>(draws.size()) < reps) {
        std::vector<BlockResult> wave(kWave);
        parallel_for(kWave, [&](std::size_t i) { wave[i] = run_block(next_block + i); });
        next_block += kWave;
        for (const auto& br : wave) {
            const std::size_t need = static_cast<std::size_t>(reps) - draws.size();
            if (br.t.size() >= need) {
                draws.insert(draws.end(), br.t.begin(), br.t.begin() + static_cast<std::ptrdiff_t>(need));
                proposals += static_cast<std::uint64_t>(br.index[need - 1]) + 1;
                break;
            }
            draws.insert(draws.end(), br.t.begin(), br.t.end());
            proposals += kBlock;
        }
        if (draws.empty() && proposals >= 10 * static_cast<std::uint64_t>(reps)) {
            throw ConvergenceError("mc_conditional_sample: no acceptance in " + std::to_string(proposals) +
                                       " proposals (P(S_N = m) = " + fmt17(spec.prob().value) + ")",
                                   0.0);
        }
        if (proposals > (std::uint64_t{1} << 40)) {
            throw ConvergenceError("mc_conditional_sample: proposal cap reached",
                                   static_cast<double>(draws.size()));
        }
    }
    const auto [lo, hi] = std::minmax_element(draws.begin(), draws.end());
    std::vector<double> w(static_cast<std::size_t>(*hi - *lo + 1), 0.0);
    const double inv = 1.0 / static_cast<double>(draws.size());
    std::vector<std::int64_t> counts(w.size(), 0);
    for (std::int64_t t : draws) ++counts[static_cast<std::size_t>(t - *lo)];
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(counts[i]) * inv;
    McSample out{LatticePMF(*lo, std::move(w)), 0.0, proposals, draws.size()};
    out.accept_rate = static_cast<double>(draws.size()) / static_cast<double>(proposals);
    return out;
}

double cdf_sup_distance(const LatticePMF& a, const LatticePMF& b) {
    const std::int64_t lo = std::min(a.min_support(), b.min_support());
    const std::int64_t hi = std::max(a.max_support(), b.max_support());
    CompensatedSum fa, fb;
    double worst = 0.0;
    for (std::int64_t k = lo; k <= hi; ++k) {
        fa.add(a.at(k) / a.mass());
        fb.add(b.at(k) / b.mass());
        worst = std::max(worst, std::fabs(fa.value() - fb.value()));
    }
    return worst;
}

double dkw_band(std::int64_t n, double alpha) {
    if (n < 1 || !(alpha > 0.0 && alpha < 1.0)) throw DomainError("dkw_band: need n >= 1, alpha in (0, 1)");
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// Output

void emit_csv(std::ostream& os, const std::vector<RateRow>& rows) {
    os << "N,m,gamma_n,dist_affine,dist_natural,scaled_affine,scaled_natural,dev1,dev2,mc_accept_rate\n";
    for (const auto& r : rows) {
        os << r.n << ',' << r.m << ',' << fmt17(r.gamma_n) << ',' << fmt17(r.dist_affine) << ','
           << fmt17(r.dist_natural) << ',' << fmt17(r.scaled_affine) << ',' << fmt17(r.scaled_natural)
           << ',' << fmt17(r.dev1) << ',' << fmt17(r.dev2) << ',';
        if (r.mc_accept_rate) os << fmt17(*r.mc_accept_rate);
        os << '\n';
    }
}

void emit_csv(const std::string& path, const std::vector<RateRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot write " + path);
    emit_csv(out, rows);
}

std::vector<RateRow> parse_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) return {};
    std::vector<RateRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 10) throw DomainError("parse_csv: expected 10 fields, got " + std::to_string(f.size()));
        RateRow r;
        r.n = std::stoll(f[0]);
        r.m = std::stoll(f[1]);
        double* dst[] = {&r.gamma_n, &r.dist_affine, &r.dist_natural, &r.scaled_affine,
                         &r.scaled_natural, &r.dev1, &r.dev2};
        for (std::size_t i = 0; i < 7; ++i) *dst[i] = std::strtod(f[i + 2].c_str(), nullptr);
        if (!f[9].empty()) r.mc_accept_rate = std::strtod(f[9].c_str(), nullptr);
        r.ok = !std::isnan(r.dist_affine);
        rows.push_back(std::move(r));
    }
    return rows;
}

void emit_law_csv(std::ostream& os, const LatticePMF& law) {
    os << "t,prob,cdf\n";
    CompensatedSum cdf;
    for (std::int64_t k = law.min_support(); k <= law.max_support(); ++k) {
        const double p = law.at(k);
        cdf.add(p);
        os << k << ',' << fmt17(p) << ',' << fmt17(cdf.value()) << '\n';
    }
}

void write_svg(std::ostream& os, const std::vector<RateRow>& rows) {
    const double width = 640, height = 420, margin = 60;
    std::vector<const RateRow*> ok;
    for (const auto& r : rows) {
        if (r.ok && r.dist_affine > 0.0 && r.dist_natural > 0.0) ok.push_back(&r);
    }
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (ok.empty()) {
        os << "</svg>\n";
        return;
    }
    double x0 = std::log10(static_cast<double>(ok.front()->n));
    double x1 = std::log10(static_cast<double>(ok.back()->n));
    double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
    for (const auto* r : ok) {
        for (double d : {r->dist_affine, r->dist_natural}) {
            y0 = std::min(y0, std::log10(d));
            y1 = std::max(y1, std::log10(d));
        }
    }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    auto px = [&](double lx) { return margin + (lx - x0) / (x1 - x0) * (width - 2 * margin); };
    auto py = [&](double ly) { return height - margin - (ly - y0) / (y1 - y0) * (height - 2 * margin); };
    os << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
       << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
       << height - margin << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 20 << "\" text-anchor=\"middle\">log10 N</text>\n";
    os << "<text x=\"20\" y=\"" << height / 2 << "\" transform=\"rotate(-90 20 " << height / 2
       << ")\" text-anchor=\"middle\">log10 distance</text>\n";
    auto series = [&](auto get, const char* colour, const char* label, double ly) {
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
        for (const auto* r : ok) {
            os << px(std::log10(static_cast<double>(r->n))) << ',' << py(std::log10(get(*r))) << ' ';
        }
        os << "\"/>\n";
        os << "<text x=\"" << width - margin - 120 << "\" y=\"" << ly << "\" fill=\"" << colour << "\">" << label
           << "</text>\n";
    };
    series([](const RateRow& r) { return r.dist_affine; }, "steelblue", "affine", margin);
    series([](const RateRow& r) { return r.dist_natural; }, "firebrick", "natural", margin + 18);
    os << "</svg>\n";
}

}  // namespace condlimit
