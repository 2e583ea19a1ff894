// condlimit command line: audit, exact, rate, mc, constants.

#include "condlimit/auditor.hpp"
#include "condlimit/errors.hpp"
#include "condlimit/fourier.hpp"
#include "condlimit/harness.hpp"
#include "condlimit/models.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace condlimit;

namespace {

struct Common {
    std::string model;
    std::string config_path;
    Config config;

    ModelSpec spec() const {
        ModelSpec s = parse_model_spec(model);
        if (config.tail_tol > 0.0) s.tail_tol = config.tail_tol;
        return s;
    }
    void load() {
        if (!config_path.empty()) config = load_config(config_path);
    }
};

std::int64_t pick_m(const ModelSpec& spec, const JointLatticePMF& joint, std::int64_t n,
                    const std::optional<std::int64_t>& m) {
    return m ? *m : default_m(spec, n, joint.marginal_x());
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conditional limit experiments on lattice laws"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--model", common.model, "model spec, e.g. occupancy:lambda=1.0")->required();
        sub->add_option("--config", common.config_path, "key-value config file");
    };

    // audit
    std::int64_t n = 0;
    std::optional<std::int64_t> m;
    std::optional<double> eta0;
    std::optional<double> pitch;
    auto* audit_cmd = app.add_subcommand("audit", "assumption report for one (model, N)");
    add_common(audit_cmd);
    audit_cmd->add_option("--N", n, "sample size")->required()->check(CLI::PositiveNumber);
    audit_cmd->add_option("--m", m, "conditioning value (default round(N E[X]))");
    audit_cmd->add_option("--eta0", eta0, "t-window half width");
    audit_cmd->add_option("--grid-pitch", pitch, "largest c7 grid step, at most 0.01");

    // exact
    auto* exact_cmd = app.add_subcommand("exact", "exact conditional law as t,prob,cdf");
    add_common(exact_cmd);
    exact_cmd->add_option("--N", n, "sample size")->required()->check(CLI::PositiveNumber);
    exact_cmd->add_option("--m", m, "conditioning value (default round(N E[X]))");

    // rate
    std::vector<std::int64_t> grid;
    std::string svg_path;
    auto* rate_cmd = app.add_subcommand("rate", "distance rows over an N grid as CSV");
    add_common(rate_cmd);
    rate_cmd->add_option("--N-grid", grid, "comma separated, strictly increasing")
        ->required()
        ->delimiter(',');
    rate_cmd->add_option("--svg", svg_path, "also write a log-log chart here");

    // mc
    std::int64_t reps = 0;
    std::uint64_t seed = 1;
    auto* mc_cmd = app.add_subcommand("mc", "rejection-sampled conditional law as t,prob,cdf");
    add_common(mc_cmd);
    mc_cmd->add_option("--N", n, "sample size")->required()->check(CLI::PositiveNumber);
    mc_cmd->add_option("--m", m, "conditioning value (default round(N E[X]))");
    mc_cmd->add_option("--reps", reps, "accepted draws, at least 10000")->required();
    mc_cmd->add_option("--seed", seed, "stream seed")->required();

    // constants
    std::vector<std::string> audit_paths;
    ConstantInputs in;
    auto* const_cmd = app.add_subcommand("constants", "bound constants from audits or explicit inputs");
    auto* from = const_cmd->add_option("--from-audit", audit_paths, "audit report file(s); worst value taken");
    std::vector<CLI::Option*> manual{
        const_cmd->add_option("--c1", in.c1),       const_cmd->add_option("--c2", in.c2),
        const_cmd->add_option("--c3", in.c3),       const_cmd->add_option("--c4", in.c4),
        const_cmd->add_option("--c5", in.c5),       const_cmd->add_option("--c6", in.c6),
        const_cmd->add_option("--c7", in.c7)};
    auto* c2t = const_cmd->add_option("--c2-tilde", in.c2_tilde, "default 1/(4 c3)");
    auto* c4t = const_cmd->add_option("--c4-tilde", in.c4_tilde, "default c4");
    const_cmd->add_option("--eta0", in.eta0, "default 1");
    for (auto* opt : manual) {
        opt->excludes(from);
        from->excludes(opt);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        common.load();
        if (audit_cmd->parsed()) {
            const ModelSpec spec = common.spec();
            const JointLatticePMF joint = build_joint(spec);
            const ExperimentSpec es(joint, n, pick_m(spec, joint, n, m), eta0.value_or(common.config.eta0));
            GridSpec g;
            g.pitch = pitch.value_or(common.config.grid_pitch);
            emit_report(std::cout, audit(es, g));
        } else if (exact_cmd->parsed()) {
            const ModelSpec spec = common.spec();
            const JointLatticePMF joint = build_joint(spec);
            emit_law_csv(std::cout, conditional_slice(joint, n, pick_m(spec, joint, n, m)));
        } else if (rate_cmd->parsed()) {
            const auto rows = run_rate_experiment(common.spec(), grid, common.config);
            emit_csv(std::cout, rows);
            for (const auto& r : rows) {
                if (!r.ok) std::cerr << "N = " << r.n << " failed: " << r.error << '\n';
            }
            const RateFits fits = fit_rate(rows);
            if (fits.affine) std::cerr << "slope_affine = " << fmt17(fits.affine->slope) << '\n';
            if (fits.natural) std::cerr << "slope_natural = " << fmt17(fits.natural->slope) << '\n';
            if (!svg_path.empty()) {
                std::ofstream svg(svg_path);
                if (!svg) throw DomainError("cannot write " + svg_path);
                write_svg(svg, rows);
            }
        } else if (mc_cmd->parsed()) {
            const ModelSpec spec = common.spec();
            const JointLatticePMF joint = build_joint(spec);
            const ExperimentSpec es(joint, n, pick_m(spec, joint, n, m));
            const McSample s = mc_conditional_sample(es, reps, seed);
            emit_law_csv(std::cout, s.law);
            std::cerr << "accept_rate = " << fmt17(s.accept_rate) << '\n'
                      << "proposals = " << s.proposals << '\n'
                      << "prob_s_eq_m = " << fmt17(es.prob().value) << '\n';
        } else if (const_cmd->parsed()) {
            if (!audit_paths.empty()) {
                std::vector<AssumptionReport> reps_in;
                for (const auto& path : audit_paths) {
                    std::ifstream f(path);
                    if (!f) throw DomainError("cannot open " + path);
                    reps_in.push_back(parse_report(f));
                }
                const double eta0_in = in.eta0;
                in = ConstantInputs::from_audits(reps_in);
                if (const_cmd->count("--eta0")) in.eta0 = eta0_in;
            } else {
                for (auto* opt : manual) {
                    if (opt->count() == 0) throw DomainError("constants: give --from-audit or all of --c1..--c7");
                }
                if (c2t->count() == 0) in.c2_tilde = 1.0 / (4.0 * in.c3);
                if (c4t->count() == 0) in.c4_tilde = in.c4;
            }
            emit_constants(std::cout, constants(in));
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
