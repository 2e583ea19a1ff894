#pragma once

#include "condlimit/fourier.hpp"
#include "condlimit/lattice.hpp"
#include "condlimit/models.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace condlimit {

struct RateRow {
    std::int64_t n = 0;
    std::int64_t m = 0;
    double gamma_n = 0.0;
    double dist_affine = 0.0;
    double dist_natural = 0.0;
    double scaled_affine = 0.0;
    double scaled_natural = 0.0;
    double dev1 = 0.0;  ///< NaN when N < 3
    double dev2 = 0.0;
    std::optional<double> mc_accept_rate;
    bool ok = true;
    std::string error;  ///< set when the row failed; numeric fields are then NaN
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct RateFits {
    std::optional<RateFit> affine;
    std::optional<RateFit> natural;
};

/// Settings shared by the CLI and the experiments. Read from lines of
/// `section.key = value`; `#` starts a comment.
struct Config {
    double tail_tol = 0.0;  ///< 0 keeps the model's own tolerance
    double eta0 = 1.0;
    double grid_pitch = 0.01;
    std::int64_t mc_reps = 0;  ///< > 0 adds an acceptance-rate column to rate runs
    std::uint64_t mc_seed = 1;
};

Config parse_config(std::istream& is);
Config load_config(const std::string& path);

/// One row per N (strictly increasing), m from default_m. A failure at one N
/// is recorded in that row and the run continues.
std::vector<RateRow> run_rate_experiment(const ModelSpec& model, const std::vector<std::int64_t>& n_grid,
                                         const Config& config = {});

/// Least squares of log distance on log N; needs >= 4 usable rows (distance > 1e-13).
std::optional<RateFit> fit_rate_points(const std::vector<double>& n, const std::vector<double>& dist);
RateFits fit_rate(const std::vector<RateRow>& rows);

struct McSample {
    LatticePMF law;
    double accept_rate = 0.0;
    std::uint64_t proposals = 0;
    std::uint64_t accepted = 0;
};

/// Rejection sampling of T_N given S_N = m: `reps` accepted draws. Proposals come in
/// blocks of 8192 with stream (seed, block index), consumed in block order.
/// Throws ConvergenceError when no draw is accepted within 10 reps proposals.
McSample mc_conditional_sample(const ExperimentSpec& spec, std::int64_t reps, std::uint64_t seed);

/// sup_x |F_a(x) - F_b(x)| over the integers.
double cdf_sup_distance(const LatticePMF& a, const LatticePMF& b);
/// Dvoretzky-Kiefer-Wolfowitz half-width sqrt(log(2 / alpha) / (2 n)).
double dkw_band(std::int64_t n, double alpha);

void emit_csv(std::ostream& os, const std::vector<RateRow>& rows);
void emit_csv(const std::string& path, const std::vector<RateRow>& rows);
std::vector<RateRow> parse_csv(std::istream& is);

/// Conditional law as `t,prob,cdf` lines.
void emit_law_csv(std::ostream& os, const LatticePMF& law);

/// Log-log line chart of both distances against N.
void write_svg(std::ostream& os, const std::vector<RateRow>& rows);

}  // namespace condlimit
