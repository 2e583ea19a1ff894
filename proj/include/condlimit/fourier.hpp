#pragma once

#include "condlimit/lattice.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace condlimit {

/// Default ceiling on the number of cells of a full 2-D DFT grid (~256 MiB).
inline constexpr std::size_t kDefaultMaxCells = std::size_t{1} << 24;

/// Evaluates E[exp(i s (X - E X) + i t W) (i W)^k] on a joint law, where
/// W = Y (plain) or W = Y' (projection applied).
class CharacteristicFunction {
public:
    explicit CharacteristicFunction(const JointLatticePMF& joint);
    CharacteristicFunction(const JointLatticePMF& joint, const ProjectionParams& projection);

    std::complex<double> value(double s, double t) const { return derivative(s, t, 0); }
    /// k-th partial derivative in t (k = 0, 1, 2).
    std::complex<double> derivative(double s, double t, int order) const;

    double mean_x() const noexcept { return mean_x_; }

private:
    void init(const JointLatticePMF& joint);

    std::vector<double> dx_;       // x - E[X] per column of the support
    std::vector<double> wy_;       // Y or Y - E[Y] per row of the support
    std::vector<double> weights_;  // row-major, as in JointLatticePMF
    double slope_ = 0.0;
    double mean_x_ = 0.0;
};

/// phi(s, t) = E[exp(i s (X - E X) + i t Y)].
std::complex<double> phi(const JointLatticePMF& joint, double s, double t);

/// Partial t-derivative of phi of order 1 or 2.
std::complex<double> phi_dt(const JointLatticePMF& joint, double s, double t, int order);

/// A characteristic function tabulated on a product grid.
struct CharFnGrid {
    std::vector<double> s_points;
    std::vector<double> t_points;
    std::vector<std::complex<double>> values;  ///< row-major in s

    std::complex<double> at(std::size_t is, std::size_t it) const {
        return values[is * t_points.size() + it];
    }
};

CharFnGrid char_fn_grid(const CharacteristicFunction& cf, std::vector<double> s_points,
                        std::vector<double> t_points);

struct PointProbability {
    double value = 0.0;
    double error_budget = 0.0;  ///< N * defect + DFT roundoff bound
};

/// P(S_N = m) by DFT exponentiation of the padded pmf; 0 outside the reachable range.
double prob_s_eq_m(const LatticePMF& pmf_x, std::int64_t n, std::int64_t m);
PointProbability prob_s_eq_m_report(const LatticePMF& pmf_x, std::int64_t n, std::int64_t m);

/// One (law, N, m, eta0) configuration; the constructor checks P(S_N = m) > 0.
class ExperimentSpec {
public:
    ExperimentSpec(JointLatticePMF joint, std::int64_t n, std::int64_t m, double eta0 = 1.0);

    const JointLatticePMF& joint() const noexcept { return joint_; }
    std::int64_t n() const noexcept { return n_; }
    std::int64_t m() const noexcept { return m_; }
    double eta0() const noexcept { return eta0_; }
    /// P(S_N = m) and its error budget, computed once.
    const PointProbability& prob() const noexcept { return prob_; }

private:
    JointLatticePMF joint_;
    std::int64_t n_;
    std::int64_t m_;
    double eta0_;
    PointProbability prob_;
};

struct JointLawResult {
    JointLatticePMF law;
    double roundoff_bound = 0.0;
};

/// Exact law of (S_N, T_N) by a 2-D DFT over the fully padded grid.
/// Throws ResourceError when the grid would exceed max_cells.
JointLawResult joint_law_sn_tn(const JointLatticePMF& joint, std::int64_t n,
                               std::size_t max_cells = kDefaultMaxCells);

struct ConditionalLaw {
    LatticePMF law;
    double prob = 0.0;          ///< P(S_N = m) recovered from the row
    double error_budget = 0.0;  ///< absolute error budget of that probability
};

/// L(T_N | S_N = m): the S = m row of the (S_N, T_N) law, normalized.
///
/// Only the requested row is formed: for every T-frequency the X-polynomial
/// is raised to the N-th power on the padded DFT grid and its m-th
/// coefficient extracted, then one inverse DFT over T recovers the row.
LatticePMF conditional_slice(const JointLatticePMF& joint, std::int64_t n, std::int64_t m);
ConditionalLaw conditional_slice_report(const JointLatticePMF& joint, std::int64_t n,
                                        std::int64_t m);

/// E[exp(i t T_N) | S_N = m] computed on the exact DFT grid (no quadrature).
std::complex<double> conditional_cf_exact(const JointLatticePMF& joint, std::int64_t n,
                                          std::int64_t m, double t);

struct BartlettResult {
    std::complex<double> value;   ///< psi(t)
    double error_estimate = 0.0;  ///< |difference| of the last two refinement levels
    int panels = 0;
};

/// psi(t) = 2 pi P(S_N = m) E[exp(i t U)] by composite Gauss-Legendre
/// quadrature of the Bartlett inversion integral over one period.
BartlettResult psi_bartlett(const ExperimentSpec& spec, double t, double tolerance = 1e-10);

}  // namespace condlimit
