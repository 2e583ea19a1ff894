#include "condlimit/fourier.hpp"

#include "condlimit/errors.hpp"
#include "condlimit/numeric.hpp"
#include "condlimit/parallel.hpp"
#include "fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace condlimit {

namespace {

using cplx = std::complex<double>;

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kNegativeCellLimit = -1e-12;

double dft_roundoff(std::size_t grid_cells, std::int64_t n) {
    return 8.0 * kEps * static_cast<double>(n) *
           (std::log2(static_cast<double>(std::max<std::size_t>(grid_cells, 2))) + 1.0);
}

/// exp(sign * 2 pi i k / n) for k in [0, n), each evaluated from its own angle.
std::vector<cplx> unit_roots(std::size_t n, int sign) {
    std::vector<cplx> r(n);
    for (std::size_t k = 0; k < n; ++k) {
        r[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                                   static_cast<double>(n));
    }
    return r;
}

/// Coefficient of z^target in P(z)^n where `spectrum` holds P at the Mp-th
/// roots of unity (forward DFT of the padded coefficients). Exact as long as
/// deg P^n < Mp.
cplx power_coefficient(const std::vector<cplx>& spectrum, std::int64_t n, std::size_t target,
                       const std::vector<cplx>& inverse_roots) {
    const std::size_t mp = spectrum.size();
    CompensatedComplexSum acc;
    for (std::size_t j = 0; j < mp; ++j) {
        const std::size_t idx = static_cast<std::size_t>(
            (static_cast<unsigned __int128>(j) * target) % mp);
        acc.add(ipow(spectrum[j], n) * inverse_roots[idx]);
    }
    return acc.value() / static_cast<double>(mp);
}

double clamp_cell(double v, const char* who) {
    if (v >= 0.0) return v;
    if (v > kNegativeCellLimit) return 0.0;
    std::ostringstream os;
    os << who << ": DFT cell value " << v << " below the roundoff floor";
    throw NumericalError(os.str());
}

double defect_after_convolution(double defect, std::int64_t n) {
    if (defect <= 0.0) return 0.0;
    return -std::expm1(static_cast<double>(n) * std::log1p(-defect));
}

void require_positive_n(std::int64_t n, const char* who) {
    if (n < 1) throw DomainError(std::string(who) + ": N must be positive");
}

}  // namespace

// ---------------------------------------------------------------------------
// Characteristic functions

CharacteristicFunction::CharacteristicFunction(const JointLatticePMF& joint) {
    init(joint);
    for (std::size_t iy = 0; iy < wy_.size(); ++iy) {
        wy_[iy] = static_cast<double>(joint.y_offset() + static_cast<std::int64_t>(iy));
    }
}

CharacteristicFunction::CharacteristicFunction(const JointLatticePMF& joint,
                                               const ProjectionParams& projection) {
    init(joint);
    slope_ = projection.slope;
    const double yc = projection.y_center - static_cast<double>(joint.y_offset());
    for (std::size_t iy = 0; iy < wy_.size(); ++iy) wy_[iy] = static_cast<double>(iy) - yc;
}

void CharacteristicFunction::init(const JointLatticePMF& joint) {
    weights_.assign(joint.weights().begin(), joint.weights().end());
    const std::size_t nx = joint.x_width();
    const std::size_t ny = joint.y_width();
    CompensatedSum sx;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) sx.add(joint.cell(ix, iy) * static_cast<double>(ix));
    }
    const double local_mean = sx.value() / joint.mass();
    mean_x_ = static_cast<double>(joint.x_offset()) + local_mean;
    dx_.resize(nx);
    for (std::size_t ix = 0; ix < nx; ++ix) dx_[ix] = static_cast<double>(ix) - local_mean;
    wy_.resize(ny);
}

cplx CharacteristicFunction::derivative(double s, double t, int order) const {
    if (order < 0 || order > 2) throw DomainError("CharacteristicFunction: order must be 0, 1 or 2");
    const std::size_t nx = dx_.size();
    const std::size_t ny = wy_.size();
    const double s_eff = s - t * slope_;
    thread_local std::vector<cplx> ex;
    thread_local std::vector<cplx> ey;
    ex.resize(nx);
    ey.resize(ny);
    for (std::size_t ix = 0; ix < nx; ++ix) ex[ix] = std::polar(1.0, s_eff * dx_[ix]);
    for (std::size_t iy = 0; iy < ny; ++iy) ey[iy] = std::polar(1.0, t * wy_[iy]);
    CompensatedComplexSum acc;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        cplx row{0.0, 0.0};
        const double* w = weights_.data() + ix * ny;
        for (std::size_t iy = 0; iy < ny; ++iy) {
            if (w[iy] == 0.0) continue;
            cplx term = w[iy] * ey[iy];
            if (order > 0) {
                const cplx factor{0.0, wy_[iy] - slope_ * dx_[ix]};
                term *= order == 1 ? factor : factor * factor;
            }
            row += term;
        }
        acc.add(row * ex[ix]);
    }
    return acc.value();
}

cplx phi(const JointLatticePMF& joint, double s, double t) {
    return CharacteristicFunction(joint).value(s, t);
}

cplx phi_dt(const JointLatticePMF& joint, double s, double t, int order) {
    if (order != 1 && order != 2) throw DomainError("phi_dt: order must be 1 or 2");
    return CharacteristicFunction(joint).derivative(s, t, order);
}

CharFnGrid char_fn_grid(const CharacteristicFunction& cf, std::vector<double> s_points,
                        std::vector<double> t_points) {
    CharFnGrid grid{std::move(s_points), std::move(t_points), {}};
    const std::size_t nt = grid.t_points.size();
    grid.values.resize(grid.s_points.size() * nt);
    parallel_for(grid.s_points.size(), [&](std::size_t is) {
        for (std::size_t it = 0; it < nt; ++it) {
            grid.values[is * nt + it] = cf.value(grid.s_points[is], grid.t_points[it]);
        }
    });
    return grid;
}

// ---------------------------------------------------------------------------
// P(S_N = m)

PointProbability prob_s_eq_m_report(const LatticePMF& pmf_x, std::int64_t n, std::int64_t m) {
    require_positive_n(n, "prob_s_eq_m");
    PointProbability out;
    const auto w = static_cast<std::int64_t>(pmf_x.width());
    const std::int64_t reach = n * (w - 1) + 1;
    const std::int64_t target = m - n * pmf_x.offset();
    const std::size_t mp = next_smooth_size(static_cast<std::size_t>(reach));
    out.error_budget = static_cast<double>(n) * pmf_x.defect() + dft_roundoff(mp, n);
    if (target < 0 || target >= reach) return out;
    if (n == 1) {
        out.value = pmf_x.at(m);
        return out;
    }
    std::vector<cplx> spectrum(mp, cplx{0.0, 0.0});
    for (std::int64_t i = 0; i < w; ++i) spectrum[static_cast<std::size_t>(i)] = pmf_x.weights()[i];
    detail::dft_inplace(spectrum.data(), mp, -1);
    const auto roots = unit_roots(mp, +1);
    const cplx c = power_coefficient(spectrum, n, static_cast<std::size_t>(target), roots);
    out.value = std::clamp(c.real(), 0.0, 1.0);
    return out;
}

double prob_s_eq_m(const LatticePMF& pmf_x, std::int64_t n, std::int64_t m) {
    return prob_s_eq_m_report(pmf_x, n, m).value;
}

// ---------------------------------------------------------------------------
// ExperimentSpec

ExperimentSpec::ExperimentSpec(JointLatticePMF joint, std::int64_t n, std::int64_t m, double eta0)
    : joint_(std::move(joint)), n_(n), m_(m), eta0_(eta0) {
    require_positive_n(n_, "ExperimentSpec");
    if (!(eta0_ > 0.0)) throw DomainError("ExperimentSpec: eta0 must be positive");
    const LatticePMF mx = joint_.marginal_x();
    if (m_ < n_ * mx.min_support() || m_ > n_ * mx.max_support()) {
        throw DomainError("ExperimentSpec: m outside [N min X, N max X]");
    }
    prob_ = prob_s_eq_m_report(mx, n_, m_);
    if (!(prob_.value > 0.0)) throw IllConditionedError("ExperimentSpec: P(S_N = m) = 0");
}

// ---------------------------------------------------------------------------
// Law of (S_N, T_N)

JointLawResult joint_law_sn_tn(const JointLatticePMF& joint, std::int64_t n, std::size_t max_cells) {
    require_positive_n(n, "joint_law_sn_tn");
    const auto nx = static_cast<std::int64_t>(joint.x_width());
    const auto ny = static_cast<std::int64_t>(joint.y_width());
    const auto mx = static_cast<std::size_t>(n * (nx - 1) + 1);
    const auto ly = static_cast<std::size_t>(n * (ny - 1) + 1);
    const std::size_t mp = next_smooth_size(mx);
    const std::size_t lp = next_smooth_size(ly);
    if (mp > max_cells / lp) {
        std::ostringstream os;
        os << "joint_law_sn_tn: required DFT grid " << mp << " x " << lp << " = " << mp * lp
           << " cells exceeds the budget of " << max_cells << " cells";
        throw ResourceError(os.str());
    }
    const double new_defect = defect_after_convolution(joint.defect(), n);
    if (n == 1) return {joint, 0.0};

    std::vector<cplx> grid(mp * lp, cplx{0.0, 0.0});
    for (std::size_t ix = 0; ix < joint.x_width(); ++ix) {
        for (std::size_t iy = 0; iy < joint.y_width(); ++iy) grid[ix * lp + iy] = joint.cell(ix, iy);
    }
    detail::dft2_inplace(grid.data(), mp, lp, -1);
    parallel_for(mp, [&](std::size_t j) {
        for (std::size_t l = 0; l < lp; ++l) grid[j * lp + l] = ipow(grid[j * lp + l], n);
    });
    detail::dft2_inplace(grid.data(), mp, lp, +1);
    const double scale = 1.0 / static_cast<double>(mp * lp);
    std::vector<double> cells(mx * ly);
    for (std::size_t ix = 0; ix < mx; ++ix) {
        for (std::size_t iy = 0; iy < ly; ++iy) {
            cells[ix * ly + iy] = clamp_cell(grid[ix * lp + iy].real() * scale, "joint_law_sn_tn");
        }
    }
    const double bound =
        static_cast<double>(mp * lp) * kEps * static_cast<double>(n);
    return {JointLatticePMF(n * joint.x_offset(), n * joint.y_offset(), mx, ly, std::move(cells),
                            new_defect),
            bound};
}

// ---------------------------------------------------------------------------
// Conditional slice

ConditionalLaw conditional_slice_report(const JointLatticePMF& joint, std::int64_t n,
                                        std::int64_t m) {
    require_positive_n(n, "conditional_slice");
    const auto nx = static_cast<std::int64_t>(joint.x_width());
    const auto ny = static_cast<std::int64_t>(joint.y_width());
    const std::int64_t reach_x = n * (nx - 1) + 1;
    const std::int64_t target = m - n * joint.x_offset();
    if (target < 0 || target >= reach_x) {
        throw IllConditionedError("conditional_slice: m is not reachable, P(S_N = m) = 0");
    }
    const auto ly = static_cast<std::size_t>(n * (ny - 1) + 1);
    const std::size_t mp = next_smooth_size(static_cast<std::size_t>(reach_x));
    const std::size_t lp = next_smooth_size(ly);
    const auto tw_y = unit_roots(lp, -1);
    const auto roots_x = unit_roots(mp, +1);

    // R[l] = sum_k P(S = m, T = k) exp(-2 pi i l k / lp); only half is needed
    // because the row is real.
    std::vector<cplx> row_spectrum(lp);
    const std::size_t half = lp / 2 + 1;
    parallel_for(half, [&](std::size_t l) {
        std::vector<cplx> buf(mp, cplx{0.0, 0.0});
        for (std::size_t ix = 0; ix < joint.x_width(); ++ix) {
            cplx a{0.0, 0.0};
            for (std::size_t iy = 0; iy < joint.y_width(); ++iy) {
                const double w = joint.cell(ix, iy);
                if (w != 0.0) a += w * tw_y[(l * iy) % lp];
            }
            buf[ix] = a;
        }
        detail::dft_inplace(buf.data(), mp, -1);
        row_spectrum[l] = power_coefficient(buf, n, static_cast<std::size_t>(target), roots_x);
    });
    for (std::size_t l = half; l < lp; ++l) row_spectrum[l] = std::conj(row_spectrum[lp - l]);
    detail::dft_inplace(row_spectrum.data(), lp, +1);

    std::vector<double> row(ly);
    CompensatedSum total;
    for (std::size_t k = 0; k < ly; ++k) {
        row[k] = clamp_cell(row_spectrum[k].real() / static_cast<double>(lp), "conditional_slice");
        total.add(row[k]);
    }
    ConditionalLaw out{LatticePMF::point_mass(0), total.value(), 0.0};
    out.error_budget = static_cast<double>(n) * joint.defect() + dft_roundoff(mp * lp, n);
    if (!(out.prob > 10.0 * out.error_budget)) {
        std::ostringstream os;
        os << "conditional_slice: P(S_N = m) = " << out.prob
           << " is not above 10x the error budget " << out.error_budget;
        throw IllConditionedError(os.str());
    }
    for (double& v : row) v /= out.prob;
    out.law = LatticePMF(n * joint.y_offset(), std::move(row));
    return out;
}

LatticePMF conditional_slice(const JointLatticePMF& joint, std::int64_t n, std::int64_t m) {
    return conditional_slice_report(joint, n, m).law;
}

cplx conditional_cf_exact(const JointLatticePMF& joint, std::int64_t n, std::int64_t m, double t) {
    require_positive_n(n, "conditional_cf_exact");
    const auto nx = static_cast<std::int64_t>(joint.x_width());
    const std::int64_t reach_x = n * (nx - 1) + 1;
    const std::int64_t target = m - n * joint.x_offset();
    if (target < 0 || target >= reach_x) {
        throw IllConditionedError("conditional_cf_exact: P(S_N = m) = 0");
    }
    const std::size_t mp = next_smooth_size(static_cast<std::size_t>(reach_x));
    const auto roots_x = unit_roots(mp, +1);
    auto coefficient = [&](double tt) {
        std::vector<cplx> buf(mp, cplx{0.0, 0.0});
        for (std::size_t ix = 0; ix < joint.x_width(); ++ix) {
            cplx a{0.0, 0.0};
            for (std::size_t iy = 0; iy < joint.y_width(); ++iy) {
                const double w = joint.cell(ix, iy);
                const double y = static_cast<double>(joint.y_offset() + static_cast<std::int64_t>(iy));
                if (w != 0.0) a += w * std::polar(1.0, tt * y);
            }
            buf[ix] = a;
        }
        detail::dft_inplace(buf.data(), mp, -1);
        return power_coefficient(buf, n, static_cast<std::size_t>(target), roots_x);
    };
    const double p = coefficient(0.0).real();
    if (!(p > 0.0)) throw IllConditionedError("conditional_cf_exact: P(S_N = m) = 0");
    return coefficient(t) / p;
}

// ---------------------------------------------------------------------------
// Bartlett inversion

BartlettResult psi_bartlett(const ExperimentSpec& spec, double t, double tolerance) {
    const JointLatticePMF& joint = spec.joint();
    const CharacteristicFunction cf(joint);
    const Moments mx = moments(joint.marginal_x());
    if (mx.degenerate) throw DegenerateError("psi_bartlett: X marginal is degenerate");
    const double n = static_cast<double>(spec.n());
    const double scale = mx.sigma * std::sqrt(n);
    const double v = (static_cast<double>(spec.m()) - n * cf.mean_x()) / scale;
    const double half_width = std::numbers::pi * scale;
    const auto& rule = gauss_legendre(16);

    auto quadrature = [&](int panels) {
        const double h = 2.0 * half_width / panels;
        std::vector<cplx> panel_sums(static_cast<std::size_t>(panels));
        parallel_for(panel_sums.size(), [&](std::size_t p) {
            const double mid = -half_width + (static_cast<double>(p) + 0.5) * h;
            cplx acc{0.0, 0.0};
            for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
                const double s = mid + 0.5 * h * rule.nodes[k];
                const cplx integrand =
                    std::polar(1.0, -s * v) * ipow(cf.value(s / scale, t), spec.n());
                acc += rule.weights[k] * integrand;
            }
            panel_sums[p] = 0.5 * h * acc;
        });
        CompensatedComplexSum total;
        for (const cplx& z : panel_sums) total.add(z);
        return total.value() / scale;
    };

    int panels = static_cast<int>(std::ceil(2.0 * half_width / 0.5));
    cplx previous = quadrature(panels);
    double err = std::numeric_limits<double>::infinity();
    for (int level = 0; level < 8; ++level) {
        panels *= 2;
        const cplx current = quadrature(panels);
        err = std::abs(current - previous);
        if (err <= tolerance) return {current, err, panels};
        previous = current;
    }
    throw ConvergenceError("psi_bartlett: quadrature did not converge", err);
}

}  // namespace condlimit
