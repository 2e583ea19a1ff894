#include "condlimit/lattice.hpp"

#include "condlimit/errors.hpp"
#include "condlimit/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace condlimit {

namespace {

void check_mass(double mass, double defect, const char* who) {
    if (!(defect >= 0.0 && defect <= 1.0)) {
        throw DomainError(std::string(who) + ": defect must lie in [0, 1]");
    }
    if (std::fabs(mass + defect - 1.0) > kMassTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << who << ": mass + defect = " << mass + defect << " is not 1 within "
           << kMassTolerance;
        throw DomainError(os.str());
    }
}

double total(std::span<const double> w) {
    CompensatedSum acc;
    for (double v : w) acc.add(v);
    return acc.value();
}

template <class Range>
Moments moments_in_order(const LatticePMF& pmf, Range&& order) {
    const auto w = pmf.weights();
    Moments out;
    const double mass = pmf.mass();
    CompensatedSum first;
    for (std::size_t i : order) first.add(w[i] * static_cast<double>(i));
    const double local_mean = first.value() / mass;
    CompensatedSum second;
    CompensatedSum third;
    for (std::size_t i : order) {
        const double d = static_cast<double>(i) - local_mean;
        second.add(w[i] * d * d);
        third.add(w[i] * std::fabs(d) * d * d);
    }
    out.mean = static_cast<double>(pmf.offset()) + local_mean;
    out.sigma = std::sqrt(std::max(0.0, second.value() / mass));
    out.rho = std::max(0.0, third.value() / mass);
    out.degenerate = pmf.support().size() < 2;
    if (out.degenerate) {
        out.sigma = 0.0;
        out.rho = 0.0;
    }
    return out;
}

struct RawJointMoments {
    double mass = 0.0;
    double mean_x = 0.0;  // relative to x_offset
    double mean_y = 0.0;  // relative to y_offset
    double var_x = 0.0;
    double var_y = 0.0;
    double cov = 0.0;
    double rho_x = 0.0;
    double rho_y = 0.0;
};

RawJointMoments raw_moments(const JointLatticePMF& joint) {
    RawJointMoments m;
    m.mass = joint.mass();
    const std::size_t nx = joint.x_width();
    const std::size_t ny = joint.y_width();
    CompensatedSum sx;
    CompensatedSum sy;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const double w = joint.cell(ix, iy);
            sx.add(w * static_cast<double>(ix));
            sy.add(w * static_cast<double>(iy));
        }
    }
    m.mean_x = sx.value() / m.mass;
    m.mean_y = sy.value() / m.mass;
    CompensatedSum vx;
    CompensatedSum vy;
    CompensatedSum cxy;
    CompensatedSum tx;
    CompensatedSum ty;
    for (std::size_t ix = 0; ix < nx; ++ix) {
        const double dx = static_cast<double>(ix) - m.mean_x;
        for (std::size_t iy = 0; iy < ny; ++iy) {
            const double w = joint.cell(ix, iy);
            if (w == 0.0) continue;
            const double dy = static_cast<double>(iy) - m.mean_y;
            vx.add(w * dx * dx);
            vy.add(w * dy * dy);
            cxy.add(w * dx * dy);
            tx.add(w * std::fabs(dx) * dx * dx);
            ty.add(w * std::fabs(dy) * dy * dy);
        }
    }
    m.var_x = std::max(0.0, vx.value() / m.mass);
    m.var_y = std::max(0.0, vy.value() / m.mass);
    m.cov = cxy.value() / m.mass;
    m.rho_x = std::max(0.0, tx.value() / m.mass);
    m.rho_y = std::max(0.0, ty.value() / m.mass);
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// LatticePMF

LatticePMF::LatticePMF(std::int64_t offset, std::vector<double> weights, double defect)
    : offset_(offset), weights_(std::move(weights)), defect_(defect), mass_(0.0) {
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw DomainError("LatticePMF: weights must be finite and non-negative");
        }
    }
    auto first = std::find_if(weights_.begin(), weights_.end(), [](double w) { return w > 0.0; });
    if (first == weights_.end()) throw DomainError("LatticePMF: all weights are zero");
    auto last = std::find_if(weights_.rbegin(), weights_.rend(), [](double w) { return w > 0.0; });
    const auto lead = std::distance(weights_.begin(), first);
    weights_.erase(last.base(), weights_.end());
    weights_.erase(weights_.begin(), first);
    offset_ += lead;
    mass_ = total(weights_);
    check_mass(mass_, defect_, "LatticePMF");
}

LatticePMF LatticePMF::point_mass(std::int64_t at) { return LatticePMF(at, {1.0}); }

double LatticePMF::at(std::int64_t k) const noexcept {
    if (k < offset_ || k > max_support()) return 0.0;
    return weights_[static_cast<std::size_t>(k - offset_)];
}

std::vector<std::int64_t> LatticePMF::support() const {
    std::vector<std::int64_t> pts;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (weights_[i] > 0.0) pts.push_back(offset_ + static_cast<std::int64_t>(i));
    }
    return pts;
}

// ---------------------------------------------------------------------------
// JointLatticePMF

JointLatticePMF::JointLatticePMF(std::int64_t x_offset, std::int64_t y_offset,
                                 std::size_t x_width, std::size_t y_width,
                                 std::vector<double> weights, double defect)
    : x_offset_(x_offset), y_offset_(y_offset), x_width_(x_width), y_width_(y_width),
      weights_(std::move(weights)), defect_(defect), mass_(0.0) {
    if (weights_.size() != x_width * y_width || weights_.empty()) {
        throw DomainError("JointLatticePMF: weight array does not match the stated shape");
    }
    for (double w : weights_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw DomainError("JointLatticePMF: weights must be finite and non-negative");
        }
    }
    std::size_t x_lo = x_width_, x_hi = 0, y_lo = y_width_, y_hi = 0;
    for (std::size_t ix = 0; ix < x_width_; ++ix) {
        for (std::size_t iy = 0; iy < y_width_; ++iy) {
            if (weights_[ix * y_width_ + iy] > 0.0) {
                x_lo = std::min(x_lo, ix);
                x_hi = std::max(x_hi, ix);
                y_lo = std::min(y_lo, iy);
                y_hi = std::max(y_hi, iy);
            }
        }
    }
    if (x_lo == x_width_) throw DomainError("JointLatticePMF: all weights are zero");
    if (x_lo != 0 || y_lo != 0 || x_hi + 1 != x_width_ || y_hi + 1 != y_width_) {
        const std::size_t nx = x_hi - x_lo + 1;
        const std::size_t ny = y_hi - y_lo + 1;
        std::vector<double> trimmed(nx * ny);
        for (std::size_t ix = 0; ix < nx; ++ix) {
            for (std::size_t iy = 0; iy < ny; ++iy) {
                trimmed[ix * ny + iy] = weights_[(ix + x_lo) * y_width_ + (iy + y_lo)];
            }
        }
        weights_ = std::move(trimmed);
        x_offset_ += static_cast<std::int64_t>(x_lo);
        y_offset_ += static_cast<std::int64_t>(y_lo);
        x_width_ = nx;
        y_width_ = ny;
    }
    mass_ = total(weights_);
    check_mass(mass_, defect_, "JointLatticePMF");
}

double JointLatticePMF::at(std::int64_t x, std::int64_t y) const noexcept {
    const std::int64_t ix = x - x_offset_;
    const std::int64_t iy = y - y_offset_;
    if (ix < 0 || iy < 0 || ix >= static_cast<std::int64_t>(x_width_) ||
        iy >= static_cast<std::int64_t>(y_width_)) {
        return 0.0;
    }
    return cell(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
}

LatticePMF JointLatticePMF::marginal_x() const {
    std::vector<double> w(x_width_);
    for (std::size_t ix = 0; ix < x_width_; ++ix) {
        CompensatedSum acc;
        for (std::size_t iy = 0; iy < y_width_; ++iy) acc.add(cell(ix, iy));
        w[ix] = acc.value();
    }
    return LatticePMF(x_offset_, std::move(w), defect_);
}

LatticePMF JointLatticePMF::marginal_y() const {
    std::vector<double> w(y_width_);
    for (std::size_t iy = 0; iy < y_width_; ++iy) {
        CompensatedSum acc;
        for (std::size_t ix = 0; ix < x_width_; ++ix) acc.add(cell(ix, iy));
        w[iy] = acc.value();
    }
    return LatticePMF(y_offset_, std::move(w), defect_);
}

JointLatticePMF function_joint(const LatticePMF& pmf,
                               const std::function<std::int64_t(std::int64_t)>& f) {
    std::int64_t y_lo = 0, y_hi = 0;
    bool first = true;
    for (std::int64_t x = pmf.min_support(); x <= pmf.max_support(); ++x) {
        const std::int64_t y = f(x);
        if (first || y < y_lo) y_lo = y;
        if (first || y > y_hi) y_hi = y;
        first = false;
    }
    const std::size_t nx = pmf.width();
    const std::size_t ny = static_cast<std::size_t>(y_hi - y_lo + 1);
    std::vector<double> w(nx * ny, 0.0);
    for (std::size_t ix = 0; ix < nx; ++ix) {
        const std::int64_t x = pmf.offset() + static_cast<std::int64_t>(ix);
        w[ix * ny + static_cast<std::size_t>(f(x) - y_lo)] = pmf.weights()[ix];
    }
    return JointLatticePMF(pmf.offset(), y_lo, nx, ny, std::move(w), pmf.defect());
}

JointLatticePMF independent_joint(const LatticePMF& x, const LatticePMF& y) {
    const std::size_t nx = x.width();
    const std::size_t ny = y.width();
    std::vector<double> w(nx * ny);
    for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy = 0; iy < ny; ++iy) w[ix * ny + iy] = x.weights()[ix] * y.weights()[iy];
    }
    const double defect = x.defect() + y.defect() - x.defect() * y.defect();
    return JointLatticePMF(x.offset(), y.offset(), nx, ny, std::move(w), defect);
}

// ---------------------------------------------------------------------------
// Moments

Moments moments(const LatticePMF& pmf) {
    std::vector<std::size_t> order(pmf.width());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    return moments_in_order(pmf, order);
}

Moments moments_reversed(const LatticePMF& pmf) {
    std::vector<std::size_t> order(pmf.width());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
    return moments_in_order(pmf, order);
}

MomentSummary joint_moments(const JointLatticePMF& joint) {
    const RawJointMoments raw = raw_moments(joint);
    if (joint.x_width() < 2 || raw.var_x <= 0.0) {
        throw DegenerateError("joint_moments: X marginal is degenerate, correlation undefined");
    }
    if (joint.y_width() < 2 || raw.var_y <= 0.0) {
        throw DegenerateError("joint_moments: Y marginal is degenerate, correlation undefined");
    }
    MomentSummary s;
    s.mean_x = static_cast<double>(joint.x_offset()) + raw.mean_x;
    s.mean_y = static_cast<double>(joint.y_offset()) + raw.mean_y;
    s.sigma_x = std::sqrt(raw.var_x);
    s.sigma_y = std::sqrt(raw.var_y);
    s.rho_x = raw.rho_x;
    s.rho_y = raw.rho_y;
    s.cov = raw.cov;
    s.r = std::clamp(raw.cov / (s.sigma_x * s.sigma_y), -1.0, 1.0);
    // |r| within a few ulps of 1 is the affine case
    if (std::fabs(s.r) >= 1.0 - 4.0 * std::numeric_limits<double>::epsilon()) s.r = s.r > 0 ? 1.0 : -1.0;
    s.tau_sq = s.sigma_y * s.sigma_y * (1.0 - s.r * s.r);
    return s;
}

ProjectionParams project_y_prime(const JointLatticePMF& joint) {
    const RawJointMoments raw = raw_moments(joint);
    if (joint.x_width() < 2 || raw.var_x <= 0.0) {
        throw DegenerateError("project_y_prime: X marginal is degenerate");
    }
    ProjectionParams p;
    p.slope = raw.cov / raw.var_x;
    p.x_center = static_cast<double>(joint.x_offset()) + raw.mean_x;
    p.y_center = static_cast<double>(joint.y_offset()) + raw.mean_y;
    double tau_sq = raw.var_y - raw.cov * raw.cov / raw.var_x;
    // sigma_y^2 (1 - r^2) with r clamped to [-1, 1]
    if (raw.var_y > 0.0) {
        const double r = std::clamp(raw.cov / std::sqrt(raw.var_x * raw.var_y), -1.0, 1.0);
        tau_sq = raw.var_y * (1.0 - r * r);
    }
    p.tau = std::sqrt(std::max(0.0, tau_sq));
    if (p.tau < 1e-12 * std::max(1.0, std::sqrt(raw.var_y))) p.tau = 0.0;
    return p;
}

ProjectedMoments projected_moments(const JointLatticePMF& joint, const ProjectionParams& proj) {
    ProjectedMoments out;
    const double mass = joint.mass();
    // Work relative to the offsets to keep the residual small before squaring.
    const double xc = proj.x_center - static_cast<double>(joint.x_offset());
    const double yc = proj.y_center - static_cast<double>(joint.y_offset());
    CompensatedSum m1;
    CompensatedSum mx;
    CompensatedSum m2;
    CompensatedSum m3;
    CompensatedSum ex;
    for (std::size_t ix = 0; ix < joint.x_width(); ++ix) {
        const double dx = static_cast<double>(ix) - xc;
        for (std::size_t iy = 0; iy < joint.y_width(); ++iy) {
            const double w = joint.cell(ix, iy);
            if (w == 0.0) continue;
            const double yp = (static_cast<double>(iy) - yc) - proj.slope * dx;
            m1.add(w * yp);
            mx.add(w * dx * yp);
            ex.add(w * dx);
            m2.add(w * yp * yp);
            m3.add(w * std::fabs(yp) * yp * yp);
        }
    }
    out.mean = m1.value() / mass;
    out.cov_x = mx.value() / mass - (ex.value() / mass) * out.mean;
    out.sigma = std::sqrt(std::max(0.0, m2.value() / mass - out.mean * out.mean));
    out.rho = std::max(0.0, m3.value() / mass);
    return out;
}

// ---------------------------------------------------------------------------
// Truncation

void validate_tail_tolerance(double tail_tol) {
    if (!(tail_tol > 0.0 && tail_tol <= kMaxTailTolerance)) {
        throw DomainError("tail tolerance must lie in (0, 1e-6]");
    }
}

LatticePMF truncate_family(const DiscreteFamily& family, double tail_tol) {
    validate_tail_tolerance(tail_tol);
    constexpr std::size_t kMaxTerms = 50'000'000;
    std::vector<double> terms;
    double remainder = 0.0;
    for (std::int64_t k = family.support_min;; ++k) {
        const double term = std::exp(family.log_pmf(k));
        terms.push_back(term);
        const double ratio = family.ratio_bound(k);
        if (ratio < 1.0 && term <= 1e-8 * tail_tol) {
            const double rem = term * ratio / (1.0 - ratio);
            if (rem <= 1e-8 * tail_tol) {
                remainder = rem;
                break;
            }
        }
        if (terms.size() > kMaxTerms) {
            throw ResourceError("truncate_family: support exceeds 5e7 points at this tolerance");
        }
    }
    // Tails are summed from the far end so that tiny terms are not absorbed.
    const std::size_t n = terms.size();
    std::vector<double> upper(n + 1, 0.0);  // upper[i] = sum_{j >= i} terms[j] + remainder
    {
        double acc = remainder;
        upper[n] = acc;
        for (std::size_t i = n; i-- > 0;) {
            acc += terms[i];
            upper[i] = acc;
        }
    }
    std::size_t hi = n;  // keep [lo, hi)
    while (hi > 1 && upper[hi - 1] <= 0.5 * tail_tol) --hi;
    std::size_t lo = 0;
    double lower = 0.0;
    while (lo + 1 < hi && lower + terms[lo] <= 0.5 * tail_tol) {
        lower += terms[lo];
        ++lo;
    }
    std::vector<double> kept(terms.begin() + static_cast<std::ptrdiff_t>(lo),
                             terms.begin() + static_cast<std::ptrdiff_t>(hi));
    const double defect = upper[hi] + lower;
    const double kept_mass = total(kept);
    const double target = 1.0 - defect;
    if (std::fabs(kept_mass - target) > kMassTolerance) {
        throw NumericalError("truncate_family: family does not sum to one");
    }
    return LatticePMF(family.support_min + static_cast<std::int64_t>(lo), std::move(kept), defect);
}

LatticePMF truncate(const LatticePMF& pmf, double tail_tol) {
    validate_tail_tolerance(tail_tol);
    const auto w = pmf.weights();
    std::size_t lo = 0;
    std::size_t hi = w.size();
    double removed_lo = 0.0;
    while (lo + 1 < hi && removed_lo + w[lo] <= 0.5 * tail_tol) removed_lo += w[lo++];
    double removed_hi = 0.0;
    while (hi > lo + 1 && removed_hi + w[hi - 1] <= 0.5 * tail_tol) removed_hi += w[--hi];
    if (lo == 0 && hi == w.size()) return pmf;
    std::vector<double> kept(w.begin() + static_cast<std::ptrdiff_t>(lo),
                             w.begin() + static_cast<std::ptrdiff_t>(hi));
    return LatticePMF(pmf.offset() + static_cast<std::int64_t>(lo), std::move(kept),
                      pmf.defect() + removed_lo + removed_hi);
}

}  // namespace condlimit
