#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace condlimit {

/// Tolerance on |mass + defect - 1| accepted for every constructed law.
inline constexpr double kMassTolerance = 1e-12;

/// Largest accepted tail tolerance for truncation.
inline constexpr double kMaxTailTolerance = 1e-6;

/// Probability mass function on a contiguous integer range.
///
/// Weights are stored without renormalization; `defect` is the mass removed
/// by truncation and is carried through every downstream computation as an
/// explicit error budget. Leading and trailing zero weights are trimmed on
/// construction, so two equal laws have identical representations.
class LatticePMF {
public:
    LatticePMF(std::int64_t offset, std::vector<double> weights, double defect = 0.0);

    static LatticePMF point_mass(std::int64_t at);

    std::int64_t offset() const noexcept { return offset_; }
    std::int64_t min_support() const noexcept { return offset_; }
    std::int64_t max_support() const noexcept {
        return offset_ + static_cast<std::int64_t>(weights_.size()) - 1;
    }
    std::size_t width() const noexcept { return weights_.size(); }
    std::span<const double> weights() const noexcept { return weights_; }
    double defect() const noexcept { return defect_; }
    double mass() const noexcept { return mass_; }

    /// P(X = k); zero outside the stored range.
    double at(std::int64_t k) const noexcept;

    /// Support points with strictly positive weight.
    std::vector<std::int64_t> support() const;

    bool operator==(const LatticePMF&) const = default;

private:
    std::int64_t offset_;
    std::vector<double> weights_;
    double defect_;
    double mass_;
};

/// Joint pmf of an integer pair (X, Y) on a rectangle of the lattice.
/// Weights are row-major in x: index (x - x_offset) * y_width + (y - y_offset).
class JointLatticePMF {
public:
    JointLatticePMF(std::int64_t x_offset, std::int64_t y_offset, std::size_t x_width,
                    std::size_t y_width, std::vector<double> weights, double defect = 0.0);

    std::int64_t x_offset() const noexcept { return x_offset_; }
    std::int64_t y_offset() const noexcept { return y_offset_; }
    std::size_t x_width() const noexcept { return x_width_; }
    std::size_t y_width() const noexcept { return y_width_; }
    std::span<const double> weights() const noexcept { return weights_; }
    double defect() const noexcept { return defect_; }
    double mass() const noexcept { return mass_; }

    double at(std::int64_t x, std::int64_t y) const noexcept;
    double cell(std::size_t ix, std::size_t iy) const noexcept {
        return weights_[ix * y_width_ + iy];
    }

    LatticePMF marginal_x() const;
    LatticePMF marginal_y() const;

    bool operator==(const JointLatticePMF&) const = default;

private:
    std::int64_t x_offset_;
    std::int64_t y_offset_;
    std::size_t x_width_;
    std::size_t y_width_;
    std::vector<double> weights_;
    double defect_;
    double mass_;
};

/// Joint law of (X, f(X)) for X ~ pmf.
JointLatticePMF function_joint(const LatticePMF& pmf,
                               const std::function<std::int64_t(std::int64_t)>& f);

/// Product law of independent X and Y.
JointLatticePMF independent_joint(const LatticePMF& x, const LatticePMF& y);

struct Moments {
    double mean = 0.0;
    double sigma = 0.0;
    double rho = 0.0;  ///< third absolute central moment E|X - EX|^3
    bool degenerate = false;
};

/// Mean, standard deviation and third absolute central moment of the law
/// normalized by its stored mass. A single-point law is flagged degenerate.
Moments moments(const LatticePMF& pmf);

/// Same quantities accumulated over the support in reverse order.
Moments moments_reversed(const LatticePMF& pmf);

struct MomentSummary {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double sigma_x = 0.0;
    double sigma_y = 0.0;
    double rho_x = 0.0;
    double rho_y = 0.0;
    double cov = 0.0;
    double r = 0.0;
    double tau_sq = 0.0;  ///< sigma_y^2 (1 - r^2)
};

/// Exact moments of a joint law; throws DegenerateError if either marginal
/// has zero variance (the correlation is undefined).
MomentSummary joint_moments(const JointLatticePMF& joint);

/// Parameters of Y' = Y - E[Y] - slope (X - E[X]).
struct ProjectionParams {
    double slope = 0.0;
    double y_center = 0.0;
    double x_center = 0.0;
    double tau = 0.0;  ///< standard deviation of Y'
};

/// Projection making Y' centered and uncorrelated with X.
/// Requires sigma_x > 0; tau may be zero when Y is affine in X.
ProjectionParams project_y_prime(const JointLatticePMF& joint);

struct ProjectedMoments {
    double mean = 0.0;     ///< E[Y']
    double cov_x = 0.0;    ///< E[X Y'] - E[X] E[Y']
    double sigma = 0.0;    ///< sd of Y' by direct summation
    double rho = 0.0;      ///< E|Y'|^3
};

/// Moments of Y' evaluated cell by cell on the joint support.
ProjectedMoments projected_moments(const JointLatticePMF& joint, const ProjectionParams& proj);

/// Description of an infinite-support family used by truncate_family.
struct DiscreteFamily {
    std::int64_t support_min = 0;
    std::function<double(std::int64_t)> log_pmf;
    /// Upper bound on P(k+1)/P(k) for all j >= k; must be < 1 far enough out.
    std::function<double(std::int64_t)> ratio_bound;
};

/// Keeps the smallest prefix of the family whose upper tail is <= tail_tol.
LatticePMF truncate_family(const DiscreteFamily& family, double tail_tol);

/// Strips each tail of an explicit pmf while the removed mass stays <= tail_tol / 2.
LatticePMF truncate(const LatticePMF& pmf, double tail_tol);

void validate_tail_tolerance(double tail_tol);

}  // namespace condlimit
