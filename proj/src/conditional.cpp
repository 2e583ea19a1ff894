#include "condlimit/conditional.hpp"

#include "condlimit/errors.hpp"
#include "condlimit/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace condlimit {

Standardization paper_affine(const MomentSummary& mom, std::int64_t n, std::int64_t m) {
    if (n < 1) throw DomainError("paper_affine: N must be positive");
    if (!(mom.tau_sq > 1e-12 * mom.sigma_y * mom.sigma_y)) {
        throw DegenerateError("paper_affine: tau = 0, Y is affine in X");
    }
    const double nn = static_cast<double>(n);
    Standardization s;
    s.kind = StandardizationKind::PaperAffine;
    s.center = nn * mom.mean_y +
               mom.r * mom.sigma_y / mom.sigma_x * (static_cast<double>(m) - nn * mom.mean_x);
    s.scale = std::sqrt(nn * mom.tau_sq);
    return s;
}

Standardization natural(const LatticePMF& law) {
    const MeanVar mv = conditional_mean_var(law);
    if (!(mv.variance > 0.0)) throw DegenerateError("natural: conditional law has zero variance");
    return {mv.mean, std::sqrt(mv.variance), StandardizationKind::Natural};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

DistanceReport kolmogorov_distance(const LatticePMF& law, const Standardization& std,
                                   std::int64_t n) {
    if (!(std.scale > 0.0)) throw DomainError("kolmogorov_distance: scale must be positive");
    DistanceReport rep;
    rep.n = n;
    const auto w = law.weights();
    // Center relative to the law's offset, so a joint integer shift of law
    // and center leaves every standardized point bit-identical.
    const double rel_center = std.center - static_cast<double>(law.offset());
    double best = -1.0;
    double best_x = 0.0;
    CompensatedSum cdf;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] == 0.0) continue;
        const double x = (static_cast<double>(i) - rel_center) / std.scale;
        const double phi = normal_cdf(x);
        const double left = cdf.value();
        cdf.add(w[i]);
        const double right = std::min(1.0, cdf.value());
        const double d = std::max(std::fabs(left - phi), std::fabs(right - phi));
        if (d > best) {
            best = d;
            best_x = x;
        }
    }
    rep.distance = std::clamp(best, 0.0, 1.0);
    rep.argmax_point = best_x;
    rep.scaled = rep.distance * std::sqrt(static_cast<double>(n));
    return rep;
}

MeanVar conditional_mean_var(const LatticePMF& law) {
    const auto w = law.weights();
    CompensatedSum mass;
    CompensatedSum first;
    for (std::size_t i = 0; i < w.size(); ++i) {
        mass.add(w[i]);
        first.add(w[i] * static_cast<double>(i));
    }
    const double local_mean = first.value() / mass.value();
    CompensatedSum second;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double d = static_cast<double>(i) - local_mean;
        second.add(w[i] * d * d);
    }
    return {static_cast<double>(law.offset()) + local_mean,
            std::max(0.0, second.value() / mass.value())};
}

MomentDeviation moment_deviation(const MomentSummary& mom, std::int64_t n, std::int64_t m,
                                 const LatticePMF& law) {
    if (n < 3) throw DomainError("moment_deviation: requires N >= 3");
    const MeanVar mv = conditional_mean_var(law);
    const double nn = static_cast<double>(n);
    const double proxy_mean =
        nn * mom.mean_y + mom.cov / (mom.sigma_x * mom.sigma_x) * (static_cast<double>(m) - nn * mom.mean_x);
    return {std::fabs(mv.mean - proxy_mean), std::fabs(mv.variance - nn * mom.tau_sq) / std::sqrt(nn)};
}

MomentDeviation moment_deviation(const ExperimentSpec& spec) {
    if (spec.n() < 3) throw DomainError("moment_deviation: requires N >= 3");
    const LatticePMF law = conditional_slice(spec.joint(), spec.n(), spec.m());
    // Y = X (or any affine Y) has sigma_y > 0 but tau = 0; joint_moments still applies.
    return moment_deviation(joint_moments(spec.joint()), spec.n(), spec.m(), law);
}

}  // namespace condlimit
