#pragma once

#include "condlimit/fourier.hpp"
#include "condlimit/lattice.hpp"

#include <cstdint>

namespace condlimit {

enum class StandardizationKind { PaperAffine, Natural };

/// x = (U - center) / scale.
struct Standardization {
    double center = 0.0;
    double scale = 1.0;
    StandardizationKind kind = StandardizationKind::Natural;
};

/// center = N E[Y] + r sigma_Y / sigma_X (m - N E[X]), scale = sqrt(N) tau.
/// Refuses tau = 0 (Y affine in X) with a DegenerateError.
Standardization paper_affine(const MomentSummary& moments, std::int64_t n, std::int64_t m);

/// center = E[U], scale = Var(U)^{1/2} of the given law.
Standardization natural(const LatticePMF& law);

struct DistanceReport {
    double distance = 0.0;
    double argmax_point = 0.0;  ///< standardized x where the sup is attained
    std::int64_t n = 1;
    double scaled = 0.0;  ///< distance * sqrt(n)
};

/// Standard normal cdf via erfc.
double normal_cdf(double x);

/// sup_x |P((U - center) / scale <= x) - Phi(x)|, evaluated exactly at the
/// jump points of the lattice law (both one-sided limits). Ties resolve to the
/// smallest x.
DistanceReport kolmogorov_distance(const LatticePMF& law, const Standardization& std,
                                   std::int64_t n = 1);

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;
};

/// Two-pass mean and variance.
MeanVar conditional_mean_var(const LatticePMF& law);

struct MomentDeviation {
    double dev1 = 0.0;  ///< |E U - N E Y - r sigma_Y / sigma_X (m - N E X)|
    double dev2 = 0.0;  ///< |Var U - N tau^2| / sqrt(N)
};

/// Deviations of the conditional mean and variance from their Gaussian
/// proxies. Requires N >= 3.
MomentDeviation moment_deviation(const ExperimentSpec& spec);

/// Same, given an already computed conditional law.
MomentDeviation moment_deviation(const MomentSummary& moments, std::int64_t n, std::int64_t m,
                                 const LatticePMF& law);

}  // namespace condlimit
