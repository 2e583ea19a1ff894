#include "condlimit/numeric.hpp"

#include "condlimit/errors.hpp"

#include <map>
#include <mutex>
#include <numeric>
#include <numbers>

namespace condlimit {

std::complex<double> ipow(std::complex<double> z, std::int64_t n) noexcept {
    std::complex<double> result{1.0, 0.0};
    while (n > 0) {
        if (n & 1) result *= z;
        n >>= 1;
        if (n > 0) z *= z;
    }
    return result;
}

namespace {

GaussLegendreRule make_rule(int n) {
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

}  // namespace

const GaussLegendreRule& gauss_legendre(int n) {
    if (n < 1 || n > 256) throw DomainError("gauss_legendre: order must be in [1, 256]");
    static std::mutex mutex;
    static std::map<int, GaussLegendreRule> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
    return it->second;
}

std::size_t next_smooth_size(std::size_t n) {
    if (n <= 1) return 1;
    for (std::size_t m = n;; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u, 7u}) {
            while (r % p == 0) r /= p;
        }
        if (r == 1) return m;
    }
}

std::int64_t gcd_of_gaps(std::span<const std::int64_t> sorted_points) {
    std::int64_t g = 0;
    for (std::size_t i = 1; i < sorted_points.size(); ++i) {
        g = std::gcd(g, sorted_points[i] - sorted_points[i - 1]);
    }
    return g;
}

}  // namespace condlimit
