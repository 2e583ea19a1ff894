#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace condlimit {

/// Neumaier (improved Kahan) compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) noexcept {
        add(x);
        return *this;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedComplexSum {
public:
    void add(std::complex<double> z) noexcept {
        re_.add(z.real());
        im_.add(z.imag());
    }
    std::complex<double> value() const noexcept { return {re_.value(), im_.value()}; }

private:
    CompensatedSum re_;
    CompensatedSum im_;
};

/// z^n by binary exponentiation (n >= 0).
std::complex<double> ipow(std::complex<double> z, std::int64_t n) noexcept;

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights of the n-point rule, computed by Newton iteration on P_n.
const GaussLegendreRule& gauss_legendre(int n);

/// Composite Gauss-Legendre integral of a real function over [a, b].
template <class F>
double integrate_composite(F&& f, double a, double b, int panels, int order = 16) {
    const auto& rule = gauss_legendre(order);
    const double h = (b - a) / panels;
    CompensatedSum acc;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
            acc.add(0.5 * h * rule.weights[k] * f(mid + 0.5 * h * rule.nodes[k]));
        }
    }
    return acc.value();
}

/// Smallest integer >= n whose only prime factors are 2, 3, 5 and 7.
std::size_t next_smooth_size(std::size_t n);

std::int64_t gcd_of_gaps(std::span<const std::int64_t> sorted_points);

}  // namespace condlimit
