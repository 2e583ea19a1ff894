#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

namespace condlimit::detail {

namespace {

using PlanKey = std::tuple<std::size_t, std::size_t, int>;

// FFTW's planner is not re-entrant; creation is serialized here. Plans are
// made with FFTW_UNALIGNED so their output does not depend on the alignment
// of the buffer they are later applied to.
class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t n0, std::size_t n1, int sign) {
        std::lock_guard lock(mutex_);
        const PlanKey key{n0, n1, sign};
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<std::complex<double>> scratch(n0 * n1);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const int fftw_sign = sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD;
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = n1 == 0
            ? fftw_plan_dft_1d(static_cast<int>(n0), buf, buf, fftw_sign, flags)
            : fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1), buf, buf, fftw_sign,
                               flags);
        plans_.emplace(key, plan);
        return plan;
    }

private:
    std::mutex mutex_;
    std::map<PlanKey, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

}  // namespace

void dft_inplace(std::complex<double>* data, std::size_t n, int sign) {
    if (n <= 1) return;
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(cache().get(n, 0, sign), buf, buf);
}

void dft2_inplace(std::complex<double>* data, std::size_t n0, std::size_t n1, int sign) {
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(cache().get(n0, n1, sign), buf, buf);
}

}  // namespace condlimit::detail
