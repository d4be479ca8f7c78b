#pragma once

// Thin FFTW wrapper. Plans are created once per (length, direction) and
// cached process-wide; execution uses the new-array interface so a cached
// plan is usable from any thread on any buffer of the same length.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <new>
#include <tuple>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace osnrpert {

using cplx = std::complex<double>;

/// Allocator handing out fftw_malloc storage so transforms run on the
/// aligned (SIMD) plan.
template <class T>
struct FftwAllocator {
    using value_type = T;
    FftwAllocator() noexcept = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        void* p = fftw_malloc(n * sizeof(T));
        if (p == nullptr) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

    template <class U>
    bool operator==(const FftwAllocator<U>&) const noexcept { return true; }
};

using CVec = std::vector<cplx, FftwAllocator<cplx>>;

namespace detail {

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    // FFTW_ESTIMATE keeps plan selection, and therefore rounding,
    // reproducible from run to run.
    fftw_plan get(std::size_t n, int sign, bool aligned) {
        std::lock_guard lock(mutex_);
        auto key = std::make_tuple(n, sign, aligned);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        // Planner scribbles over its arrays; plan on scratch storage.
        fftw_complex* in = fftw_alloc_complex(n);
        fftw_complex* out = fftw_alloc_complex(n);
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), in, out, sign,
                                       FFTW_ESTIMATE | (aligned ? 0u : FFTW_UNALIGNED));
        fftw_free(in);
        fftw_free(out);
        if (p == nullptr) throw std::runtime_error("fftw: failed to create plan");
        plans_.emplace(key, p);
        return p;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache() {
        for (auto& [key, p] : plans_) fftw_destroy_plan(p);
    }

    std::mutex mutex_;
    std::map<std::tuple<std::size_t, int, bool>, fftw_plan> plans_;
};

inline void execute(std::span<const cplx> in, std::span<cplx> out, int sign) {
    if (in.size() != out.size()) throw std::invalid_argument("fft: size mismatch");
    // fftw never writes to the input of an out-of-place complex DFT
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    const bool aligned = fftw_alignment_of(reinterpret_cast<double*>(src)) == 0 &&
                         fftw_alignment_of(reinterpret_cast<double*>(dst)) == 0;
    fftw_execute_dft(PlanCache::instance().get(in.size(), sign, aligned), src, dst);
}

}  // namespace detail

/// Unnormalized forward DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N).
inline void fft(std::span<const cplx> in, std::span<cplx> out) {
    detail::execute(in, out, FFTW_FORWARD);
}

/// Inverse DFT without the 1/N factor.
inline void ifft_unscaled(std::span<const cplx> in, std::span<cplx> out) {
    detail::execute(in, out, FFTW_BACKWARD);
}

/// Inverse DFT including the 1/N factor, so ifft(fft(x)) == x.
inline void ifft(std::span<const cplx> in, std::span<cplx> out) {
    detail::execute(in, out, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= scale;
}

inline CVec fft(std::span<const cplx> in) {
    CVec out(in.size());
    fft(in, out);
    return out;
}

inline CVec ifft(std::span<const cplx> in) {
    CVec out(in.size());
    ifft(in, out);
    return out;
}

/// Baseband frequency of DFT bin k for an N-point transform at sample_rate.
inline double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
    const auto kk = static_cast<double>(k);
    const auto nn = static_cast<double>(n);
    return (2 * k < n ? kk : kk - nn) * sample_rate / nn;
}

}  // namespace osnrpert
