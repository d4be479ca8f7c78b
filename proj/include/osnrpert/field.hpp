#pragma once

#include "osnrpert/fft.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace osnrpert {

inline constexpr double kDefaultCarrierHz = 193.4e12;

/// True when n has no prime factors other than 2, 3 and 5.
constexpr bool is_smooth_length(std::size_t n) {
    if (n == 0) return false;
    for (std::size_t p : {2u, 3u, 5u})
        while (n % p == 0) n /= p;
    return n == 1;
}

/// Dual-polarization complex baseband field on a uniform time grid.
/// |x|^2 + |y|^2 is instantaneous power in watts.
class SampledField {
public:
    SampledField(CVec x, CVec y, double sample_rate, double center_freq = kDefaultCarrierHz)
        : x_(std::move(x)), y_(std::move(y)), sample_rate_(sample_rate), center_freq_(center_freq) {
        if (x_.size() != y_.size())
            throw std::invalid_argument("SampledField: polarizations differ in length");
        if (x_.size() < 2 || !is_smooth_length(x_.size()))
            throw std::invalid_argument("SampledField: length " + std::to_string(x_.size()) +
                                        " must be >= 2 with prime factors in {2,3,5}");
        if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
            throw std::invalid_argument("SampledField: sample_rate must be positive");
    }

    std::size_t size() const noexcept { return x_.size(); }
    double sample_rate() const noexcept { return sample_rate_; }
    double center_freq() const noexcept { return center_freq_; }
    double dt() const noexcept { return 1.0 / sample_rate_; }

    const CVec& x() const noexcept { return x_; }
    const CVec& y() const noexcept { return y_; }
    CVec& x() noexcept { return x_; }
    CVec& y() noexcept { return y_; }

    /// mean(|x|^2 + |y|^2)
    double mean_power() const noexcept {
        double acc = 0.0;
        for (std::size_t i = 0; i < x_.size(); ++i) acc += std::norm(x_[i]) + std::norm(y_[i]);
        return acc / static_cast<double>(x_.size());
    }

    void scale(double amplitude) noexcept {
        for (auto& v : x_) v *= amplitude;
        for (auto& v : y_) v *= amplitude;
    }

    /// Multiplies both polarizations by a per-bin frequency-domain response.
    template <class Response>
    void filter(Response&& response) {
        const std::size_t n = size();
        CVec buf(n);
        for (CVec* pol : {&x_, &y_}) {
            fft(*pol, buf);
            for (std::size_t k = 0; k < n; ++k) buf[k] *= response(k);
            ifft(buf, *pol);
        }
    }

private:
    CVec x_;
    CVec y_;
    double sample_rate_;
    double center_freq_;
};

// Debug dump: X samples then Y samples, each as little-endian float64 (re, im)
// pairs. No header; length is file_size / 32.
inline void write_field_binary(const SampledField& field, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const CVec* pol : {&field.x(), &field.y()})
        out.write(reinterpret_cast<const char*>(pol->data()),
                  static_cast<std::streamsize>(pol->size() * sizeof(cplx)));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline SampledField read_field_binary(const std::filesystem::path& path, double sample_rate,
                                      double center_freq = kDefaultCarrierHz) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    const auto bytes = std::filesystem::file_size(path);
    if (bytes % (2 * sizeof(cplx)) != 0)
        throw std::runtime_error(path.string() + ": size is not a whole number of dual-pol samples");
    const std::size_t n = bytes / (2 * sizeof(cplx));
    CVec x(n), y(n);
    in.read(reinterpret_cast<char*>(x.data()), static_cast<std::streamsize>(n * sizeof(cplx)));
    in.read(reinterpret_cast<char*>(y.data()), static_cast<std::streamsize>(n * sizeof(cplx)));
    if (!in) throw std::runtime_error("short read: " + path.string());
    return {std::move(x), std::move(y), sample_rate, center_freq};
}

}  // namespace osnrpert
