#pragma once

// OSA emulation: Welch PSD of the dual-pol field smoothed by a Super-Gaussian
// resolution kernel, and average-PSD integration over spectral regions.

#include "osnrpert/csv.hpp"
#include "osnrpert/field.hpp"
#include "osnrpert/regions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace osnrpert {

inline constexpr std::size_t kMinPsdSamples = std::size_t{1} << 14;

struct OsaConfig {
    /// 3 dB full width of the resolution filter; 0 disables smoothing.
    double resolution_hz = 150e6;
    int order = 4;
    /// Welch bin spacing must not exceed this.
    double max_bin_hz = 30e6;
};

/// PSD in W/Hz (both polarizations summed) on a uniform, increasing grid.
struct PsdTrace {
    std::vector<double> freqs;
    std::vector<double> psd;
    double rbw = 0.0;

    double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }

    /// Rectangle-rule integral of the trace; equals mean field power by Parseval.
    double total_power() const {
        double s = 0.0;
        for (double v : psd) s += v;
        return s * bin_width();
    }

    /// Linear interpolation; f must lie inside the grid.
    double at(double f) const {
        const double df = bin_width();
        const double pos = (f - freqs.front()) / df;
        auto i = static_cast<std::size_t>(std::floor(pos));
        if (i + 1 >= freqs.size()) i = freqs.size() - 2;
        const double t = pos - static_cast<double>(i);
        return psd[i] + t * (psd[i + 1] - psd[i]);
    }
};

/// Unit-sum Super-Gaussian exp(-(f/f0)^(2m)) sampled at multiples of bin_hz.
inline std::vector<double> super_gaussian_kernel(double fwhm_hz, int order, double bin_hz) {
    if (!(fwhm_hz > 0.0) || order < 1 || !(bin_hz > 0.0))
        throw std::invalid_argument("super_gaussian_kernel: bad parameters");
    const double f0 = 0.5 * fwhm_hz / std::pow(std::numbers::ln2, 1.0 / (2.0 * order));
    auto g = [&](double f) { return std::exp(-std::pow(std::abs(f) / f0, 2.0 * order)); };
    int half = 0;
    while (g((half + 1) * bin_hz) > 1e-16) ++half;
    std::vector<double> k(2 * static_cast<std::size_t>(half) + 1);
    double sum = 0.0;
    for (int j = -half; j <= half; ++j) sum += k[static_cast<std::size_t>(j + half)] = g(j * bin_hz);
    for (auto& v : k) v /= sum;
    return k;
}

/// Circular convolution of the trace with the unit-sum OSA kernel.
inline PsdTrace apply_osa_filter(const PsdTrace& trace, const OsaConfig& osa) {
    const auto kernel = super_gaussian_kernel(osa.resolution_hz, osa.order, trace.bin_width());
    const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    const auto len = static_cast<std::ptrdiff_t>(trace.psd.size());
    PsdTrace out = trace;
    for (std::ptrdiff_t j = 0; j < len; ++j) {
        double s = 0.0;
        for (std::ptrdiff_t t = -half; t <= half; ++t)
            s += kernel[static_cast<std::size_t>(t + half)] *
                 trace.psd[static_cast<std::size_t>(((j - t) % len + len) % len)];
        out.psd[static_cast<std::size_t>(j)] = s;
    }
    out.rbw = osa.resolution_hz;
    return out;
}

/// Hann-windowed Welch periodogram (50% overlap, power-of-two segments),
/// polarizations summed, then circularly convolved with the OSA kernel.
inline PsdTrace estimate_psd(const SampledField& field, const OsaConfig& osa = {}) {
    const std::size_t n = field.size();
    if (n < kMinPsdSamples)
        throw std::invalid_argument("estimate_psd: field has " + std::to_string(n) + " samples, need at least " +
                                    std::to_string(kMinPsdSamples));
    const double fs = field.sample_rate();
    std::size_t seg = 2;
    while (fs / static_cast<double>(seg) > osa.max_bin_hz) seg *= 2;
    if (seg > n) throw std::invalid_argument("estimate_psd: field too short for the requested bin spacing");
    const std::size_t hop = seg / 2;

    std::vector<double> window(seg);
    double wsq = 0.0;
    for (std::size_t i = 0; i < seg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(seg)));
        wsq += window[i] * window[i];
    }

    std::vector<double> acc(seg, 0.0);
    CVec buf(seg), spec(seg);
    std::size_t count = 0;
    for (std::size_t start = 0; start + seg <= n; start += hop, ++count) {
        for (const CVec* pol : {&field.x(), &field.y()}) {
            for (std::size_t i = 0; i < seg; ++i) buf[i] = (*pol)[start + i] * window[i];
            fft(buf, spec);
            for (std::size_t k = 0; k < seg; ++k) acc[k] += std::norm(spec[k]);
        }
    }
    const double norm = 1.0 / (static_cast<double>(count) * fs * wsq);

    PsdTrace trace;
    trace.freqs.resize(seg);
    trace.psd.resize(seg);
    const double df = fs / static_cast<double>(seg);
    for (std::size_t j = 0; j < seg; ++j) {
        const std::size_t k = (j + seg / 2) % seg;  // fftshift
        trace.freqs[j] = (static_cast<double>(j) - static_cast<double>(seg / 2)) * df;
        trace.psd[j] = acc[k] * norm;
    }
    trace.rbw = df;

    return osa.resolution_hz > 0.0 ? apply_osa_filter(trace, osa) : trace;
}

/// Average PSD in dB over `region`, each interval first shrunk about its
/// centre to `inner_fraction` of its width. Trapezoidal integration on the
/// trace with linear interpolation at the interval ends.
inline double apsd(const PsdTrace& trace, const IntervalList& region, double inner_fraction = 1.0) {
    if (!(inner_fraction > 0.0 && inner_fraction <= 1.0))
        throw std::invalid_argument("apsd: inner_fraction must be in (0, 1]");
    if (region.empty()) throw std::invalid_argument("apsd: empty region");
    if (trace.freqs.size() < 2) throw std::invalid_argument("apsd: trace too short");
    double integral = 0.0, width = 0.0;
    for (const auto& full : region) {
        const Interval iv = full.shrunk(inner_fraction);
        if (!(iv.width() > 0.0)) throw std::invalid_argument("apsd: empty integration interval");
        if (iv.lo < trace.freqs.front() || iv.hi > trace.freqs.back())
            throw std::invalid_argument("apsd: region extends beyond the trace");
        double prev_f = iv.lo;
        double prev_p = trace.at(iv.lo);
        const auto first = std::upper_bound(trace.freqs.begin(), trace.freqs.end(), iv.lo);
        for (auto it = first; it != trace.freqs.end() && *it < iv.hi; ++it) {
            const double p = trace.psd[static_cast<std::size_t>(it - trace.freqs.begin())];
            integral += 0.5 * (p + prev_p) * (*it - prev_f);
            prev_f = *it;
            prev_p = p;
        }
        integral += 0.5 * (trace.at(iv.hi) + prev_p) * (iv.hi - prev_f);
        width += iv.width();
    }
    return 10.0 * std::log10(integral / width);
}

/// Notch contrast p_ref - p_n in dB.
inline double nln_metric(double p_ref_db, double p_n_db) { return p_ref_db - p_n_db; }

inline constexpr double kNotchInnerFraction = 0.8;

/// APSD pair for one received spectrum.
struct ApsdReport {
    double p_ref = 0.0;
    double p_n = 0.0;
    double delta_a_db = 0.0;
    std::string scenario;
};

inline ApsdReport measure_apsd(const PsdTrace& trace, const RegionSet& regions, double delta_a_db,
                               std::string scenario = {}) {
    return {apsd(trace, regions.reference(), 1.0), apsd(trace, regions.n, kNotchInnerFraction), delta_a_db,
            std::move(scenario)};
}

inline void write_psd_csv(const PsdTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "freq_hz,psd_w_per_hz\n";
    for (std::size_t i = 0; i < trace.freqs.size(); ++i)
        out << csv::num(trace.freqs[i]) << ',' << csv::num(trace.psd[i]) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace osnrpert
