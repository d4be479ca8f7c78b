#pragma once

// Multi-span amplified fiber link: symmetric split-step integration of the
// Manakov equation, constant-gain amplification with lumped ASE, and the
// closed-form OSNR of the resulting link.

#include "osnrpert/field.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace osnrpert {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;       // J s
inline constexpr double kManakovFactor = 8.0 / 9.0;
inline constexpr double kNonlinearPhaseWarn = 0.05;     // rad per step

struct FiberParams {
    double dispersion_ps_nm_km = 16.7;
    double gamma_per_w_km = 1.3;
    double alpha_db_per_km = 0.2;
    double span_length_km = 100.0;
    double step_km = 0.05;

    /// beta2 in s^2/m at the given carrier.
    double beta2(double center_freq) const {
        const double lambda = kSpeedOfLight / center_freq;
        const double d_si = dispersion_ps_nm_km * 1e-6;  // ps/(nm km) -> s/m^2
        return -d_si * lambda * lambda / (2.0 * std::numbers::pi * kSpeedOfLight);
    }
    /// Power attenuation coefficient in 1/m.
    double alpha_per_m() const { return alpha_db_per_km / (10.0 * std::numbers::log10e) / 1e3; }
    double gamma_per_w_m() const { return gamma_per_w_km / 1e3; }
    double span_loss_db() const { return alpha_db_per_km * span_length_km; }

    void validate() const {
        if (!(dispersion_ps_nm_km >= 0.0 && gamma_per_w_km >= 0.0 && alpha_db_per_km >= 0.0))
            throw std::invalid_argument("FiberParams: D, gamma and alpha must be non-negative");
        if (!(span_length_km > 0.0 && step_km > 0.0))
            throw std::invalid_argument("FiberParams: span length and step must be positive");
        if (step_km > span_length_km) throw std::invalid_argument("FiberParams: step_km exceeds span_length_km");
    }
};

struct AmpParams {
    double gain_db = 20.0;
    /// -inf gives a noiseless amplifier.
    double nf_db = 4.5;
    double center_freq = kDefaultCarrierHz;

    bool noiseless() const { return nf_db == -std::numeric_limits<double>::infinity(); }

    /// One-sided ASE PSD per polarization, n_sp h nu (G - 1) with n_sp = NF / 2.
    double ase_psd_per_pol() const {
        if (noiseless()) return 0.0;
        const double g = std::pow(10.0, gain_db / 10.0);
        const double nsp = std::pow(10.0, nf_db / 10.0) / 2.0;
        return nsp * kPlanck * center_freq * (g - 1.0);
    }

    void validate() const {
        if (!(gain_db > 0.0)) throw std::invalid_argument("AmpParams: gain_db must be positive");
        if (!noiseless() && !(nf_db >= 3.0))
            throw std::invalid_argument("AmpParams: nf_db below the 3 dB quantum limit");
    }
};

struct LinkConfig {
    FiberParams fiber;
    AmpParams amp;
    int n_spans = 1;
    double launch_power_dbm = 0.0;
    std::uint64_t ase_seed = 1;

    double launch_power_w() const { return 1e-3 * std::pow(10.0, launch_power_dbm / 10.0); }

    /// Amplifier with gain pinned to the span loss.
    AmpParams span_amp() const {
        AmpParams a = amp;
        a.gain_db = fiber.span_loss_db();
        return a;
    }
};

struct SpanStats {
    int steps = 0;
    double max_nonlinear_phase = 0.0;
    bool phase_warning = false;
};

namespace detail {
// Plain complex product; skips the C99 Annex G inf/nan recovery path.
inline cplx mul(cplx a, cplx b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// exp(i phi). Per-step Kerr phases are tiny; below 0.1 rad the truncated
// series is exact to double precision (next term < 3e-17).
inline cplx unit_phasor(double phi) {
    if (std::abs(phi) >= 0.1) return std::polar(1.0, phi);
    const double p2 = phi * phi;
    const double c = 1.0 - p2 / 2 * (1.0 - p2 / 12 * (1.0 - p2 / 30 * (1.0 - p2 / 56)));
    const double s = phi * (1.0 - p2 / 6 * (1.0 - p2 / 20 * (1.0 - p2 / 42 * (1.0 - p2 / 72))));
    return {c, s};
}
}  // namespace detail

/// One span of symmetric split-step integration. Linear half-steps of
/// adjacent steps are merged, so each step costs one transform pair per
/// polarization.
inline SampledField propagate_span(SampledField field, const FiberParams& fiber, SpanStats* stats = nullptr) {
    using detail::mul;
    using detail::unit_phasor;
    fiber.validate();
    const std::size_t n = field.size();
    const double fs = field.sample_rate();
    const double length = fiber.span_length_km * 1e3;
    const int steps = static_cast<int>(std::ceil(fiber.span_length_km / fiber.step_km - 1e-9));
    const double h = length / steps;
    const double beta2 = fiber.beta2(field.center_freq());
    const double alpha = fiber.alpha_per_m();
    const double gamma_m = kManakovFactor * fiber.gamma_per_w_m();
    // Power-weighted length of a step centred on the nonlinear kick.
    const double h_eff = alpha > 0.0 ? 2.0 * std::sinh(alpha * h / 2.0) / alpha : h;

    // Linear operators with the inverse-transform 1/N folded in.
    const double inv_n = 1.0 / static_cast<double>(n);
    CVec half(n), full(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = 2.0 * std::numbers::pi * bin_frequency(k, n, fs);
        const double phase = -0.5 * beta2 * w * w;
        half[k] = inv_n * std::exp(cplx{-0.25 * alpha * h, 0.5 * h * phase});
        full[k] = inv_n * std::exp(cplx{-0.5 * alpha * h, h * phase});
    }

    CVec& x = field.x();
    CVec& y = field.y();
    CVec bx(n), by(n);
    auto linear = [&](const CVec& op) {
        fft(x, bx);
        fft(y, by);
        for (std::size_t k = 0; k < n; ++k) {
            bx[k] = mul(bx[k], op[k]);
            by[k] = mul(by[k], op[k]);
        }
        ifft_unscaled(bx, x);
        ifft_unscaled(by, y);
    };

    SpanStats local;
    local.steps = steps;
    const bool nonlinear = gamma_m > 0.0;
    linear(half);
    for (int s = 0; s < steps; ++s) {
        if (nonlinear) {
            double peak = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double p = std::norm(x[i]) + std::norm(y[i]);
                peak = std::max(peak, p);
                const cplx rot = unit_phasor(-gamma_m * p * h_eff);
                x[i] = mul(x[i], rot);
                y[i] = mul(y[i], rot);
            }
            local.max_nonlinear_phase = std::max(local.max_nonlinear_phase, gamma_m * peak * h_eff);
        }
        linear(s + 1 == steps ? half : full);
    }
    if (local.max_nonlinear_phase > kNonlinearPhaseWarn) {
        local.phase_warning = true;
        if (stats == nullptr)
            std::cerr << "warning: split-step nonlinear phase " << local.max_nonlinear_phase
                      << " rad per step exceeds " << kNonlinearPhaseWarn << " rad; reduce step_km\n";
    }
    if (stats != nullptr) *stats = local;
    return field;
}

/// splitmix64 finalizer; decorrelates seeds derived from small integers.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Gain plus white ASE over the full simulation bandwidth, drawn
/// independently per polarization and independent of the signal.
inline SampledField amplify(SampledField field, const AmpParams& amp, std::uint64_t seed) {
    amp.validate();
    field.scale(std::pow(10.0, amp.gain_db / 20.0));
    const double psd = amp.ase_psd_per_pol();
    if (psd <= 0.0) return field;
    // Complex white noise with PSD S over bandwidth fs has E|n|^2 = S fs.
    const double sigma = std::sqrt(psd * field.sample_rate() / 2.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    for (CVec* pol : {&field.x(), &field.y()})
        for (auto& v : *pol) v += cplx{gauss(rng), gauss(rng)};
    return field;
}

using SpanTap = std::function<void(int span, const SampledField& field)>;

/// Scales a unit-power waveform to the launch power and runs n_spans of
/// (fiber, amplifier). `tap`, if set, sees the field after every amplifier.
inline SampledField simulate_link(const SampledField& tx, const LinkConfig& link, const SpanTap& tap = {},
                                  SpanStats* worst = nullptr) {
    if (link.n_spans < 0) throw std::invalid_argument("simulate_link: negative span count");
    SampledField field = tx;
    field.scale(std::sqrt(link.launch_power_w()));
    const AmpParams amp = link.span_amp();
    for (int span = 1; span <= link.n_spans; ++span) {
        SpanStats st;
        field = propagate_span(std::move(field), link.fiber, &st);
        if (worst != nullptr && st.max_nonlinear_phase >= worst->max_nonlinear_phase) *worst = st;
        field = amplify(std::move(field), amp, mix_seed(link.ase_seed, static_cast<std::uint64_t>(span)));
        if (tap) tap(span, field);
    }
    return field;
}

/// 0.1 nm expressed in Hz at the given carrier.
inline double reference_bandwidth_hz(double center_freq, double ref_nm = 0.1) {
    return center_freq * center_freq * ref_nm * 1e-9 / kSpeedOfLight;
}

/// Ground-truth OSNR in dB: launch power over accumulated dual-pol ASE in 0.1 nm.
inline double analytic_osnr(const LinkConfig& link, double ref_nm = 0.1) {
    if (link.n_spans < 1) throw std::invalid_argument("analytic_osnr: needs at least one span");
    const AmpParams amp = link.span_amp();
    const double ase = link.n_spans * 2.0 * amp.ase_psd_per_pol() * reference_bandwidth_hz(amp.center_freq, ref_nm);
    return 10.0 * std::log10(link.launch_power_w() / ase);
}

}  // namespace osnrpert
