#pragma once

// Transmit waveform synthesis: RRC-shaped DP-QPSK reference field,
// power-conserving spectral perturbation and the transmitter noise floor.

#include "osnrpert/field.hpp"
#include "osnrpert/regions.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace osnrpert {

/// Raised when a boost in F_A would leave no power for F_B.
class InfeasiblePerturbation : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct TxConfig {
    double baud_rate = 56.8e9;
    double rolloff = 0.07;
    int samples_per_symbol = 3;
    std::size_t n_symbols = std::size_t{1} << 17;
    /// Noise floor PSD relative to the unperturbed in-band PSD; -inf disables it.
    double nfl_rel_db = -22.5;
    std::uint64_t seed = 1;
    double center_freq = kDefaultCarrierHz;

    double sample_rate() const noexcept { return baud_rate * samples_per_symbol; }
    std::size_t length() const noexcept { return n_symbols * static_cast<std::size_t>(samples_per_symbol); }
    Interval band() const { return channel_band(baud_rate, rolloff); }

    void validate() const {
        if (!(baud_rate > 0.0)) throw std::invalid_argument("TxConfig: baud_rate must be positive");
        if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw std::invalid_argument("TxConfig: rolloff must be in [0, 1]");
        if (samples_per_symbol < 2) throw std::invalid_argument("TxConfig: samples_per_symbol must be >= 2");
        if (n_symbols < 1 || !is_smooth_length(length()))
            throw std::invalid_argument("TxConfig: n_symbols * samples_per_symbol = " + std::to_string(length()) +
                                        " must have prime factors in {2,3,5}");
        if (std::isnan(nfl_rel_db) || nfl_rel_db == std::numeric_limits<double>::infinity())
            throw std::invalid_argument("TxConfig: nfl_rel_db must be finite or -inf");
    }
};

/// Raised-cosine power response normalized to 1 in the flat part.
inline double raised_cosine_power(double f, double baud_rate, double rolloff) {
    const double af = std::abs(f);
    const double f1 = 0.5 * (1.0 - rolloff) * baud_rate;
    const double f2 = 0.5 * (1.0 + rolloff) * baud_rate;
    if (af <= f1) return 1.0;
    if (af > f2) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi / (rolloff * baud_rate) * (af - f1)));
}

/// RRC-shaped DP-QPSK at cfg.sample_rate() with unit mean power. Symbols are
/// i.i.d. uniform per polarization, drawn from a generator seeded by cfg.seed.
inline SampledField generate_reference(const TxConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.length();
    const std::size_t sps = static_cast<std::size_t>(cfg.samples_per_symbol);
    const double fs = cfg.sample_rate();
    const double a = 1.0 / std::numbers::sqrt2;

    std::mt19937_64 rng(cfg.seed);
    auto draw_pol = [&] {
        CVec up(n, cplx{0.0, 0.0});
        std::uint64_t bits = 0;
        int left = 0;
        for (std::size_t s = 0; s < cfg.n_symbols; ++s) {
            if (left == 0) {
                bits = rng();
                left = 32;
            }
            const double re = (bits & 1u) ? a : -a;
            const double im = (bits & 2u) ? a : -a;
            bits >>= 2;
            --left;
            up[s * sps] = {re, im};
        }
        return up;
    };
    CVec x = draw_pol();
    CVec y = draw_pol();

    SampledField field(std::move(x), std::move(y), fs, cfg.center_freq);
    field.filter([&](std::size_t k) {
        return std::sqrt(raised_cosine_power(bin_frequency(k, n, fs), cfg.baud_rate, cfg.rolloff));
    });
    field.scale(1.0 / std::sqrt(field.mean_power()));
    return field;
}

/// Per-bin power |X_k|^2 + |Y_k|^2 of the full-length transform.
inline std::vector<double> bin_powers(const SampledField& field) {
    const CVec fx = fft(field.x());
    const CVec fy = fft(field.y());
    std::vector<double> p(field.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(fx[k]) + std::norm(fy[k]);
    return p;
}

struct PowerFractions {
    double a = 0.0;
    double b = 0.0;
    double n = 0.0;
};

/// Share of F_BOI power held by each region, from the periodogram of `field`.
inline PowerFractions power_fractions(const SampledField& field, const RegionSet& regions) {
    regions.validate();
    const double fs = field.sample_rate();
    if (regions.boi.lo < -fs / 2 || regions.boi.hi > fs / 2)
        throw std::invalid_argument("power_fractions: F_BOI exceeds the sampled band");
    const auto p = bin_powers(field);
    double sa = 0.0, sb = 0.0, sn = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        switch (regions.classify(bin_frequency(k, p.size(), fs))) {
            case Region::A: sa += p[k]; break;
            case Region::B: sb += p[k]; break;
            case Region::N: sn += p[k]; break;
            case Region::Outside: break;
        }
    }
    const double total = sa + sb + sn;
    if (!(total > 0.0)) throw std::invalid_argument("power_fractions: no power inside F_BOI");
    return {sa / total, sb / total, sn / total};
}

/// Compensating F_B ratio that keeps total power constant when F_N is nulled.
inline double delta_b_for(double delta_a, double k_a, double k_b) {
    if (!(k_b > 0.0)) throw std::invalid_argument("delta_b_for: K_B must be positive");
    if (!(delta_a >= 0.0)) throw std::invalid_argument("delta_b_for: delta_A must be non-negative");
    if (k_a * delta_a >= 1.0)
        throw InfeasiblePerturbation("K_A * delta_A = " + std::to_string(k_a * delta_a) +
                                     " >= 1 leaves no power for F_B");
    return (1.0 - k_a * delta_a) / k_b;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

struct PerturbationProfile {
    double delta_a = 1.0;
    double delta_b = 1.0;
    double delta_n = 0.0;
    RegionSet regions;

    double delta_a_db() const { return linear_to_db(delta_a); }

    /// Profile with delta_N = 0 and delta_B chosen to conserve power.
    static PerturbationProfile notched(double delta_a_db, const PowerFractions& k, RegionSet regions) {
        const double da = db_to_linear(delta_a_db);
        return {da, delta_b_for(da, k.a, k.b), 0.0, std::move(regions)};
    }

    /// K_A dA + K_B dB + K_N dN - 1
    double power_balance_error(const PowerFractions& k) const {
        return k.a * delta_a + k.b * delta_b + k.n * delta_n - 1.0;
    }
};

/// Scales F_A, F_B and F_N bins of both polarizations by sqrt(delta);
/// bins outside F_BOI are left alone.
inline SampledField apply_perturbation(const SampledField& field, const PerturbationProfile& profile) {
    if (!(profile.delta_a >= 0.0 && profile.delta_b > 0.0 && profile.delta_n >= 0.0))
        throw std::invalid_argument("apply_perturbation: invalid delta values");
    profile.regions.validate();
    const double ga = std::sqrt(profile.delta_a);
    const double gb = std::sqrt(profile.delta_b);
    const double gn = std::sqrt(profile.delta_n);
    const std::size_t n = field.size();
    const double fs = field.sample_rate();
    SampledField out = field;
    out.filter([&](std::size_t k) {
        switch (profile.regions.classify(bin_frequency(k, n, fs))) {
            case Region::A: return ga;
            case Region::B: return gb;
            case Region::N: return gn;
            case Region::Outside: break;
        }
        return 1.0;
    });
    return out;
}

/// Adds white circular Gaussian noise confined to `band`, per polarization,
/// with PSD (mean_power / 2 / baud_rate) * 10^(nfl_rel_db / 10). The level
/// is set by the field's mean power, which perturbation leaves unchanged.
inline SampledField add_tx_noise_floor(const SampledField& field, const TxConfig& cfg, std::uint64_t seed,
                                       const Interval& band) {
    if (cfg.nfl_rel_db == -std::numeric_limits<double>::infinity()) return field;
    const std::size_t n = field.size();
    const double fs = field.sample_rate();
    const double psd_per_pol = field.mean_power() / 2.0 / cfg.baud_rate * db_to_linear(cfg.nfl_rel_db);
    // E|X_k|^2 = N * fs * S for an N-point DFT of white noise with PSD S
    const double sigma = std::sqrt(psd_per_pol * fs * static_cast<double>(n) / 2.0);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    SampledField out = field;
    CVec spec(n);
    for (CVec* pol : {&out.x(), &out.y()}) {
        fft(*pol, spec);
        for (std::size_t k = 0; k < n; ++k)
            if (band.contains(bin_frequency(k, n, fs))) spec[k] += cplx{gauss(rng), gauss(rng)};
        ifft(spec, *pol);
    }
    return out;
}

inline SampledField add_tx_noise_floor(const SampledField& field, const TxConfig& cfg, std::uint64_t seed) {
    return add_tx_noise_floor(field, cfg, seed, cfg.band());
}

}  // namespace osnrpert
