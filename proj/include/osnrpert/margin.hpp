#pragma once

// SNR needed to keep Shannon capacity when part of the channel bandwidth is
// given over to perturbations.

#include "osnrpert/csv.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace osnrpert {

struct MarginQuery {
    double snr_linear = 0.0;
    double baud_rate = 56.8e9;
    double bwd_pert = 0.0;
};

/// (1 + snr)^(B / (B - bwd)) - 1, evaluated through log1p/expm1.
inline double perturbed_snr(const MarginQuery& q) {
    if (!(q.snr_linear >= 0.0)) throw std::invalid_argument("perturbed_snr: snr must be non-negative");
    if (!(q.baud_rate > 0.0)) throw std::invalid_argument("perturbed_snr: baud rate must be positive");
    if (!(q.bwd_pert >= 0.0 && q.bwd_pert < q.baud_rate))
        throw std::invalid_argument("perturbed_snr: perturbation bandwidth must lie in [0, B)");
    if (q.bwd_pert == 0.0) return q.snr_linear;
    const double exponent = q.baud_rate / (q.baud_rate - q.bwd_pert);
    return std::expm1(exponent * std::log1p(q.snr_linear));
}

struct MarginPoint {
    double snr_db = 0.0;
    double bwd_pert = 0.0;
    double snr_pert_db = 0.0;
    double penalty_db = 0.0;
};

inline std::vector<MarginPoint> margin_curve(double baud_rate, const std::vector<double>& bwd_list,
                                             const std::vector<double>& snr_grid_db) {
    std::vector<MarginPoint> out;
    for (double bwd : bwd_list)
        for (double snr_db : snr_grid_db) {
            const double snr = std::pow(10.0, snr_db / 10.0);
            const double pert = perturbed_snr({snr, baud_rate, bwd});
            const double pert_db = 10.0 * std::log10(pert);
            out.push_back({snr_db, bwd, pert_db, bwd == 0.0 ? 0.0 : pert_db - snr_db});
        }
    return out;
}

inline const std::vector<double>& default_margin_bandwidths() {
    static const std::vector<double> v{0.5e9, 1e9, 2e9, 4e9, 5.68e9};
    return v;
}

inline void write_margin_csv(const std::vector<MarginPoint>& points, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "snr_db,bwd_pert_hz,snr_pert_db,penalty_db\n";
    for (const auto& p : points)
        out << csv::join({csv::num(p.snr_db), csv::num(p.bwd_pert), csv::num(p.snr_pert_db), csv::num(p.penalty_db)})
            << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace osnrpert
