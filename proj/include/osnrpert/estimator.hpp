#pragma once

// Linear OSNR regression over average-PSD features measured for a grid of
// F_A perturbation levels.

#include "osnrpert/csv.hpp"
#include "osnrpert/lsq.hpp"
#include "osnrpert/spectrum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace osnrpert {

/// Delta(A) levels in dB, ascending; one p_n feature per level.
inline constexpr std::array<double, 5> kDeltaGridDb{-10.0, -5.0, 0.0, 5.0, 10.0};
inline constexpr std::size_t kNumCoefficients = 2 + kDeltaGridDb.size();
inline constexpr double kDefaultOsnrCapDb = 30.0;

struct ScenarioMeta {
    double launch_power_dbm = 0.0;
    int n_spans = 0;
    double nf_db = 0.0;

    bool operator==(const ScenarioMeta&) const = default;
};

struct FeatureRow {
    std::string scenario;
    double p_ref = 0.0;  ///< F_ref APSD at Delta(A) = -10 dB
    std::array<double, kDeltaGridDb.size()> p_n{};
    double truth_osnr_db = 0.0;
    ScenarioMeta meta;

    /// Regressors in coefficient order: 1, p_ref, p_n[0..4].
    std::array<double, kNumCoefficients> regressors() const {
        std::array<double, kNumCoefficients> r{};
        r[0] = 1.0;
        r[1] = p_ref;
        for (std::size_t i = 0; i < p_n.size(); ++i) r[2 + i] = p_n[i];
        return r;
    }
};

inline std::string coefficient_name(std::size_t i) {
    if (i == 0) return "k0 (constant)";
    if (i == 1) return "k1 (p_ref at -10 dB)";
    return "k" + std::to_string(i) + " (p_n at " + csv::num(kDeltaGridDb[i - 2]) + " dB)";
}

struct FitCoefficients {
    std::array<double, kNumCoefficients> k{};

    double predict(const FeatureRow& row) const {
        const auto r = row.regressors();
        double s = 0.0;
        for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * r[i];
        return s;
    }
};

inline double predict_osnr(const FitCoefficients& coeffs, const FeatureRow& row) { return coeffs.predict(row); }

/// Orders five reports (one per Delta(A) level) into a FeatureRow.
inline FeatureRow build_feature_row(const std::vector<ApsdReport>& reports, double truth_osnr_db,
                                    const ScenarioMeta& meta, std::string scenario = {}) {
    constexpr double tol = 1e-6;
    std::array<const ApsdReport*, kDeltaGridDb.size()> slot{};
    for (const auto& r : reports) {
        std::optional<std::size_t> idx;
        for (std::size_t i = 0; i < kDeltaGridDb.size(); ++i)
            if (std::abs(r.delta_a_db - kDeltaGridDb[i]) < tol) idx = i;
        if (!idx) throw std::invalid_argument("build_feature_row: Delta(A) = " + csv::num(r.delta_a_db) +
                                              " dB is not on the -10:5:10 grid");
        if (slot[*idx] != nullptr)
            throw std::invalid_argument("build_feature_row: duplicated Delta(A) = " + csv::num(r.delta_a_db) + " dB");
        slot[*idx] = &r;
    }
    for (std::size_t i = 0; i < slot.size(); ++i)
        if (slot[i] == nullptr)
            throw std::invalid_argument("build_feature_row: missing Delta(A) = " + csv::num(kDeltaGridDb[i]) + " dB");

    FeatureRow row;
    row.scenario = std::move(scenario);
    row.p_ref = slot[0]->p_ref;
    for (std::size_t i = 0; i < slot.size(); ++i) row.p_n[i] = slot[i]->p_n;
    row.truth_osnr_db = truth_osnr_db;
    row.meta = meta;
    for (double v : row.regressors())
        if (!std::isfinite(v)) throw std::invalid_argument("build_feature_row: non-finite APSD");
    return row;
}

inline std::vector<FeatureRow> apply_cap(const std::vector<FeatureRow>& rows, double cap_db) {
    std::vector<FeatureRow> out;
    for (const auto& r : rows)
        if (r.truth_osnr_db <= cap_db) out.push_back(r);
    return out;
}

/// QR least-squares fit of the linear OSNR model on rows with truth <= cap.
inline FitCoefficients fit_least_squares(const std::vector<FeatureRow>& rows, double cap_db = kDefaultOsnrCapDb) {
    const auto train = apply_cap(rows, cap_db);
    if (train.size() < kNumCoefficients)
        throw std::invalid_argument("fit_least_squares: need at least " + std::to_string(kNumCoefficients) +
                                    " rows under the OSNR cap, have " + std::to_string(train.size()));
    Matrix a(train.size(), kNumCoefficients);
    std::vector<double> b(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto r = train[i].regressors();
        for (std::size_t j = 0; j < kNumCoefficients; ++j) a(i, j) = r[j];
        b[i] = train[i].truth_osnr_db;
    }
    std::vector<double> x;
    try {
        x = solve_least_squares(std::move(a), std::move(b));
    } catch (const RankDeficient& e) {
        std::string msg = "fit_least_squares: " + coefficient_name(e.column()) + " is collinear with";
        for (auto c : e.depends_on()) msg += " " + coefficient_name(c) + ";";
        if (e.depends_on().empty()) msg += " nothing (zero column)";
        throw RankDeficient(msg, e.column(), e.depends_on());
    }
    FitCoefficients c;
    std::copy(x.begin(), x.end(), c.k.begin());
    return c;
}

/// Training sum of squared errors under the cap.
inline double training_sse(const std::vector<FeatureRow>& rows, const FitCoefficients& c,
                           double cap_db = kDefaultOsnrCapDb) {
    double s = 0.0;
    for (const auto& r : rows)
        if (r.truth_osnr_db <= cap_db) {
            const double e = c.predict(r) - r.truth_osnr_db;
            s += e * e;
        }
    return s;
}

/// Fold index per row, stratified by span count: within each span group rows
/// are ordered by (power, nf) and dealt round-robin.
inline std::vector<int> assign_folds(const std::vector<FeatureRow>& rows, int n_folds) {
    if (n_folds < 2) throw std::invalid_argument("assign_folds: need at least two folds");
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < rows.size(); ++i) groups[rows[i].meta.n_spans].push_back(i);
    std::vector<int> fold(rows.size(), 0);
    for (auto& [spans, idx] : groups) {
        std::sort(idx.begin(), idx.end(), [&](std::size_t l, std::size_t r) {
            const auto& a = rows[l].meta;
            const auto& b = rows[r].meta;
            return std::tie(a.launch_power_dbm, a.nf_db, rows[l].scenario) <
                   std::tie(b.launch_power_dbm, b.nf_db, rows[r].scenario);
        });
        for (std::size_t j = 0; j < idx.size(); ++j) fold[idx[j]] = static_cast<int>(j % n_folds);
    }
    return fold;
}

struct Prediction {
    FeatureRow row;
    double predicted = 0.0;
    double error() const { return predicted - row.truth_osnr_db; }
};

/// Held-out predictions: each capped row is predicted by the model fitted on
/// the other folds.
inline std::vector<Prediction> cross_validate(const std::vector<FeatureRow>& rows, int n_folds = 5,
                                              double cap_db = kDefaultOsnrCapDb) {
    const auto capped = apply_cap(rows, cap_db);
    const auto fold = assign_folds(capped, n_folds);
    std::vector<Prediction> out;
    for (int f = 0; f < n_folds; ++f) {
        std::vector<FeatureRow> train;
        for (std::size_t i = 0; i < capped.size(); ++i)
            if (fold[i] != f) train.push_back(capped[i]);
        bool any = false;
        for (int v : fold) any = any || v == f;
        if (!any) continue;
        const auto c = fit_least_squares(train, cap_db);
        for (std::size_t i = 0; i < capped.size(); ++i)
            if (fold[i] == f) out.push_back({capped[i], c.predict(capped[i])});
    }
    return out;
}

struct EvalReport {
    std::size_t count = 0;
    double rmse = 0.0;
    double bias = 0.0;
    double max_abs = 0.0;
    std::map<double, double> rmse_by_power;
};

inline EvalReport evaluate(const std::vector<Prediction>& preds) {
    if (preds.empty()) throw std::invalid_argument("evaluate: empty test set");
    EvalReport rep;
    std::map<double, std::pair<double, std::size_t>> by_power;
    double se = 0.0, sum = 0.0;
    for (const auto& p : preds) {
        const double e = p.error();
        se += e * e;
        sum += e;
        rep.max_abs = std::max(rep.max_abs, std::abs(e));
        auto& bucket = by_power[p.row.meta.launch_power_dbm];
        bucket.first += e * e;
        bucket.second += 1;
    }
    rep.count = preds.size();
    rep.rmse = std::sqrt(se / static_cast<double>(preds.size()));
    rep.bias = sum / static_cast<double>(preds.size());
    for (const auto& [power, acc] : by_power)
        rep.rmse_by_power[power] = std::sqrt(acc.first / static_cast<double>(acc.second));
    return rep;
}

inline std::vector<Prediction> predict_all(const std::vector<FeatureRow>& rows, const FitCoefficients& c,
                                           double cap_db = kDefaultOsnrCapDb) {
    std::vector<Prediction> out;
    for (const auto& r : apply_cap(rows, cap_db)) out.push_back({r, c.predict(r)});
    return out;
}

inline EvalReport evaluate(const std::vector<FeatureRow>& test, const FitCoefficients& c,
                           double cap_db = kDefaultOsnrCapDb) {
    return evaluate(predict_all(test, c, cap_db));
}

inline void write_predictions_csv(const std::vector<Prediction>& preds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "truth_osnr_db,predicted_osnr_db,launch_power_dbm,n_spans,nf_db\n";
    for (const auto& p : preds)
        out << csv::join({csv::num(p.row.truth_osnr_db), csv::num(p.predicted), csv::num(p.row.meta.launch_power_dbm),
                          std::to_string(p.row.meta.n_spans), csv::num(p.row.meta.nf_db)})
            << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

// Dataset file: one FeatureRow per line.
inline const std::vector<std::string>& dataset_header() {
    static const std::vector<std::string> h{"scenario", "launch_power_dbm", "n_spans", "nf_db", "truth_osnr_db",
                                            "p_ref_m10", "p_n_m10", "p_n_m5", "p_n_0", "p_n_p5", "p_n_p10"};
    return h;
}

inline std::string to_csv_line(const FeatureRow& r) {
    std::vector<std::string> cells{r.scenario, csv::num(r.meta.launch_power_dbm), std::to_string(r.meta.n_spans),
                                   csv::num(r.meta.nf_db), csv::num(r.truth_osnr_db), csv::num(r.p_ref)};
    for (double v : r.p_n) cells.push_back(csv::num(v));
    return csv::join(cells);
}

inline FeatureRow from_csv_cells(const std::vector<std::string>& c) {
    if (c.size() != dataset_header().size()) throw std::runtime_error("dataset: wrong column count");
    FeatureRow r;
    r.scenario = c[0];
    r.meta.launch_power_dbm = csv::to_double(c[1]);
    r.meta.n_spans = std::stoi(c[2]);
    r.meta.nf_db = csv::to_double(c[3]);
    r.truth_osnr_db = csv::to_double(c[4]);
    r.p_ref = csv::to_double(c[5]);
    for (std::size_t i = 0; i < r.p_n.size(); ++i) r.p_n[i] = csv::to_double(c[6 + i]);
    return r;
}

inline std::vector<FeatureRow> read_dataset(const std::string& path) {
    const auto t = csv::read(path);
    if (t.header != dataset_header()) throw std::runtime_error(path + ": unexpected dataset header");
    std::vector<FeatureRow> rows;
    for (const auto& cells : t.rows) rows.push_back(from_csv_cells(cells));
    return rows;
}

inline void write_dataset(const std::vector<FeatureRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << csv::join(dataset_header()) << '\n';
    for (const auto& r : rows) out << to_csv_line(r) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace osnrpert
