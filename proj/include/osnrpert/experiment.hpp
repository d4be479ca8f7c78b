#pragma once

// Experiment configuration and the scenario-grid driver that turns
// (launch power, span count, noise figure) scenarios into dataset rows.

#include "osnrpert/estimator.hpp"
#include "osnrpert/fiberlink.hpp"
#include "osnrpert/spectrum.hpp"
#include "osnrpert/wfm.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace osnrpert {

inline constexpr int kConfigSchemaVersion = 1;

struct ExperimentConfig {
    std::string preset = "desk";
    TxConfig tx;
    /// Perturbation bands; F_BOI defaults to the occupied channel band.
    IntervalList boost_bands{Interval::centered(11.5e9, 1e9), Interval::centered(14.5e9, 1e9)};
    IntervalList notch_bands{Interval::centered(13e9, 2e9)};
    std::optional<Interval> boi;
    FiberParams fiber;
    OsaConfig osa;
    std::vector<double> powers_dbm{-2, 0, 2, 4, 6};
    std::vector<int> spans{1, 5, 10, 15, 20, 25, 30};
    std::vector<double> nfs_db{4.5, 5.5, 6.5, 7.5};
    std::vector<double> delta_a_db{kDeltaGridDb.begin(), kDeltaGridDb.end()};
    std::uint64_t ase_seed = 7;
    std::uint64_t nfl_seed = 11;
    double osnr_cap_db = kDefaultOsnrCapDb;
    int folds = 5;
    std::string dataset_path = "dataset.csv";

    RegionSet regions() const {
        return make_regions(boi.value_or(tx.band()), boost_bands, notch_bands);
    }

    void validate() const {
        tx.validate();
        fiber.validate();
        (void)regions();
        if (powers_dbm.empty() || spans.empty() || nfs_db.empty() || delta_a_db.empty())
            throw std::invalid_argument("config: scenario grids must be non-empty");
        for (int s : spans)
            if (s < 1) throw std::invalid_argument("config: span counts must be >= 1");
        for (double nf : nfs_db) AmpParams{20.0, nf, tx.center_freq}.validate();
        if (folds < 2) throw std::invalid_argument("config: folds must be >= 2");
    }
};

/// 2^14 symbols, 0.05 km steps, spans {1,5,...,30}.
inline ExperimentConfig desk_preset() {
    ExperimentConfig c;
    c.preset = "desk";
    c.tx.n_symbols = std::size_t{1} << 14;
    c.fiber.step_km = 0.05;
    return c;
}

/// Full simulation grid: 2^17 symbols, 0.01 km steps, spans 1..30.
inline ExperimentConfig paper_preset() {
    ExperimentConfig c;
    c.preset = "paper";
    c.tx.n_symbols = std::size_t{1} << 17;
    c.fiber.step_km = 0.01;
    c.spans.clear();
    for (int s = 1; s <= 30; ++s) c.spans.push_back(s);
    return c;
}

inline ExperimentConfig preset_by_name(const std::string& name) {
    if (name == "desk") return desk_preset();
    if (name == "paper") return paper_preset();
    throw std::invalid_argument("unknown preset '" + name + "' (expected desk or paper)");
}

namespace detail {

inline nlohmann::json intervals_to_json(const IntervalList& list) {
    auto j = nlohmann::json::array();
    for (const auto& iv : list) j.push_back({iv.lo, iv.hi});
    return j;
}

inline IntervalList intervals_from_json(const nlohmann::json& j) {
    IntervalList out;
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2) throw std::invalid_argument("config: interval must be [lo_hz, hi_hz]");
        out.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    return out;
}

// JSON has no infinities; a null noise floor means "disabled".
inline nlohmann::json db_or_null(double v) {
    return std::isinf(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
}
inline double db_from_json(const nlohmann::json& j) {
    return j.is_null() ? -std::numeric_limits<double>::infinity() : j.get<double>();
}

template <class T>
void read_if(const nlohmann::json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
    using detail::intervals_to_json;
    nlohmann::json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["preset"] = c.preset;
    j["tx"] = {{"baud_rate", c.tx.baud_rate},
               {"rolloff", c.tx.rolloff},
               {"samples_per_symbol", c.tx.samples_per_symbol},
               {"n_symbols", c.tx.n_symbols},
               {"nfl_rel_db", detail::db_or_null(c.tx.nfl_rel_db)},
               {"seed", c.tx.seed},
               {"center_freq", c.tx.center_freq}};
    j["regions"] = {{"boost", intervals_to_json(c.boost_bands)}, {"notch", intervals_to_json(c.notch_bands)}};
    if (c.boi) j["regions"]["boi"] = {c.boi->lo, c.boi->hi};
    j["fiber"] = {{"dispersion_ps_nm_km", c.fiber.dispersion_ps_nm_km},
                  {"gamma_per_w_km", c.fiber.gamma_per_w_km},
                  {"alpha_db_per_km", c.fiber.alpha_db_per_km},
                  {"span_length_km", c.fiber.span_length_km},
                  {"step_km", c.fiber.step_km}};
    j["osa"] = {{"resolution_hz", c.osa.resolution_hz}, {"order", c.osa.order}, {"max_bin_hz", c.osa.max_bin_hz}};
    j["grid"] = {{"powers_dbm", c.powers_dbm}, {"spans", c.spans}, {"nfs_db", c.nfs_db}, {"delta_a_db", c.delta_a_db}};
    j["seeds"] = {{"ase", c.ase_seed}, {"nfl", c.nfl_seed}};
    j["fit"] = {{"osnr_cap_db", c.osnr_cap_db}, {"folds", c.folds}};
    j["output"] = {{"dataset", c.dataset_path}};
    return j;
}

/// Starts from the named preset (default "desk") and applies every key present.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using detail::read_if;
    const int version = j.value("schema_version", kConfigSchemaVersion);
    if (version != kConfigSchemaVersion)
        throw std::invalid_argument("config: unsupported schema_version " + std::to_string(version));
    ExperimentConfig c = preset_by_name(j.value("preset", std::string{"desk"}));
    if (j.contains("tx")) {
        const auto& t = j["tx"];
        read_if(t, "baud_rate", c.tx.baud_rate);
        read_if(t, "rolloff", c.tx.rolloff);
        read_if(t, "samples_per_symbol", c.tx.samples_per_symbol);
        read_if(t, "n_symbols", c.tx.n_symbols);
        if (t.contains("nfl_rel_db")) c.tx.nfl_rel_db = detail::db_from_json(t["nfl_rel_db"]);
        read_if(t, "seed", c.tx.seed);
        read_if(t, "center_freq", c.tx.center_freq);
    }
    if (j.contains("regions")) {
        const auto& r = j["regions"];
        if (r.contains("boost")) c.boost_bands = detail::intervals_from_json(r["boost"]);
        if (r.contains("notch")) c.notch_bands = detail::intervals_from_json(r["notch"]);
        if (r.contains("boi")) {
            const auto b = r["boi"];
            c.boi = Interval{b.at(0).get<double>(), b.at(1).get<double>()};
        }
    }
    if (j.contains("fiber")) {
        const auto& f = j["fiber"];
        read_if(f, "dispersion_ps_nm_km", c.fiber.dispersion_ps_nm_km);
        read_if(f, "gamma_per_w_km", c.fiber.gamma_per_w_km);
        read_if(f, "alpha_db_per_km", c.fiber.alpha_db_per_km);
        read_if(f, "span_length_km", c.fiber.span_length_km);
        read_if(f, "step_km", c.fiber.step_km);
    }
    if (j.contains("osa")) {
        const auto& o = j["osa"];
        read_if(o, "resolution_hz", c.osa.resolution_hz);
        read_if(o, "order", c.osa.order);
        read_if(o, "max_bin_hz", c.osa.max_bin_hz);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        read_if(g, "powers_dbm", c.powers_dbm);
        read_if(g, "spans", c.spans);
        read_if(g, "nfs_db", c.nfs_db);
        read_if(g, "delta_a_db", c.delta_a_db);
    }
    if (j.contains("seeds")) {
        read_if(j["seeds"], "ase", c.ase_seed);
        read_if(j["seeds"], "nfl", c.nfl_seed);
    }
    if (j.contains("fit")) {
        read_if(j["fit"], "osnr_cap_db", c.osnr_cap_db);
        read_if(j["fit"], "folds", c.folds);
    }
    if (j.contains("output")) read_if(j["output"], "dataset", c.dataset_path);
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return config_from_json(nlohmann::json::parse(in));
}

/// Everything that influences dataset contents; output paths excluded.
inline std::string config_fingerprint(const ExperimentConfig& c) {
    auto j = to_json(c);
    j.erase("output");
    j.erase("fit");
    return j.dump();
}

inline std::string scenario_id(double power_dbm, int spans, double nf_db) {
    return "P" + csv::num(power_dbm) + "_S" + std::to_string(spans) + "_NF" + csv::num(nf_db);
}

inline std::uint64_t group_ase_seed(std::uint64_t base, double power_dbm, double nf_db) {
    return mix_seed(mix_seed(base, std::bit_cast<std::uint64_t>(power_dbm)), std::bit_cast<std::uint64_t>(nf_db));
}

/// Reference waveform plus everything derived from it once per experiment.
struct TxSetup {
    SampledField reference;
    RegionSet regions;
    PowerFractions fractions;
};

inline TxSetup prepare_tx(const ExperimentConfig& cfg) {
    SampledField ref = generate_reference(cfg.tx);
    RegionSet regions = cfg.regions();
    const PowerFractions k = power_fractions(ref, regions);
    return {std::move(ref), std::move(regions), k};
}

/// Perturbed waveform with transmitter noise floor, at unit mean power.
inline SampledField perturbed_tx(const ExperimentConfig& cfg, const TxSetup& setup, double delta_a_db) {
    const auto profile = PerturbationProfile::notched(delta_a_db, setup.fractions, setup.regions);
    return add_tx_noise_floor(apply_perturbation(setup.reference, profile), cfg.tx, cfg.nfl_seed,
                              setup.regions.boi);
}

inline LinkConfig link_for(const ExperimentConfig& cfg, double power_dbm, int spans, double nf_db) {
    LinkConfig link;
    link.fiber = cfg.fiber;
    link.amp.nf_db = nf_db;
    link.amp.center_freq = cfg.tx.center_freq;
    link.n_spans = spans;
    link.launch_power_dbm = power_dbm;
    link.ase_seed = group_ase_seed(cfg.ase_seed, power_dbm, nf_db);
    return link;
}

/// Runs every Delta(A) profile of one (power, nf) pair through max(spans)
/// spans, tapping the spectrum at each requested span count.
inline std::vector<FeatureRow> simulate_group(const ExperimentConfig& cfg, const TxSetup& setup, double power_dbm,
                                              double nf_db) {
    const int max_spans = *std::max_element(cfg.spans.begin(), cfg.spans.end());
    const std::set<int> wanted(cfg.spans.begin(), cfg.spans.end());
    std::map<int, std::vector<ApsdReport>> reports;
    for (double da : cfg.delta_a_db) {
        SampledField tx = [&] {
            try {
                return perturbed_tx(cfg, setup, da);
            } catch (const InfeasiblePerturbation& e) {
                throw InfeasiblePerturbation("scenario P" + csv::num(power_dbm) + "_NF" + csv::num(nf_db) +
                                             ", Delta(A) = " + csv::num(da) + " dB: " + e.what());
            }
        }();
        LinkConfig link = link_for(cfg, power_dbm, max_spans, nf_db);
        simulate_link(tx, link, [&](int span, const SampledField& rx) {
            if (!wanted.contains(span)) return;
            reports[span].push_back(measure_apsd(estimate_psd(rx, cfg.osa), setup.regions, da,
                                                 scenario_id(power_dbm, span, nf_db)));
        });
    }
    std::vector<FeatureRow> rows;
    for (int span : wanted) {
        const LinkConfig link = link_for(cfg, power_dbm, span, nf_db);
        rows.push_back(build_feature_row(reports[span], analytic_osnr(link), {power_dbm, span, nf_db},
                                         scenario_id(power_dbm, span, nf_db)));
    }
    return rows;
}

inline bool row_order(const FeatureRow& a, const FeatureRow& b) {
    return std::tie(a.meta.launch_power_dbm, a.meta.nf_db, a.meta.n_spans) <
           std::tie(b.meta.launch_power_dbm, b.meta.nf_db, b.meta.n_spans);
}

struct DatasetRunStats {
    std::size_t groups_total = 0;
    std::size_t groups_simulated = 0;
    std::size_t rows = 0;
};

using LogFn = std::function<void(const std::string&)>;

/// Simulates every missing scenario group and writes the sorted dataset to
/// `path`. Rows already in `path` are reused; a sidecar `<path>.config.json`
/// guards against resuming with a different configuration.
inline DatasetRunStats run_dataset(const ExperimentConfig& cfg, const std::string& path, int workers = 1,
                                   const LogFn& log = {}) {
    cfg.validate();
    {
        // Reject an unusable delta grid before spending any compute.
        std::vector<ApsdReport> probe;
        for (double d : cfg.delta_a_db) probe.push_back({0.0, 0.0, d, {}});
        (void)build_feature_row(probe, 0.0, {});
    }
    const std::string meta_path = path + ".config.json";
    const std::string fingerprint = config_fingerprint(cfg);

    std::map<std::string, FeatureRow> done;
    if (std::filesystem::exists(path)) {
        std::ifstream meta(meta_path);
        std::string stored((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
        if (!meta || stored != fingerprint)
            throw std::runtime_error(path + " was produced with a different configuration; remove it to restart");
        for (auto& r : read_dataset(path)) done.emplace(r.scenario, std::move(r));
    } else {
        std::ofstream meta(meta_path);
        meta << fingerprint;
        if (!meta) throw std::runtime_error("cannot write " + meta_path);
        std::ofstream out(path);
        out << csv::join(dataset_header()) << '\n';
        if (!out) throw std::runtime_error("cannot write " + path);
    }

    std::vector<std::pair<double, double>> todo;
    for (double p : cfg.powers_dbm)
        for (double nf : cfg.nfs_db) {
            bool complete = true;
            for (int s : cfg.spans) complete = complete && done.contains(scenario_id(p, s, nf));
            if (!complete) todo.emplace_back(p, nf);
        }

    DatasetRunStats stats;
    stats.groups_total = cfg.powers_dbm.size() * cfg.nfs_db.size();
    stats.groups_simulated = todo.size();

    if (!todo.empty()) {
        const TxSetup setup = prepare_tx(cfg);
        std::mutex writer;
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        auto work = [&] {
            for (std::size_t i = next++; i < todo.size(); i = next++) {
                const auto [p, nf] = todo[i];
                const auto t0 = std::chrono::steady_clock::now();
                std::vector<FeatureRow> rows;
                try {
                    rows = simulate_group(cfg, setup, p, nf);
                } catch (...) {
                    std::lock_guard lock(writer);
                    if (!failure) failure = std::current_exception();
                    next = todo.size();
                    return;
                }
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::lock_guard lock(writer);
                std::ofstream out(path, std::ios::app);
                for (const auto& r : rows) {
                    out << to_csv_line(r) << '\n';
                    done.insert_or_assign(r.scenario, r);
                }
                out.flush();
                if (log) {
                    std::ostringstream msg;
                    msg << "group P" << csv::num(p) << " NF" << csv::num(nf) << ": " << rows.size() << " rows in "
                        << secs << " s";
                    log(msg.str());
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 1; w < std::max(workers, 1); ++w) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<FeatureRow> rows;
    for (double p : cfg.powers_dbm)
        for (double nf : cfg.nfs_db)
            for (int s : cfg.spans) rows.push_back(done.at(scenario_id(p, s, nf)));
    std::sort(rows.begin(), rows.end(), row_order);
    write_dataset(rows, path);
    stats.rows = rows.size();
    return stats;
}

}  // namespace osnrpert
