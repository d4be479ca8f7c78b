// osnrpert: dataset generation, fitting, evaluation and plot-data export.

#include "osnrpert/estimator.hpp"
#include "osnrpert/experiment.hpp"
#include "osnrpert/margin.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

using namespace osnrpert;

namespace {

ExperimentConfig resolve_config(const std::string& path, const std::string& preset,
                                std::optional<std::uint64_t> seed) {
    ExperimentConfig cfg = path.empty() ? preset_by_name(preset) : load_config(path);
    if (seed) {
        cfg.tx.seed = *seed;
        cfg.ase_seed = mix_seed(*seed, 1);
        cfg.nfl_seed = mix_seed(*seed, 2);
    }
    cfg.validate();
    return cfg;
}

void print_report(const std::string& label, const EvalReport& r) {
    std::cout << label << ": n=" << r.count << " rmse=" << r.rmse << " dB bias=" << r.bias
              << " dB max|err|=" << r.max_abs << " dB\n";
    for (const auto& [p, v] : r.rmse_by_power) std::cout << "  launch " << p << " dBm: rmse=" << v << " dB\n";
}

nlohmann::json report_json(const EvalReport& r) {
    nlohmann::json by_power = nlohmann::json::object();
    for (const auto& [p, v] : r.rmse_by_power) by_power[csv::num(p)] = v;
    return {{"count", r.count}, {"rmse_db", r.rmse}, {"bias_db", r.bias}, {"max_abs_db", r.max_abs},
            {"rmse_by_power_db", by_power}};
}

FitCoefficients load_coefficients(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    const auto j = nlohmann::json::parse(in);
    const auto k = j.at("k").get<std::vector<double>>();
    if (k.size() != kNumCoefficients) throw std::runtime_error(path + ": expected 7 coefficients");
    FitCoefficients c;
    std::copy(k.begin(), k.end(), c.k.begin());
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"In-band perturbation OSNR estimation: simulation, fitting and plot export"};
    app.require_subcommand(1);

    std::string config_path, preset = "desk";
    std::optional<std::uint64_t> seed;
    auto add_config_flags = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("-p,--preset", preset, "Preset when no config is given (desk|paper)");
        sub->add_option("--seed", seed, "Override all random seeds");
    };

    // dataset
    auto* ds = app.add_subcommand("dataset", "Simulate the scenario grid and write FeatureRows");
    add_config_flags(ds);
    std::string ds_out;
    int workers = 1;
    ds->add_option("-o,--out", ds_out, "Dataset CSV (default: config output.dataset)");
    ds->add_option("-j,--workers", workers, "Scenario worker threads")->check(CLI::PositiveNumber);

    // fit
    auto* fit = app.add_subcommand("fit", "Least-squares fit of the OSNR model");
    std::string fit_dataset, fit_out = "coefficients.json", fit_pred;
    double cap = kDefaultOsnrCapDb;
    int folds = 5;
    fit->add_option("-d,--dataset", fit_dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
    fit->add_option("-o,--out", fit_out, "Coefficients JSON");
    fit->add_option("--cap", cap, "OSNR cap in dB for fitting and scoring");
    fit->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    fit->add_option("--predictions", fit_pred, "Write held-out predictions CSV");

    // eval
    auto* ev = app.add_subcommand("eval", "Score saved coefficients on a dataset");
    std::string ev_dataset, ev_coeffs, ev_out;
    ev->add_option("-d,--dataset", ev_dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
    ev->add_option("-k,--coeffs", ev_coeffs, "Coefficients JSON")->required()->check(CLI::ExistingFile);
    ev->add_option("-o,--out", ev_out, "Predictions CSV");
    ev->add_option("--cap", cap, "OSNR cap in dB");

    // margin
    auto* mg = app.add_subcommand("margin", "SNR penalty of reserving bandwidth for perturbations");
    double baud = 56.8e9, snr_min = 0.0, snr_max = 30.0, snr_step = 0.5;
    std::vector<double> bwds = default_margin_bandwidths();
    std::string mg_out = "margin.csv";
    mg->add_option("--baud", baud, "Baud rate in Hz");
    mg->add_option("--bwd", bwds, "Perturbation bandwidths in Hz");
    mg->add_option("--snr-min", snr_min, "Lowest SNR in dB");
    mg->add_option("--snr-max", snr_max, "Highest SNR in dB");
    mg->add_option("--snr-step", snr_step, "SNR step in dB")->check(CLI::PositiveNumber);
    mg->add_option("-o,--out", mg_out, "Output CSV");

    // psd
    auto* ps = app.add_subcommand("psd", "Export a received spectrum as CSV");
    add_config_flags(ps);
    double power = 2.0, delta_a = 10.0;
    int spans = 30;
    std::optional<double> nf;
    std::string ps_out = "psd.csv";
    ps->add_option("--power", power, "Launch power in dBm");
    ps->add_option("--spans", spans, "Span count (0 = back-to-back)")->check(CLI::NonNegativeNumber);
    ps->add_option("--nf", nf, "Amplifier noise figure in dB; omit for an ASE-free link");
    ps->add_option("--delta-a", delta_a, "Delta(A) in dB");
    ps->add_option("-o,--out", ps_out, "Output CSV");

    // config
    auto* cf = app.add_subcommand("config", "Print a preset as an editable config file");
    add_config_flags(cf);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ds->parsed()) {
            const auto cfg = resolve_config(config_path, preset, seed);
            const std::string out = ds_out.empty() ? cfg.dataset_path : ds_out;
            const auto stats = run_dataset(cfg, out, workers, [](const std::string& m) { std::clog << m << '\n'; });
            std::cout << "dataset " << out << ": " << stats.rows << " rows, simulated " << stats.groups_simulated
                      << " of " << stats.groups_total << " scenario groups\n";
        } else if (fit->parsed()) {
            const auto rows = read_dataset(fit_dataset);
            const auto coeffs = fit_least_squares(rows, cap);
            const auto in_sample = evaluate(rows, coeffs, cap);
            const auto held_out_preds = cross_validate(rows, folds, cap);
            const auto held_out = evaluate(held_out_preds);
            print_report("in-sample", in_sample);
            print_report(std::to_string(folds) + "-fold held-out", held_out);
            nlohmann::json j;
            j["k"] = coeffs.k;
            j["osnr_cap_db"] = cap;
            j["in_sample"] = report_json(in_sample);
            j["held_out"] = report_json(held_out);
            j["folds"] = folds;
            std::ofstream(fit_out) << j.dump(2) << '\n';
            if (!fit_pred.empty()) write_predictions_csv(held_out_preds, fit_pred);
        } else if (ev->parsed()) {
            const auto rows = read_dataset(ev_dataset);
            const auto preds = predict_all(rows, load_coefficients(ev_coeffs), cap);
            print_report("eval", evaluate(preds));
            if (!ev_out.empty()) write_predictions_csv(preds, ev_out);
        } else if (mg->parsed()) {
            std::vector<double> grid;
            for (double s = snr_min; s <= snr_max + 1e-9; s += snr_step) grid.push_back(s);
            write_margin_csv(margin_curve(baud, bwds, grid), mg_out);
        } else if (ps->parsed()) {
            const auto cfg = resolve_config(config_path, preset, seed);
            const TxSetup setup = prepare_tx(cfg);
            LinkConfig link = link_for(cfg, power, spans, nf.value_or(4.5));
            if (!nf) link.amp.nf_db = -std::numeric_limits<double>::infinity();
            const auto rx = simulate_link(perturbed_tx(cfg, setup, delta_a), link);
            const auto trace = estimate_psd(rx, cfg.osa);
            write_psd_csv(trace, ps_out);
            const auto r = measure_apsd(trace, setup.regions, delta_a);
            std::cout << "p_ref=" << r.p_ref << " dB p_n=" << r.p_n << " dB contrast=" << nln_metric(r.p_ref, r.p_n)
                      << " dB\n";
        } else if (cf->parsed()) {
            std::cout << to_json(resolve_config(config_path, preset, seed)).dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
