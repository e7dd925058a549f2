#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "adsbtrack/config.hpp"
#include "adsbtrack/eval.hpp"

namespace adsbtrack::cli {

namespace fs = std::filesystem;
using config::RunConfig;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

namespace detail {

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
}

inline std::string track_filename(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "track_%02zu.csv", i);
    return buf;
}

inline std::string report_kv(const std::vector<eval::ComparisonRow>& rows) {
    std::ostringstream out;
    for (const auto& r : rows) {
        out << r.name << ".rmse_x=" << io::fmt(r.report.rmse_x) << "\n";
        out << r.name << ".rmse_y=" << io::fmt(r.report.rmse_y) << "\n";
        out << r.name << ".rmse_z=" << io::fmt(r.report.rmse_z) << "\n";
        out << r.name << ".rmse_total=" << io::fmt(r.report.rmse_total) << "\n";
        out << r.name << ".reduction_pct=" << io::fmt(r.reduction_pct) << "\n";
    }
    return out.str();
}

inline std::string report_table(const std::vector<eval::ComparisonRow>& rows, const std::string& baseline) {
    std::ostringstream out;
    out << "method           rmse_x [m]   rmse_y [m]   rmse_z [m]   rmse_total [m]   reduction vs " << baseline
        << " [%]\n";
    for (const auto& r : rows) {
        char line[192];
        std::snprintf(line, sizeof(line), "%-16s %12.4f %12.4f %12.4f %16.4f %22.2f\n", r.name.c_str(),
                      r.report.rmse_x, r.report.rmse_y, r.report.rmse_z, r.report.rmse_total,
                      r.reduction_pct);
        out << line;
    }
    return out.str();
}

inline train::TrackData track_data_from_file(const io::TrackFile& tf, const std::string& id) {
    return {id, tf.obs, tf.truth};
}

}  // namespace detail

// Writes n track files plus the split manifest; byte-identical for a fixed
// (config, seed) pair.
inline int cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    detail::ensure_dir(out_dir);
    const auto ds = sim::build_dataset(static_cast<std::size_t>(cfg.n_tracks), cfg.make_sim(), cfg.seed);
    const std::string digest = cfg.digest();

    for (std::size_t i = 0; i < ds.tracks.size(); ++i) {
        const sim::Track& t = ds.tracks[i];
        io::TrackFile tf;
        tf.header.T = t.T;
        tf.header.proj = cfg.projection;
        tf.header.digest = digest;
        tf.header.has_geo = true;
        tf.truth = t.truth;
        tf.obs = t.obs;
        tf.t.resize(t.truth.size());
        for (std::size_t k = 0; k < t.truth.size(); ++k) tf.t[k] = static_cast<double>(k) * t.T;
        tf.geo_rows = sim::to_adsb_records(t, cfg.projection);
        io::write_track(out_dir / detail::track_filename(i), tf);
    }

    nlohmann::json manifest;
    manifest["format"] = 1;
    manifest["digest"] = digest;
    manifest["seed"] = cfg.seed;
    manifest["T"] = cfg.sample_period;
    auto names = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::string> out;
        for (std::size_t i : idx) out.push_back(detail::track_filename(i));
        return out;
    };
    manifest["split"] = {{"train", names(ds.train_idx)}, {"val", names(ds.val_idx)}, {"test", names(ds.test_idx)}};
    io::write_text_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << ds.tracks.size() << " tracks to " << out_dir.string() << " (split "
              << ds.train_idx.size() << "/" << ds.val_idx.size() << "/" << ds.test_idx.size() << ")\n";
    return kExitOk;
}

// Runs the filter over one track file, either with fixed empirical matrices
// ("fixed") or with a trained checkpoint driving the noise parameters.
inline int cmd_filter(const fs::path& track_path, const std::string& params_arg, const RunConfig& cfg,
                      const fs::path& out_dir) {
    const io::TrackFile tf = io::read_track(track_path);
    train::TrainConfig tc = cfg.make_train();
    tc.sample_period = tf.header.T;

    noisenet::NetworkParams net;
    const bool fixed = params_arg == "fixed";
    if (!fixed) {
        auto [p, bounds] = io::read_checkpoint(params_arg);
        net = std::move(p);
        tc.bounds = bounds;  // the checkpoint owns the sigma mapping
        tc.hidden = net.hidden;
        tc.trunk = net.trunk;
    }
    tc.validate();

    detail::ensure_dir(out_dir);
    const auto run = train::run_track(tf.obs, tf.truth, fixed ? nullptr : &net, tc);

    io::EstimatesFile ef;
    ef.T = tf.header.T;
    ef.mode = fixed ? "fixed" : "adaptive";
    ef.digest = cfg.digest();
    const std::size_t n = run.estimates.size();
    ef.t.assign(tf.t.begin(), tf.t.begin() + static_cast<long>(n));
    ef.estimates = run.estimates;
    ef.mu = run.mu_trace;
    ef.step_params = run.step_params;
    io::write_text_atomic(out_dir / "estimates.csv", io::serialize_estimates(ef));

    if (run.diverged) {
        std::cerr << "filter diverged at step " << run.diverged_step << "; partial estimates written to "
                  << (out_dir / "estimates.csv").string() << "\n";
        return kExitDivergence;
    }

    const eval::ErrorReport rep = eval::rmse(run.estimates, tf.truth);
    const eval::ErrorReport raw = eval::rmse(tf.obs, tf.truth);
    const auto rows = eval::compare({{"raw", raw}, {ef.mode, rep}}, "raw");
    io::write_text_atomic(out_dir / "report.kv", detail::report_kv(rows));
    io::write_text_atomic(out_dir / "report.txt", detail::report_table(rows, "raw"));
    std::cout << detail::report_table(rows, "raw");
    return kExitOk;
}

inline std::vector<train::TrackData> load_split(const fs::path& data_dir, const nlohmann::json& manifest,
                                                const std::string& split) {
    std::vector<train::TrackData> out;
    if (!manifest.contains("split") || !manifest.at("split").contains(split))
        throw DataError("manifest has no '" + split + "' split");
    for (const auto& name : manifest.at("split").at(split)) {
        const fs::path p = data_dir / name.get<std::string>();
        out.push_back(detail::track_data_from_file(io::read_track(p), name.get<std::string>()));
    }
    return out;
}

inline nlohmann::json read_manifest(const fs::path& data_dir) {
    std::ifstream f(data_dir / "manifest.json");
    if (!f) throw DataError("cannot open " + (data_dir / "manifest.json").string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError("manifest.json: " + std::string(e.what()));
    }
}

inline int cmd_train(const fs::path& data_dir, const RunConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const auto manifest = read_manifest(data_dir);
    const auto training = load_split(data_dir, manifest, "train");
    const auto validation = load_split(data_dir, manifest, "val");
    if (training.empty()) throw DataError("training split is empty");

    detail::ensure_dir(out_dir);
    const train::TrainConfig tc = cfg.make_train();
    if (tc.epochs == 0)
        std::cerr << "warning: epochs=0, emitting the initialized network unchanged\n";

    std::ostringstream log;
    const train::TrainResult result = train::train(training, validation, tc, &log);

    io::write_checkpoint(out_dir / "checkpoint.txt", result.params, tc.bounds);
    io::write_text_atomic(out_dir / "train_log.csv", log.str());

    std::ostringstream curve;
    curve << "epoch,mean_window_loss,val_rmse,windows,diverged_tracks,skipped_updates\n";
    for (const auto& e : result.curve)
        curve << e.epoch << ',' << io::fmt(e.mean_window_loss) << ',' << io::fmt(e.val_rmse) << ','
              << e.windows << ',' << e.diverged_tracks << ',' << e.skipped_updates << '\n';
    io::write_text_atomic(out_dir / "curve.csv", curve.str());

    std::cout << "trained " << result.curve.size() << " epochs; best validation RMSE "
              << (result.best_epoch >= 0 ? io::fmt(result.best_val_rmse) : std::string("n/a"))
              << (result.best_epoch >= 0 ? " (epoch " + std::to_string(result.best_epoch) + ")" : "")
              << "; checkpoint at " << (out_dir / "checkpoint.txt").string() << "\n";
    return kExitOk;
}

// Compares estimate files against the truth of a track file; "raw" denotes
// the unfiltered observations and is always included.
inline int cmd_eval(const fs::path& truth_track, const std::vector<std::pair<std::string, fs::path>>& est_files,
                    const std::string& baseline, const fs::path& out_dir) {
    const io::TrackFile tf = io::read_track(truth_track);

    std::vector<std::pair<std::string, eval::ErrorReport>> reports;
    reports.emplace_back("raw", eval::rmse(tf.obs, tf.truth));
    std::vector<std::pair<std::string, io::EstimatesFile>> loaded;
    for (const auto& [name, path] : est_files) {
        loaded.emplace_back(name, io::read_estimates(path));
        const auto& ef = loaded.back().second;
        if (ef.estimates.size() != tf.truth.size())
            throw DataError(name + ": estimates length " + std::to_string(ef.estimates.size()) +
                            " does not match track length " + std::to_string(tf.truth.size()));
        reports.emplace_back(name, eval::rmse(ef.estimates, tf.truth));
    }

    const auto rows = eval::compare(reports, baseline);
    detail::ensure_dir(out_dir);
    io::write_text_atomic(out_dir / "report.kv", detail::report_kv(rows));
    io::write_text_atomic(out_dir / "report.txt", detail::report_table(rows, baseline));

    std::ostringstream trace;
    trace << "t";
    for (const auto& [name, rep] : reports) trace << ',' << name;
    trace << '\n';
    for (std::size_t k = 0; k < tf.t.size(); ++k) {
        trace << io::fmt(tf.t[k]);
        for (const auto& [name, rep] : reports) trace << ',' << io::fmt(rep.mae_trace[k]);
        trace << '\n';
    }
    io::write_text_atomic(out_dir / "mae_trace.csv", trace.str());
    std::cout << detail::report_table(rows, baseline);
    return kExitOk;
}

}  // namespace adsbtrack::cli
