#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "adsbtrack/imm.hpp"
#include "adsbtrack/sim.hpp"
#include "adsbtrack/track_io.hpp"
#include "adsbtrack/train.hpp"

namespace adsbtrack::config {

using nlohmann::json;

// One merged configuration for the whole pipeline, serialized as a single
// human-readable JSON file. Every field has a default; absent keys keep it.
struct RunConfig {
    std::uint64_t seed = 1;

    geo::ProjectionConfig projection;

    models::QDiscretization q_disc = models::QDiscretization::Standard;
    double sigma_aug_sq = 10.0;

    Mat lambda = (Mat(2, 2) << 0.95, 0.05, 0.05, 0.95).finished();
    Vec mu0 = (Vec(2) << 0.5, 0.5).finished();

    int hidden = 128;
    int trunk = 64;
    models::SigmaBounds bounds;
    double scaler_pos = 10.0;
    double scaler_vel = 1.0;

    int window = 3;
    int epochs = 15;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double l1_weight = 1e-5;
    double clip_norm = 5.0;
    models::NoiseParams q0;  // empirical first-window parameter set

    double sample_period = 1.0;
    int duration = 600;
    int n_tracks = 10;
    Vec sigma0 = (Vec(6) << 15.0, 15.0, 15.0, 1.5, 1.5, 1.5).finished();
    sim::Vec3 gs = sim::Vec3::Zero();
    double kappa = 2e-4;

    RunConfig() {
        q0.sigma_vw = {0.8, 0.8, 0.8};
        q0.sigma_jw = {0.5, 0.5, 0.5};
        q0.sigma_r = {15.0, 15.0, 15.0, 1.5, 1.5, 1.5};
    }

    imm::ImmConfig make_imm() const {
        imm::ImmConfig c;
        c.lambda = lambda;
        c.initial_mu = mu0;
        c.sigma_aug_sq = sigma_aug_sq;
        c.q_disc = q_disc;
        return c;
    }

    train::TrainConfig make_train() const {
        train::TrainConfig c;
        c.window = window;
        c.epochs = epochs;
        c.learning_rate = learning_rate;
        c.momentum = momentum;
        c.l1_weight = l1_weight;
        c.clip_norm = clip_norm;
        c.seed = seed;
        c.sample_period = sample_period;
        c.initial = q0;
        c.bounds = bounds;
        c.imm = make_imm();
        c.hidden = hidden;
        c.trunk = trunk;
        c.scaler_pos_init = scaler_pos;
        c.scaler_vel_init = scaler_vel;
        return c;
    }

    sim::SimConfig make_sim() const {
        sim::SimConfig c;
        c.T = sample_period;
        c.duration = duration;
        c.sigma0 = sigma0;
        c.gs = gs;
        c.kappa = kappa;
        c.seed = seed;
        return c;
    }

    void validate() const {
        projection.validate();
        make_imm().validate();
        make_train().validate();
        make_sim().validate();
        if (n_tracks < 3) throw ConfigError("sim.n_tracks: need at least 3 tracks to split (got " +
                                            std::to_string(n_tracks) + ")");
    }

    json to_json() const {
        json j;
        j["seed"] = seed;
        j["projection"] = {{"central_meridian", projection.central_meridian},
                           {"false_easting", projection.false_easting},
                           {"a", projection.a},
                           {"f", projection.f}};
        j["models"] = {{"q_discretization", q_disc == models::QDiscretization::Paper ? "paper" : "standard"},
                       {"sigma_aug_sq", sigma_aug_sq}};
        j["imm"] = {{"lambda", {{lambda(0, 0), lambda(0, 1)}, {lambda(1, 0), lambda(1, 1)}}},
                    {"mu0", {mu0(0), mu0(1)}}};
        j["network"] = {{"hidden", hidden},
                        {"trunk", trunk},
                        {"bounds",
                         {{"vw", {bounds.vw_min, bounds.vw_max}},
                          {"jw", {bounds.jw_min, bounds.jw_max}},
                          {"r_pos", {bounds.r_pos_min, bounds.r_pos_max}},
                          {"r_vel", {bounds.r_vel_min, bounds.r_vel_max}}}},
                        {"scaler", {{"pos", scaler_pos}, {"vel", scaler_vel}}}};
        j["train"] = {{"window", window},
                      {"epochs", epochs},
                      {"learning_rate", learning_rate},
                      {"momentum", momentum},
                      {"l1_weight", l1_weight},
                      {"clip_norm", clip_norm},
                      {"q0",
                       {{"sigma_vw", q0.sigma_vw},
                        {"sigma_jw", q0.sigma_jw},
                        {"sigma_r", q0.sigma_r}}}};
        j["sim"] = {{"T", sample_period},
                    {"duration", duration},
                    {"n_tracks", n_tracks},
                    {"sigma0", {sigma0(0), sigma0(1), sigma0(2), sigma0(3), sigma0(4), sigma0(5)}},
                    {"gs", {gs(0), gs(1), gs(2)}},
                    {"kappa", kappa}};
        return j;
    }

    static RunConfig from_json(const json& j) {
        RunConfig c;
        auto get = [](const json& obj, const char* key, auto& out) {
            if (obj.contains(key)) obj.at(key).get_to(out);
        };
        get(j, "seed", c.seed);
        if (j.contains("projection")) {
            const auto& p = j.at("projection");
            get(p, "central_meridian", c.projection.central_meridian);
            get(p, "false_easting", c.projection.false_easting);
            get(p, "a", c.projection.a);
            get(p, "f", c.projection.f);
        }
        if (j.contains("models")) {
            const auto& m = j.at("models");
            if (m.contains("q_discretization")) {
                const std::string v = m.at("q_discretization").get<std::string>();
                if (v == "paper")
                    c.q_disc = models::QDiscretization::Paper;
                else if (v == "standard")
                    c.q_disc = models::QDiscretization::Standard;
                else
                    throw ConfigError("models.q_discretization: expected 'standard' or 'paper', got '" + v + "'");
            }
            get(m, "sigma_aug_sq", c.sigma_aug_sq);
        }
        if (j.contains("imm")) {
            const auto& m = j.at("imm");
            if (m.contains("lambda")) {
                const auto& l = m.at("lambda");
                if (l.size() != 2 || l[0].size() != 2 || l[1].size() != 2)
                    throw ConfigError("imm.lambda: expected a 2x2 matrix");
                for (int r = 0; r < 2; ++r)
                    for (int q = 0; q < 2; ++q)
                        c.lambda(r, q) = l[static_cast<std::size_t>(r)][static_cast<std::size_t>(q)].get<double>();
            }
            if (m.contains("mu0")) {
                const auto& v = m.at("mu0");
                if (v.size() != 2) throw ConfigError("imm.mu0: expected 2 entries");
                c.mu0(0) = v[0].get<double>();
                c.mu0(1) = v[1].get<double>();
            }
        }
        if (j.contains("network")) {
            const auto& n = j.at("network");
            get(n, "hidden", c.hidden);
            get(n, "trunk", c.trunk);
            if (n.contains("bounds")) {
                const auto& b = n.at("bounds");
                auto pair = [&](const char* key, double& lo, double& hi) {
                    if (!b.contains(key)) return;
                    const auto& v = b.at(key);
                    if (v.size() != 2) throw ConfigError(std::string("network.bounds.") + key + ": expected [min, max]");
                    lo = v[0].get<double>();
                    hi = v[1].get<double>();
                };
                pair("vw", c.bounds.vw_min, c.bounds.vw_max);
                pair("jw", c.bounds.jw_min, c.bounds.jw_max);
                pair("r_pos", c.bounds.r_pos_min, c.bounds.r_pos_max);
                pair("r_vel", c.bounds.r_vel_min, c.bounds.r_vel_max);
            }
            if (n.contains("scaler")) {
                const auto& s = n.at("scaler");
                get(s, "pos", c.scaler_pos);
                get(s, "vel", c.scaler_vel);
            }
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            get(t, "window", c.window);
            get(t, "epochs", c.epochs);
            get(t, "learning_rate", c.learning_rate);
            get(t, "momentum", c.momentum);
            get(t, "l1_weight", c.l1_weight);
            get(t, "clip_norm", c.clip_norm);
            if (t.contains("q0")) {
                const auto& q = t.at("q0");
                auto arr = [&](const char* key, auto& out) {
                    if (!q.contains(key)) return;
                    const auto& v = q.at(key);
                    if (v.size() != out.size()) throw ConfigError(std::string("train.q0.") + key + ": wrong length");
                    for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i].get<double>();
                };
                arr("sigma_vw", c.q0.sigma_vw);
                arr("sigma_jw", c.q0.sigma_jw);
                arr("sigma_r", c.q0.sigma_r);
            }
        }
        if (j.contains("sim")) {
            const auto& s = j.at("sim");
            get(s, "T", c.sample_period);
            get(s, "duration", c.duration);
            get(s, "n_tracks", c.n_tracks);
            if (s.contains("sigma0")) {
                const auto& v = s.at("sigma0");
                if (v.size() != 6) throw ConfigError("sim.sigma0: expected 6 entries");
                for (int i = 0; i < 6; ++i) c.sigma0(i) = v[static_cast<std::size_t>(i)].get<double>();
            }
            if (s.contains("gs")) {
                const auto& v = s.at("gs");
                if (v.size() != 3) throw ConfigError("sim.gs: expected 3 entries");
                for (int i = 0; i < 3; ++i) c.gs(i) = v[static_cast<std::size_t>(i)].get<double>();
            }
            get(s, "kappa", c.kappa);
        }
        return c;
    }

    // Canonical serialization; also the digest input, so any semantic change
    // to the config changes the digest embedded in every output file.
    std::string canonical() const { return to_json().dump(2) + "\n"; }
    std::string digest() const { return io::digest64(canonical()); }

    static RunConfig load(const std::filesystem::path& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config " + path.string());
        json j;
        try {
            j = json::parse(f);  // parse_error messages carry line/column
        } catch (const json::parse_error& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
        try {
            RunConfig c = from_json(j);
            c.validate();
            return c;
        } catch (const json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
};

}  // namespace adsbtrack::config
