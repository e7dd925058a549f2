#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adsbtrack/geo.hpp"
#include "adsbtrack/linalg.hpp"
#include "adsbtrack/rng.hpp"

namespace adsbtrack::sim {

using Vec3 = Eigen::Vector3d;

// Maneuver script segments. Durations are whole sample steps so segment
// boundaries align with sample times and every sample lies inside a single
// closed-form arc.
struct Segment {
    enum class Kind { Cruise, Turn, Climb, JerkBurst };
    Kind kind = Kind::Cruise;
    int steps = 1;
    double turn_rate = 0.0;  // rad/s, positive clockwise (Turn)
    double target_vz = 0.0;  // m/s reached at segment end (Climb)
    Vec3 jerk = Vec3::Zero();  // m/s^3 (JerkBurst)
};

inline Segment cruise(int steps) { return {Segment::Kind::Cruise, steps, 0, 0, Vec3::Zero()}; }
inline Segment turn(int steps, double rate_rad_s) { return {Segment::Kind::Turn, steps, rate_rad_s, 0, Vec3::Zero()}; }
inline Segment climb(int steps, double target_vz) { return {Segment::Kind::Climb, steps, 0, target_vz, Vec3::Zero()}; }
inline Segment jerk_burst(int steps, const Vec3& j) { return {Segment::Kind::JerkBurst, steps, 0, 0, j}; }

struct SimConfig {
    double T = 1.0;      // sample period, seconds
    int duration = 600;  // samples per track
    std::vector<Segment> script;  // empty -> auto-generated per track
    Vec3 start_pos = Vec3(800.0, 600.0, 300.0);
    Vec3 start_vel = Vec3(0.0, 25.0, 0.0);

    Vec sigma0 = (Vec(6) << 15.0, 15.0, 15.0, 1.5, 1.5, 1.5).finished();
    Vec3 gs = Vec3::Zero();  // ground-station position in the local frame
    double kappa = 2e-4;     // noise growth per meter of UAV-GS distance
    std::uint64_t seed = 0;

    // realism envelope for generated scripts and the kinematic audit
    double max_turn_rate = geo::deg2rad(15.0);  // rad/s
    double max_climb = 10.0;                    // m/s
    double max_acc = 12.0;                      // m/s^2
    double max_jerk = 5.0;                      // m/s^3

    void validate() const {
        if (!(T > 0.0)) throw ConfigError("sample period must be positive");
        if (duration < 2) throw ConfigError("duration must be at least 2 samples");
        if (sigma0.size() != 6 || sigma0.minCoeff() <= 0.0)
            throw ConfigError("sigma0 must be six positive values");
        if (kappa < 0.0) throw ConfigError("kappa must be >= 0");
    }
};

struct Track {
    std::string id;
    double T = 1.0;
    std::vector<Vec> truth;  // [x y z vx vy vz] per step
    std::vector<Vec> obs;
    std::vector<Vec> sigma;  // per-step applied noise scale, 6 components
};

namespace detail {

struct KinState {
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
};

inline Vec sample(const Vec3& p, const Vec3& v) {
    Vec s(6);
    s << p(0), p(1), p(2), v(0), v(1), v(2);
    return s;
}

// Evaluates one segment analytically at offset t from its start; positions
// and velocities stay exact derivatives of each other.
inline KinState segment_at(const Segment& seg, const KinState& s0, double t, double seg_duration) {
    KinState out;
    switch (seg.kind) {
        case Segment::Kind::Cruise:
            out.v = s0.v;
            out.p = s0.p + s0.v * t;
            break;
        case Segment::Kind::Turn: {
            const double vh = std::hypot(s0.v(0), s0.v(1));
            const double psi0 = std::atan2(s0.v(0), s0.v(1));
            const double w = seg.turn_rate;
            const double psi = psi0 + w * t;
            out.v = Vec3(vh * std::sin(psi), vh * std::cos(psi), s0.v(2));
            if (std::abs(w) < 1e-12) {
                out.p = s0.p + s0.v * t;
            } else {
                out.p = Vec3(s0.p(0) + vh / w * (std::cos(psi0) - std::cos(psi)),
                             s0.p(1) + vh / w * (std::sin(psi) - std::sin(psi0)),
                             s0.p(2) + s0.v(2) * t);
            }
            break;
        }
        case Segment::Kind::Climb: {
            const double az = (seg.target_vz - s0.v(2)) / seg_duration;
            out.v = Vec3(s0.v(0), s0.v(1), s0.v(2) + az * t);
            out.p = s0.p + s0.v * t + Vec3(0, 0, 0.5 * az * t * t);
            break;
        }
        case Segment::Kind::JerkBurst:
            out.v = s0.v + 0.5 * t * t * seg.jerk;
            out.p = s0.p + s0.v * t + (t * t * t / 6.0) * seg.jerk;
            break;
    }
    return out;
}

}  // namespace detail

// Piecewise-analytic truth: each segment is sampled from its closed form, so
// sampled velocities are the exact derivatives of the sampled positions.
inline std::vector<Vec> generate_truth(const SimConfig& cfg) {
    cfg.validate();
    int scripted = 0;
    for (const auto& seg : cfg.script) {
        if (seg.steps < 1) throw ConfigError("script segment with non-positive length");
        scripted += seg.steps;
    }
    if (scripted > cfg.duration - 1)
        throw ConfigError("script covers " + std::to_string(scripted) + " steps but the track has only " +
                          std::to_string(cfg.duration - 1));

    std::vector<Segment> script = cfg.script;
    if (scripted < cfg.duration - 1) script.push_back(cruise(cfg.duration - 1 - scripted));

    std::vector<Vec> truth;
    truth.reserve(static_cast<std::size_t>(cfg.duration));
    detail::KinState s{cfg.start_pos, cfg.start_vel};
    truth.push_back(detail::sample(s.p, s.v));
    for (const auto& seg : script) {
        const double dur = seg.steps * cfg.T;
        for (int k = 1; k <= seg.steps; ++k) {
            const detail::KinState ks = detail::segment_at(seg, s, k * cfg.T, dur);
            truth.push_back(detail::sample(ks.p, ks.v));
        }
        s = detail::segment_at(seg, s, dur, dur);
    }
    return truth;
}

// sigma_k = sigma0 * (1 + kappa * dist(p_k, GS)); independent Gaussian noise
// per component, fully determined by the seed.
inline void observe(const std::vector<Vec>& truth, const SimConfig& cfg, std::vector<Vec>& obs,
                    std::vector<Vec>& sigma_trace) {
    Rng rng(cfg.seed);
    obs.clear();
    sigma_trace.clear();
    obs.reserve(truth.size());
    sigma_trace.reserve(truth.size());
    for (const Vec& s : truth) {
        const double d = (Vec3(s(0), s(1), s(2)) - cfg.gs).norm();
        const double scale = 1.0 + cfg.kappa * d;
        Vec sig = cfg.sigma0 * scale;
        Vec o(6);
        for (int i = 0; i < 6; ++i) o(i) = s(i) + sig(i) * rng.normal();
        obs.push_back(o);
        sigma_trace.push_back(sig);
    }
}

inline Track make_track(const SimConfig& cfg, const std::string& id) {
    Track t;
    t.id = id;
    t.T = cfg.T;
    t.truth = generate_truth(cfg);
    observe(t.truth, cfg, t.obs, t.sigma);
    return t;
}

// Script generator used when no explicit script is given: cruise legs broken
// by at least one >= 90 degree turn, plus a climb, a jerk burst and a second
// turn when the duration allows, all inside the configured envelope.
inline void auto_script(SimConfig& cfg, Rng& rng) {
    const double speed = rng.uniform(18.0, 30.0);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    cfg.start_pos = Vec3(rng.uniform(400.0, 1500.0), rng.uniform(400.0, 1500.0), rng.uniform(200.0, 400.0));
    cfg.start_vel = Vec3(speed * std::sin(heading), speed * std::cos(heading), 0.0);

    // speed can grow by the jerk-burst delta below; turn rates must respect it
    const double speed_ceiling = speed + 6.0;
    const double max_rate = std::min(cfg.max_turn_rate, 0.8 * cfg.max_acc / speed_ceiling);
    auto turn_segment = [&](double min_angle_deg, double max_angle_deg) {
        const double angle = geo::deg2rad(rng.uniform(min_angle_deg, max_angle_deg));
        const double rate = rng.uniform(0.5 * max_rate, 0.95 * max_rate);
        const int steps = std::max(2, static_cast<int>(std::ceil(angle / (rate * cfg.T))));
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        return turn(steps, sign * angle / (steps * cfg.T));
    };

    const Segment big_turn = turn_segment(95.0, 150.0);
    const int budget = cfg.duration - 1;
    if (budget < big_turn.steps + 4)
        throw ConfigError("duration " + std::to_string(cfg.duration) +
                          " too short for an auto-generated maneuver script");

    // mandatory backbone: cruise, large turn, cruise
    std::vector<Segment> script{cruise(2), big_turn, cruise(2)};
    int used = 4 + big_turn.steps;
    auto try_push = [&](Segment s) {
        if (used + s.steps <= budget) {
            script.push_back(s);
            used += s.steps;
        }
    };

    try_push(climb(static_cast<int>(rng.below(20)) + 20,
                   rng.uniform(0.3, 0.8) * cfg.max_climb * (rng.uniform() < 0.5 ? -1.0 : 1.0)));
    try_push(cruise(static_cast<int>(rng.below(30)) + 20));
    {
        // sized from a target speed change so acceleration and jerk stay in
        // the envelope: |a_end| = 2 dv / d, |j| = 2 dv / d^2
        const int steps = static_cast<int>(rng.below(3)) + 3;
        const double dv = rng.uniform(2.0, 6.0);
        const double d = steps * cfg.T;
        const double jmag = 2.0 * dv / (d * d);
        const double jdir = rng.uniform(0.0, 2.0 * std::numbers::pi);
        try_push(jerk_burst(steps, Vec3(jmag * std::sin(jdir), jmag * std::cos(jdir), 0.0)));
    }
    try_push(climb(static_cast<int>(rng.below(15)) + 10, 0.0));  // level off
    try_push(turn_segment(60.0, 120.0));

    // spend whatever is left widening the two backbone cruise legs
    const int spare = budget - used;
    script[0].steps += spare / 2;
    script[2].steps += spare - spare / 2;

    cfg.script = std::move(script);
}

struct Dataset {
    std::vector<Track> tracks;
    std::vector<std::size_t> train_idx, val_idx, test_idx;
};

struct SplitSizes {
    std::size_t train, val, test;
};

// 70/20/10 with every split kept non-empty (minimum-one rule).
inline SplitSizes split_sizes(std::size_t n) {
    if (n < 3) throw ConfigError("need at least 3 tracks to form train/val/test splits");
    std::size_t test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n))));
    std::size_t val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n))));
    if (test + val + 1 > n) {
        test = 1;
        val = 1;
    }
    return {n - val - test, val, test};
}

inline Dataset build_dataset(std::size_t n_tracks, const SimConfig& base, std::uint64_t seed) {
    Dataset ds;
    ds.tracks.reserve(n_tracks);
    for (std::size_t i = 0; i < n_tracks; ++i) {
        SimConfig cfg = base;
        cfg.seed = split_seed(seed, 0x747261636b00ULL + i);
        Rng script_rng(split_seed(seed, 0x73637200ULL + i));
        if (base.script.empty()) auto_script(cfg, script_rng);
        char name[32];
        std::snprintf(name, sizeof(name), "track_%02zu", i);
        ds.tracks.push_back(make_track(cfg, name));
    }

    const SplitSizes sz = split_sizes(n_tracks);
    std::vector<std::size_t> order(n_tracks);
    for (std::size_t i = 0; i < n_tracks; ++i) order[i] = i;
    Rng rng(split_seed(seed, 0x73706c6974ULL));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    ds.train_idx.assign(order.begin(), order.begin() + static_cast<long>(sz.train));
    ds.val_idx.assign(order.begin() + static_cast<long>(sz.train),
                      order.begin() + static_cast<long>(sz.train + sz.val));
    ds.test_idx.assign(order.begin() + static_cast<long>(sz.train + sz.val), order.end());
    return ds;
}

// Renders a track as geodetic broadcast records so the full preprocessing
// path (projection + velocity decomposition) can be exercised end to end.
inline std::vector<geo::AdsbRecord> to_adsb_records(const Track& t, const geo::ProjectionConfig& pc) {
    const geo::GaussKruger tm(pc);
    std::vector<geo::AdsbRecord> out;
    out.reserve(t.obs.size());
    for (std::size_t k = 0; k < t.obs.size(); ++k) {
        const Vec& o = t.obs[k];
        geo::AdsbRecord r;
        r.t = static_cast<double>(k) * t.T;
        std::tie(r.lat, r.lon) = tm.inverse(o(0), o(1));
        r.alt = o(2);
        geo::recompose_velocity(o(3), o(4), o(5), r.v, r.psi, r.theta);
        out.push_back(r);
    }
    return out;
}

inline std::vector<Vec> from_adsb_records(const std::vector<geo::AdsbRecord>& records,
                                          const geo::ProjectionConfig& pc) {
    std::vector<Vec> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const geo::Observation o = geo::to_observation(r, pc);
        Vec v(6);
        v << o.x, o.y, o.z, o.vx, o.vy, o.vz;
        out.push_back(v);
    }
    return out;
}

}  // namespace adsbtrack::sim
