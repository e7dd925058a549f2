#include <catch2/catch_amalgamated.hpp>

#include "adsbtrack/sim.hpp"

using namespace adsbtrack;
using sim::SimConfig;
using sim::Track;

TEST_CASE("single cruise segment is a straight line") {
    SimConfig cfg;
    cfg.duration = 20;
    cfg.start_pos = sim::Vec3::Zero();
    cfg.start_vel = sim::Vec3(10.0, 0.0, 0.0);
    cfg.script = {sim::cruise(19)};
    const auto truth = sim::generate_truth(cfg);
    REQUIRE(truth.size() == 20);
    for (std::size_t k = 0; k < truth.size(); ++k) {
        REQUIRE(truth[k](0) == Catch::Approx(10.0 * static_cast<double>(k)));
        REQUIRE(truth[k](1) == 0.0);
        REQUIRE(truth[k](3) == 10.0);
    }
}

TEST_CASE("coordinated turns preserve speed") {
    SimConfig cfg;
    cfg.duration = 40;
    cfg.start_vel = sim::Vec3(0.0, 20.0, 0.0);
    cfg.script = {sim::turn(30, geo::deg2rad(3.0))};  // 90 degrees over 30 s
    const auto truth = sim::generate_truth(cfg);
    for (const auto& s : truth) {
        const double speed = s.tail(3).norm();
        REQUIRE(speed == Catch::Approx(20.0).epsilon(1e-9));
    }
    // heading really turned 90 degrees
    const auto& last = truth[30];
    CHECK(last(3) == Catch::Approx(20.0).epsilon(1e-9));
    CHECK(std::abs(last(4)) < 1e-9);
}

TEST_CASE("velocities are the exact derivatives of positions") {
    SimConfig cfg;
    cfg.duration = 120;
    Rng rng(3);
    sim::auto_script(cfg, rng);
    const auto truth = sim::generate_truth(cfg);

    for (std::size_t k = 0; k + 1 < truth.size(); ++k) {
        const Eigen::Vector3d dp = (truth[k + 1].head(3) - truth[k].head(3)) / cfg.T;
        const Eigen::Vector3d vbar = 0.5 * (truth[k].tail(3) + truth[k + 1].tail(3));
        REQUIRE((dp - vbar).norm() <= cfg.max_acc * cfg.T);
    }
}

TEST_CASE("kinematic audit: finite-difference acceleration stays in the envelope") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
        SimConfig cfg;
        cfg.duration = 400;
        Rng rng(seed);
        sim::auto_script(cfg, rng);
        const auto truth = sim::generate_truth(cfg);
        for (std::size_t k = 0; k + 1 < truth.size(); ++k) {
            const Eigen::Vector3d acc = (truth[k + 1].tail(3) - truth[k].tail(3)) / cfg.T;
            REQUIRE(acc.norm() <= cfg.max_acc + 1e-9);
        }
    }
}

TEST_CASE("script longer than the duration is rejected") {
    SimConfig cfg;
    cfg.duration = 10;
    cfg.script = {sim::cruise(20)};
    CHECK_THROWS_AS(sim::generate_truth(cfg), ConfigError);
}

TEST_CASE("observation noise scales with distance from the ground station") {
    SimConfig cfg;
    cfg.duration = 5;
    cfg.kappa = 0.001;
    cfg.gs = sim::Vec3::Zero();
    cfg.start_pos = sim::Vec3(1000.0, 0.0, 0.0);
    cfg.start_vel = sim::Vec3::Zero();
    cfg.script = {sim::cruise(4)};
    std::vector<Vec> obs, sigma;
    const auto truth = sim::generate_truth(cfg);
    sim::observe(truth, cfg, obs, sigma);
    for (int i = 0; i < 6; ++i) REQUIRE(sigma[0](i) == Catch::Approx(2.0 * cfg.sigma0(i)));
}

TEST_CASE("noiseless limit returns the truth") {
    SimConfig cfg;
    cfg.duration = 30;
    cfg.kappa = 0.0;
    cfg.sigma0 = Vec::Constant(6, 1e-300);
    cfg.script = {sim::cruise(29)};
    const Track t = sim::make_track(cfg, "t");
    for (std::size_t k = 0; k < t.truth.size(); ++k)
        REQUIRE((t.obs[k] - t.truth[k]).norm() < 1e-290);
}

TEST_CASE("empirical noise moments match the configured sigma") {
    SimConfig cfg;
    cfg.seed = 77;
    cfg.kappa = 0.0;
    cfg.duration = 100000 / 6;
    cfg.start_vel = sim::Vec3::Zero();
    cfg.start_pos = sim::Vec3::Zero();
    cfg.gs = sim::Vec3::Zero();
    std::vector<Vec> obs, sigma;
    const auto truth = sim::generate_truth(cfg);
    sim::observe(truth, cfg, obs, sigma);

    for (int i = 0; i < 6; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < obs.size(); ++k) {
            const double e = obs[k](i) - truth[k](i);
            acc += e * e;
        }
        const double std_est = std::sqrt(acc / static_cast<double>(obs.size()));
        REQUIRE(std_est == Catch::Approx(cfg.sigma0(i)).epsilon(0.02));
    }
}

TEST_CASE("injected noise is white at lag one") {
    SimConfig cfg;
    cfg.seed = 99;
    cfg.kappa = 0.0;
    cfg.duration = 600;
    cfg.script = {sim::cruise(599)};
    std::vector<Vec> obs, sigma;
    const auto truth = sim::generate_truth(cfg);
    sim::observe(truth, cfg, obs, sigma);

    for (int i = 0; i < 6; ++i) {
        double c0 = 0.0, c1 = 0.0;
        std::vector<double> e(obs.size());
        for (std::size_t k = 0; k < obs.size(); ++k) e[k] = obs[k](i) - truth[k](i);
        for (std::size_t k = 0; k < e.size(); ++k) c0 += e[k] * e[k];
        for (std::size_t k = 0; k + 1 < e.size(); ++k) c1 += e[k] * e[k + 1];
        REQUIRE(std::abs(c1 / c0) < 0.05);
    }
}

TEST_CASE("dataset split sizes") {
    const auto s10 = sim::split_sizes(10);
    CHECK(s10.train == 7);
    CHECK(s10.val == 2);
    CHECK(s10.test == 1);

    const auto s3 = sim::split_sizes(3);
    CHECK(s3.train >= 1);
    CHECK(s3.val >= 1);
    CHECK(s3.test >= 1);
    CHECK(s3.train + s3.val + s3.test == 3);

    CHECK_THROWS_AS(sim::split_sizes(2), ConfigError);
}

TEST_CASE("datasets are reproducible from the seed") {
    SimConfig base;
    base.duration = 50;
    const auto a = sim::build_dataset(4, base, 123);
    const auto b = sim::build_dataset(4, base, 123);
    REQUIRE(a.tracks.size() == b.tracks.size());
    for (std::size_t i = 0; i < a.tracks.size(); ++i)
        for (std::size_t k = 0; k < a.tracks[i].obs.size(); ++k)
            REQUIRE((a.tracks[i].obs[k] - b.tracks[i].obs[k]).norm() == 0.0);
    CHECK(a.train_idx == b.train_idx);
    CHECK(a.test_idx == b.test_idx);

    const auto c = sim::build_dataset(4, base, 124);
    bool differs = false;
    for (std::size_t k = 0; k < a.tracks[0].obs.size() && !differs; ++k)
        if ((a.tracks[0].obs[k] - c.tracks[0].obs[k]).norm() > 0.0) differs = true;
    CHECK(differs);
}

TEST_CASE("every generated track contains a large turn") {
    SimConfig base;
    base.duration = 400;
    const auto ds = sim::build_dataset(6, base, 5);
    for (std::size_t i = 0; i < ds.tracks.size(); ++i) {
        const auto& truth = ds.tracks[i].truth;
        double max_abs_turn = 0.0;
        double acc_turn = 0.0;
        for (std::size_t k = 1; k < truth.size(); ++k) {
            const double h0 = std::atan2(truth[k - 1](3), truth[k - 1](4));
            const double h1 = std::atan2(truth[k](3), truth[k](4));
            double dh = std::remainder(h1 - h0, 2.0 * std::numbers::pi);
            if (std::abs(dh) < 1e-9) {
                acc_turn = 0.0;  // turn ended
            } else {
                acc_turn += dh;
            }
            max_abs_turn = std::max(max_abs_turn, std::abs(acc_turn));
        }
        REQUIRE(max_abs_turn >= geo::deg2rad(90.0));
    }
}

TEST_CASE("geodetic rendering round-trips through the projection") {
    SimConfig cfg;
    cfg.duration = 60;
    Rng rng(8);
    sim::auto_script(cfg, rng);
    const Track t = sim::make_track(cfg, "t");

    geo::ProjectionConfig pc;
    pc.central_meridian = 117.0;
    const auto records = sim::to_adsb_records(t, pc);
    const auto back = sim::from_adsb_records(records, pc);
    REQUIRE(back.size() == t.obs.size());
    for (std::size_t k = 0; k < back.size(); ++k) {
        REQUIRE((back[k].head(3) - t.obs[k].head(3)).norm() < 2e-4);  // projection round trip
        REQUIRE((back[k].tail(3) - t.obs[k].tail(3)).norm() < 1e-9);
    }
}
