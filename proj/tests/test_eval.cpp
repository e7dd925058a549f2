#include <catch2/catch_amalgamated.hpp>

#include "adsbtrack/eval.hpp"
#include "adsbtrack/rng.hpp"
#include "adsbtrack/train.hpp"

using namespace adsbtrack;

namespace {
std::vector<Vec> const_tracks(int n, const Vec& v) { return std::vector<Vec>(static_cast<std::size_t>(n), v); }

std::vector<Vec> random_tracks(Rng& rng, int n, double scale) {
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) {
        Vec v(6);
        for (int k = 0; k < 6; ++k) v(k) = rng.uniform(-scale, scale);
        out.push_back(v);
    }
    return out;
}
}  // namespace

TEST_CASE("perfect estimates score zero") {
    Rng rng(1);
    const auto truth = random_tracks(rng, 50, 100.0);
    const auto r = eval::rmse(truth, truth);
    CHECK(r.rmse_x == 0.0);
    CHECK(r.rmse_total == 0.0);
    for (double m : r.mae_trace) CHECK(m == 0.0);
}

TEST_CASE("constant single-axis error has a closed form") {
    const auto truth = const_tracks(37, Vec::Zero(6));
    auto est = truth;
    for (auto& e : est) e(0) += 3.0;
    const auto r = eval::rmse(est, truth);
    CHECK(r.rmse_x == Catch::Approx(3.0));
    CHECK(r.rmse_y == 0.0);
    CHECK(r.rmse_total == Catch::Approx(std::sqrt(3.0)));
}

TEST_CASE("total RMSE relates to the per-axis values") {
    Rng rng(2);
    const auto truth = random_tracks(rng, 200, 50.0);
    const auto est = random_tracks(rng, 200, 50.0);
    const auto r = eval::rmse(est, truth);
    CHECK(r.rmse_total * r.rmse_total ==
          Catch::Approx((r.rmse_x * r.rmse_x + r.rmse_y * r.rmse_y + r.rmse_z * r.rmse_z) / 3.0));
}

TEST_CASE("rmse matches a reverse-order two-pass oracle") {
    Rng rng(3);
    const auto truth = random_tracks(rng, 500, 80.0);
    const auto est = random_tracks(rng, 500, 80.0);
    const auto r = eval::rmse(est, truth);

    // accumulate in the opposite order with a separate pass per axis
    double acc = 0.0;
    for (int axis = 2; axis >= 0; --axis)
        for (std::size_t k = truth.size(); k-- > 0;) {
            const double d = est[k](axis) - truth[k](axis);
            acc += d * d;
        }
    const double oracle = std::sqrt(acc / (3.0 * static_cast<double>(truth.size())));
    CHECK(r.rmse_total == Catch::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("rmse_total is invariant under axis permutation") {
    Rng rng(4);
    const auto truth = random_tracks(rng, 100, 10.0);
    const auto est = random_tracks(rng, 100, 10.0);
    auto permute = [](const std::vector<Vec>& in) {
        std::vector<Vec> out = in;
        for (auto& v : out) {
            const double tmp = v(0);
            v(0) = v(2);
            v(2) = v(1);
            v(1) = tmp;
        }
        return out;
    };
    const auto a = eval::rmse(est, truth);
    const auto b = eval::rmse(permute(est), permute(truth));
    CHECK(a.rmse_total == Catch::Approx(b.rmse_total).epsilon(1e-14));
}

TEST_CASE("constant-error identity ties rmse_total to the MAE value") {
    // equal error e on every axis at every step: per-step MAE = e and
    // rmse_total = sqrt(3 e^2 N / (3N)) = e
    const auto truth = const_tracks(25, Vec::Zero(6));
    auto est = truth;
    for (auto& v : est) v.head(3).array() += 2.5;
    const auto r = eval::rmse(est, truth);
    CHECK(r.rmse_total == Catch::Approx(2.5));
    for (double m : r.mae_trace) CHECK(m == Catch::Approx(2.5));
}

TEST_CASE("mae trace") {
    const auto truth = const_tracks(10, Vec::Zero(6));
    auto est = truth;
    est[4].head(3).array() += 3.0;
    const auto trace = eval::mae_trace(est, truth);
    CHECK(trace[4] == Catch::Approx(3.0));
    CHECK(trace[3] == 0.0);

    SECTION("trace mean equals the full-track window MAE") {
        Rng rng(6);
        const auto t2 = random_tracks(rng, 64, 30.0);
        const auto e2 = random_tracks(rng, 64, 30.0);
        const auto tr = eval::mae_trace(e2, t2);
        double mean = 0.0;
        for (double m : tr) mean += m;
        mean /= static_cast<double>(tr.size());
        CHECK(mean == Catch::Approx(train::detail::window_mae_value(e2, t2, 0)).epsilon(1e-13));
    }
}

TEST_CASE("length mismatches are rejected") {
    const auto a = const_tracks(5, Vec::Zero(6));
    const auto b = const_tracks(6, Vec::Zero(6));
    CHECK_THROWS_AS(eval::rmse(a, b), DataError);
    CHECK_THROWS_AS(eval::mae_trace(a, b), DataError);
}

TEST_CASE("comparison table") {
    eval::ErrorReport base;
    base.rmse_total = 10.0;
    eval::ErrorReport half = base;
    half.rmse_total = 5.0;
    eval::ErrorReport same = base;

    const auto rows = eval::compare({{"raw", base}, {"half", half}, {"same", same}}, "raw");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].reduction_pct == Catch::Approx(0.0));
    CHECK(rows[1].reduction_pct == Catch::Approx(50.0));
    CHECK(rows[2].reduction_pct == Catch::Approx(0.0));

    SECTION("hand-computed three-method ratios") {
        eval::ErrorReport a, b, c;
        a.rmse_total = 8.0;
        b.rmse_total = 6.0;
        c.rmse_total = 9.6;
        const auto t = eval::compare({{"a", a}, {"b", b}, {"c", c}}, "a");
        CHECK(t[1].reduction_pct == Catch::Approx(100.0 * (1.0 - 6.0 / 8.0)).epsilon(1e-9));
        CHECK(t[2].reduction_pct == Catch::Approx(100.0 * (1.0 - 9.6 / 8.0)).epsilon(1e-9));
    }
    SECTION("missing baseline rejected") {
        CHECK_THROWS_AS(eval::compare({{"a", base}}, "nope"), DataError);
    }
}
