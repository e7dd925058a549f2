#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "adsbtrack/models.hpp"
#include "adsbtrack/rng.hpp"

namespace adsbtrack::noisenet {

using models::NoiseParams;
using models::SigmaBounds;

inline constexpr int kInputDim = 6;   // delta_k = o_k - combined estimate
inline constexpr int kOutputDim = 12; // 3 sigma_vw + 3 sigma_jw + 6 sigma_r

// LSTM cell (gate order i, f, g, o) -> trunk FC -> PReLU -> three tanh heads.
struct NetworkParams {
    int hidden = 128;
    int trunk = 64;

    Mat wx;       // 4h x 6
    Mat wh;       // 4h x h
    Vec b;        // 4h
    Mat wt;       // trunk x h
    Vec bt;       // trunk
    double prelu = 0.25;
    Mat w_cv;     // 3 x trunk
    Vec b_cv;
    Mat w_cj;     // 3 x trunk
    Vec b_cj;
    Mat w_r;      // 6 x trunk
    Vec b_r;

    static NetworkParams zeros(int hidden, int trunk) {
        NetworkParams p;
        p.hidden = hidden;
        p.trunk = trunk;
        p.wx = Mat::Zero(4 * hidden, kInputDim);
        p.wh = Mat::Zero(4 * hidden, hidden);
        p.b = Vec::Zero(4 * hidden);
        p.wt = Mat::Zero(trunk, hidden);
        p.bt = Vec::Zero(trunk);
        p.prelu = 0.0;
        p.w_cv = Mat::Zero(3, trunk);
        p.b_cv = Vec::Zero(3);
        p.w_cj = Mat::Zero(3, trunk);
        p.b_cj = Vec::Zero(3);
        p.w_r = Mat::Zero(6, trunk);
        p.b_r = Vec::Zero(6);
        return p;
    }

    // Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] init; the forget-gate bias is
    // raised to 1 so the cell keeps memory early in training.
    static NetworkParams init(int hidden, int trunk, std::uint64_t seed) {
        NetworkParams p = zeros(hidden, trunk);
        Rng rng(seed);
        auto fill = [&rng](Mat& m, int fan_in) {
            const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-s, s);
        };
        auto fillv = [&rng](Vec& v, int fan_in) {
            const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (Eigen::Index r = 0; r < v.size(); ++r) v(r) = rng.uniform(-s, s);
        };
        fill(p.wx, kInputDim);
        fill(p.wh, hidden);
        fillv(p.b, hidden);
        p.b.segment(hidden, hidden).setConstant(1.0);
        fill(p.wt, hidden);
        fillv(p.bt, hidden);
        p.prelu = 0.25;
        fill(p.w_cv, trunk);
        fillv(p.b_cv, trunk);
        fill(p.w_cj, trunk);
        fillv(p.b_cj, trunk);
        fill(p.w_r, trunk);
        fillv(p.b_r, trunk);
        return p;
    }

    std::size_t count() const {
        return static_cast<std::size_t>(wx.size() + wh.size() + b.size() + wt.size() + bt.size() + 1 +
                                        w_cv.size() + b_cv.size() + w_cj.size() + b_cj.size() +
                                        w_r.size() + b_r.size());
    }

    // Canonical flattening order; matrices column-major.
    template <typename F>
    void for_each(F&& f) {
        for (Eigen::Index i = 0; i < wx.size(); ++i) f(wx.data()[i]);
        for (Eigen::Index i = 0; i < wh.size(); ++i) f(wh.data()[i]);
        for (Eigen::Index i = 0; i < b.size(); ++i) f(b.data()[i]);
        for (Eigen::Index i = 0; i < wt.size(); ++i) f(wt.data()[i]);
        for (Eigen::Index i = 0; i < bt.size(); ++i) f(bt.data()[i]);
        f(prelu);
        for (Eigen::Index i = 0; i < w_cv.size(); ++i) f(w_cv.data()[i]);
        for (Eigen::Index i = 0; i < b_cv.size(); ++i) f(b_cv.data()[i]);
        for (Eigen::Index i = 0; i < w_cj.size(); ++i) f(w_cj.data()[i]);
        for (Eigen::Index i = 0; i < b_cj.size(); ++i) f(b_cj.data()[i]);
        for (Eigen::Index i = 0; i < w_r.size(); ++i) f(w_r.data()[i]);
        for (Eigen::Index i = 0; i < b_r.size(); ++i) f(b_r.data()[i]);
    }
    template <typename F>
    void for_each(F&& f) const {
        const_cast<NetworkParams*>(this)->for_each([&](double& x) { f(static_cast<const double&>(x)); });
    }

    Vec pack() const {
        Vec out(static_cast<Eigen::Index>(count()));
        Eigen::Index k = 0;
        for_each([&](const double& x) { out(k++) = x; });
        return out;
    }

    void unpack(const Vec& flat) {
        Eigen::Index k = 0;
        for_each([&](double& x) { x = flat(k++); });
    }

    double l1() const {
        double acc = 0.0;
        for_each([&](const double& x) { acc += std::abs(x); });
        return acc;
    }
};

struct LstmCarry {
    Vec h;
    Vec c;

    static LstmCarry zeros(int hidden) { return {Vec::Zero(hidden), Vec::Zero(hidden)}; }
    void reset() {
        h.setZero();
        c.setZero();
    }
};

// Fixed per-component scaling with an asinh squash. Position residuals
// (meters) and velocity residuals (m/s) become comparable, large residuals
// compress logarithmically instead of saturating the tanh-family
// activations, and the absolute residual level stays visible to the network
// (a running normalizer would strip exactly the noise-level feature the
// heads must estimate).
struct FeatureScaler {
    double pos_scale = 10.0;
    double vel_scale = 1.0;

    static FeatureScaler with_init(double pos, double vel) { return {pos, vel}; }

    Vec scale_and_observe(const Vec& delta) const {
        Vec out(kInputDim);
        for (int i = 0; i < kInputDim; ++i)
            out(i) = std::asinh(delta(i) / (i < 3 ? pos_scale : vel_scale));
        return out;
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {
struct StepCache {
    Vec x, h_prev, c_prev;
    Vec gi, gf, gg, go;  // post-activation gates
    Vec c, tanh_c, h;
};
}  // namespace detail

// One LSTM cell update; optionally records the intermediates needed by the
// backward pass.
inline LstmCarry lstm_step(const LstmCarry& carry, const Vec& input, const NetworkParams& p,
                           detail::StepCache* cache = nullptr) {
    const int h = p.hidden;
    const Vec z = p.wx * input + p.wh * carry.h + p.b;
    Vec gi(h), gf(h), gg(h), go(h), c(h), tc(h), hn(h);
    for (int k = 0; k < h; ++k) {
        gi(k) = sigmoid(z(k));
        gf(k) = sigmoid(z(h + k));
        gg(k) = std::tanh(z(2 * h + k));
        go(k) = sigmoid(z(3 * h + k));
        c(k) = gf(k) * carry.c(k) + gi(k) * gg(k);
        tc(k) = std::tanh(c(k));
        hn(k) = go(k) * tc(k);
    }
    if (cache) *cache = {input, carry.h, carry.c, gi, gf, gg, go, c, tc, hn};
    return {hn, c};
}

// Log-space mapping of a tanh output in (-1, 1) onto [sigma_min, sigma_max];
// raw = 0 lands on the geometric midpoint.
inline double map_sigma(double raw, double sigma_min, double sigma_max) {
    return sigma_min * std::pow(sigma_max / sigma_min, 0.5 * (raw + 1.0));
}

inline void sigma_interval(const SigmaBounds& b, int flat_index, double& lo, double& hi) {
    if (flat_index < 3) {
        lo = b.vw_min;
        hi = b.vw_max;
    } else if (flat_index < 6) {
        lo = b.jw_min;
        hi = b.jw_max;
    } else if (flat_index < 9) {
        lo = b.r_pos_min;
        hi = b.r_pos_max;
    } else {
        lo = b.r_vel_min;
        hi = b.r_vel_max;
    }
}

struct HeadOutput {
    Vec raw = Vec::Zero(kOutputDim);  // tanh outputs, strictly inside (-1, 1)
    NoiseParams mapped;
};

inline HeadOutput map_params(const Vec& raw, const SigmaBounds& bounds) {
    HeadOutput out;
    out.raw = raw;
    for (int i = 0; i < kOutputDim; ++i) {
        double lo, hi;
        sigma_interval(bounds, i, lo, hi);
        out.mapped.set_flat(i, map_sigma(raw(i), lo, hi));
    }
    return out;
}

// Everything backward() needs to replay one window's network evaluation.
struct ForwardCache {
    std::vector<detail::StepCache> steps;
    Vec trunk_pre, trunk_act;
    Vec head_pre;        // 12 pre-tanh activations
    Vec raw;             // 12
    Vec dsigma_draw;     // d sigma_i / d raw_i at the evaluated point
};

inline HeadOutput forward(LstmCarry& carry, std::span<const Vec> inputs, const NetworkParams& p,
                          const SigmaBounds& bounds, ForwardCache* cache = nullptr) {
    if (inputs.empty()) throw std::invalid_argument("forward: window must be non-empty");
    if (cache) {
        cache->steps.clear();
        cache->steps.resize(inputs.size());
    }
    for (std::size_t t = 0; t < inputs.size(); ++t)
        carry = lstm_step(carry, inputs[t], p, cache ? &cache->steps[t] : nullptr);

    const Vec tp = p.wt * carry.h + p.bt;
    Vec ta(p.trunk);
    for (int i = 0; i < p.trunk; ++i) ta(i) = tp(i) > 0.0 ? tp(i) : p.prelu * tp(i);

    Vec zh(kOutputDim);
    zh.segment(0, 3) = p.w_cv * ta + p.b_cv;
    zh.segment(3, 3) = p.w_cj * ta + p.b_cj;
    zh.segment(6, 6) = p.w_r * ta + p.b_r;

    Vec raw(kOutputDim);
    for (int i = 0; i < kOutputDim; ++i) raw(i) = std::tanh(zh(i));

    HeadOutput out = map_params(raw, bounds);
    if (cache) {
        cache->trunk_pre = tp;
        cache->trunk_act = ta;
        cache->head_pre = zh;
        cache->raw = raw;
        cache->dsigma_draw = Vec(kOutputDim);
        for (int i = 0; i < kOutputDim; ++i) {
            double lo, hi;
            sigma_interval(bounds, i, lo, hi);
            cache->dsigma_draw(i) = out.mapped.flat(i) * 0.5 * std::log(hi / lo);
        }
    }
    return out;
}

// Reverse pass for one window: dL/dsigma (12 components from the filter
// tape) back to every network parameter. The carry entering the window is a
// truncation boundary, so no gradient leaves through it.
inline NetworkParams backward(const ForwardCache& cache, const NetworkParams& p, const Vec& dl_dsigma) {
    NetworkParams g = NetworkParams::zeros(p.hidden, p.trunk);
    const int h = p.hidden;

    const Vec draw = dl_dsigma.cwiseProduct(cache.dsigma_draw);
    Vec dzh(kOutputDim);
    for (int i = 0; i < kOutputDim; ++i)
        dzh(i) = draw(i) * (1.0 - cache.raw(i) * cache.raw(i));

    g.w_cv = dzh.segment(0, 3) * cache.trunk_act.transpose();
    g.b_cv = dzh.segment(0, 3);
    g.w_cj = dzh.segment(3, 3) * cache.trunk_act.transpose();
    g.b_cj = dzh.segment(3, 3);
    g.w_r = dzh.segment(6, 6) * cache.trunk_act.transpose();
    g.b_r = dzh.segment(6, 6);

    const Vec dta = p.w_cv.transpose() * dzh.segment(0, 3) + p.w_cj.transpose() * dzh.segment(3, 3) +
                    p.w_r.transpose() * dzh.segment(6, 6);
    Vec dtp(p.trunk);
    g.prelu = 0.0;
    for (int i = 0; i < p.trunk; ++i) {
        if (cache.trunk_pre(i) > 0.0) {
            dtp(i) = dta(i);
        } else {
            dtp(i) = dta(i) * p.prelu;
            g.prelu += dta(i) * cache.trunk_pre(i);
        }
    }
    g.wt = dtp * cache.steps.back().h.transpose();
    g.bt = dtp;

    Vec dh = p.wt.transpose() * dtp;
    Vec dc = Vec::Zero(h);
    for (std::size_t t = cache.steps.size(); t-- > 0;) {
        const auto& s = cache.steps[t];
        Vec dz(4 * h);
        for (int k = 0; k < h; ++k) {
            const double dgo = dh(k) * s.tanh_c(k);
            const double dck = dc(k) + dh(k) * s.go(k) * (1.0 - s.tanh_c(k) * s.tanh_c(k));
            const double dgf = dck * s.c_prev(k);
            const double dgi = dck * s.gg(k);
            const double dgg = dck * s.gi(k);
            dz(k) = dgi * s.gi(k) * (1.0 - s.gi(k));
            dz(h + k) = dgf * s.gf(k) * (1.0 - s.gf(k));
            dz(2 * h + k) = dgg * (1.0 - s.gg(k) * s.gg(k));
            dz(3 * h + k) = dgo * s.go(k) * (1.0 - s.go(k));
            dc(k) = dck * s.gf(k);
        }
        g.wx += dz * s.x.transpose();
        g.wh += dz * s.h_prev.transpose();
        g.b += dz;
        dh = p.wh.transpose() * dz;
    }
    return g;
}

}  // namespace adsbtrack::noisenet
