#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "adsbtrack/eval.hpp"
#include "adsbtrack/imm.hpp"
#include "adsbtrack/noisenet.hpp"

namespace adsbtrack::train {

using imm::ImmConfig;
using imm::ImmState;
using models::NoiseParams;
using noisenet::NetworkParams;

struct TrainConfig {
    int window = 3;  // tau
    int epochs = 15;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    double l1_weight = 1e-5;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
    double sample_period = 1.0;

    NoiseParams initial;  // Q0/R0 parameter set applied to the first window
    models::SigmaBounds bounds;
    ImmConfig imm;

    int hidden = 128;
    int trunk = 64;
    double scaler_pos_init = 10.0;
    double scaler_vel_init = 1.0;

    void validate() const {
        if (window < 1) throw ConfigError("window length must be >= 1");
        if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (l1_weight < 0.0) throw ConfigError("l1 weight must be >= 0");
        if (hidden < 1 || trunk < 1) throw ConfigError("network sizes must be >= 1");
        bounds.validate();
        imm.validate();
        models::validate(initial, bounds);
    }
};

struct WindowLoss {
    double mae = 0.0;
    double l1 = 0.0;
    double total = 0.0;
};

// Everything needed to recompute one trained window: the filter state at its
// entry, the window's data, the parameters applied, and the network forward
// that emitted them. Gradients are truncated at this boundary.
struct WindowRecord {
    int index = 0;  // window number within the track
    ImmState entry;
    std::vector<Vec> obs;
    std::vector<Vec> truth;
    NoiseParams params;
    noisenet::ForwardCache net_cache;
};

struct TrackRunResult {
    std::vector<Vec> estimates;            // combined 6-dim state per step
    std::vector<Vec> mu_trace;             // model probabilities per step
    std::vector<NoiseParams> step_params;  // parameter set active at each step
    std::vector<NoiseParams> window_params;
    std::vector<WindowLoss> window_losses;  // empty when no truth given
    bool diverged = false;
    long diverged_step = -1;
};

namespace detail {

inline double window_mae_value(const std::vector<Vec>& est, std::span<const Vec> truth, std::size_t offset) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t k = offset; k < est.size() && k < truth.size(); ++k, ++n) {
        const Vec d = est[k].head(3) - truth[k].head(3);
        acc += (std::abs(d(0)) + std::abs(d(1)) + std::abs(d(2))) / 3.0;
    }
    return n > 0 ? acc / static_cast<double>(n) : 0.0;
}

}  // namespace detail

// Filters one window from a fixed entry state and returns the window MAE.
// Shared by the reporting path (double) and the gradient path (ad::Var).
template <typename S>
S replay_window(const imm::ImmStateT<S>& entry, std::span<const Vec> obs, std::span<const Vec> truth,
                const models::NoiseParamsT<S>& params, const TrainConfig& cfg,
                imm::ImmStateT<S>* final_state = nullptr) {
    using std::abs;
    imm::ImmStateT<S> state = entry;
    S acc(0.0);
    for (std::size_t k = 0; k < obs.size(); ++k) {
        state = imm::imm_step<S>(state, to_scalar_vector<S>(obs[k]), params, cfg.sample_period, cfg.imm);
        for (int a = 0; a < 3; ++a) acc += abs(state.combined_mean(a) - S(truth[k](a)));
    }
    if (final_state) *final_state = state;
    return acc / S(3.0 * static_cast<double>(obs.size()));
}

struct WindowGradient {
    NetworkParams grads;  // d(total)/d(theta), including the L1 term
    WindowLoss loss;
    Vec dmae_dsigma = Vec::Zero(models::NoiseParams::kCount);
    bool finite = true;
};

// Exact reverse-mode gradient of mae + l1_weight * |theta|_1 for one window:
// tape through the IMM arithmetic to d mae / d sigma, then chain through the
// sigma mapping and the recorded network forward.
inline WindowGradient window_backward(const WindowRecord& rec, const NetworkParams& net,
                                      const TrainConfig& cfg, ad::Tape* workspace = nullptr) {
    WindowGradient out;

    ad::Tape local;
    ad::Tape& tape = workspace ? *workspace : local;
    tape.clear();
    ad::TapeScope scope(tape);

    models::NoiseParamsT<ad::Var> sigma;
    for (int i = 0; i < models::NoiseParams::kCount; ++i)
        sigma.set_flat(i, ad::Var::leaf(rec.params.flat(i)));

    imm::ImmStateT<ad::Var> entry;
    entry.cv = {to_scalar_vector<ad::Var>(rec.entry.cv.mean), to_scalar_matrix<ad::Var>(rec.entry.cv.cov),
                rec.entry.cv.kind};
    entry.cj = {to_scalar_vector<ad::Var>(rec.entry.cj.mean), to_scalar_matrix<ad::Var>(rec.entry.cj.cov),
                rec.entry.cj.kind};
    entry.mu = to_scalar_vector<ad::Var>(rec.entry.mu);
    entry.combined_mean = to_scalar_vector<ad::Var>(rec.entry.combined_mean);
    entry.combined_cov = to_scalar_matrix<ad::Var>(rec.entry.combined_cov);

    const ad::Var mae = replay_window<ad::Var>(entry, rec.obs, rec.truth, sigma, cfg);
    out.loss.mae = mae.value();
    out.loss.l1 = net.l1();
    out.loss.total = out.loss.mae + cfg.l1_weight * out.loss.l1;

    tape.backward(mae.idx);
    for (int i = 0; i < models::NoiseParams::kCount; ++i)
        out.dmae_dsigma(i) = tape.adjoint(sigma.flat(i).idx);

    out.grads = noisenet::backward(rec.net_cache, net, out.dmae_dsigma);
    // L1 subgradient, sign(0) = 0
    NetworkParams* gp = &out.grads;
    const NetworkParams* np = &net;
    {
        Vec g = gp->pack();
        const Vec p = np->pack();
        for (Eigen::Index i = 0; i < g.size(); ++i)
            g(i) += cfg.l1_weight * (p(i) > 0.0 ? 1.0 : (p(i) < 0.0 ? -1.0 : 0.0));
        gp->unpack(g);
        out.finite = g.allFinite();
    }
    return out;
}

// Recomputes the window total loss for an arbitrary parameter vector by
// replaying the recorded forward inputs; the finite-difference oracle in the
// tests drives this.
inline double window_total_loss_for_params(const WindowRecord& rec, const NetworkParams& theta,
                                           const TrainConfig& cfg) {
    noisenet::LstmCarry carry{rec.net_cache.steps.front().h_prev, rec.net_cache.steps.front().c_prev};
    std::vector<Vec> inputs;
    inputs.reserve(rec.net_cache.steps.size());
    for (const auto& s : rec.net_cache.steps) inputs.push_back(s.x);
    const auto head = noisenet::forward(carry, inputs, theta, cfg.bounds);

    models::NoiseParamsT<double> sigma = head.mapped;
    const double mae = replay_window<double>(rec.entry, rec.obs, rec.truth, sigma, cfg);
    return mae + cfg.l1_weight * theta.l1();
}

// Per-window callback during a training pass. Fired when a network-emitted
// window completes, before the parameters for the next window are emitted.
using WindowHook = std::function<void(const WindowRecord&)>;

// Drives the sliding-window pipeline over one track. The first window runs
// under cfg.initial; each completed window's (scaled) delta sequence feeds
// the network, whose output parameterizes the next window. With net ==
// nullptr every window runs under cfg.initial, which is the plain fixed-
// matrix IMM-KF.
inline TrackRunResult run_track(std::span<const Vec> obs, std::span<const Vec> truth,
                                const NetworkParams* net, const TrainConfig& cfg,
                                const WindowHook& hook = {}) {
    const std::size_t n = obs.size();
    const std::size_t tau = static_cast<std::size_t>(cfg.window);
    if (n < tau) throw DataError("track shorter than one window");
    if (!truth.empty() && truth.size() != n) throw DataError("truth length mismatch");

    TrackRunResult res;
    res.estimates.reserve(n);
    res.mu_trace.reserve(n);
    res.step_params.reserve(n);

    NoiseParams active = cfg.initial;
    ImmState state = imm::init_state<double>(obs[0], active, cfg.imm);
    res.estimates.push_back(state.combined_mean);
    res.mu_trace.push_back(state.mu);
    res.step_params.push_back(active);
    res.window_params.push_back(active);

    noisenet::LstmCarry carry = noisenet::LstmCarry::zeros(net ? net->hidden : 1);
    noisenet::FeatureScaler scaler =
        noisenet::FeatureScaler::with_init(cfg.scaler_pos_init, cfg.scaler_vel_init);

    std::vector<Vec> window_inputs;
    window_inputs.push_back(scaler.scale_and_observe(Vec::Zero(6)));  // delta_0 = 0 by construction

    int window_index = 0;
    std::size_t window_start = 0;
    WindowRecord rec;
    rec.index = 0;

    // mutable copy of the live network view for the hook-update pattern
    for (std::size_t k = 1; k < n; ++k) {
        imm::StepDiagnostics diag;
        try {
            state = imm::imm_step<double>(state, obs[k], active, cfg.sample_period, cfg.imm, &diag);
        } catch (const DivergenceError&) {
            res.diverged = true;
            res.diverged_step = static_cast<long>(k);
            return res;
        }
        res.estimates.push_back(state.combined_mean);
        res.mu_trace.push_back(state.mu);
        res.step_params.push_back(active);
        window_inputs.push_back(scaler.scale_and_observe(diag.delta));
        if (window_index >= 1) {
            rec.obs.push_back(obs[k]);
            if (!truth.empty()) rec.truth.push_back(truth[k]);
        }

        const bool boundary = ((k + 1) % tau) == 0;
        if (!boundary) continue;

        if (!truth.empty()) {
            WindowLoss wl;
            wl.mae = detail::window_mae_value(res.estimates, truth, window_start);
            wl.l1 = net ? net->l1() : 0.0;
            wl.total = wl.mae + cfg.l1_weight * wl.l1;
            res.window_losses.push_back(wl);
        }
        if (net && window_index >= 1 && hook && !truth.empty()) hook(rec);

        // emit parameters for the next window (also at track end, where the
        // emission is computed but unused)
        if (net) {
            noisenet::ForwardCache cache;
            const auto head = noisenet::forward(carry, window_inputs, *net, cfg.bounds, &cache);
            active = head.mapped;
            rec.net_cache = std::move(cache);
        }
        res.window_params.push_back(active);

        ++window_index;
        window_start = k + 1;
        window_inputs.clear();
        rec.index = window_index;
        rec.entry = state;
        rec.obs.clear();
        rec.truth.clear();
        rec.params = active;
    }

    // trailing partial window: filtered above under the last emitted
    // parameters; report its loss too
    if (!truth.empty() && window_start < n) {
        WindowLoss wl;
        wl.mae = detail::window_mae_value(res.estimates, truth, window_start);
        wl.l1 = net ? net->l1() : 0.0;
        wl.total = wl.mae + cfg.l1_weight * wl.l1;
        res.window_losses.push_back(wl);
    }
    return res;
}

struct TrackData {
    std::string id;
    std::vector<Vec> obs;
    std::vector<Vec> truth;
};

struct EpochStats {
    int epoch = 0;
    double mean_window_loss = 0.0;
    double val_rmse = 0.0;
    int windows = 0;
    int diverged_tracks = 0;
    int skipped_updates = 0;
};

struct TrainResult {
    NetworkParams params;      // best-validation checkpoint
    NetworkParams last;        // parameters after the final epoch
    std::vector<EpochStats> curve;
    double best_val_rmse = 0.0;
    int best_epoch = -1;
};

class MomentumSgd {
public:
    MomentumSgd(std::size_t count, double lr, double momentum, double clip)
        : v_(Vec::Zero(static_cast<Eigen::Index>(count))), lr_(lr), momentum_(momentum), clip_(clip) {}

    void apply(NetworkParams& p, const NetworkParams& grads) {
        Vec g = grads.pack();
        const double norm = g.norm();
        if (clip_ > 0.0 && norm > clip_) g *= clip_ / norm;
        v_ = momentum_ * v_ + g;
        Vec theta = p.pack();
        theta -= lr_ * v_;
        p.unpack(theta);
    }

private:
    Vec v_;
    double lr_, momentum_, clip_;
};

inline double validation_rmse(const std::vector<TrackData>& tracks, const NetworkParams& net,
                              const TrainConfig& cfg) {
    if (tracks.empty()) return 0.0;
    double acc = 0.0;
    int counted = 0;
    for (const auto& t : tracks) {
        const auto run = run_track(t.obs, t.truth, &net, cfg);
        if (run.diverged) continue;
        acc += eval::rmse(run.estimates, t.truth).rmse_total;
        ++counted;
    }
    return counted > 0 ? acc / counted : std::numeric_limits<double>::infinity();
}

// Epoch loop: tracks shuffled per epoch, one momentum-SGD update per
// completed window (the window is the backpropagation interval), best
// checkpoint selected on validation RMSE.
inline TrainResult train(const std::vector<TrackData>& training, const std::vector<TrackData>& validation,
                         const TrainConfig& cfg, std::ostream* log = nullptr) {
    cfg.validate();
    if (training.empty()) throw DataError("training set is empty");

    TrainResult result;
    NetworkParams net = NetworkParams::init(cfg.hidden, cfg.trunk, split_seed(cfg.seed, 0x6e657477));
    MomentumSgd sgd(net.count(), cfg.learning_rate, cfg.momentum, cfg.clip_norm);
    ad::Tape tape;

    result.best_val_rmse = std::numeric_limits<double>::infinity();
    if (log) *log << "epoch,track,window,mae,l1,grad_norm\n";

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochStats stats;
        stats.epoch = epoch;
        double loss_acc = 0.0;

        std::vector<std::size_t> order(training.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(split_seed(cfg.seed, 0x65706f63 + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (const std::size_t ti : order) {
            const TrackData& track = training[ti];
            const auto hook = [&](const WindowRecord& rec) {
                const WindowGradient wg = window_backward(rec, net, cfg, &tape);
                loss_acc += wg.loss.total;
                ++stats.windows;
                const double gnorm = wg.grads.pack().norm();
                if (log)
                    *log << epoch << ',' << track.id << ',' << rec.index << ',' << wg.loss.mae << ','
                         << wg.loss.l1 << ',' << gnorm << '\n';
                if (!wg.finite) {
                    ++stats.skipped_updates;
                    return;
                }
                sgd.apply(net, wg.grads);
            };
            const auto run = run_track(track.obs, track.truth, &net, cfg, hook);
            if (run.diverged) ++stats.diverged_tracks;
        }
        if (stats.diverged_tracks == static_cast<int>(training.size()))
            throw DivergenceError("all training tracks diverged in epoch " + std::to_string(epoch));

        stats.mean_window_loss = stats.windows > 0 ? loss_acc / stats.windows : 0.0;
        stats.val_rmse = validation_rmse(validation.empty() ? training : validation, net, cfg);
        result.curve.push_back(stats);

        if (stats.val_rmse < result.best_val_rmse) {
            result.best_val_rmse = stats.val_rmse;
            result.best_epoch = epoch;
            result.params = net;
        }
    }

    result.last = net;
    if (result.best_epoch < 0) result.params = net;  // epochs == 0
    return result;
}

}  // namespace adsbtrack::train
