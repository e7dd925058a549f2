#pragma once

#include <array>
#include <vector>

#include "adsbtrack/kalman.hpp"

namespace adsbtrack::imm {

using kalman::CovarianceUpdate;
using models::GaussianStateT;
using models::ModelKind;
using models::NoiseParamsT;
using models::QDiscretization;

struct ImmConfig {
    Mat lambda = (Mat(2, 2) << 0.95, 0.05, 0.05, 0.95).finished();  // model transition probabilities
    Vec initial_mu = (Vec(2) << 0.5, 0.5).finished();
    double sigma_aug_sq = 10.0;  // prior variance for lifted acceleration/jerk states
    QDiscretization q_disc = QDiscretization::Standard;
    CovarianceUpdate cov_form = CovarianceUpdate::Simple;

    void validate() const {
        if (lambda.rows() != 2 || lambda.cols() != 2 || initial_mu.size() != 2)
            throw ConfigError("IMM is configured for exactly two models");
        for (int i = 0; i < 2; ++i) {
            if (std::abs(lambda.row(i).sum() - 1.0) > 1e-12)
                throw ConfigError("lambda row " + std::to_string(i) + " does not sum to 1");
            for (int j = 0; j < 2; ++j)
                if (lambda(i, j) < 0.0) throw ConfigError("lambda entries must be non-negative");
        }
        if (std::abs(initial_mu.sum() - 1.0) > 1e-12 || initial_mu.minCoeff() < 0.0)
            throw ConfigError("initial model probabilities must form a distribution");
        if (!(sigma_aug_sq > 0.0)) throw ConfigError("sigma_aug_sq must be positive");
    }
};

template <typename S>
struct ImmStateT {
    GaussianStateT<S> cv;
    GaussianStateT<S> cj;
    VecX<S> mu;  // 2
    VecX<S> combined_mean;  // 6
    MatX<S> combined_cov;   // 6x6
};

using ImmState = ImmStateT<double>;

template <typename S>
struct StepDiagnosticsT {
    std::array<VecX<S>, 2> innovations;
    std::array<S, 2> likelihoods{S(0.0), S(0.0)};
    std::array<S, 2> log_likelihoods{S(0.0), S(0.0)};
    VecX<S> mu;
    VecX<S> delta;  // o_k - combined estimate, the network input feature
    bool r_inflated = false;
    bool zero_mix_column = false;
};

using StepDiagnostics = StepDiagnosticsT<double>;

// mu_ij = mu_i * lambda_ij / sum_l mu_l * lambda_lj; every column is the
// source-model distribution conditioned on target model j.
template <typename S>
MatX<S> mixing_probabilities(const VecX<S>& mu_prev, const Mat& lambda, bool* zero_column = nullptr) {
    MatX<S> mix(2, 2);
    for (int j = 0; j < 2; ++j) {
        S denom(0.0);
        for (int l = 0; l < 2; ++l) denom += mu_prev(l) * S(lambda(l, j));
        if (!(ad::value_of(denom) > 0.0)) {
            if (zero_column) *zero_column = true;
            for (int i = 0; i < 2; ++i) mix(i, j) = S(0.5);
            continue;
        }
        for (int i = 0; i < 2; ++i) mix(i, j) = mu_prev(i) * S(lambda(i, j)) / denom;
    }
    return mix;
}

template <typename S>
GaussianStateT<S> convert_state(const GaussianStateT<S>& s, ModelKind target, double sigma_aug_sq) {
    if (s.kind == target) return s;
    return target == ModelKind::CJ ? models::lift_state(s, sigma_aug_sq) : models::drop_state(s);
}

// Moment-matched mixture of source states in the target model's dimension.
template <typename S>
GaussianStateT<S> mix_states(const std::vector<GaussianStateT<S>>& states, const VecX<S>& weights,
                             ModelKind target, double sigma_aug_sq) {
    const int dim = models::state_dim(target);
    GaussianStateT<S> out;
    out.kind = target;
    out.mean = VecX<S>::Zero(dim);

    std::vector<GaussianStateT<S>> conv;
    conv.reserve(states.size());
    for (const auto& s : states) conv.push_back(convert_state(s, target, sigma_aug_sq));

    for (std::size_t i = 0; i < conv.size(); ++i)
        out.mean += weights(static_cast<Eigen::Index>(i)) * conv[i].mean;

    out.cov = MatX<S>::Zero(dim, dim);
    for (std::size_t i = 0; i < conv.size(); ++i) {
        const VecX<S> d = conv[i].mean - out.mean;
        out.cov += weights(static_cast<Eigen::Index>(i)) * (conv[i].cov + MatX<S>(d * d.transpose()));
    }
    symmetrize(out.cov);
    return out;
}

template <typename S>
std::pair<GaussianStateT<S>, GaussianStateT<S>> interact(const GaussianStateT<S>& cv,
                                                         const GaussianStateT<S>& cj,
                                                         const MatX<S>& mix, double sigma_aug_sq) {
    const std::vector<GaussianStateT<S>> sources{cv, cj};
    return {mix_states(sources, VecX<S>(mix.col(0)), ModelKind::CV, sigma_aug_sq),
            mix_states(sources, VecX<S>(mix.col(1)), ModelKind::CJ, sigma_aug_sq)};
}

// mu_j proportional to L_j * sum_i lambda_ij * mu_i.
template <typename S>
VecX<S> update_model_probabilities(const VecX<S>& mu_prev, const Mat& lambda,
                                   const std::array<S, 2>& likelihoods) {
    VecX<S> mu(2);
    S total(0.0);
    for (int j = 0; j < 2; ++j) {
        S prior(0.0);
        for (int i = 0; i < 2; ++i) prior += S(lambda(i, j)) * mu_prev(i);
        mu(j) = likelihoods[static_cast<std::size_t>(j)] * prior;
        total += mu(j);
    }
    // likelihood flooring upstream keeps the normalizer strictly positive
    if (!(ad::value_of(total) > 0.0)) throw DivergenceError("model probability normalizer vanished");
    for (int j = 0; j < 2; ++j) mu(j) /= total;
    return mu;
}

template <typename S>
std::pair<VecX<S>, MatX<S>> combine(const GaussianStateT<S>& cv, const GaussianStateT<S>& cj,
                                    const VecX<S>& mu) {
    const GaussianStateT<S> cj6 = models::drop_state(cj);
    VecX<S> mean = mu(0) * cv.mean + mu(1) * cj6.mean;
    const VecX<S> d0 = cv.mean - mean;
    const VecX<S> d1 = cj6.mean - mean;
    MatX<S> cov = mu(0) * (cv.cov + MatX<S>(d0 * d0.transpose())) +
                  mu(1) * (cj6.cov + MatX<S>(d1 * d1.transpose()));
    symmetrize(cov);
    return {std::move(mean), std::move(cov)};
}

// Track initialization from the first observation: position/velocity seeded
// from o_0 with the observation sigmas as prior spread.
template <typename S>
ImmStateT<S> init_state(const VecX<S>& o0, const NoiseParamsT<S>& p0, const ImmConfig& cfg) {
    ImmStateT<S> s;
    s.cv.kind = ModelKind::CV;
    s.cv.mean = o0;
    s.cv.cov = MatX<S>::Zero(6, 6);
    for (int i = 0; i < 6; ++i)
        s.cv.cov(i, i) = p0.sigma_r[static_cast<std::size_t>(i)] * p0.sigma_r[static_cast<std::size_t>(i)];
    s.cj = models::lift_state(s.cv, cfg.sigma_aug_sq);
    s.mu = to_scalar_vector<S>(cfg.initial_mu);
    s.combined_mean = s.cv.mean;
    s.combined_cov = s.cv.cov;
    return s;
}

// One full interaction -> filtering -> probability update -> combination
// cycle with Q and R rebuilt from the current parameter set.
template <typename S>
ImmStateT<S> imm_step(const ImmStateT<S>& s, const VecX<S>& obs, const NoiseParamsT<S>& params,
                      double T, const ImmConfig& cfg, StepDiagnosticsT<S>* diag = nullptr) {
    const MatX<S> mix = mixing_probabilities<S>(s.mu, cfg.lambda, diag ? &diag->zero_mix_column : nullptr);
    auto [x0_cv, x0_cj] = interact<S>(s.cv, s.cj, mix, cfg.sigma_aug_sq);

    const auto ss_cv = models::build_cv<S>(T, params.sigma_vw, cfg.q_disc);
    const auto ss_cj = models::build_cj<S>(T, params.sigma_jw, cfg.q_disc);
    const MatX<S> r = models::build_r<S>(params.sigma_r);

    const auto pred_cv = kalman::predict<S>(x0_cv, ss_cv);
    const auto pred_cj = kalman::predict<S>(x0_cj, ss_cj);

    // singular innovation covariance: one retry with R inflated x10
    bool inflated = false;
    auto run_update = [&](const GaussianStateT<S>& pred, const MatX<S>& h) {
        try {
            return kalman::update<S>(pred, obs, h, r, cfg.cov_form);
        } catch (const kalman::SingularInnovation&) {
            inflated = true;
            return kalman::update<S>(pred, obs, h, MatX<S>(S(10.0) * r), cfg.cov_form);
        }
    };
    const auto upd_cv = run_update(pred_cv, ss_cv.H);
    const auto upd_cj = run_update(pred_cj, ss_cj.H);

    ImmStateT<S> next;
    next.cv = upd_cv.state;
    next.cj = upd_cj.state;
    next.mu = update_model_probabilities<S>(s.mu, cfg.lambda, {upd_cv.likelihood, upd_cj.likelihood});
    std::tie(next.combined_mean, next.combined_cov) = combine<S>(next.cv, next.cj, next.mu);

    if (diag) {
        diag->innovations = {upd_cv.innovation, upd_cj.innovation};
        diag->likelihoods = {upd_cv.likelihood, upd_cj.likelihood};
        diag->log_likelihoods = {upd_cv.log_likelihood, upd_cj.log_likelihood};
        diag->mu = next.mu;
        diag->delta = obs - next.combined_mean;
        diag->r_inflated = inflated;
    }
    return next;
}

}  // namespace adsbtrack::imm
