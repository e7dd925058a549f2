#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "adsbtrack/models.hpp"

namespace adsbtrack::kalman {

using models::GaussianState;
using models::GaussianStateT;
using models::StateSpaceT;

// Floor applied to log-likelihoods before exponentiation so IMM model
// weights can never collapse to exact zero.
inline constexpr double kLogLikelihoodFloor = -700.0;

enum class CovarianceUpdate { Simple, Joseph };

struct SingularInnovation : std::runtime_error {
    explicit SingularInnovation(double cond)
        : std::runtime_error("innovation covariance is not positive definite (diag condition estimate " +
                             std::to_string(cond) + ")"),
          condition_estimate(cond) {}
    double condition_estimate;
};

template <typename S>
struct UpdateOutputT {
    GaussianStateT<S> state;
    VecX<S> innovation;      // o - H * x_prior
    MatX<S> innovation_cov;  // H P H^T + R
    S likelihood{0.0};
    S log_likelihood{0.0};
};

using UpdateOutput = UpdateOutputT<double>;

template <typename S>
GaussianStateT<S> predict(const GaussianStateT<S>& s, const StateSpaceT<S>& ss) {
    if (s.dim() != ss.F.rows()) throw std::invalid_argument("predict: state/model dimension mismatch");
    GaussianStateT<S> out;
    out.kind = s.kind;
    out.mean = ss.F * s.mean;
    out.cov = ss.F * s.cov * ss.F.transpose() + ss.Q;
    symmetrize(out.cov);
    if (!all_finite_generic(out.mean) || !all_finite_generic(out.cov))
        throw DivergenceError("non-finite state after predict");
    return out;
}

namespace detail {
template <typename S>
double diag_condition_estimate(const MatX<S>& m) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double d = std::abs(ad::value_of(m(i, i)));
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

// log N(nu; 0, S) from the Cholesky factor of S, floored.
template <typename S>
S log_likelihood_from_chol(const VecX<S>& nu, const MatX<S>& chol) {
    using ad::clamp_min;
    const VecX<S> w = cholesky_solve<S>(chol, nu);
    S quad(0.0);
    for (Eigen::Index i = 0; i < nu.size(); ++i) quad += nu(i) * w(i);
    const S logdet = cholesky_log_det<S>(chol);
    const double d = static_cast<double>(nu.size());
    const S ll = S(-0.5) * (quad + logdet + S(d * std::log(2.0 * std::numbers::pi)));
    return clamp_min(ll, kLogLikelihoodFloor);
}
}  // namespace detail

// Multivariate normal density of an innovation under N(0, S), evaluated in
// log space and exponentiated after flooring.
template <typename S>
S gaussian_likelihood(const VecX<S>& innovation, const MatX<S>& innovation_cov) {
    using std::exp;
    auto chol = cholesky<S>(innovation_cov);
    if (!chol) throw SingularInnovation(detail::diag_condition_estimate(innovation_cov));
    return exp(detail::log_likelihood_from_chol<S>(innovation, *chol));
}

template <typename S>
UpdateOutputT<S> update(const GaussianStateT<S>& s, const VecX<S>& obs, const MatX<S>& h,
                        const MatX<S>& r, CovarianceUpdate form = CovarianceUpdate::Simple) {
    using std::exp;
    if (h.cols() != s.dim() || h.rows() != obs.size() || r.rows() != obs.size())
        throw std::invalid_argument("update: dimension mismatch");

    UpdateOutputT<S> out;
    out.innovation = obs - h * s.mean;
    MatX<S> sm = h * s.cov * h.transpose() + r;
    symmetrize(sm);
    out.innovation_cov = sm;

    auto chol = cholesky<S>(sm);
    if (!chol) throw SingularInnovation(detail::diag_condition_estimate(sm));

    // K = P H^T S^-1, applied through the factor rather than an inverse
    const MatX<S> pht = s.cov * h.transpose();
    const MatX<S> k = cholesky_solve_mat<S>(*chol, MatX<S>(pht.transpose())).transpose();

    out.state.kind = s.kind;
    out.state.mean = s.mean + k * out.innovation;
    const MatX<S> ikh = MatX<S>::Identity(s.dim(), s.dim()) - k * h;
    if (form == CovarianceUpdate::Joseph) {
        out.state.cov = ikh * s.cov * ikh.transpose() + k * r * k.transpose();
    } else {
        out.state.cov = ikh * s.cov;
    }
    symmetrize(out.state.cov);

    out.log_likelihood = detail::log_likelihood_from_chol<S>(out.innovation, *chol);
    out.likelihood = exp(out.log_likelihood);

    if (!all_finite_generic(out.state.mean) || !all_finite_generic(out.state.cov))
        throw DivergenceError("non-finite state after update");
    return out;
}

}  // namespace adsbtrack::kalman
