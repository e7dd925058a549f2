#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "adsbtrack/linalg.hpp"

namespace adsbtrack::models {

enum class ModelKind { CV, CJ };

inline constexpr int state_dim(ModelKind k) { return k == ModelKind::CV ? 6 : 12; }
inline constexpr int kObsDim = 6;

// Which Q discretization to build. Paper reproduces the published block
// coefficients verbatim (CV position block T^3/2, CJ position-acceleration
// coupling T^5/72); Standard uses the white-noise discretization (T^3/3 and
// T^5/30). The published CJ matrix is indefinite (its smallest eigenvalue is
// about -4e-3 * sigma^2 * T^5 at T=1), so Standard is the default and the
// only variant whose Q is positive semi-definite for all T and sigma.
enum class QDiscretization { Standard, Paper };

// Valid ranges for the learned noise scales, one interval per group.
struct SigmaBounds {
    double vw_min = 0.01, vw_max = 50.0;      // CV velocity-noise scale, m/s
    double jw_min = 0.01, jw_max = 50.0;      // CJ jerk-noise scale, m/s^3
    double r_pos_min = 0.1, r_pos_max = 500.0;  // observation position sigma, m
    double r_vel_min = 0.01, r_vel_max = 50.0;  // observation velocity sigma, m/s

    void validate() const {
        auto chk = [](double lo, double hi, const char* name) {
            if (!(lo > 0.0 && hi > lo))
                throw ConfigError(std::string("invalid sigma bounds for ") + name);
        };
        chk(vw_min, vw_max, "sigma_vw");
        chk(jw_min, jw_max, "sigma_jw");
        chk(r_pos_min, r_pos_max, "sigma_r position");
        chk(r_vel_min, r_vel_max, "sigma_r velocity");
    }
};

// The nine process-noise scales plus six observation sigmas the network
// regenerates each window.
template <typename S>
struct NoiseParamsT {
    std::array<S, 3> sigma_vw{S(1.0), S(1.0), S(1.0)};
    std::array<S, 3> sigma_jw{S(1.0), S(1.0), S(1.0)};
    std::array<S, 6> sigma_r{S(1.0), S(1.0), S(1.0), S(1.0), S(1.0), S(1.0)};

    // flat layout used by the network heads and gradient plumbing:
    // [vw x y z, jw x y z, r x y z vx vy vz]
    static constexpr int kCount = 12;
    S flat(int i) const {
        if (i < 3) return sigma_vw[static_cast<std::size_t>(i)];
        if (i < 6) return sigma_jw[static_cast<std::size_t>(i - 3)];
        return sigma_r[static_cast<std::size_t>(i - 6)];
    }
    void set_flat(int i, S v) {
        if (i < 3)
            sigma_vw[static_cast<std::size_t>(i)] = v;
        else if (i < 6)
            sigma_jw[static_cast<std::size_t>(i - 3)] = v;
        else
            sigma_r[static_cast<std::size_t>(i - 6)] = v;
    }
};

using NoiseParams = NoiseParamsT<double>;

inline void validate(const NoiseParams& p, const SigmaBounds& b) {
    auto chk = [](double v, double lo, double hi, const char* name) {
        if (!(v >= lo && v <= hi))
            throw ConfigError(std::string(name) + " = " + std::to_string(v) + " outside [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
    };
    for (double v : p.sigma_vw) chk(v, b.vw_min, b.vw_max, "sigma_vw");
    for (double v : p.sigma_jw) chk(v, b.jw_min, b.jw_max, "sigma_jw");
    for (int i = 0; i < 3; ++i) chk(p.sigma_r[static_cast<std::size_t>(i)], b.r_pos_min, b.r_pos_max, "sigma_r position");
    for (int i = 3; i < 6; ++i) chk(p.sigma_r[static_cast<std::size_t>(i)], b.r_vel_min, b.r_vel_max, "sigma_r velocity");
}

template <typename S>
struct StateSpaceT {
    MatX<S> F;  // state_dim x state_dim
    MatX<S> Q;  // state_dim x state_dim
    MatX<S> H;  // 6 x state_dim
    double T = 1.0;
    ModelKind kind = ModelKind::CV;
};

using StateSpace = StateSpaceT<double>;

template <typename S>
struct GaussianStateT {
    VecX<S> mean;
    MatX<S> cov;
    ModelKind kind = ModelKind::CV;

    int dim() const { return static_cast<int>(mean.size()); }
};

using GaussianState = GaussianStateT<double>;

namespace detail {
template <typename S>
void check_positive_sigma(const std::array<S, 3>& sigma, const char* what) {
    for (const S& s : sigma)
        if (!(ad::value_of(s) > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
}

// Q assembled per axis: block (r, c) is diagonal with coef(r, c) * sigma_axis^2.
template <typename S, std::size_t NB>
MatX<S> assemble_q(const std::array<std::array<double, NB>, NB>& coef, const std::array<S, 3>& sigma) {
    const int dim = static_cast<int>(NB) * 3;
    MatX<S> q = MatX<S>::Zero(dim, dim);
    for (int a = 0; a < 3; ++a) {
        const S s2 = sigma[static_cast<std::size_t>(a)] * sigma[static_cast<std::size_t>(a)];
        for (std::size_t r = 0; r < NB; ++r)
            for (std::size_t c = 0; c < NB; ++c)
                q(static_cast<int>(r) * 3 + a, static_cast<int>(c) * 3 + a) =
                    S(coef[r][c]) * s2;
    }
    return q;
}
}  // namespace detail

// Constant-velocity model. F keeps velocity constant (the published variant
// scales velocity by T, which cannot describe uniform motion; see README).
template <typename S>
StateSpaceT<S> build_cv(double T, const std::array<S, 3>& sigma_vw,
                        QDiscretization disc = QDiscretization::Standard) {
    if (!(T > 0.0)) throw std::invalid_argument("sample period T must be positive");
    detail::check_positive_sigma(sigma_vw, "sigma_vw");

    StateSpaceT<S> ss;
    ss.kind = ModelKind::CV;
    ss.T = T;
    ss.F = MatX<S>::Identity(6, 6);
    for (int i = 0; i < 3; ++i) ss.F(i, i + 3) = S(T);

    const double t2 = T * T, t3 = t2 * T;
    const double c00 = disc == QDiscretization::Paper ? t3 / 2.0 : t3 / 3.0;
    const std::array<std::array<double, 2>, 2> coef{{{c00, t2 / 2.0}, {t2 / 2.0, T}}};
    ss.Q = detail::assemble_q<S, 2>(coef, sigma_vw);

    ss.H = MatX<S>::Identity(6, 6);
    return ss;
}

// Constant-jerk model, 12-dim state [p v a j].
template <typename S>
StateSpaceT<S> build_cj(double T, const std::array<S, 3>& sigma_jw,
                        QDiscretization disc = QDiscretization::Standard) {
    if (!(T > 0.0)) throw std::invalid_argument("sample period T must be positive");
    detail::check_positive_sigma(sigma_jw, "sigma_jw");

    StateSpaceT<S> ss;
    ss.kind = ModelKind::CJ;
    ss.T = T;
    const double t2 = T * T, t3 = t2 * T, t4 = t3 * T, t5 = t4 * T, t6 = t5 * T, t7 = t6 * T;

    ss.F = MatX<S>::Identity(12, 12);
    const std::array<double, 3> up{T, t2 / 2.0, t3 / 6.0};
    for (int br = 0; br < 4; ++br)
        for (int bc = br + 1; bc < 4; ++bc)
            for (int a = 0; a < 3; ++a)
                ss.F(br * 3 + a, bc * 3 + a) = S(up[static_cast<std::size_t>(bc - br - 1)]);

    const double c02 = disc == QDiscretization::Paper ? t5 / 72.0 : t5 / 30.0;
    const std::array<std::array<double, 4>, 4> coef{{
        {t7 / 252.0, t6 / 72.0, c02, t4 / 24.0},
        {t6 / 72.0, t5 / 20.0, t4 / 8.0, t3 / 6.0},
        {c02, t4 / 8.0, t3 / 3.0, t2 / 2.0},
        {t4 / 24.0, t3 / 6.0, t2 / 2.0, T},
    }};
    ss.Q = detail::assemble_q<S, 4>(coef, sigma_jw);

    ss.H = MatX<S>::Zero(6, 12);
    for (int i = 0; i < 6; ++i) ss.H(i, i) = S(1.0);
    return ss;
}

template <typename S>
StateSpaceT<S> build_model(ModelKind kind, double T, const NoiseParamsT<S>& p,
                           QDiscretization disc = QDiscretization::Standard) {
    return kind == ModelKind::CV ? build_cv<S>(T, p.sigma_vw, disc) : build_cj<S>(T, p.sigma_jw, disc);
}

// R = diag(sigma^2) over [x y z vx vy vz].
template <typename S>
MatX<S> build_r(const std::array<S, 6>& sigma_r) {
    for (const S& s : sigma_r)
        if (!(ad::value_of(s) > 0.0)) throw std::invalid_argument("sigma_r must be positive");
    MatX<S> r = MatX<S>::Zero(6, 6);
    for (int i = 0; i < 6; ++i)
        r(i, i) = sigma_r[static_cast<std::size_t>(i)] * sigma_r[static_cast<std::size_t>(i)];
    return r;
}

// CV -> CJ embedding for IMM mixing: acceleration and jerk means start at
// zero with sigma_aug_sq prior variance and no cross-covariance.
template <typename S>
GaussianStateT<S> lift_state(const GaussianStateT<S>& s, double sigma_aug_sq) {
    if (s.kind != ModelKind::CV || s.dim() != 6)
        throw std::invalid_argument("lift_state expects a 6-dim CV state");
    GaussianStateT<S> out;
    out.kind = ModelKind::CJ;
    out.mean = VecX<S>::Zero(12);
    out.mean.head(6) = s.mean;
    out.cov = MatX<S>::Zero(12, 12);
    out.cov.topLeftCorner(6, 6) = s.cov;
    for (int i = 6; i < 12; ++i) out.cov(i, i) = S(sigma_aug_sq);
    return out;
}

template <typename S>
GaussianStateT<S> drop_state(const GaussianStateT<S>& s) {
    if (s.kind != ModelKind::CJ || s.dim() != 12)
        throw std::invalid_argument("drop_state expects a 12-dim CJ state");
    GaussianStateT<S> out;
    out.kind = ModelKind::CV;
    out.mean = s.mean.head(6);
    out.cov = s.cov.topLeftCorner(6, 6);
    return out;
}

}  // namespace adsbtrack::models
