#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Core>

#include "adsbtrack/autodiff.hpp"
#include "adsbtrack/errors.hpp"

namespace adsbtrack {

template <typename S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Mat = MatX<double>;
using Vec = VecX<double>;

template <typename S>
void symmetrize(MatX<S>& m) {
    const MatX<S> t = m.transpose();
    m = S(0.5) * (m + t);
}

// Lower-triangular Cholesky factor, or nullopt when a pivot is not strictly
// positive. Hand-rolled so the same code path runs for double and ad::Var.
template <typename S>
std::optional<MatX<S>> cholesky(const MatX<S>& a) {
    using std::sqrt;
    const Eigen::Index n = a.rows();
    MatX<S> l = MatX<S>::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        S d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(ad::value_of(d) > 0.0) || !std::isfinite(ad::value_of(d))) return std::nullopt;
        const S ljj = sqrt(d);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            S s = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

// Solves (L L^T) x = b given the Cholesky factor.
template <typename S>
VecX<S> cholesky_solve(const MatX<S>& l, const VecX<S>& b) {
    const Eigen::Index n = l.rows();
    VecX<S> y = b;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < i; ++k) y(i) -= l(i, k) * y(k);
        y(i) /= l(i, i);
    }
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        for (Eigen::Index k = i + 1; k < n; ++k) y(i) -= l(k, i) * y(k);
        y(i) /= l(i, i);
    }
    return y;
}

// Matrix right-hand side variant: returns X with (L L^T) X = B.
template <typename S>
MatX<S> cholesky_solve_mat(const MatX<S>& l, const MatX<S>& b) {
    MatX<S> x(b.rows(), b.cols());
    for (Eigen::Index c = 0; c < b.cols(); ++c) x.col(c) = cholesky_solve<S>(l, VecX<S>(b.col(c)));
    return x;
}

template <typename S>
S cholesky_log_det(const MatX<S>& l) {
    using std::log;
    S acc(0.0);
    for (Eigen::Index i = 0; i < l.rows(); ++i) acc += log(l(i, i));
    return S(2.0) * acc;
}

inline bool all_finite(const Mat& m) { return m.allFinite(); }
inline bool all_finite(const Vec& v) { return v.allFinite(); }

template <typename S>
bool all_finite_generic(const MatX<S>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (!ad::is_finite_scalar(m(i, j))) return false;
    return true;
}

template <typename S>
bool all_finite_generic(const VecX<S>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (!ad::is_finite_scalar(v(i))) return false;
    return true;
}

template <typename S>
MatX<S> to_scalar_matrix(const Mat& m) {
    MatX<S> out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = S(m(i, j));
    return out;
}

template <typename S>
VecX<S> to_scalar_vector(const Vec& v) {
    VecX<S> out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = S(v(i));
    return out;
}

template <typename S>
Mat value_matrix(const MatX<S>& m) {
    Mat out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = ad::value_of(m(i, j));
    return out;
}

template <typename S>
Vec value_vector(const VecX<S>& v) {
    Vec out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = ad::value_of(v(i));
    return out;
}

}  // namespace adsbtrack
