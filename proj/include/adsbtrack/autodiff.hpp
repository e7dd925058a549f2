#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace adsbtrack::ad {

// Reverse-mode tape. Each node stores at most two parents together with the
// local partial derivatives, precomputed during the forward pass; backward()
// is then a single reverse sweep of fused multiply-adds.
class Tape {
public:
    std::int32_t push(std::int32_t pa, double wa, std::int32_t pb, double wb) {
        const std::int32_t idx = static_cast<std::int32_t>(pa_.size());
        pa_.push_back(pa);
        pb_.push_back(pb);
        wa_.push_back(wa);
        wb_.push_back(wb);
        return idx;
    }

    std::int32_t push_leaf() { return push(-1, 0.0, -1, 0.0); }

    void clear() {
        pa_.clear();
        pb_.clear();
        wa_.clear();
        wb_.clear();
    }

    std::size_t size() const { return pa_.size(); }

    void reserve(std::size_t n) {
        pa_.reserve(n);
        pb_.reserve(n);
        wa_.reserve(n);
        wb_.reserve(n);
    }

    // Seeds d(seed)/d(seed) = 1 and accumulates adjoints for every node. A
    // negative seed denotes a constant loss: every adjoint is zero.
    void backward(std::int32_t seed) {
        const std::size_t n = pa_.size();
        adj_.assign(n, 0.0);
        if (seed < 0) return;
        assert(static_cast<std::size_t>(seed) < n);
        adj_[static_cast<std::size_t>(seed)] = 1.0;
        for (std::int32_t i = static_cast<std::int32_t>(n) - 1; i >= 0; --i) {
            const double a = adj_[static_cast<std::size_t>(i)];
            if (a == 0.0) continue;
            const std::int32_t p = pa_[static_cast<std::size_t>(i)];
            const std::int32_t q = pb_[static_cast<std::size_t>(i)];
            if (p >= 0) adj_[static_cast<std::size_t>(p)] += wa_[static_cast<std::size_t>(i)] * a;
            if (q >= 0) adj_[static_cast<std::size_t>(q)] += wb_[static_cast<std::size_t>(i)] * a;
        }
    }

    double adjoint(std::int32_t idx) const {
        return idx >= 0 ? adj_[static_cast<std::size_t>(idx)] : 0.0;
    }

private:
    std::vector<std::int32_t> pa_, pb_;
    std::vector<double> wa_, wb_;
    std::vector<double> adj_;
};

namespace detail {
inline Tape*& active_tape_slot() {
    thread_local Tape* t = nullptr;
    return t;
}
}  // namespace detail

inline Tape* active_tape() { return detail::active_tape_slot(); }

// Scoped activation; filter code built on Var records onto whichever tape is
// active when the Vars are combined.
class TapeScope {
public:
    explicit TapeScope(Tape& t) : prev_(detail::active_tape_slot()) {
        detail::active_tape_slot() = &t;
    }
    ~TapeScope() { detail::active_tape_slot() = prev_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* prev_;
};

// Tracked scalar. idx == -1 marks a constant; arithmetic between constants
// stays off the tape, so templated code instantiated with Var is cheap on
// constant-only subexpressions.
struct Var {
    double v = 0.0;
    std::int32_t idx = -1;

    Var() = default;
    Var(double value) : v(value) {}  // NOLINT: implicit constant lift is the point
    Var(double value, std::int32_t i) : v(value), idx(i) {}

    static Var leaf(double value) {
        Tape* t = active_tape();
        assert(t != nullptr);
        return Var(value, t->push_leaf());
    }

    double value() const { return v; }
    bool tracked() const { return idx >= 0; }

    Var& operator+=(const Var& o);
    Var& operator-=(const Var& o);
    Var& operator*=(const Var& o);
    Var& operator/=(const Var& o);
    Var operator-() const;
};

namespace detail {
inline Var binary(double value, const Var& a, double da, const Var& b, double db) {
    if (a.idx < 0 && b.idx < 0) return Var(value);
    return Var(value, active_tape()->push(a.idx, da, b.idx, db));
}
inline Var unary(double value, const Var& a, double da) {
    if (a.idx < 0) return Var(value);
    return Var(value, active_tape()->push(a.idx, da, -1, 0.0));
}
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) { return detail::binary(a.v + b.v, a, 1.0, b, 1.0); }
inline Var operator-(const Var& a, const Var& b) { return detail::binary(a.v - b.v, a, 1.0, b, -1.0); }
inline Var operator*(const Var& a, const Var& b) { return detail::binary(a.v * b.v, a, b.v, b, a.v); }
inline Var operator/(const Var& a, const Var& b) {
    const double inv = 1.0 / b.v;
    return detail::binary(a.v * inv, a, inv, b, -a.v * inv * inv);
}

inline Var Var::operator-() const { return detail::unary(-v, *this, -1.0); }
inline Var& Var::operator+=(const Var& o) { return *this = *this + o; }
inline Var& Var::operator-=(const Var& o) { return *this = *this - o; }
inline Var& Var::operator*=(const Var& o) { return *this = *this * o; }
inline Var& Var::operator/=(const Var& o) { return *this = *this / o; }

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }
inline bool operator==(const Var& a, const Var& b) { return a.v == b.v; }
inline bool operator!=(const Var& a, const Var& b) { return a.v != b.v; }

inline Var sqrt(const Var& a) {
    const double s = std::sqrt(a.v);
    return detail::unary(s, a, 0.5 / s);
}
inline Var exp(const Var& a) {
    const double e = std::exp(a.v);
    return detail::unary(e, a, e);
}
inline Var log(const Var& a) { return detail::unary(std::log(a.v), a, 1.0 / a.v); }
inline Var tanh(const Var& a) {
    const double t = std::tanh(a.v);
    return detail::unary(t, a, 1.0 - t * t);
}
inline Var abs(const Var& a) {
    const double s = a.v > 0.0 ? 1.0 : (a.v < 0.0 ? -1.0 : 0.0);
    return detail::unary(std::abs(a.v), a, s);
}
inline Var fabs(const Var& a) { return abs(a); }
// gradient stops below the floor
inline Var clamp_min(const Var& a, double lo) { return a.v >= lo ? a : Var(lo); }
inline double clamp_min(double a, double lo) { return a >= lo ? a : lo; }

inline bool isfinite(const Var& a) { return std::isfinite(a.v); }

// Eigen scalar requirements
inline Var conj(const Var& a) { return a; }
inline Var real(const Var& a) { return a; }
inline Var imag(const Var&) { return Var(0.0); }
inline Var abs2(const Var& a) { return a * a; }

// Uniform access to the numeric value of a scalar that may be double or Var.
inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.v; }

inline bool is_finite_scalar(double x) { return std::isfinite(x); }
inline bool is_finite_scalar(const Var& x) { return std::isfinite(x.v); }

}  // namespace adsbtrack::ad

namespace Eigen {
template <>
struct NumTraits<adsbtrack::ad::Var> : NumTraits<double> {
    typedef adsbtrack::ad::Var Real;
    typedef adsbtrack::ad::Var NonInteger;
    typedef adsbtrack::ad::Var Nested;
    typedef adsbtrack::ad::Var Literal;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 1,
        AddCost = 3,
        MulCost = 3,
    };
};
}  // namespace Eigen
