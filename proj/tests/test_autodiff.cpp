#include <catch2/catch_amalgamated.hpp>

#include "adsbtrack/autodiff.hpp"
#include "adsbtrack/linalg.hpp"
#include "adsbtrack/rng.hpp"

using namespace adsbtrack;
using ad::Tape;
using ad::TapeScope;
using ad::Var;

namespace {

// central finite difference of a scalar function of n inputs
template <typename F>
double fd(F&& f, std::vector<double> x, std::size_t i, double h = 1e-6) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    return (f(xp) - f(xm)) / (2.0 * h);
}

template <typename F>
void check_gradients(F&& fv, const std::vector<double>& x0, double tol = 1e-7) {
    Tape tape;
    TapeScope scope(tape);
    std::vector<Var> vars;
    for (double v : x0) vars.push_back(Var::leaf(v));
    Var y = fv(vars);
    tape.backward(y.idx);

    auto fd_eval = [&](const std::vector<double>& x) {
        Tape t2;
        TapeScope s2(t2);
        std::vector<Var> vs;
        for (double v : x) vs.push_back(Var::leaf(v));
        return fv(vs).value();
    };
    for (std::size_t i = 0; i < x0.size(); ++i) {
        const double g = tape.adjoint(vars[i].idx);
        const double gfd = fd(fd_eval, x0, i);
        REQUIRE_THAT(g, Catch::Matchers::WithinAbs(gfd, tol) || Catch::Matchers::WithinRel(gfd, 1e-5));
    }
}

}  // namespace

TEST_CASE("basic arithmetic gradients match finite differences") {
    check_gradients([](const std::vector<Var>& v) { return v[0] * v[1] + v[0] / v[2] - v[1]; },
                    {1.3, -0.7, 2.1});
    check_gradients([](const std::vector<Var>& v) { return (v[0] + 2.0) * (3.0 - v[1]) / (v[2] * v[2]); },
                    {0.4, 1.9, -1.2});
}

TEST_CASE("transcendental gradients") {
    using ad::exp;
    using ad::log;
    using ad::sqrt;
    using ad::tanh;
    check_gradients([](const std::vector<Var>& v) { return exp(v[0]) * tanh(v[1]) + log(v[2]) * sqrt(v[3]); },
                    {0.3, -0.9, 2.5, 1.7});
}

TEST_CASE("abs subgradient and clamp") {
    Tape tape;
    TapeScope scope(tape);
    Var x = Var::leaf(-2.0);
    Var y = ad::abs(x);
    tape.backward(y.idx);
    CHECK(tape.adjoint(x.idx) == -1.0);

    Tape t2;
    TapeScope s2(t2);
    Var a = Var::leaf(3.0);
    Var c = ad::clamp_min(a * a, 100.0);  // clamped: gradient blocked
    CHECK(c.value() == 100.0);
    t2.backward(c.idx);
    CHECK(t2.adjoint(a.idx) == 0.0);
}

TEST_CASE("constants stay off the tape") {
    Tape tape;
    TapeScope scope(tape);
    const std::size_t before = tape.size();
    Var c = Var(2.0) * Var(3.0) + Var(1.0);
    CHECK(c.value() == 7.0);
    CHECK(tape.size() == before);
}

TEST_CASE("seeding twice the loss doubles every adjoint") {
    Tape tape;
    TapeScope scope(tape);
    Var x = Var::leaf(0.8), y = Var::leaf(-1.1);
    Var f = x * y + ad::tanh(x) / y;
    Var g = Var(2.0) * f;
    tape.backward(f.idx);
    const double dx = tape.adjoint(x.idx), dy = tape.adjoint(y.idx);
    tape.backward(g.idx);
    CHECK(tape.adjoint(x.idx) == 2.0 * dx);
    CHECK(tape.adjoint(y.idx) == 2.0 * dy);
}

TEST_CASE("Eigen matrix products on Var differentiate correctly") {
    Rng rng(11);
    std::vector<double> x0(9);
    for (auto& v : x0) v = rng.uniform(-2.0, 2.0);
    check_gradients(
        [](const std::vector<Var>& v) {
            MatX<Var> a(2, 2), b(2, 2);
            a << v[0], v[1], v[2], v[3];
            b << v[4], v[5], v[6], v[7];
            MatX<Var> c = a * b * a.transpose();
            return c(0, 0) * v[8] + c(1, 1);
        },
        x0);
}

TEST_CASE("Cholesky solve and log-determinant gradients") {
    // SPD parameterization A = L L^T + I keeps the factorization inside its domain
    check_gradients(
        [](const std::vector<Var>& v) {
            MatX<Var> l = MatX<Var>::Zero(3, 3);
            l(0, 0) = v[0];
            l(1, 0) = v[1];
            l(1, 1) = v[2];
            l(2, 0) = v[3];
            l(2, 1) = v[4];
            l(2, 2) = v[5];
            MatX<Var> a = l * l.transpose() + MatX<Var>::Identity(3, 3);
            VecX<Var> b(3);
            b << v[6], v[7], v[8];
            auto chol = cholesky<Var>(a);
            REQUIRE(chol.has_value());
            VecX<Var> x = cholesky_solve<Var>(*chol, b);
            Var quad(0.0);
            for (int i = 0; i < 3; ++i) quad += b(i) * x(i);
            return quad + cholesky_log_det<Var>(*chol);
        },
        {0.9, 0.2, 1.4, -0.5, 0.3, 1.1, 0.7, -0.6, 0.4});
}

TEST_CASE("tape reuse after clear") {
    Tape tape;
    for (int round = 0; round < 3; ++round) {
        tape.clear();
        TapeScope scope(tape);
        Var x = Var::leaf(1.0 + round);
        Var y = x * x;
        tape.backward(y.idx);
        CHECK(tape.adjoint(x.idx) == 2.0 * (1.0 + round));
    }
}
