#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "swrecon/datagen.hpp"
#include "swrecon/errors.hpp"
#include "swrecon/odesolve.hpp"
#include "swrecon/rng.hpp"

using namespace swrecon;

namespace {

CoefficientMatrix linear2d_theta(const CandidateLibrary& lib) {
    CoefficientMatrix theta = CoefficientMatrix::zero(lib.size(), 2);
    theta.theta(lib.index_of("x1"), 0) = -0.1;
    theta.theta(lib.index_of("x2"), 0) = 2.0;
    theta.theta(lib.index_of("x1"), 1) = -2.0;
    theta.theta(lib.index_of("x2"), 1) = -0.1;
    return theta;
}

}  // namespace

TEST_CASE("zero rhs keeps the state constant") {
    auto lib = build_library({1, false, false, false, 2});
    CoefficientMatrix zero = CoefficientMatrix::zero(lib.size(), 2);
    Eigen::Vector2d x0(3.0, -4.0);
    auto res = rk4_solve(lib, zero, x0, SolveGrid::at_times({0.0, 0.4, 1.1, 2.7}, 3));
    for (const auto& s : res.states) CHECK((s - x0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar decay matches the closed form") {
    auto lib = build_library({1, false, false, false, 1});
    CoefficientMatrix theta = CoefficientMatrix::zero(2, 1);
    theta.theta(1, 0) = -1.0;  // xdot = -x
    Eigen::VectorXd x0(1);
    x0 << 1.0;
    auto res = rk4_solve(lib, theta, x0, SolveGrid::at_times({0.0, 1.0}, 100));
    CHECK(std::abs(res.states[1][0] - std::exp(-1.0)) <= 1e-9);
}

TEST_CASE("global order four against the matrix exponential") {
    auto lib = build_library({1, false, false, false, 2});
    auto theta = linear2d_theta(lib);
    Eigen::Matrix2d a;
    a << -0.1, 2.0, -2.0, -0.1;
    Eigen::Vector2d x0(2.0, 0.0);
    Eigen::Vector2d truth = oracles::expm(a * 1.0) * x0;

    std::vector<double> errs;
    for (int n : {8, 16, 32, 64}) {
        auto res = rk4_solve(lib, theta, x0, SolveGrid::at_times({0.0, 1.0}, n));
        errs.push_back((res.states[1] - truth).norm());
    }
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
        double order = std::log2(errs[i] / errs[i + 1]);
        CHECK(order > 3.5);
        CHECK(order < 4.5);
    }
}

TEST_CASE("dense_solve agrees with rk4_solve and self-converges") {
    auto lib = build_library({1, false, false, false, 2});
    auto theta = linear2d_theta(lib);
    Eigen::Vector2d x0(2.0, 0.0);
    auto d1 = dense_solve(lib, theta, x0, 0.0, 1.0, 1);
    auto r1 = rk4_solve(lib, theta, x0, SolveGrid::at_times({0.0, 1.0}, 1));
    CHECK((d1.states[1] - r1.states[1]).cwiseAbs().maxCoeff() == 0.0);

    // Lorenz self-convergence
    auto bench = make_benchmark("lorenz");
    auto lorenz_lib = build_library(bench.truth_library);
    auto coarse = dense_solve(lorenz_lib, bench.theta, bench.x0, 0.0, 3.0, 2000);
    auto fine = dense_solve(lorenz_lib, bench.theta, bench.x0, 0.0, 3.0, 4000);
    CHECK((coarse.states.back() - fine.states.back()).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
    auto bench = make_benchmark("lorenz");
    auto lib = build_library(bench.truth_library);
    auto a = dense_solve(lib, bench.theta, bench.x0, 0.0, 2.0, 500);
    auto b = dense_solve(lib, bench.theta, bench.x0, 0.0, 2.0, 500);
    for (std::size_t i = 0; i < a.states.size(); ++i)
        CHECK((a.states[i] - b.states[i]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("blow-up guard aborts with the offending instant") {
    auto lib = build_library({1, false, false, false, 1});
    CoefficientMatrix theta = CoefficientMatrix::zero(2, 1);
    theta.theta(1, 0) = 40.0;  // xdot = 40 x explodes past 1e6 quickly
    Eigen::VectorXd x0(1);
    x0 << 1.0;
    CHECK_THROWS_AS(rk4_solve(lib, theta, x0, SolveGrid::at_times({0.0, 2.0}, 200)), BlowUpError);
    try {
        rk4_solve(lib, theta, x0, SolveGrid::at_times({0.0, 2.0}, 200));
    } catch (const BlowUpError& e) {
        CHECK(e.time > 0.0);
        CHECK(e.time <= 2.0);
    }
}

TEST_CASE("backprop_tape: zero upstream gives zero gradient") {
    auto lib = build_library({1, false, false, false, 2});
    auto theta = linear2d_theta(lib);
    Eigen::Vector2d x0(2.0, 0.0);
    SolveTape tape;
    auto res = rk4_solve(lib, theta, x0, SolveGrid::at_times({0.0, 0.5, 1.0}, 4), &tape);
    std::vector<Eigen::VectorXd> grads(res.states.size(), Eigen::VectorXd::Zero(2));
    CHECK(backprop_tape(lib, theta, tape, grads).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backprop_tape matches the hand-expanded single RK4 step") {
    // xdot = p x, one step of size h, L = x(h):
    // x(h) = x0 (1 + hp + (hp)^2/2 + (hp)^3/6 + (hp)^4/24)
    // dL/dp = x0 h (1 + hp + (hp)^2/2 + (hp)^3/6)
    auto lib = build_library({1, false, false, false, 1});
    CoefficientMatrix theta = CoefficientMatrix::zero(2, 1);
    const double p = 0.8, h = 0.3;
    theta.theta(1, 0) = p;
    Eigen::VectorXd x0(1);
    x0 << 1.7;
    SolveTape tape;
    auto res = rk4_solve(lib, theta, x0, SolveGrid::at_times({0.0, h}, 1), &tape);
    const double hp = h * p;
    CHECK(res.states[1][0] ==
          doctest::Approx(x0[0] * (1 + hp + hp * hp / 2 + hp * hp * hp / 6 + hp * hp * hp * hp / 24))
              .epsilon(1e-14));
    std::vector<Eigen::VectorXd> grads(2, Eigen::VectorXd::Zero(1));
    grads[1][0] = 1.0;
    Eigen::MatrixXd g = backprop_tape(lib, theta, tape, grads);
    double expect = x0[0] * h * (1 + hp + hp * hp / 2 + hp * hp * hp / 6);
    CHECK(g(1, 0) == doctest::Approx(expect).epsilon(1e-13));
    CHECK(g(0, 0) != 0.0);  // constant-feature channel also receives gradient
}

TEST_CASE("backprop_tape agrees with finite differences over theta") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed * 7919 + 13);
        auto lib = build_library({2, false, false, false, 2});
        CoefficientMatrix theta = CoefficientMatrix::zero(lib.size(), 2);
        for (Eigen::Index j = 0; j < theta.rows(); ++j)
            for (Eigen::Index k = 0; k < theta.cols(); ++k) theta.theta(j, k) = rng.uniform(-0.5, 0.5);
        Eigen::Vector2d x0(rng.uniform(-1, 1), rng.uniform(-1, 1));
        SolveGrid grid = SolveGrid::at_times({0.0, 0.3, 0.8, 1.2}, 3);

        // random linear functional over all states
        std::vector<Eigen::VectorXd> lg;
        for (int i = 0; i < 4; ++i)
            lg.push_back(Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)));

        SolveTape tape;
        rk4_solve(lib, theta, x0, grid, &tape);
        Eigen::MatrixXd analytic = backprop_tape(lib, theta, tape, lg);

        Eigen::VectorXd flat(theta.rows() * theta.cols());
        for (Eigen::Index j = 0; j < theta.rows(); ++j)
            for (Eigen::Index k = 0; k < theta.cols(); ++k) flat[j * theta.cols() + k] = theta.theta(j, k);
        auto loss = [&](const Eigen::VectorXd& fl) {
            CoefficientMatrix th = CoefficientMatrix::zero(lib.size(), 2);
            for (Eigen::Index j = 0; j < th.rows(); ++j)
                for (Eigen::Index k = 0; k < th.cols(); ++k) th.theta(j, k) = fl[j * th.cols() + k];
            auto res = rk4_solve(lib, th, x0, grid);
            double acc = 0.0;
            for (std::size_t i = 0; i < res.states.size(); ++i) acc += lg[i].dot(res.states[i]);
            return acc;
        };
        Eigen::VectorXd fd = oracles::central_diff(loss, flat, 1e-5);
        for (Eigen::Index j = 0; j < theta.rows(); ++j)
            for (Eigen::Index k = 0; k < theta.cols(); ++k) {
                double a = analytic(j, k), b = fd[j * theta.cols() + k];
                CHECK(std::abs(a - b) / std::max(1.0, std::abs(b)) < 1e-5);
            }
    }
}

TEST_CASE("max_step policy subdivides long intervals") {
    SolveGrid g = SolveGrid::at_times({0.0, 0.05, 1.0}, 1, 0.1);
    CHECK(g.substeps_for(0) == 1);
    CHECK(g.substeps_for(1) == 10);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(SolveGrid::at_times({0.0, 0.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(SolveGrid::at_times({}), ConfigError);
    CHECK_THROWS_AS(SolveGrid::at_times({0.0, 1.0}, 0), ConfigError);
}
