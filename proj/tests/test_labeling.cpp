#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "swrecon/errors.hpp"
#include "swrecon/labeling.hpp"
#include "swrecon/odesolve.hpp"
#include "swrecon/rng.hpp"

using namespace swrecon;

TEST_CASE("points generated at grid instants recover labels exactly") {
    auto bench = make_benchmark("linear2d");
    auto lib = build_library(bench.truth_library);
    const int mg = 400;
    auto sol = dense_solve(lib, bench.theta, bench.x0, 0.0, bench.T, mg - 1);
    SolveGrid grid = SolveGrid::uniform(0.0, bench.T, mg - 1);

    ObservationPiece piece;
    piece.x_init = bench.x0;
    piece.t0 = 0.0;
    piece.T_piece = bench.T;
    piece.dist = bench.default_dist();
    std::vector<int> rows = {3, 77, 150, 288, 399};
    piece.points.resize(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        piece.points.row(static_cast<Eigen::Index>(i)) = sol.states[static_cast<std::size_t>(rows[i])].transpose();

    auto labels = reconstruct_times(piece, lib, bench.theta, mg);
    for (std::size_t i = 0; i < rows.size(); ++i)
        CHECK(labels[i] == doctest::Approx(grid.times[static_cast<std::size_t>(rows[i])]).epsilon(1e-12));
}

TEST_CASE("tie between two grid states resolves to the earlier time") {
    // f = 0 so every grid state coincides: everything projects to t0
    auto lib = build_library({0, false, false, false, 1});
    CoefficientMatrix zero = CoefficientMatrix::zero(1, 1);
    ObservationPiece piece;
    piece.x_init = Eigen::VectorXd::Ones(1);
    piece.t0 = 0.0;
    piece.T_piece = 1.0;
    piece.dist = TimeDistribution::uniform(0.0, 1.0);
    piece.points = Eigen::MatrixXd::Ones(3, 1) * 2.0;
    auto labels = reconstruct_times(piece, lib, zero, 11);
    for (double t : labels) CHECK(t == 0.0);
}

TEST_CASE("reconstruct_times commutes with point permutation") {
    auto bench = make_benchmark("cubic2d");
    auto lib = build_library(bench.truth_library);
    auto piece = synthesize(bench, 100, TimeDistribution::uniform(0.0, 3.0), 0.0, 5);
    auto labels = reconstruct_times(piece, lib, bench.theta, 500);

    ObservationPiece rev = piece;
    rev.points = piece.points.colwise().reverse().eval();
    auto rlabels = reconstruct_times(rev, lib, bench.theta, 500);
    for (std::size_t i = 0; i < labels.size(); ++i)
        CHECK(labels[i] == rlabels[labels.size() - 1 - i]);
}

TEST_CASE("surrogate projection variant works on an affine curve") {
    MlpSurrogate net(0, 0, 2, 1);
    net.weights()[0] << 1.0, -1.0;
    net.biases()[0] << 0.0, 1.0;  // x(t) = (t, 1 - t)
    ObservationPiece piece;
    piece.x_init = Eigen::Vector2d(0.0, 1.0);
    piece.t0 = 0.0;
    piece.T_piece = 1.0;
    piece.dist = TimeDistribution::uniform(0.0, 1.0);
    piece.points.resize(2, 2);
    piece.points << 0.5, 0.5, 0.25, 0.75;
    auto labels = reconstruct_times_net(piece, net, 101);
    CHECK(labels[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(labels[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("rmae_solution basics") {
    Eigen::MatrixXd truth(3, 2);
    truth << 1, -2, 0.5, 4, -1, 2;
    CHECK(rmae_solution(truth, truth) == 0.0);
    CHECK(rmae_solution(1.1 * truth, truth) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(rmae_solution(truth, Eigen::MatrixXd::Zero(3, 2)), NumericError);
}

TEST_CASE("e_para counts spurious terms in the numerator") {
    CoefficientMatrix truth = CoefficientMatrix::zero(3, 1);
    truth.theta(0, 0) = 2.0;
    truth.theta(1, 0) = -2.0;
    CHECK(e_para(truth, truth) == 0.0);
    CoefficientMatrix est = truth;
    est.theta(2, 0) = 0.4;
    CHECK(e_para(est, truth) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(e_para(truth, CoefficientMatrix::zero(3, 1)), NumericError);
}

TEST_CASE("e_time formula and scale behavior") {
    std::vector<double> t{1, 2, 3, 4};
    CHECK(e_time(t, t) == 0.0);
    std::vector<double> off{1.5, 2.5, 3.5, 4.5};
    CHECK(e_time(off, t) == doctest::Approx(2.0 / 10.0).epsilon(1e-12));
    // doubling true labels halves the relative error of a fixed offset
    std::vector<double> t2{2, 4, 6, 8}, off2{2.5, 4.5, 6.5, 8.5};
    CHECK(e_time(off2, t2) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK_THROWS_AS(e_time({0.0}, {0.0}), NumericError);
    CHECK_THROWS_AS(e_time({1.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("constant offset on uniform labels matches the delta/(T/2) estimate") {
    Rng rng(4);
    const double T = 10.0, delta = 0.05;
    std::vector<double> t_true(20000), t_hat(20000);
    for (std::size_t i = 0; i < t_true.size(); ++i) {
        t_true[i] = rng.uniform(0.0, T);
        t_hat[i] = t_true[i] + delta;
    }
    CHECK(e_time(t_hat, t_true) == doctest::Approx(delta / (T / 2)).epsilon(0.02));
}

TEST_CASE("monotone consistency: reconstructed label ranks track the truth") {
    auto bench = make_benchmark("linear2d");
    auto lib = build_library(bench.truth_library);
    // short window avoids trajectory self-approach
    auto piece = synthesize(bench, 400, TimeDistribution::uniform(0.0, 2.5), 0.0, 19);
    auto labels = reconstruct_times(piece, lib, bench.theta, 2000);
    CHECK(oracles::spearman(labels, *piece.true_times) > 0.99);
}

TEST_CASE("assemble_trajectory stitches per-piece windows") {
    auto bench = make_benchmark("linear2d");
    auto lib = build_library(bench.truth_library);

    // evaluation instants chosen on the reference grid so states compare
    // at exactly the same times
    SolveGrid eval = SolveGrid::uniform(0.0, bench.T, 100);
    auto reference = rk4_solve(lib, bench.theta, bench.x0, SolveGrid{eval.times, 40, 0.0});

    std::vector<ObservationPiece> pieces(2);
    pieces[0].x_init = bench.x0;
    pieces[0].t0 = 0.0;
    pieces[0].T_piece = bench.T / 2;
    pieces[0].dist = TimeDistribution::uniform(0.0, bench.T / 2);
    pieces[0].points = Eigen::MatrixXd::Zero(1, 2);
    pieces[1].x_init = reference.states[50];  // true state at T/2
    pieces[1].t0 = bench.T / 2;
    pieces[1].T_piece = bench.T / 2;
    pieces[1].dist = TimeDistribution::uniform(bench.T / 2, bench.T);
    pieces[1].points = Eigen::MatrixXd::Zero(1, 2);

    Eigen::MatrixXd est = assemble_trajectory(pieces, lib, bench.theta, eval.times);
    for (std::size_t i = 0; i < eval.times.size(); ++i)
        CHECK((est.row(static_cast<Eigen::Index>(i)).transpose() - reference.states[i]).norm() <
              1e-6);
}
