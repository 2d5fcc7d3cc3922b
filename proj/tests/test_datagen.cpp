#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "swrecon/datagen.hpp"
#include "swrecon/errors.hpp"
#include "swrecon/odesolve.hpp"

using namespace swrecon;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("swrecon_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("benchmark constants match the published systems") {
    auto lorenz = make_benchmark("lorenz");
    auto lib = build_library(lorenz.truth_library);
    CHECK(lorenz.T == 3.0);
    CHECK(lorenz.x0.isApprox(Eigen::Vector3d(10, -10, 20)));
    CHECK(lorenz.theta.theta(lib.index_of("x1"), 0) == -10.0);
    CHECK(lorenz.theta.theta(lib.index_of("x2"), 0) == 10.0);
    CHECK(lorenz.theta.theta(lib.index_of("x1"), 1) == 28.0);
    CHECK(lorenz.theta.theta(lib.index_of("x3"), 2) == doctest::Approx(-8.0 / 3.0));

    auto duffing = make_benchmark("duffing");
    CHECK(duffing.T == 11.0);
    CHECK(duffing.x0.isApprox(Eigen::Vector2d(0, 2)));
    auto dlib = build_library(duffing.truth_library);
    CHECK(duffing.theta.theta(dlib.index_of("x2"), 0) == 1.0);
    CHECK(duffing.theta.theta(dlib.index_of("x1"), 1) == -0.1);
    CHECK(duffing.theta.theta(dlib.index_of("x2"), 1) == -0.2);
    CHECK(duffing.theta.theta(dlib.index_of("x1^3"), 1) == -1.0);

    auto linear = make_benchmark("linear2d");
    CHECK(linear.T == 10.0);
    CHECK(linear.x0.isApprox(Eigen::Vector2d(2, 0)));
    auto llib = build_library(linear.truth_library);
    CHECK(linear.theta.theta(llib.index_of("x1"), 0) == -0.1);
    CHECK(linear.theta.theta(llib.index_of("x2"), 0) == 2.0);

    CHECK_THROWS_AS(make_benchmark("vanderpol"), ConfigError);
}

TEST_CASE("every benchmark synthesizes and stays bounded") {
    for (const auto& name : benchmark_names()) {
        auto bench = make_benchmark(name);
        auto piece = synthesize(bench, 50, bench.default_dist(), 0.0, 3);
        CHECK(piece.points.rows() == 50);
        CHECK(piece.points.allFinite());
        CHECK(piece.true_times.has_value());
    }
}

TEST_CASE("noise-free points lie on the fine-step reference trajectory") {
    auto bench = make_benchmark("linear2d");
    auto piece = synthesize(bench, 200, bench.default_dist(), 0.0, 17);
    auto lib = build_library(bench.truth_library);

    // reference: a much finer solve evaluated at exactly the hidden instants
    std::vector<double> sorted = *piece.true_times;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> grid_times{0.0};
    for (double t : sorted)
        if (t > 0.0) grid_times.push_back(t);
    auto grid = SolveGrid::at_times(grid_times, 1, bench.T / 20000.0);
    auto ref = rk4_solve(lib, bench.theta, bench.x0, grid);

    for (Eigen::Index i = 0; i < piece.points.rows(); ++i) {
        double t = (*piece.true_times)[static_cast<std::size_t>(i)];
        auto it = std::lower_bound(grid.times.begin(), grid.times.end(), t);
        auto idx = static_cast<std::size_t>(it - grid.times.begin());
        CHECK((piece.points.row(i).transpose() - ref.states[idx]).norm() < 1e-8);
    }
}

TEST_CASE("rms row norm and the noise scale") {
    Eigen::MatrixXd pts(2, 2);
    pts << 3, 4, 3, 4;  // every row norm 5
    CHECK(rms_row_norm(pts) == doctest::Approx(5.0));

    // empirical noise sd within 2% of sigma for published ratios
    auto bench = make_benchmark("linear2d");
    auto lib = build_library(bench.truth_library);
    for (double ratio : {0.01, 0.03, 0.05}) {
        auto clean = synthesize(bench, 100000, bench.default_dist(), 0.0, 5);
        auto noisy = synthesize(bench, 100000, bench.default_dist(), ratio, 5);
        double sigma = ratio * rms_row_norm(clean.points);
        Eigen::MatrixXd diff = noisy.points - clean.points;
        double sd = std::sqrt(diff.array().square().sum() / static_cast<double>(diff.size()));
        CHECK(std::abs(sd - sigma) / sigma < 0.02);
    }
}

TEST_CASE("synthesis is deterministic per seed") {
    auto bench = make_benchmark("cubic2d");
    auto a = synthesize(bench, 64, bench.default_dist(), 0.01, 11);
    auto b = synthesize(bench, 64, bench.default_dist(), 0.01, 11);
    CHECK((a.points - b.points).cwiseAbs().maxCoeff() == 0.0);
    CHECK(*a.true_times == *b.true_times);
    auto c = synthesize(bench, 64, bench.default_dist(), 0.01, 12);
    CHECK((a.points - c.points).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("dataset round-trip is bit-exact and hides labels in the sidecar") {
    TempDir tmp;
    auto bench = make_benchmark("linear3d");
    auto piece = synthesize(bench, 50, bench.default_dist(), 0.02, 9);
    const std::string path = (tmp.path / "data.csv").string();
    write_dataset(piece, path);

    // main file carries no time column
    std::ifstream main_file(path);
    std::string line;
    std::getline(main_file, line);
    CHECK(line.rfind("# {", 0) == 0);
    std::getline(main_file, line);
    CHECK(line == "x1,x2,x3");

    auto back = read_dataset(path);
    CHECK((back.points - piece.points).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.x_init.isApprox(piece.x_init));
    CHECK(back.T_piece == piece.T_piece);
    REQUIRE(back.true_times.has_value());
    CHECK(*back.true_times == *piece.true_times);

    // dropping the sidecar leaves labels absent
    fs::remove(times_sidecar_path(path));
    auto unlabeled = read_dataset(path);
    CHECK(!unlabeled.true_times.has_value());
}

TEST_CASE("malformed dataset files raise parse errors with line info") {
    TempDir tmp;
    const std::string path = (tmp.path / "bad.csv").string();
    {
        std::ofstream out(path);
        out << "# {\"format\":1,\"x_init\":[1.0,2.0],\"t0\":0,\"T\":1,\"dist\":{\"kind\":\"uniform\",\"a\":0,\"b\":1}}\n";
        out << "x1\n";  // header dim mismatch vs 2-entry x_init
        out << "0.5\n";
    }
    CHECK_THROWS_AS(read_dataset(path), ConfigError);
    try {
        read_dataset(path);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }

    const std::string path2 = (tmp.path / "bad2.csv").string();
    {
        std::ofstream out(path2);
        out << "# {\"format\":1,\"x_init\":[1.0],\"t0\":0,\"T\":1,\"dist\":{\"kind\":\"uniform\",\"a\":0,\"b\":1}}\n";
        out << "x1\n0.5\nnot_a_number\n";
    }
    CHECK_THROWS_AS(read_dataset(path2), ConfigError);
}
