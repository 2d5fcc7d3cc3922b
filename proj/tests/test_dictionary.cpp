#include <doctest.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "swrecon/dictionary.hpp"
#include "swrecon/errors.hpp"
#include "swrecon/rng.hpp"

using namespace swrecon;

TEST_CASE("library sizes follow the binomial count") {
    CHECK(build_library({3, false, false, false, 2}).size() == 10);
    CHECK(build_library({2, false, false, false, 4}).size() == 15);
    // Poly(3)+sin+cos in d=2: 10 + 2 + 2
    CHECK(build_library({3, false, true, true, 2}).size() == 14);
    CHECK(build_library({0, false, false, false, 5}).size() == 1);
    CHECK(polynomial_block_size(3, 2) == 10);
}

TEST_CASE("feature ordering is graded-lexicographic and stable") {
    auto lib = build_library({3, false, false, false, 2});
    std::vector<std::string> expect = {"1",    "x1",      "x2",      "x1^2", "x1*x2",
                                       "x2^2", "x1^3", "x1^2*x2", "x1*x2^2", "x2^3"};
    CHECK(lib.names() == expect);
    auto lib2 = build_library({3, false, false, false, 2});
    CHECK(lib.names() == lib2.names());
}

TEST_CASE("eval_features at sample points") {
    auto lib = build_library({3, false, false, false, 2});
    Eigen::Vector2d x(2.0, 0.0);
    Eigen::VectorXd f = eval_features(lib, x);
    Eigen::VectorXd expect(10);
    expect << 1, 2, 0, 4, 0, 0, 8, 0, 0, 0;
    CHECK((f - expect).cwiseAbs().maxCoeff() == 0.0);

    auto lib1 = build_library({1, true, false, false, 1});
    Eigen::VectorXd x1(1);
    x1 << 0.0;
    Eigen::VectorXd f1 = eval_features(lib1, x1);
    CHECK(f1.size() == 3);
    CHECK(f1[0] == 1.0);  // constant
    CHECK(f1[1] == 0.0);  // x1
    CHECK(f1[2] == 1.0);  // exp(0)
}

TEST_CASE("exp overflow reports a numeric error") {
    auto lib = build_library({1, true, false, false, 1});
    Eigen::VectorXd x(1);
    x << 1e6;
    CHECK_THROWS_AS(eval_features(lib, x), NumericError);
}

TEST_CASE("eval_rhs on benchmark constants") {
    auto lib = build_library({1, false, false, false, 2});
    CoefficientMatrix theta = CoefficientMatrix::zero(3, 2);
    // Linear2D: A = [[-0.1, 2], [-2, -0.1]]
    theta.theta(1, 0) = -0.1;
    theta.theta(2, 0) = 2.0;
    theta.theta(1, 1) = -2.0;
    theta.theta(2, 1) = -0.1;
    Eigen::VectorXd f = eval_rhs(lib, theta, Eigen::Vector2d(2.0, 0.0));
    CHECK(f[0] == doctest::Approx(-0.2).epsilon(1e-15));
    CHECK(f[1] == doctest::Approx(-4.0).epsilon(1e-15));

    CoefficientMatrix zero = CoefficientMatrix::zero(3, 2);
    CHECK(eval_rhs(lib, zero, Eigen::Vector2d(1.3, -2.2)).cwiseAbs().maxCoeff() == 0.0);

    // Lorenz at (10, -10, 20)
    auto lib3 = build_library({2, false, false, false, 3});
    CoefficientMatrix lorenz = CoefficientMatrix::zero(lib3.size(), 3);
    lorenz.theta(lib3.index_of("x1"), 0) = -10.0;
    lorenz.theta(lib3.index_of("x2"), 0) = 10.0;
    lorenz.theta(lib3.index_of("x1"), 1) = 28.0;
    lorenz.theta(lib3.index_of("x2"), 1) = -1.0;
    lorenz.theta(lib3.index_of("x1*x3"), 1) = -1.0;
    lorenz.theta(lib3.index_of("x1*x2"), 2) = 1.0;
    lorenz.theta(lib3.index_of("x3"), 2) = -8.0 / 3.0;
    Eigen::VectorXd g = eval_rhs(lib3, lorenz, Eigen::Vector3d(10.0, -10.0, 20.0));
    CHECK(g[0] == doctest::Approx(-200.0).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(90.0).epsilon(1e-14));
    CHECK(g[2] == doctest::Approx(-100.0 - 160.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("dot-product identity between eval_rhs and eval_features") {
    auto lib = build_library({2, true, true, false, 3});
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        CoefficientMatrix theta = CoefficientMatrix::zero(lib.size(), 3);
        for (Eigen::Index j = 0; j < theta.rows(); ++j)
            for (Eigen::Index k = 0; k < theta.cols(); ++k) theta.theta(j, k) = rng.uniform(-2, 2);
        Eigen::Vector3d x(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
        Eigen::VectorXd direct = eval_rhs(lib, theta, x);
        Eigen::VectorXd via = theta.theta.transpose() * eval_features(lib, x);
        CHECK((direct - via).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("rhs_jacobian: analytic cases and finite differences") {
    // linear library encodes the matrix itself
    auto lib = build_library({1, false, false, false, 2});
    CoefficientMatrix theta = CoefficientMatrix::zero(3, 2);
    theta.theta(1, 0) = -0.1;
    theta.theta(2, 0) = 2.0;
    theta.theta(1, 1) = -2.0;
    theta.theta(2, 1) = -0.1;
    Eigen::MatrixXd jac = rhs_jacobian(lib, theta, Eigen::Vector2d(0.7, -1.3));
    CHECK(jac(0, 0) == doctest::Approx(-0.1));
    CHECK(jac(0, 1) == doctest::Approx(2.0));
    CHECK(jac(1, 0) == doctest::Approx(-2.0));
    CHECK(jac(1, 1) == doctest::Approx(-0.1));

    // cubic feature: d(x1^3)/dx1 = 3 x1^2 = 12 at x1 = 2
    auto libc = build_library({3, false, false, false, 1});
    CoefficientMatrix tc = CoefficientMatrix::zero(4, 1);
    tc.theta(3, 0) = 1.5;
    Eigen::VectorXd xc(1);
    xc << 2.0;
    CHECK(rhs_jacobian(libc, tc, xc)(0, 0) == doctest::Approx(12.0 * 1.5));

    // random libraries against central differences
    auto libr = build_library({2, true, true, true, 2});
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        CoefficientMatrix th = CoefficientMatrix::zero(libr.size(), 2);
        for (Eigen::Index j = 0; j < th.rows(); ++j)
            for (Eigen::Index k = 0; k < th.cols(); ++k) th.theta(j, k) = rng.uniform(-2, 2);
        Eigen::Vector2d x(rng.uniform(-2, 2), rng.uniform(-2, 2));
        Eigen::MatrixXd j_an = rhs_jacobian(libr, th, x);
        for (int i = 0; i < 2; ++i) {
            Eigen::VectorXd gi = oracles::central_diff(
                [&](const Eigen::VectorXd& xx) { return eval_rhs(libr, th, xx)[i]; }, x, 1e-5);
            double scale = std::max(1.0, j_an.row(i).cwiseAbs().maxCoeff());
            CHECK((j_an.row(i).transpose() - gi).cwiseAbs().maxCoeff() / scale < 1e-6);
        }
    }
}

TEST_CASE("coefficient support tracks nonzeros exactly") {
    CoefficientMatrix theta = CoefficientMatrix::zero(4, 2);
    CHECK(theta.support().empty());
    theta.theta(2, 1) = 0.5;
    theta.theta(0, 0) = -1.0;
    auto s = theta.support();
    REQUIRE(s.size() == 2);
    CHECK(s[0] == std::pair<int, int>{0, 0});
    CHECK(s[1] == std::pair<int, int>{2, 1});
    theta.theta(2, 1) = 0.0;
    CHECK(theta.support().size() == 1);
}

TEST_CASE("library spec json round-trip") {
    LibrarySpec spec{3, true, false, false, 2};
    auto j = spec.to_json();
    CHECK(j["poly_order"] == 3);
    CHECK(j["exp"] == true);
    auto back = LibrarySpec::from_json(j);
    CHECK(back.poly_order == spec.poly_order);
    CHECK(back.include_exp == spec.include_exp);
    CHECK(back.include_sin == spec.include_sin);
    CHECK(back.dim == spec.dim);
}

TEST_CASE("embed_coefficients maps by feature name") {
    auto small = build_library({1, false, false, false, 2});
    auto big = build_library({3, true, false, false, 2});
    CoefficientMatrix theta = CoefficientMatrix::zero(small.size(), 2);
    theta.theta(small.index_of("x2"), 0) = 2.0;
    auto embedded = embed_coefficients(theta, small, big);
    CHECK(embedded.rows() == big.size());
    CHECK(embedded.theta(big.index_of("x2"), 0) == 2.0);
    CHECK(embedded.support().size() == 1);

    auto sin_lib = build_library({1, false, true, false, 2});
    CoefficientMatrix ts = CoefficientMatrix::zero(sin_lib.size(), 2);
    ts.theta(sin_lib.index_of("sin(x1)"), 1) = 1.0;
    CHECK_THROWS_AS(embed_coefficients(ts, sin_lib, big), ConfigError);
}
