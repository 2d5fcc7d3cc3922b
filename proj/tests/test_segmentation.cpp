#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "swrecon/datagen.hpp"
#include "swrecon/errors.hpp"
#include "swrecon/rng.hpp"
#include "swrecon/segmentation.hpp"

using namespace swrecon;

TEST_CASE("two well-separated blobs split perfectly") {
    Rng rng(3);
    Eigen::MatrixXd pts(60, 2);
    for (int i = 0; i < 30; ++i) {
        pts(i, 0) = rng.normal() * 0.1;
        pts(i, 1) = rng.normal() * 0.1;
        pts(30 + i, 0) = 10.0 + rng.normal() * 0.1;
        pts(30 + i, 1) = rng.normal() * 0.1;
    }
    auto labels = agglomerative_cluster(pts, 2);
    std::set<int> left(labels.begin(), labels.begin() + 30);
    std::set<int> right(labels.begin() + 30, labels.end());
    CHECK(left.size() == 1);
    CHECK(right.size() == 1);
    CHECK(*left.begin() != *right.begin());
}

TEST_CASE("L = n yields singletons, invalid L throws") {
    Eigen::MatrixXd pts(5, 1);
    pts << 0, 1, 2, 3, 4;
    auto labels = agglomerative_cluster(pts, 5);
    std::set<int> distinct(labels.begin(), labels.end());
    CHECK(distinct.size() == 5);
    CHECK_THROWS_AS(agglomerative_cluster(pts, 6), ConfigError);
}

TEST_CASE("split_distribution boundaries") {
    auto u = TimeDistribution::uniform(0.0, 10.0);
    auto w = split_distribution(u, {10, 90}, 0.0);
    REQUIRE(w.size() == 2);
    CHECK(w[0].t0 == 0.0);
    CHECK(w[0].T == doctest::Approx(1.0));
    CHECK(w[1].t0 == doctest::Approx(1.0));
    CHECK(w[1].T == doctest::Approx(9.0));

    // equal counts, uniform -> equal windows
    auto eq = split_distribution(u, {25, 25, 25, 25}, 0.0);
    for (const auto& win : eq) CHECK(win.T == doctest::Approx(2.5));

    // symmetric truncated normal splits at the midpoint
    auto tn = TimeDistribution::truncated_normal(5.0, 10.0 / 3.0, 0.0, 10.0);
    auto half = split_distribution(tn, {500, 500}, 0.0);
    CHECK(half[0].T == doctest::Approx(5.0).epsilon(1e-9));

    // windows tile the support exactly
    double total = 0.0;
    for (const auto& win : eq) total += win.T;
    CHECK(total == 10.0);

    CHECK_THROWS_AS(split_distribution(u, {10, 0, 90}, 0.0), SegmentationError);
}

TEST_CASE("three collinear segments order left to right") {
    // 3 contiguous segments on a line, x0 at the left end
    Eigen::MatrixXd pts(90, 2);
    int k = 0;
    for (int seg = 0; seg < 3; ++seg)
        for (int i = 0; i < 30; ++i, ++k) {
            pts(k, 0) = seg * 10.0 + i * (10.0 / 30.0);
            pts(k, 1) = 0.0;
        }
    std::vector<int> labels(90);
    for (int i = 0; i < 90; ++i) labels[i] = (i / 30 + 1) % 3;  // scrambled ids
    auto ordered = order_and_anchor(pts, labels, Eigen::Vector2d(0.0, 0.0), 1.0);
    REQUIRE(ordered.member_rows.size() == 3);
    CHECK(ordered.member_rows[0].front() == 0);
    CHECK(ordered.member_rows[1].front() == 30);
    CHECK(ordered.member_rows[2].front() == 60);
}

TEST_CASE("anchoring and ordering failures raise segmentation errors") {
    Eigen::MatrixXd pts(20, 2);
    for (int i = 0; i < 10; ++i) {
        pts(i, 0) = i * 0.1;
        pts(i, 1) = 0.0;
        pts(10 + i, 0) = 100.0 + i * 0.1;  // far disconnected arc
        pts(10 + i, 1) = 0.0;
    }
    std::vector<int> labels(20);
    for (int i = 0; i < 20; ++i) labels[i] = i / 10;
    // x0 nowhere near any cluster
    CHECK_THROWS_AS(order_and_anchor(pts, labels, Eigen::Vector2d(50.0, 50.0), 0.5),
                    SegmentationError);
    // chain break: anchored at the left arc, nothing reaches the right one
    try {
        order_and_anchor(pts, labels, Eigen::Vector2d(0.0, 0.0), 0.5);
        FAIL("expected ordering error");
    } catch (const SegmentationError& e) {
        CHECK(std::string(e.what()).find("orphaned") != std::string::npos);
    }
}

TEST_CASE("single cluster segments into one piece headed at x0") {
    auto bench = make_benchmark("linear2d");
    auto data = synthesize(bench, 300, bench.default_dist(), 0.0, 21);
    SegmentationOptions opt;
    opt.clusters = 1;
    auto seg = segment_trajectory(data, opt);
    REQUIRE(seg.pieces.size() == 1);
    CHECK(seg.pieces[0].points.rows() == 300);
    CHECK(seg.pieces[0].x_init.isApprox(bench.x0));
    CHECK(seg.pieces[0].t0 == 0.0);
    CHECK(seg.pieces[0].T_piece == doctest::Approx(bench.T));
}

TEST_CASE("cubic2d pieces are time-contiguous and ordered") {
    auto bench = make_benchmark("cubic2d");
    auto data = synthesize(bench, 2000, bench.default_dist(), 0.0, 8);
    SegmentationOptions opt;
    opt.clusters = 8;
    auto seg = segment_trajectory(data, opt);
    REQUIRE(seg.pieces.size() == 8);

    // partition: disjoint and exhaustive
    std::size_t total = 0;
    for (const auto& piece : seg.pieces) total += static_cast<std::size_t>(piece.points.rows());
    CHECK(total == 2000);

    // hidden time ranges overlap pairwise by < 2% of T and order by mean time
    std::vector<std::pair<double, double>> ranges;
    std::vector<double> means;
    for (const auto& piece : seg.pieces) {
        REQUIRE(piece.true_times.has_value());
        double lo = 1e300, hi = -1e300, mean = 0;
        for (double t : *piece.true_times) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
            mean += t;
        }
        ranges.emplace_back(lo, hi);
        means.push_back(mean / static_cast<double>(piece.true_times->size()));
    }
    CHECK(std::is_sorted(means.begin(), means.end()));
    for (std::size_t a = 0; a < ranges.size(); ++a)
        for (std::size_t b = a + 1; b < ranges.size(); ++b) {
            double overlap = std::min(ranges[a].second, ranges[b].second) -
                             std::max(ranges[a].first, ranges[b].first);
            CHECK(overlap < 0.02 * bench.T);
        }

    // count rule: piece boundaries follow cumulative fractions
    double cum = 0.0;
    for (std::size_t l = 0; l < seg.pieces.size(); ++l) {
        CHECK(seg.pieces[l].t0 == doctest::Approx(data.dist.inv_cdf(cum)).epsilon(1e-12));
        cum += static_cast<double>(seg.pieces[l].points.rows()) / 2000.0;
    }

    // determinism
    auto seg2 = segment_trajectory(data, opt);
    CHECK(seg2.assignments == seg.assignments);
    CHECK(seg2.radius == seg.radius);
}

TEST_CASE("subsampled linkage still partitions every point") {
    auto bench = make_benchmark("linear2d");
    auto data = synthesize(bench, 1200, bench.default_dist(), 0.0, 4);
    SegmentationOptions opt;
    opt.clusters = 6;
    opt.linkage_cap = 400;
    opt.seed = 10;
    auto seg = segment_trajectory(data, opt);
    std::size_t total = 0;
    for (const auto& piece : seg.pieces) total += static_cast<std::size_t>(piece.points.rows());
    CHECK(total == 1200);
    for (int a : seg.assignments) CHECK(a >= 0);
}
