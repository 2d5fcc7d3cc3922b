#include <doctest.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "swrecon/timedist.hpp"

using namespace swrecon;

TEST_CASE("uniform cdf/inv_cdf basics") {
    auto u = TimeDistribution::uniform(0.0, 10.0);
    CHECK(u.cdf(2.5) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(u.inv_cdf(0.0) == 0.0);
    CHECK(u.inv_cdf(1.0) == 10.0);
    CHECK_THROWS_AS(u.inv_cdf(1.5), std::domain_error);
}

TEST_CASE("truncated normal symmetry and bounds") {
    auto tn = TimeDistribution::truncated_normal(5.0, 10.0 / 3.0, 0.0, 10.0);
    CHECK(tn.cdf(5.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tn.inv_cdf(0.0) == 0.0);
    CHECK(tn.inv_cdf(1.0) == 10.0);
    CHECK(tn.pdf(-0.1) == 0.0);
    CHECK(tn.pdf(10.1) == 0.0);
    CHECK(tn.pdf(5.0) > 0.0);
}

TEST_CASE("inv_cdf inverts cdf on the support interior") {
    auto u = TimeDistribution::uniform(-2.0, 7.0);
    auto tn = TimeDistribution::truncated_normal(3.0, 2.0, 0.0, 6.0);
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        for (const auto& dist : {u, tn}) {
            double t = dist.low() + (dist.high() - dist.low()) * rng.uniform(0.01, 0.99);
            CHECK(dist.inv_cdf(dist.cdf(t)) == doctest::Approx(t).epsilon(1e-10));
        }
    }
}

TEST_CASE("sampling stays in support and matches moments") {
    auto u = TimeDistribution::uniform(0.0, 10.0);
    auto samples = u.sample(100000, 123);
    double mean = 0.0;
    for (double t : samples) mean += t;
    mean /= static_cast<double>(samples.size());
    CHECK(std::abs(mean - 5.0) < 0.05);

    auto tn = TimeDistribution::truncated_normal(3.0, 2.0, 0.0, 6.0);
    for (double t : tn.sample(100000, 99)) {
        CHECK(t >= 0.0);
        CHECK(t <= 6.0);
    }
}

TEST_CASE("sampling is reproducible by seed") {
    auto tn = TimeDistribution::truncated_normal(5.0, 10.0 / 3.0, 0.0, 10.0);
    CHECK(tn.sample(1, 7)[0] == tn.sample(1, 7)[0]);
    auto a = tn.sample(50, 7);
    auto b = tn.sample(50, 7);
    CHECK(a == b);
    auto c = tn.sample(50, 8);
    CHECK(a != c);
}

TEST_CASE("Kolmogorov-Smirnov sanity of sampler versus cdf") {
    auto u = TimeDistribution::uniform(1.0, 4.0);
    auto tn = TimeDistribution::truncated_normal(2.0, 1.5, 0.5, 4.5);
    for (const auto& dist : {u, tn}) {
        auto samples = dist.sample(100000, 2024);
        double d = oracles::ks_statistic(samples, [&](double t) { return dist.cdf(t); });
        CHECK(d < 0.01);
    }
}

TEST_CASE("cdf is strictly monotone on the support") {
    auto tn = TimeDistribution::truncated_normal(1.0, 0.7, 0.0, 3.0);
    Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        double t1 = rng.uniform(0.0, 3.0), t2 = rng.uniform(0.0, 3.0);
        if (t1 == t2) continue;
        if (t1 > t2) std::swap(t1, t2);
        CHECK(tn.cdf(t1) < tn.cdf(t2));
    }
}

TEST_CASE("truncate composes analytically") {
    auto u = TimeDistribution::uniform(0.0, 10.0);
    auto ut = u.truncate(2.0, 4.0);
    CHECK(ut.kind() == TimeDistribution::Kind::Uniform);
    CHECK(ut.low() == 2.0);
    CHECK(ut.high() == 4.0);

    // full-support truncation is the identity
    auto same = u.truncate(0.0, 10.0);
    CHECK(same.low() == u.low());
    CHECK(same.high() == u.high());

    auto tn = TimeDistribution::truncated_normal(5.0, 10.0 / 3.0, 0.0, 10.0);
    auto tn2 = tn.truncate(2.0, 6.0);
    // pdf of the re-truncated law integrates to one
    double mass = oracles::simpson([&](double t) { return tn2.pdf(t); }, 2.0, 6.0, 4000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));

    // truncate-then-cdf equals the conditional cdf of the original
    for (double t : {2.5, 3.0, 4.2, 5.9}) {
        double expect = (tn.cdf(t) - tn.cdf(2.0)) / (tn.cdf(6.0) - tn.cdf(2.0));
        CHECK(tn2.cdf(t) == doctest::Approx(expect).epsilon(1e-12));
    }

    CHECK_THROWS_AS(u.truncate(4.0, 4.0), std::domain_error);
}

TEST_CASE("distribution json round-trip") {
    auto u = TimeDistribution::uniform(0.0, 10.0);
    auto j = u.to_json();
    CHECK(j["kind"] == "uniform");
    auto u2 = TimeDistribution::from_json(j);
    CHECK(u2.low() == u.low());
    CHECK(u2.high() == u.high());

    auto tn = TimeDistribution::truncated_normal(5.0, 3.333, 0.0, 10.0);
    auto tn2 = TimeDistribution::from_json(tn.to_json());
    CHECK(tn2.cdf(4.0) == doctest::Approx(tn.cdf(4.0)).epsilon(1e-15));
}
