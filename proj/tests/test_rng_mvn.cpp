#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "survalid/errors.hpp"
#include "survalid/mvn.hpp"
#include "survalid/rng.hpp"

using namespace survalid;

TEST_CASE("normal_quantile: reference points and inversion") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
    CHECK(normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-10));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.575829303548901).epsilon(1e-10));
    for (double p : {1e-9, 1e-4, 0.123, 0.5, 0.77, 0.9999, 1.0 - 1e-9})
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("RngStream: determinism and open-interval uniforms") {
    RngStream a = RngStream::keyed({42, 7});
    RngStream b = RngStream::keyed({42, 7});
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c = RngStream::keyed({42, 8});
    bool all_equal = true;
    RngStream a2 = RngStream::keyed({42, 7});
    for (int i = 0; i < 16; ++i) all_equal = all_equal && (a2.next_u64() == c.next_u64());
    CHECK_FALSE(all_equal);

    RngStream u = RngStream::keyed({1});
    for (int i = 0; i < 100000; ++i) {
        const double x = u.uniform01();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("RngStream: child streams are independent of parent draw order") {
    RngStream parent = RngStream::keyed({99});
    RngStream c1 = parent.child(5);
    parent.next_u64();
    parent.next_u64();
    RngStream c2 = parent.child(5);
    for (int i = 0; i < 10; ++i) CHECK(c1.next_u64() == c2.next_u64());
}

TEST_CASE("RngStream: uniform draws pass a KS check, normals have the right moments") {
    RngStream rng = RngStream::keyed({314159});
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.uniform01();
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        d = std::max(d, std::abs((i + 1) / static_cast<double>(n) - xs[i]));
        d = std::max(d, std::abs(xs[i] - i / static_cast<double>(n)));
    }
    CHECK(d < 1.6276 / std::sqrt(static_cast<double>(n)));

    double mean = 0, var = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        mean += z;
        var += z * z;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(mean == doctest::Approx(0.0).scale(1.0).epsilon(0.015));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("RngStream: below is in range and roughly uniform") {
    RngStream rng = RngStream::keyed({8});
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
    for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.06));
    CHECK_THROWS_AS(rng.below(0), DomainError);
}

TEST_CASE("mvn_sample: zero covariance returns the mean exactly") {
    RngStream rng = RngStream::keyed({3});
    const std::vector<double> mean{1.5, -2.0, 0.25};
    const std::vector<double> cov(9, 0.0);
    const auto x = mvn_sample(mean, cov, rng);
    CHECK(x == mean);
}

TEST_CASE("mvn_sample: identity covariance moments") {
    RngStream rng = RngStream::keyed({4});
    const std::vector<double> mean{0.0, 0.0};
    const std::vector<double> cov{1.0, 0.0, 0.0, 1.0};
    const std::size_t n = 100000;
    double s00 = 0, s01 = 0, s11 = 0, m0 = 0, m1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = mvn_sample(mean, cov, rng);
        m0 += x[0];
        m1 += x[1];
        s00 += x[0] * x[0];
        s01 += x[0] * x[1];
        s11 += x[1] * x[1];
    }
    m0 /= n;
    m1 /= n;
    CHECK(std::abs(s00 / n - m0 * m0 - 1.0) < 0.02);
    CHECK(std::abs(s11 / n - m1 * m1 - 1.0) < 0.02);
    CHECK(std::abs(s01 / n - m0 * m1) < 0.02);
}

TEST_CASE("mvn_sample: correlated covariance honours the target correlation") {
    RngStream rng = RngStream::keyed({5});
    const std::vector<double> mean{0.0, 0.0};
    const std::vector<double> cov{1.0, -0.5, -0.5, 1.0};
    const std::size_t n = 100000;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = mvn_sample(mean, cov, rng);
        sxy += x[0] * x[1];
        sxx += x[0] * x[0];
        syy += x[1] * x[1];
    }
    CHECK(sxy / std::sqrt(sxx * syy) == doctest::Approx(-0.5).epsilon(0.02));
}

TEST_CASE("mvn_sample: singular covariance draws lie on the degenerate line") {
    RngStream rng = RngStream::keyed({6});
    const std::vector<double> mean{0.3, -0.7};
    const std::vector<double> cov{1.0, -1.0, -1.0, 1.0};
    for (int i = 0; i < 1000; ++i) {
        const auto x = mvn_sample(mean, cov, rng);
        CHECK(x[1] - mean[1] == doctest::Approx(-(x[0] - mean[0])).epsilon(1e-12).scale(1e-12));
    }
}

TEST_CASE("mvn_sample: rejects non-PSD and malformed inputs") {
    RngStream rng = RngStream::keyed({7});
    CHECK_THROWS_AS(mvn_sample({0.0, 0.0}, {1.0, 2.0, 2.0, 1.0}, rng), DomainError);  // eig -1
    CHECK_THROWS_AS(mvn_sample({0.0, 0.0}, {1.0, 0.0, 0.0}, rng), DomainError);
    CHECK_THROWS_AS(mvn_sample({0.0, 0.0}, {1.0, 0.3, 0.0, 1.0}, rng), DomainError);
}
