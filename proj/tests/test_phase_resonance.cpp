#include <catch2/catch.hpp>

#include <cmath>

#include "kpx/phase_resonance.hpp"

using namespace kpx;

TEST_CASE("phi0 values and oddness") {
    DispersionParams a2(2.0);
    CHECK(phi0(1, a2) == 1.0);
    CHECK(phi0(-2, a2) == -8.0);
    CHECK(phi0(3, DispersionParams(3.5)) == Approx(std::pow(3.0, 4.5)).epsilon(1e-14));
    for (int k = 1; k <= 20; ++k)
        for (double al : {2.0, 3.0, 3.5, 4.0})
            CHECK(phi0(-k, DispersionParams(al)) == -phi0(k, DispersionParams(al)));
    CHECK_THROWS_AS(phi0(0, a2), kpx_error);
    CHECK_THROWS_AS(DispersionParams(1.5), kpx_error);
}

TEST_CASE("phi and sigma") {
    DispersionParams a2(2.0);
    CHECK(phi({1, 0, 0}, a2) == 1.0);
    CHECK(phi({2, 1, 1}, a2) == Approx(7.0).epsilon(1e-15)); // 8 - 2/2
    CHECK_THROWS_AS(phi({0, 1, 0}, a2), kpx_error);

    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
        FreqPoint xi{int(rng.uniform_int(-20, 20)), int(rng.uniform_int(-20, 20)),
                     int(rng.uniform_int(-20, 20))};
        if (xi.k == 0) xi.k = 1;
        CHECK(phi(-xi, a2) == Approx(-phi(xi, a2)).margin(1e-12));
        double tau = rng.uniform(-50.0, 50.0);
        // independent formula path: tau - phi0 + |eta|^2 / k
        double ref = tau - phi0(xi.k, a2) + (double(xi.e1) * xi.e1 + double(xi.e2) * xi.e2) / xi.k;
        CHECK(sigma(tau, xi, a2) == Approx(ref).margin(1e-12));
    }
    CHECK(sigma(phi({3, 2, 1}, a2), {3, 2, 1}, a2) == 0.0);
    CHECK(sigma(0.0, {1, 0, 0}, a2) == -1.0);
}

TEST_CASE("resonance decomposition hand cases") {
    DispersionParams a2(2.0);
    auto s = resonance_decomposition({1, 1, 0}, {1, 0, 0}, a2);
    CHECK(s.r_term == 6.0);
    CHECK(s.mixed_term == Approx(0.5).epsilon(1e-15));
    CHECK(s.total == Approx(6.5).epsilon(1e-15));

    auto c = resonance_decomposition({1, 1, 1}, {1, 1, 1}, a2);
    CHECK(c.mixed_term == 0.0); // collinear: k eta1 = k1 eta
    CHECK(c.total == c.r_term);
    CHECK(c.r_term == 6.0);

    CHECK_THROWS_AS(resonance_decomposition({1, 0, 0}, {-1, 0, 0}, a2), kpx_error);
    CHECK_THROWS_AS(resonance_decomposition({0, 1, 0}, {1, 0, 0}, a2), kpx_error);
}

TEST_CASE("alpha = 2: r-term is exactly 3 k k1 k2") {
    DispersionParams a2(2.0);
    Rng rng(17);
    for (int t = 0; t < 200; ++t) {
        int k1 = int(rng.uniform_int(-40, 40));
        int k2 = int(rng.uniform_int(-40, 40));
        if (k1 == 0 || k2 == 0 || k1 + k2 == 0) continue;
        FreqPoint xi1{k1, int(rng.uniform_int(-10, 10)), int(rng.uniform_int(-10, 10))};
        FreqPoint xi2{k2, int(rng.uniform_int(-10, 10)), int(rng.uniform_int(-10, 10))};
        auto s = resonance_decomposition(xi1, xi2, a2);
        // independent expansion: (k1+k2)^3 - k1^3 - k2^3 = 3 k k1 k2
        int64_t k = k1 + k2;
        CHECK(s.r_term == double(3 * k * int64_t(k1) * int64_t(k2)));
    }
}

TEST_CASE("decomposition equals sigma1 + sigma2 - sigma for all tau splittings") {
    Rng rng(23);
    for (double alpha : {2.0, 3.5, 4.0}) {
        DispersionParams p(alpha);
        for (int t = 0; t < 30; ++t) {
            FreqPoint xi1{int(rng.uniform_int(-15, 15)), int(rng.uniform_int(-15, 15)),
                          int(rng.uniform_int(-15, 15))};
            FreqPoint xi2{int(rng.uniform_int(-15, 15)), int(rng.uniform_int(-15, 15)),
                          int(rng.uniform_int(-15, 15))};
            if (xi1.k == 0 || xi2.k == 0 || xi1.k + xi2.k == 0) continue;
            auto s = resonance_decomposition(xi1, xi2, p);
            auto sw = resonance_decomposition(xi2, xi1, p);
            CHECK(s.total == Approx(sw.total).margin(1e-12)); // symmetric under swap
            for (int trial = 0; trial < 100; ++trial) {
                double tau1 = rng.uniform(-100.0, 100.0);
                double tau2 = rng.uniform(-100.0, 100.0);
                double lhs = sigma(tau1, xi1, p) + sigma(tau2, xi2, p) -
                             sigma(tau1 + tau2, xi1 + xi2, p);
                double scale = std::max(1.0, std::abs(s.total));
                CHECK(std::abs(lhs - s.total) / scale < 1e-10);
            }
        }
    }
}

TEST_CASE("mixed-weight symmetry |k1 eta - k eta1| = |k1 eta2 - k2 eta1|") {
    Rng rng(31);
    for (int t = 0; t < 100; ++t) {
        int64_t k1 = rng.uniform_int(-30, 30), k2 = rng.uniform_int(-30, 30);
        int64_t e11 = rng.uniform_int(-30, 30), e12 = rng.uniform_int(-30, 30);
        int64_t e21 = rng.uniform_int(-30, 30), e22 = rng.uniform_int(-30, 30);
        int64_t k = k1 + k2, E1 = e11 + e21, E2 = e12 + e22;
        int64_t a1 = k1 * E1 - k * e11, a2 = k1 * E2 - k * e12;
        int64_t b1 = k1 * e21 - k2 * e11, b2 = k1 * e22 - k2 * e12;
        CHECK(a1 * a1 + a2 * a2 == b1 * b1 + b2 * b2);
    }
}

TEST_CASE("r-term and mixed term share a sign") {
    for (double alpha : {2.0, 3.0, 4.0}) {
        DispersionParams p(alpha);
        for (int k1 = -50; k1 <= 50; ++k1)
            for (int k2 = -50; k2 <= 50; ++k2) {
                if (k1 == 0 || k2 == 0 || k1 + k2 == 0) continue;
                auto s = resonance_decomposition({k1, 3, -2}, {k2, -1, 4}, p);
                double prod = double(k1 + k2) * k1 * k2;
                // mixed term carries sign(k k1 k2); r matches it
                if (s.mixed_term != 0.0) CHECK(s.mixed_term * prod > 0.0);
                if (s.r_term != 0.0) CHECK(s.r_term * prod > 0.0);
                CHECK(s.r_term * s.mixed_term >= 0.0);
            }
    }
}

TEST_CASE("r-term magnitude bracket") {
    DispersionParams a2(2.0);
    std::vector<std::pair<int, int>> same_sign;
    for (int k1 = 1; k1 <= 50; ++k1)
        for (int k2 = 1; k2 <= 50; ++k2) same_sign.push_back({k1, k2});
    auto rep = r_term_magnitude_check(same_sign, a2);
    // alpha = 2, same signs: ratio = 3 k_mid / k_max lies in [3/2, 3)
    CHECK(rep.min_ratio >= 1.5 - 1e-12);
    CHECK(rep.max_ratio < 3.0);
    CHECK(rep.samples == same_sign.size());

    std::vector<std::pair<int, int>> mixed;
    for (int k1 = -30; k1 <= 30; ++k1)
        for (int k2 = -30; k2 <= 30; ++k2) {
            if (k1 == 0 || k2 == 0 || k1 + k2 == 0) continue;
            mixed.push_back({k1, k2});
        }
    auto rep4 = r_term_magnitude_check(mixed, DispersionParams(4.0));
    CHECK(rep4.min_ratio > 0.0);
    CHECK(std::isfinite(rep4.max_ratio));

    CHECK_THROWS_AS(r_term_magnitude_check({{1, -1}}, a2), kpx_error);
}

TEST_CASE("max-sigma lower bound") {
    DispersionParams a2(2.0);
    SECTION("zero modulations force |sigma| = |total|") {
        FreqPoint xi1{2, 1, 0}, xi2{3, 0, 2};
        double t1 = phi(xi1, a2), t2 = phi(xi2, a2);
        auto rep = max_sigma_lower_bound(xi1, xi2, t1, t2, a2);
        auto split = resonance_decomposition(xi1, xi2, a2);
        CHECK(rep.max_sigma == Approx(std::abs(split.total)).epsilon(1e-12));
        CHECK(rep.ok);
    }
    SECTION("pigeonhole bound holds on a random sweep") {
        Rng rng(41);
        for (int t = 0; t < 500; ++t) {
            FreqPoint xi1{int(rng.uniform_int(-20, 20)), int(rng.uniform_int(-20, 20)),
                          int(rng.uniform_int(-20, 20))};
            FreqPoint xi2{int(rng.uniform_int(-20, 20)), int(rng.uniform_int(-20, 20)),
                          int(rng.uniform_int(-20, 20))};
            if (xi1.k == 0 || xi2.k == 0 || xi1.k + xi2.k == 0) continue;
            auto rep = max_sigma_lower_bound(xi1, xi2, rng.uniform(-200.0, 200.0),
                                             rng.uniform(-200.0, 200.0), a2);
            CHECK(rep.ok);
            CHECK(rep.max_sigma >= rep.pigeonhole * (1.0 - 1e-12));
        }
    }
}
