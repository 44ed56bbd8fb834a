#include <catch2/catch.hpp>

#include <cmath>

#include "kpx/counting.hpp"

using namespace kpx;

namespace {

// Brute-force oracle: scan the full bounding box and test membership with
// plain double arithmetic (exact integer arithmetic when 2 delta is integral).
int64_t annulus_count_oracle(int64_t r, double d1, double d2) {
    int64_t rad = int64_t(std::ceil(std::sqrt(double(r + 1)))) + 2;
    int64_t c1 = int64_t(std::llround(d1)), c2 = int64_t(std::llround(d2));
    int64_t n = 0;
    bool exact = (2.0 * d1 == std::floor(2.0 * d1)) && (2.0 * d2 == std::floor(2.0 * d2));
    for (int64_t e1 = c1 - rad; e1 <= c1 + rad; ++e1)
        for (int64_t e2 = c2 - rad; e2 <= c2 + rad; ++e2) {
            if (exact) {
                int64_t x = 2 * e1 - int64_t(std::llround(2.0 * d1));
                int64_t y = 2 * e2 - int64_t(std::llround(2.0 * d2));
                int64_t q = x * x + y * y;
                if (q >= 4 * r && q < 4 * (r + 1)) ++n;
            } else {
                double q = (double(e1) - d1) * (double(e1) - d1) +
                           (double(e2) - d2) * (double(e2) - d2);
                if (q >= double(r) && q < double(r + 1)) ++n;
            }
        }
    return n;
}

int64_t r2_oracle(int64_t n) {
    int64_t s = int64_t(std::sqrt(double(n))) + 2;
    int64_t count = 0;
    for (int64_t a = -s; a <= s; ++a)
        for (int64_t b = -s; b <= s; ++b)
            if (a * a + b * b == n) ++count;
    return count;
}

} // namespace

TEST_CASE("annulus counts match the enumeration oracle") {
    CHECK(count_annulus({0, 0.0, 0.0}) == 1);
    CHECK(count_annulus({1, 0.0, 0.0}) == 4);
    CHECK(count_annulus({4, 0.5, 0.5}) == 4);

    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        int64_t r = rng.uniform_int(0, 400);
        double d1 = rng.uniform(), d2 = rng.uniform();
        CAPTURE(r, d1, d2);
        CHECK(count_annulus({r, d1, d2}) == annulus_count_oracle(r, d1, d2));
    }
    for (int trial = 0; trial < 40; ++trial) {
        int64_t r = rng.uniform_int(0, 400);
        double d1 = 0.5 * rng.uniform_int(0, 4);
        double d2 = 0.5 * rng.uniform_int(0, 4);
        CAPTURE(r, d1, d2);
        CHECK(count_annulus({r, d1, d2}) == annulus_count_oracle(r, d1, d2));
    }
}

TEST_CASE("annulus counts are invariant under integer shifts and lattice symmetries") {
    Rng rng(55);
    for (int trial = 0; trial < 25; ++trial) {
        int64_t r = rng.uniform_int(0, 300);
        double d1 = rng.uniform(), d2 = rng.uniform();
        int64_t m1 = rng.uniform_int(-5, 5), m2 = rng.uniform_int(-5, 5);
        int64_t base = count_annulus({r, d1, d2});
        CHECK(count_annulus({r, d1 + double(m1), d2 + double(m2)}) == base);
        CHECK(count_annulus({r, d2, d1}) == base);
        CHECK(count_annulus({r, -d1, -d2}) == base);
    }
}

TEST_CASE("annulus counts partition the disc") {
    for (double d1 : {0.0, 0.5, 0.3}) {
        double d2 = d1 == 0.3 ? 0.7 : d1;
        int64_t R = 12;
        int64_t sum = 0;
        for (int64_t r = 0; r <= R * R; ++r) sum += count_annulus({r, d1, d2});
        // #{eta : |eta - delta|^2 < R^2 + 1}
        int64_t disc = 0;
        for (int64_t e1 = -R - 3; e1 <= R + 3; ++e1)
            for (int64_t e2 = -R - 3; e2 <= R + 3; ++e2) {
                double q = (e1 - d1) * (e1 - d1) + (e2 - d2) * (e2 - d2);
                if (q < double(R * R + 1)) ++disc;
            }
        CHECK(sum == disc);
    }
}

TEST_CASE("region-restricted annulus counts") {
    Annulus a{25, 0.0, 0.0};
    int64_t full = count_annulus(a);
    REQUIRE(full == 12); // |eta|^2 = 25 on the integer circle

    SECTION("region containing the annulus") {
        Region b{Region::Kind::disc, 0.0, 0.0, 10.0};
        CHECK(count_annulus_in_region(a, b) == full);
    }
    SECTION("disjoint region") {
        Region b{Region::Kind::square, 100.0, 100.0, 3.0};
        CHECK(count_annulus_in_region(a, b) == 0);
    }
    SECTION("square window, enumerated by hand") {
        // points of |eta|^2 = 25 inside the square |x-5| <= 1.5, |y| <= 1.5:
        // only (5,0) qualifies among (5,0),(4,3),(3,4),(0,5),...
        Region b{Region::Kind::square, 5.0, 0.0, 1.5};
        CHECK(count_annulus_in_region(a, b) == 1);
    }
    SECTION("never exceeds the full count") {
        Rng rng(9);
        for (int t = 0; t < 20; ++t) {
            Annulus ar{rng.uniform_int(1, 200), rng.uniform(), rng.uniform()};
            Region b{Region::Kind::disc, rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0),
                     rng.uniform(0.5, 8.0)};
            CHECK(count_annulus_in_region(ar, b) <= count_annulus(ar));
        }
    }
}

TEST_CASE("small regions meet the annulus in at most two points") {
    // R <= r^{1/6} / 8 with centers probed on and off the circle
    Rng rng(77);
    for (int t = 0; t < 150; ++t) {
        int64_t r = rng.uniform_int(100, 4000);
        double R = std::pow(double(r), 1.0 / 6.0) / 8.0;
        double ang = rng.uniform(0.0, 2.0 * M_PI);
        double rad = std::sqrt(double(r));
        Region b{t % 2 == 0 ? Region::Kind::disc : Region::Kind::square, rad * std::cos(ang),
                 rad * std::sin(ang), R};
        CHECK(count_annulus_in_region({r, 0.0, 0.0}, b) <= 2);
    }
}

TEST_CASE("sum of two squares via the divisor-character formula") {
    CHECK(sum_two_squares(0) == 1);
    CHECK(sum_two_squares(3) == 0);
    CHECK(sum_two_squares(25) == 12);
    for (int64_t n = 0; n <= 2000; ++n) CHECK(sum_two_squares(n) == r2_oracle(n));
}

TEST_CASE("parity classes of |2 eta - 2 delta|^2 mod 4") {
    SECTION("delta = (1/2,1/2): all mass in class 2") {
        auto classes = parity_class_counts({4, 0.5, 0.5});
        CHECK(classes[2] == 4); // 18 = 9 + 9 gives (+-3,+-3)
        CHECK(classes[0] == 0);
        CHECK(classes[1] == 0);
        CHECK(classes[3] == 0);
        for (int64_t r : {1, 7, 50, 123}) {
            auto c = parity_class_counts({r, 0.5, 0.5});
            CHECK(c[0] == 0);
            CHECK(c[1] == 0);
            CHECK(c[3] == 0);
        }
    }
    SECTION("delta with one half-integer coordinate: class 1 only") {
        for (auto d : std::vector<std::pair<double, double>>{{0.0, 0.5}, {0.5, 0.0}, {0.5, 1.0}, {1.0, 0.5}})
            for (int64_t r : {1, 2, 9, 64, 200}) {
                auto c = parity_class_counts({r, d.first, d.second});
                CHECK(c[0] == 0);
                CHECK(c[2] == 0);
                CHECK(c[3] == 0);
            }
    }
    SECTION("integer delta: |2 eta|^2 = 0 mod 4") {
        auto c = parity_class_counts({1, 0.0, 0.0});
        CHECK(c[0] == 4);
        CHECK(c[1] + c[2] + c[3] == 0);
    }
    SECTION("quarter-integer delta rejected") {
        CHECK_THROWS_AS(parity_class_counts({1, 0.25, 0.0}), kpx_error);
    }
}

TEST_CASE("growth-exponent fitting") {
    SECTION("constant series fits slope zero, linear series slope one") {
        std::vector<double> r = {1, 2, 4, 8, 16, 32, 64, 128};
        std::vector<double> flat(r.size(), 5.0);
        CHECK(loglog_slope(r, flat) == Approx(0.0).margin(1e-12));
        CHECK(loglog_slope(r, r) == Approx(1.0).margin(0.05));
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(fit_growth_exponent(50, {{0.0, 0.0}}), kpx_error);
        CHECK_THROWS_AS(fit_growth_exponent(1000, {}), kpx_error);
    }
    SECTION("annulus growth is sublinear on a small sweep") {
        std::vector<std::pair<double, double>> deltas;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) deltas.push_back({i / 4.0, j / 4.0});
        auto fit = fit_growth_exponent(512, deltas);
        CHECK(fit.radii.size() == 10);
        CHECK(fit.exponent < 0.5);
        CHECK(fit.exponent > -0.5);
    }
}
