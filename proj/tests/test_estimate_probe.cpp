#include <catch2/catch.hpp>

#include <cmath>

#include "kpx/estimate_probe.hpp"

using namespace kpx;

namespace {
SpaceTimeSpectrum random_mean_zero(const GridSpec& g, uint64_t seed) {
    Rng rng(seed);
    SpaceTimeSpectrum u(g);
    u.for_each([&](int k, int, int, int, cplx& v) {
        if (k != 0) v = rng.gaussian_cplx();
    });
    return u;
}
} // namespace

TEST_CASE("case presets satisfy their own hypotheses") {
    for (ProbeKind k : {ProbeKind::bil, ProbeKind::bil_dual, ProbeKind::lin_L4, ProbeKind::meps,
                        ProbeKind::meps_dual, ProbeKind::central, ProbeKind::kernel_sum,
                        ProbeKind::dx_half_meps, ProbeKind::mixed, ProbeKind::time_loc,
                        ProbeKind::est0, ProbeKind::nonlin1, ProbeKind::nonlin2}) {
        CAPTURE(probe_kind_name(k));
        CHECK(ProbeCase::preset(k).validate().empty());
    }
}

TEST_CASE("hypothesis violations are named and gate evaluation") {
    auto c = ProbeCase::preset(ProbeKind::bil);
    c.b = 0.4;
    auto diags = c.validate();
    REQUIRE(diags.size() == 1);
    CHECK(diags[0] == "requires b > 1/2");
    GridSpec g(2, 2, 2);
    CHECK_THROWS_AS(ProbeEvaluator(c, g), hypothesis_error);
    c.falsification = true;
    CHECK_NOTHROW(ProbeEvaluator(c, g));

    auto n = ProbeCase::preset(ProbeKind::nonlin2);
    n.disp = DispersionParams(3.0);
    auto nd = n.validate();
    REQUIRE(!nd.empty());
    CHECK(nd[0] == "requires 3 < alpha <= 4");
}

TEST_CASE("one-mode pair: explicit bil ratio") {
    GridSpec g(4, 4, 4);
    SpaceTimeSpectrum u(g);
    u.set(1, 0, 0, 1, {1.0, 0.0}); // sigma = 0
    auto c = ProbeCase::preset(ProbeKind::bil);
    c.s1 = c.s2 = 1.0;
    c.eps1 = 1.0;
    c.eps0 = c.eps2 = 0.0;
    auto rep = probe_ratio(c, u, u);
    // product is the single mode (2,0,0,2) with coefficient 1; every rhs
    // weight evaluates to 1 at (1,0,0,sigma=0)
    CHECK(rep.lhs == Approx(1.0).epsilon(1e-13));
    CHECK(rep.rhs == Approx(1.0).epsilon(1e-13));
    CHECK(rep.ratio == Approx(1.0).epsilon(1e-13));
    CHECK(!rep.flagged);
}

TEST_CASE("zero inputs are flagged") {
    GridSpec g(2, 2, 2);
    SpaceTimeSpectrum z(g);
    auto rep = probe_ratio(ProbeCase::preset(ProbeKind::bil), z, z);
    CHECK(rep.flagged);
}

TEST_CASE("probe lhs matches the bilinear operators directly") {
    GridSpec g(3, 3, 3);
    auto u = random_mean_zero(g, 3);
    auto v = random_mean_zero(g, 4);

    auto bil = probe_ratio(ProbeCase::preset(ProbeKind::bil), u, v);
    CHECK(bil.lhs == Approx(bilinear_product(u, v).l2_norm()).epsilon(1e-12));

    auto meps = probe_ratio(ProbeCase::preset(ProbeKind::meps), u, v);
    CHECK(meps.lhs == Approx(m_eps_apply(u, v, 0.1).l2_norm()).epsilon(1e-12));

    auto c = ProbeCase::preset(ProbeKind::central);
    auto central = probe_ratio(c, u, v);
    CHECK(central.lhs ==
          Approx(bilinear_product(project_region(u, c.B), v).l2_norm()).epsilon(1e-12));
    CHECK(central.rhs ==
          Approx(std::pow(c.B.R, c.eps) * xsb_norm(u, NormParams(0, 0, c.b, 0)) *
                 xsb_norm(v, NormParams(c.s, 0, c.b, 0)))
              .epsilon(1e-12));

    auto dual = probe_ratio(ProbeCase::preset(ProbeKind::bil_dual), u, v);
    NormParams dp(-0.6, -0.1, -0.55, 0.0);
    CHECK(dual.lhs == Approx(xsb_norm(bilinear_product(u, v), dp)).epsilon(1e-12));

    auto e = ProbeCase::preset(ProbeKind::est0);
    auto est = probe_ratio(e, u, v);
    NormParams zp(e.s, e.eps, 0.0, 0.5);
    CHECK(est.lhs == Approx(z_norm(ddx(bilinear_product(u, v)), zp)).epsilon(1e-12));

    auto n2 = ProbeCase::preset(ProbeKind::nonlin2);
    auto r2 = probe_ratio(n2, u, v);
    NormParams n2p(n2.s, 0.0, n2.bprime, n2.beta, n2.disp);
    CHECK(r2.lhs == Approx(xsb_norm(ddx(bilinear_product(u, v)), n2p)).epsilon(1e-12));

    auto n1 = ProbeCase::preset(ProbeKind::nonlin1);
    auto r1 = probe_ratio(n1, u, v);
    NormParams n1p(0.0, 0.0, n1.bprime, n1.beta, n1.disp);
    CHECK(r1.lhs ==
          Approx(xsb_norm(dx_multiplier(m_eps_apply(u, v, n1.eps), n1.s + 1.0 + n1.eps), n1p))
              .epsilon(1e-12));

    auto mx = ProbeCase::preset(ProbeKind::mixed);
    auto rmx = probe_ratio(mx, u, v);
    auto P = bilinear_product(u, v);
    double ref = mixed_norm(P, NormParams(0, 0, 0, 0), mx.p_tau) + P.l2_norm();
    CHECK(rmx.lhs == Approx(ref).epsilon(1e-12));
}

TEST_CASE("dual norm attainment: the bil_dual lhs equals its pairing supremum") {
    GridSpec g(2, 2, 2);
    auto u = random_mean_zero(g, 11);
    auto v = random_mean_zero(g, 12);
    auto P = bilinear_product(u, v);
    NormParams plus(0.6, 0.1, 0.55, 0.0);
    NormParams minus(-0.6, -0.1, -0.55, 0.0);
    // witness w = W^{-2} P attains the supremum exactly on a finite lattice
    SpaceTimeSpectrum w(g);
    auto warr = make_weight_array(g, plus);
    for (size_t i = 0; i < w.coeffs().size(); ++i)
        if (warr[i] > 0.0) w.coeffs()[i] = P.coeffs()[i] / (warr[i] * warr[i]);
    double pairing = std::abs(inner_product(P, w));
    double denom = xsb_norm(w, plus);
    CHECK(pairing / denom == Approx(xsb_norm(P, minus)).epsilon(1e-10));
}

TEST_CASE("Cauchy-Schwarz chain: meps lhs vs the kmax form") {
    GridSpec g(3, 3, 3);
    auto u = random_mean_zero(g, 21);
    auto v = random_mean_zero(g, 22);
    auto meps = probe_ratio(ProbeCase::preset(ProbeKind::meps), u, v);
    auto dxm = probe_ratio(ProbeCase::preset(ProbeKind::dx_half_meps), u, v);
    CHECK(meps.lhs <= std::sqrt(double(2 * g.K + 1)) * dxm.lhs + 1e-12);
}

TEST_CASE("kernel sum probe") {
    DispersionParams d(2.0);
    SECTION("empty region") {
        Region B{Region::Kind::disc, 0.5, 0.5, 0.4};
        auto rep = probe_kernel_sum(2, 1, 0.0, {0, 0}, B, 0.55, 0.1, d);
        CHECK(rep.lhs == 0.0);
        CHECK(rep.points == 0);
    }
    SECTION("single point with vanishing argument") {
        Region B{Region::Kind::disc, 0.0, 0.0, 0.4};
        auto rep = probe_kernel_sum(2, 1, 2.0, {0, 0}, B, 0.55, 0.1, d);
        CHECK(rep.points == 1);
        CHECK(rep.lhs == Approx(1.0).epsilon(1e-14));
    }
    SECTION("omega substitution agrees to 1e-10") {
        Rng rng(31);
        for (int t = 0; t < 25; ++t) {
            int k = int(rng.uniform_int(2, 12));
            int k1 = int(rng.uniform_int(1, k - 1));
            Region B{Region::Kind::square, rng.uniform(-6.0, 6.0), rng.uniform(-6.0, 6.0),
                     rng.uniform(2.0, 10.0)};
            auto rep = probe_kernel_sum(k, k1, rng.uniform(-30.0, 30.0),
                                        {int(rng.uniform_int(-5, 5)), int(rng.uniform_int(-5, 5))},
                                        B, 0.55, 0.1, d);
            CHECK(rep.omega_max_dev < 1e-10);
            CHECK(rep.lhs <= double(rep.points) + 1e-12);
        }
    }
    SECTION("preconditions") {
        Region B{Region::Kind::disc, 0.0, 0.0, 2.0};
        CHECK_THROWS_AS(probe_kernel_sum(2, 1, 0.0, {0, 0}, B, 0.5, 0.1, d), hypothesis_error);
        CHECK_THROWS_AS(probe_kernel_sum(2, 2, 0.0, {0, 0}, B, 0.55, 0.1, d), kpx_error);
    }
}

TEST_CASE("time localization probe") {
    SpatialSpectrum u0(2, 2);
    u0.set(1, 1, 0, {0.4, 0.1});
    u0.set(-1, -1, 0, {0.4, -0.1});
    u0.set(2, 0, 1, {0.2, 0.0});
    u0.set(-2, 0, -1, {0.2, 0.0});
    GridSpec g(2, 2, 128);

    SECTION("b equal to b_tilde gives ratio one") {
        auto c = ProbeCase::preset(ProbeKind::time_loc);
        c.b = c.b_tilde = 0.3;
        auto rep = probe_time_localization(u0, c, g, {0.5, 0.25});
        for (double r : rep.ratios) CHECK(r == Approx(1.0).epsilon(1e-12));
    }
    SECTION("shrinking window sweep has a tame exponent") {
        auto c = ProbeCase::preset(ProbeKind::time_loc); // b = 0.3, bt = 0.45
        auto rep = probe_time_localization(u0, c, g);
        CHECK(rep.ratios.size() == 4);
        for (double r : rep.ratios) CHECK(r > 0.0);
        CHECK(std::abs(rep.fitted_exponent) < 0.2);
    }
    SECTION("zero data flagged, bad parameters rejected") {
        SpatialSpectrum z(2, 2);
        auto c = ProbeCase::preset(ProbeKind::time_loc);
        CHECK(probe_time_localization(z, c, g).flagged);
        c.b = 0.48;
        c.b_tilde = 0.3;
        CHECK_THROWS_AS(probe_time_localization(u0, c, g), hypothesis_error);
    }
}

TEST_CASE("extremizer search determinism and monotonicity") {
    GridSpec g(2, 2, 2);
    auto c = ProbeCase::preset(ProbeKind::bil);

    auto r1 = extremizer_search(c, ProbeFamily::random_gaussian, g, 1, 777);
    auto r2 = extremizer_search(c, ProbeFamily::random_gaussian, g, 1, 777);
    CHECK(r1.best.ratio == r2.best.ratio);
    CHECK(r1.evaluations == 1);

    auto r3 = extremizer_search(c, ProbeFamily::random_gaussian, g, 60, 777);
    CHECK(r3.best.ratio >= r1.best.ratio);
    auto r4 = extremizer_search(c, ProbeFamily::random_gaussian, g, 60, 777);
    CHECK(r3.best.ratio == r4.best.ratio);
}

TEST_CASE("greedy steps recompute ratios consistently") {
    GridSpec g(2, 2, 2);
    for (ProbeKind kind : {ProbeKind::bil, ProbeKind::meps, ProbeKind::dx_half_meps,
                           ProbeKind::mixed, ProbeKind::est0, ProbeKind::central}) {
        CAPTURE(probe_kind_name(kind));
        auto c = ProbeCase::preset(kind);
        ProbeEvaluator ev(c, g);
        auto u = random_mean_zero(g, 51);
        auto v = random_mean_zero(g, 52);
        ev.evaluate(u, v);
        Rng rng(53);
        for (int step = 0; step < 12; ++step) {
            bool on_u = rng.uniform() < 0.5;
            FreqPoint xi{int(rng.uniform_int(-2, 2)), int(rng.uniform_int(-2, 2)),
                         int(rng.uniform_int(-2, 2))};
            if (xi.k == 0) xi.k = 1;
            int j = int(rng.uniform_int(-2, 2));
            cplx delta = 0.5 * rng.gaussian_cplx();
            double predicted = ev.try_step(on_u, xi, j, delta);
            ev.commit_step();
            // reference: full evaluation of the perturbed pair
            if (on_u)
                u.coeffs()[u.index(xi.k, xi.e1, xi.e2, j)] += delta;
            else
                v.coeffs()[v.index(xi.k, xi.e1, xi.e2, j)] += delta;
            ProbeEvaluator fresh(c, g);
            auto rep = fresh.evaluate(u, v);
            CHECK(predicted == Approx(rep.ratio).epsilon(1e-9));
        }
    }
}

TEST_CASE("single-pair search matches a brute-force over explicit pairs") {
    GridSpec g(2, 2, 2);
    for (ProbeKind kind : {ProbeKind::bil, ProbeKind::meps}) {
        CAPTURE(probe_kind_name(kind));
        auto c = ProbeCase::preset(kind);
        auto fast = single_pair_search(c, g);

        double best = -1.0;
        auto jopt = [&](FreqPoint xi) {
            int j = int(std::llround(phi(xi, c.disp) * g.Tw / (2.0 * M_PI)));
            return std::clamp(j, -g.J, g.J);
        };
        for (int k1 = -g.K; k1 <= g.K; ++k1)
            for (int e11 = -g.M; e11 <= g.M; ++e11)
                for (int e12 = -g.M; e12 <= g.M; ++e12)
                    for (int k2 = -g.K; k2 <= g.K; ++k2)
                        for (int e21 = -g.M; e21 <= g.M; ++e21)
                            for (int e22 = -g.M; e22 <= g.M; ++e22) {
                                if (k1 == 0 || k2 == 0 || k1 + k2 == 0) continue;
                                if (std::abs(k1 + k2) > g.K || std::abs(e11 + e21) > g.M ||
                                    std::abs(e12 + e22) > g.M)
                                    continue;
                                int j1 = jopt({k1, e11, e12});
                                int j2 = jopt({k2, e21, e22});
                                int j = j1 + j2;
                                if (j > g.J) {
                                    j2 -= (j - g.J);
                                } else if (j < -g.J) {
                                    j2 += (-g.J - j);
                                }
                                if (j2 < -g.J || j2 > g.J) continue;
                                SpaceTimeSpectrum u(g), v(g);
                                u.set(k1, e11, e12, j1, {1.0, 0.0});
                                v.set(k2, e21, e22, j2, {1.0, 0.0});
                                auto rep = probe_ratio(c, u, v);
                                best = std::max(best, rep.ratio);
                            }
        CHECK(fast.best.ratio == Approx(best).epsilon(1e-10));
    }
}

TEST_CASE("scaling sweep plumbing") {
    auto c = ProbeCase::preset(ProbeKind::bil);
    auto rep = scaling_sweep(c, ProbeFamily::random_gaussian, {2, 3}, 20, 5);
    REQUIRE(rep.sizes.size() == 2);
    CHECK(rep.best_ratios[0] > 0.0);
    CHECK(rep.best_ratios[1] > 0.0);
    CHECK(std::isfinite(rep.fit_slope));
    CHECK_THROWS_AS(scaling_sweep(c, ProbeFamily::random_gaussian, {3, 2}, 5, 5), kpx_error);
}

TEST_CASE("wave packet and shell families produce admissible fields") {
    GridSpec g(4, 4, 4);
    auto c = ProbeCase::preset(ProbeKind::meps);
    for (ProbeFamily fam : {ProbeFamily::wave_packet, ProbeFamily::shell_concentrated}) {
        auto res = extremizer_search(c, fam, g, 5, 99);
        CHECK(res.best.ratio > 0.0);
        CHECK(!res.best.flagged);
    }
}

TEST_CASE("probe_nonlinear restricts the case set and flags zero data") {
    GridSpec g(2, 2, 2);
    auto u = random_mean_zero(g, 61);
    SpaceTimeSpectrum z(g);
    auto c = ProbeCase::preset(ProbeKind::nonlin2);
    CHECK(probe_nonlinear(c, u, z).flagged);
    CHECK_THROWS_AS(probe_nonlinear(ProbeCase::preset(ProbeKind::bil), u, u), kpx_error);
    auto r = probe_nonlinear(c, u, u);
    CHECK(std::isfinite(r.ratio));
}
