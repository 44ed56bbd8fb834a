#ifndef KPX_PHASE_RESONANCE_HPP
#define KPX_PHASE_RESONANCE_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "kpx/common.hpp"
#include "kpx/fourier_field.hpp"

namespace kpx {

// Dispersion exponent alpha >= 2 of the phase phi0(k) = |k|^alpha k.
struct DispersionParams {
    double alpha = 2.0;

    DispersionParams() = default;
    explicit DispersionParams(double a) : alpha(a) {
        if (a < 2.0) throw kpx_error("DispersionParams: alpha must be >= 2");
    }

    // alpha in {2, 4}: phi0 is an integer polynomial, evaluated exactly.
    bool integer_exact() const {
        double r = std::round(alpha);
        return r == alpha && (int64_t(r) % 2 == 0);
    }
};

inline double phi0(int k, const DispersionParams& p) {
    if (k == 0) throw kpx_error("phi0: k must be nonzero");
    if (p.integer_exact()) {
        int64_t a = int64_t(std::llround(p.alpha));
        int64_t v = k;
        for (int64_t i = 0; i < a; ++i) v *= std::abs(int64_t(k));
        return double(v);
    }
    return std::pow(std::abs(double(k)), p.alpha) * double(k);
}

// phi(xi) = phi0(k) - |eta|^2 / k.
inline double phi(FreqPoint xi, const DispersionParams& p) {
    if (xi.k == 0) throw kpx_error("phi: k must be nonzero");
    return phi0(xi.k, p) - xi.eta_norm2() / double(xi.k);
}

// Modulation sigma = tau - phi(xi).
inline double sigma(double tau, FreqPoint xi, const DispersionParams& p) {
    return tau - phi(xi, p);
}

// Exact decomposition sigma1 + sigma2 - sigma = r(k,k1) + |k eta1 - k1 eta|^2 / (k k1 k2)
// for the interaction xi = xi1 + xi2. Both terms carry the same sign.
struct ResonanceSplit {
    double r_term = 0.0;
    double mixed_term = 0.0;
    double total = 0.0;
};

inline ResonanceSplit resonance_decomposition(FreqPoint xi1, FreqPoint xi2,
                                              const DispersionParams& p) {
    int k1 = xi1.k, k2 = xi2.k, k = k1 + k2;
    if (k1 == 0 || k2 == 0) throw kpx_error("resonance_decomposition: k1, k2 must be nonzero");
    if (k == 0) throw kpx_error("resonance_decomposition: resonant null interaction (k1 + k2 = 0)");

    ResonanceSplit out;
    out.r_term = phi0(k, p) - phi0(k1, p) - phi0(k2, p);

    FreqPoint xi = xi1 + xi2;
    int64_t w1 = int64_t(k) * xi1.e1 - int64_t(k1) * xi.e1;
    int64_t w2 = int64_t(k) * xi1.e2 - int64_t(k1) * xi.e2;
    out.mixed_term = double(w1 * w1 + w2 * w2) / (double(k) * double(k1) * double(k2));
    out.total = out.r_term + out.mixed_term;
    return out;
}

// Observed bracket of |r(k,k1)| / (|k_max|^alpha |k_min|) over a sample of
// interacting pairs; k_max, k_min range over all three of |k|, |k1|, |k2|.
struct RTermMagnitudeReport {
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    size_t samples = 0;
};

inline RTermMagnitudeReport
r_term_magnitude_check(const std::vector<std::pair<int, int>>& ks, const DispersionParams& p) {
    RTermMagnitudeReport rep;
    bool first = true;
    for (auto [k1, k2] : ks) {
        int k = k1 + k2;
        if (k1 == 0 || k2 == 0 || k == 0) throw kpx_error("r_term_magnitude_check: zero k");
        double r = phi0(k, p) - phi0(k1, p) - phi0(k2, p);
        double a1 = std::abs(double(k)), a2 = std::abs(double(k1)), a3 = std::abs(double(k2));
        double kmax = std::max({a1, a2, a3});
        double kmin = std::min({a1, a2, a3});
        double ratio = std::abs(r) / (std::pow(kmax, p.alpha) * kmin);
        if (first) {
            rep.min_ratio = rep.max_ratio = ratio;
            first = false;
        } else {
            rep.min_ratio = std::min(rep.min_ratio, ratio);
            rep.max_ratio = std::max(rep.max_ratio, ratio);
        }
        ++rep.samples;
    }
    return rep;
}

// max{|sigma|, |sigma1|, |sigma2|} together with the resonance lower bound
// (|k_min| |k_max|^alpha + |k eta1 - k1 eta|^2 / |k k1 k2|) / 3. The exact
// pigeonhole max >= |sigma1 + sigma2 - sigma| / 3 always holds.
struct SigmaBoundReport {
    double max_sigma = 0.0;
    double bound = 0.0;
    double pigeonhole = 0.0; // |total| / 3
    bool ok = false;
};

inline SigmaBoundReport max_sigma_lower_bound(FreqPoint xi1, FreqPoint xi2, double tau1,
                                              double tau2, const DispersionParams& p) {
    ResonanceSplit split = resonance_decomposition(xi1, xi2, p);
    FreqPoint xi = xi1 + xi2;
    double s1 = sigma(tau1, xi1, p);
    double s2 = sigma(tau2, xi2, p);
    double s = sigma(tau1 + tau2, xi, p);

    SigmaBoundReport rep;
    rep.max_sigma = std::max({std::abs(s), std::abs(s1), std::abs(s2)});
    double a1 = std::abs(double(xi.k)), a2 = std::abs(double(xi1.k)), a3 = std::abs(double(xi2.k));
    double kmax = std::max({a1, a2, a3});
    double kmin = std::min({a1, a2, a3});
    rep.bound = (kmin * std::pow(kmax, p.alpha) + std::abs(split.mixed_term)) / 3.0;
    rep.pigeonhole = std::abs(split.total) / 3.0;
    rep.ok = rep.max_sigma >= rep.pigeonhole * (1.0 - 1e-12);
    return rep;
}

} // namespace kpx

#endif
