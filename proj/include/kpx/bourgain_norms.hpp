#ifndef KPX_BOURGAIN_NORMS_HPP
#define KPX_BOURGAIN_NORMS_HPP

#include <cmath>
#include <vector>

#include "kpx/common.hpp"
#include "kpx/fourier_field.hpp"
#include "kpx/phase_resonance.hpp"

namespace kpx {

enum class KWeight { homogeneous, bracket }; // |k|^s vs <k>^s

// Parameters of the X / Y / Z norm families. sigma-weight <sigma>^b, the
// y-weight <eta>^eps, the k-weight |k|^s or <k>^s, and the extra factor
// (1 + <sigma>/<k>^{alpha+1})^beta with beta >= 0.
struct NormParams {
    double s = 0.0;
    double eps = 0.0;
    double b = 0.0;
    double beta = 0.0;
    DispersionParams disp;
    KWeight k_weight = KWeight::homogeneous;

    NormParams() = default;
    NormParams(double s_, double eps_, double b_, double beta_ = 0.0,
               DispersionParams d = DispersionParams(2.0),
               KWeight kw = KWeight::homogeneous)
        : s(s_), eps(eps_), b(b_), beta(beta_), disp(d), k_weight(kw) {
        if (beta < 0.0) throw kpx_error("NormParams: beta must be >= 0");
    }

    NormParams with_b(double b_) const {
        NormParams q = *this;
        q.b = b_;
        return q;
    }
    NormParams with_beta(double beta_) const {
        NormParams q = *this;
        if (beta_ < 0.0) throw kpx_error("NormParams: beta must be >= 0");
        q.beta = beta_;
        return q;
    }
};

namespace detail {
inline void require_mean_zero(const SpaceTimeSpectrum& u, const char* who) {
    const GridSpec& g = u.grid();
    for (int e1 = -g.M; e1 <= g.M; ++e1)
        for (int e2 = -g.M; e2 <= g.M; ++e2)
            for (int j = -g.J; j <= g.J; ++j)
                if (u.at(0, e1, e2, j) != cplx(0.0, 0.0))
                    throw kpx_error(std::string(who) +
                                    ": nonzero k = 0 coefficient (mean-zero condition)");
}
} // namespace detail

// Full multiplicative weight of one lattice mode. k must be nonzero.
inline double norm_weight(const NormParams& p, const GridSpec& g, int k, int e1, int e2, int j) {
    double kb = (p.k_weight == KWeight::homogeneous) ? std::abs(double(k)) : bracket(double(k));
    double kw = (p.s == 0.0) ? 1.0 : std::pow(kb, p.s);
    double ew = (p.eps == 0.0) ? 1.0 : std::pow(bracket2(double(e1), double(e2)), p.eps);
    double sig = g.tau(j) - phi({k, e1, e2}, p.disp);
    double sb = bracket(sig);
    double sw = (p.b == 0.0) ? 1.0 : std::pow(sb, p.b);
    double bw = 1.0;
    if (p.beta != 0.0)
        bw = std::pow(1.0 + sb / std::pow(bracket(double(k)), p.disp.alpha + 1.0), p.beta);
    return kw * ew * sw * bw;
}

// Weight array aligned with the coefficient layout; zero on the k = 0 plane.
inline std::vector<double> make_weight_array(const GridSpec& g, const NormParams& p) {
    std::vector<double> w(g.total(), 0.0);
    size_t i = 0;
    for (int k = -g.K; k <= g.K; ++k)
        for (int e1 = -g.M; e1 <= g.M; ++e1)
            for (int e2 = -g.M; e2 <= g.M; ++e2)
                for (int j = -g.J; j <= g.J; ++j, ++i)
                    if (k != 0) w[i] = norm_weight(p, g, k, e1, e2, j);
    return w;
}

// X_{s,eps,b;beta} norm: weighted l^2 over the lattice.
inline double xsb_norm(const SpaceTimeSpectrum& u, const NormParams& p) {
    detail::require_mean_zero(u, "xsb_norm");
    const GridSpec& g = u.grid();
    double acc = 0.0;
    u.for_each([&](int k, int e1, int e2, int j, const cplx& v) {
        if (k == 0 || v == cplx(0.0, 0.0)) return;
        double w = norm_weight(p, g, k, e1, e2, j);
        acc += w * w * std::norm(v);
    });
    return std::sqrt(acc);
}

// Y_{s,eps;beta} norm: the same weights with <sigma>^{-1} in place of
// <sigma>^b, l^1 over the time frequency, then l^2 over xi.
inline double y_norm(const SpaceTimeSpectrum& u, const NormParams& p) {
    detail::require_mean_zero(u, "y_norm");
    const GridSpec& g = u.grid();
    NormParams q = p.with_b(-1.0);
    double acc = 0.0;
    const std::vector<cplx>& c = u.coeffs();
    size_t row = 0;
    for (int k = -g.K; k <= g.K; ++k)
        for (int e1 = -g.M; e1 <= g.M; ++e1)
            for (int e2 = -g.M; e2 <= g.M; ++e2, row += g.nj()) {
                if (k == 0) continue;
                double t = 0.0;
                for (int j = -g.J; j <= g.J; ++j) {
                    const cplx& v = c[row + size_t(j + g.J)];
                    if (v == cplx(0.0, 0.0)) continue;
                    t += norm_weight(q, g, k, e1, e2, j) * std::abs(v);
                }
                acc += t * t;
            }
    return std::sqrt(acc);
}

// Z_{s,eps;beta} = Y_{s,eps;beta} + X_{s,eps,-1/2;beta}.
inline double z_norm(const SpaceTimeSpectrum& u, const NormParams& p) {
    return y_norm(u, p) + xsb_norm(u, p.with_b(-0.5));
}

// l^2_xi l^p_tau of the weighted coefficients, 1 <= p <= 2.
inline double mixed_norm(const SpaceTimeSpectrum& u, const NormParams& p, double p_tau) {
    if (p_tau < 1.0 || p_tau > 2.0) throw kpx_error("mixed_norm: p must lie in [1,2]");
    detail::require_mean_zero(u, "mixed_norm");
    const GridSpec& g = u.grid();
    double acc = 0.0;
    const std::vector<cplx>& c = u.coeffs();
    size_t row = 0;
    for (int k = -g.K; k <= g.K; ++k)
        for (int e1 = -g.M; e1 <= g.M; ++e1)
            for (int e2 = -g.M; e2 <= g.M; ++e2, row += g.nj()) {
                if (k == 0) continue;
                double t = 0.0;
                for (int j = -g.J; j <= g.J; ++j) {
                    const cplx& v = c[row + size_t(j + g.J)];
                    if (v == cplx(0.0, 0.0)) continue;
                    double w = norm_weight(p, g, k, e1, e2, j) * std::abs(v);
                    t += std::pow(w, p_tau);
                }
                double lp = std::pow(t, 1.0 / p_tau);
                acc += lp * lp;
            }
    return std::sqrt(acc);
}

// Lambda^b: coefficient-wise multiplication by <sigma_j>^b. Identity on the
// (necessarily zero) k = 0 plane.
inline SpaceTimeSpectrum lambda_b(const SpaceTimeSpectrum& u, double b,
                                  const DispersionParams& disp) {
    SpaceTimeSpectrum out = u;
    const GridSpec& g = u.grid();
    out.for_each([&](int k, int e1, int e2, int j, cplx& v) {
        if (k == 0 || v == cplx(0.0, 0.0)) return;
        v *= std::pow(bracket(g.tau(j) - phi({k, e1, e2}, disp)), b);
    });
    return out;
}

} // namespace kpx

#endif
