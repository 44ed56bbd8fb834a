#ifndef KPX_BILINEAR_OPS_HPP
#define KPX_BILINEAR_OPS_HPP

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "kpx/common.hpp"
#include "kpx/fft.hpp"
#include "kpx/fourier_field.hpp"
#include "kpx/phase_resonance.hpp"

namespace kpx {

// Coefficient inner product <u,v> = sum u_hat conj(v_hat); equals the L^2
// space-time pairing under the unitary convention.
inline cplx inner_product(const SpaceTimeSpectrum& u, const SpaceTimeSpectrum& v) {
    if (!(u.grid() == v.grid())) throw shape_error("inner_product: grid mismatch");
    cplx s(0.0, 0.0);
    const std::vector<cplx>& a = u.coeffs();
    const std::vector<cplx>& b = v.coeffs();
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s;
}

// Spectrum of the complex conjugate field: c'(xi,j) = conj(c(-xi,-j)).
inline SpaceTimeSpectrum conj_field(const SpaceTimeSpectrum& u) {
    const GridSpec& g = u.grid();
    SpaceTimeSpectrum out(g);
    u.for_each([&](int k, int e1, int e2, int j, const cplx& v) {
        out.set(-k, -e1, -e2, -j, std::conj(v));
    });
    return out;
}

// <eta>^a multiplier (fractional y-derivative in the bracket convention).
inline SpaceTimeSpectrum dy_fractional(const SpaceTimeSpectrum& u, double a) {
    SpaceTimeSpectrum out = u;
    if (a == 0.0) return out;
    out.for_each([&](int, int e1, int e2, int, cplx& v) {
        if (v != cplx(0.0, 0.0)) v *= std::pow(bracket2(double(e1), double(e2)), a);
    });
    return out;
}

namespace detail {

struct SparseMode {
    int k, e1, e2, j;
    cplx c;
};

inline std::vector<SparseMode> gather_nonzero(const SpaceTimeSpectrum& u) {
    std::vector<SparseMode> out;
    u.for_each([&](int k, int e1, int e2, int j, const cplx& v) {
        if (v != cplx(0.0, 0.0)) out.push_back({k, e1, e2, j, v});
    });
    return out;
}

// Simple blocked parallel loop; iteration chunks are deterministic and each
// write target is owned by exactly one chunk.
template <typename F>
void parallel_over(int n, int threads, F&& body) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    int nt = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(size_t(nt));
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&, t]() {
            for (int i = t; i < n; i += nt) body(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

// ---------------------------------------------------------------------------
// bilinear_product: frequency convolution of u and v, truncated back to the
// common grid, with k = 0 output modes dropped. The direct path is the exact
// oracle; the padded-FFT path is alias-free on the retained band (each axis
// padded to 3B+1). Dispatch is by nonzero count.
// ---------------------------------------------------------------------------

inline SpaceTimeSpectrum bilinear_product_direct(const SpaceTimeSpectrum& u,
                                                 const SpaceTimeSpectrum& v) {
    if (!(u.grid() == v.grid())) throw shape_error("bilinear_product: grid mismatch");
    const GridSpec& g = u.grid();
    SpaceTimeSpectrum out(g);
    auto su = detail::gather_nonzero(u);
    auto sv = detail::gather_nonzero(v);
    for (const auto& a : su)
        for (const auto& b : sv) {
            int k = a.k + b.k;
            if (k == 0 || std::abs(k) > g.K) continue;
            int e1 = a.e1 + b.e1, e2 = a.e2 + b.e2, j = a.j + b.j;
            if (std::abs(e1) > g.M || std::abs(e2) > g.M || std::abs(j) > g.J) continue;
            out.add(k, e1, e2, j, a.c * b.c);
        }
    return out;
}

inline SpaceTimeSpectrum bilinear_product_fft(const SpaceTimeSpectrum& u,
                                              const SpaceTimeSpectrum& v) {
    if (!(u.grid() == v.grid())) throw shape_error("bilinear_product: grid mismatch");
    const GridSpec& g = u.grid();
    std::vector<int> dims = {3 * g.K + 1, 3 * g.M + 1, 3 * g.M + 1, 3 * g.J + 1};
    std::vector<cplx> a = inverse_transform(u, dims);
    {
        std::vector<cplx> b = inverse_transform(v, dims);
        for (size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
    }
    fft::forward(a, dims);
    double inv = 1.0 / double(a.size());

    SpaceTimeSpectrum out(g);
    for (int k = -g.K; k <= g.K; ++k) {
        if (k == 0) continue;
        for (int e1 = -g.M; e1 <= g.M; ++e1)
            for (int e2 = -g.M; e2 <= g.M; ++e2)
                for (int j = -g.J; j <= g.J; ++j) {
                    size_t src = ((size_t(detail::bin_of(k, dims[0])) * dims[1] +
                                   detail::bin_of(e1, dims[1])) *
                                      dims[2] +
                                  detail::bin_of(e2, dims[2])) *
                                     dims[3] +
                                 detail::bin_of(j, dims[3]);
                    out.set(k, e1, e2, j, a[src] * inv);
                }
    }
    return out;
}

inline constexpr double kDirectCrossover = 2.0e7; // nnz(u)*nnz(v) below this: direct sum

inline SpaceTimeSpectrum bilinear_product(const SpaceTimeSpectrum& u, const SpaceTimeSpectrum& v) {
    if (!(u.grid() == v.grid())) throw shape_error("bilinear_product: grid mismatch");
    double work = double(u.nnz()) * double(v.nnz());
    if (work <= kDirectCrossover) return bilinear_product_direct(u, v);
    return bilinear_product_fft(u, v);
}

// ---------------------------------------------------------------------------
// M^{-eps}: the weighted convolution with symbol <k1 eta - k eta1>^{-eps},
// restricted to k != 0 and truncated to the grid. eps = 0 reduces to the
// plain product. The weight depends only on the spatial indices, so the time
// axis is handled by padded FFTs while (k, eta) pairs are summed directly.
// ---------------------------------------------------------------------------

inline SpaceTimeSpectrum m_eps_apply_direct(const SpaceTimeSpectrum& u, const SpaceTimeSpectrum& v,
                                            double eps) {
    const GridSpec& g = u.grid();
    SpaceTimeSpectrum out(g);
    auto su = detail::gather_nonzero(u);
    auto sv = detail::gather_nonzero(v);
    for (const auto& a : su) {
        if (a.k == 0) continue;
        for (const auto& b : sv) {
            if (b.k == 0) continue;
            int k = a.k + b.k;
            if (k == 0 || std::abs(k) > g.K) continue;
            int e1 = a.e1 + b.e1, e2 = a.e2 + b.e2, j = a.j + b.j;
            if (std::abs(e1) > g.M || std::abs(e2) > g.M || std::abs(j) > g.J) continue;
            int64_t w1 = int64_t(a.k) * e1 - int64_t(k) * a.e1;
            int64_t w2 = int64_t(a.k) * e2 - int64_t(k) * a.e2;
            double wt = std::pow(1.0 + double(w1 * w1 + w2 * w2), -eps / 2.0);
            out.add(k, e1, e2, j, wt * (a.c * b.c));
        }
    }
    return out;
}

inline SpaceTimeSpectrum m_eps_apply_dense(const SpaceTimeSpectrum& u, const SpaceTimeSpectrum& v,
                                           double eps, int threads = 1) {
    const GridSpec& g = u.grid();
    const int K = g.K, M = g.M, J = g.J;
    const int ne = g.ne(), nj = g.nj();
    const int pj = 3 * J + 1;
    const size_t nsp = size_t(g.nk()) * ne * ne;
    const size_t rowlen = size_t(pj);

    // weight table over |k1 eta - k eta1|^2
    int64_t wmax = 2 * int64_t(K) * M;
    std::vector<double> wt(size_t(2 * wmax * wmax + 1));
    for (size_t q = 0; q < wt.size(); ++q) wt[q] = std::pow(1.0 + double(q), -eps / 2.0);

    // per-row padded time-axis transforms, then split into re/im planes so
    // the accumulation loop vectorizes
    auto lift = [&](const SpaceTimeSpectrum& f, std::vector<double>& re,
                    std::vector<double>& im) {
        std::vector<cplx> rows(nsp * rowlen, cplx(0.0, 0.0));
        const std::vector<cplx>& c = f.coeffs();
        for (size_t r = 0; r < nsp; ++r)
            for (int j = -J; j <= J; ++j)
                rows[r * rowlen + size_t(detail::bin_of(j, pj))] = c[r * nj + size_t(j + J)];
        fft::transform_last_axis(rows, int(nsp), pj, FFTW_BACKWARD);
        re.resize(nsp * rowlen);
        im.resize(nsp * rowlen);
        for (size_t i = 0; i < rows.size(); ++i) {
            re[i] = rows[i].real();
            im[i] = rows[i].imag();
        }
    };
    std::vector<double> Are, Aim, Bre, Bim;
    lift(u, Are, Aim);
    lift(v, Bre, Bim);
    std::vector<double> Cre(nsp * rowlen, 0.0), Cim(nsp * rowlen, 0.0);

    auto plane = [&](std::vector<double>& arr, int k) -> double* {
        return arr.data() + size_t(k + K) * ne * ne * rowlen;
    };

    detail::parallel_over(2 * K + 1, threads, [&](int kk) {
        int k = kk - K; // output k
        if (k == 0) return;
        double* cre_p = plane(Cre, k);
        double* cim_p = plane(Cim, k);
        for (int k1 = -K; k1 <= K; ++k1) {
            int k2 = k - k1;
            if (k1 == 0 || k2 == 0 || std::abs(k2) > K) continue;
            const double* are_p = plane(Are, k1);
            const double* aim_p = plane(Aim, k1);
            const double* bre_p = plane(Bre, k2);
            const double* bim_p = plane(Bim, k2);
            // loop order keeps the A row fixed innermost and walks B and C
            // rows contiguously; the weight argument steps linearly in eo2
            for (int eo1 = -M; eo1 <= M; ++eo1) {
                int lo1 = std::max(-M, eo1 - M), hi1 = std::min(M, eo1 + M);
                for (int e11 = lo1; e11 <= hi1; ++e11) {
                    int64_t w1 = int64_t(k1) * eo1 - int64_t(k) * e11;
                    int64_t w1sq = w1 * w1;
                    size_t arow_base = size_t(e11 + M) * ne;
                    size_t brow_base = size_t(eo1 - e11 + M) * ne;
                    size_t crow_base = size_t(eo1 + M) * ne;
                    for (int e12 = -M; e12 <= M; ++e12) {
                        const double* ar = are_p + (arow_base + size_t(e12 + M)) * rowlen;
                        const double* ai = aim_p + (arow_base + size_t(e12 + M)) * rowlen;
                        int lo2 = std::max(-M, e12 - M), hi2 = std::min(M, e12 + M);
                        int64_t w2 = int64_t(k1) * lo2 - int64_t(k) * e12;
                        for (int eo2 = lo2; eo2 <= hi2; ++eo2, w2 += k1) {
                            double w = wt[size_t(w1sq + w2 * w2)];
                            const double* br =
                                bre_p + (brow_base + size_t(eo2 - e12 + M)) * rowlen;
                            const double* bi =
                                bim_p + (brow_base + size_t(eo2 - e12 + M)) * rowlen;
                            double* cr = cre_p + (crow_base + size_t(eo2 + M)) * rowlen;
                            double* ci = cim_p + (crow_base + size_t(eo2 + M)) * rowlen;
                            for (int jf = 0; jf < pj; ++jf) {
                                cr[jf] += w * (ar[jf] * br[jf] - ai[jf] * bi[jf]);
                                ci[jf] += w * (ar[jf] * bi[jf] + ai[jf] * br[jf]);
                            }
                        }
                    }
                }
            }
        }
    });

    std::vector<cplx> C(nsp * rowlen);
    for (size_t i = 0; i < C.size(); ++i) C[i] = cplx(Cre[i], Cim[i]);
    fft::transform_last_axis(C, int(nsp), pj, FFTW_FORWARD);
    double inv = 1.0 / double(pj);
    SpaceTimeSpectrum out(g);
    std::vector<cplx>& oc = out.coeffs();
    for (size_t r = 0; r < nsp; ++r)
        for (int j = -J; j <= J; ++j)
            oc[r * nj + size_t(j + J)] = C[r * rowlen + size_t(detail::bin_of(j, pj))] * inv;
    return out;
}

inline SpaceTimeSpectrum m_eps_apply(const SpaceTimeSpectrum& u, const SpaceTimeSpectrum& v,
                                     double eps, int threads = 1) {
    if (!(u.grid() == v.grid())) throw shape_error("m_eps_apply: grid mismatch");
    if (eps < 0.0) throw kpx_error("m_eps_apply: eps must be >= 0");
    if (eps == 0.0) return bilinear_product(u, v);
    double work = double(u.nnz()) * double(v.nnz());
    if (work <= kDirectCrossover) return m_eps_apply_direct(u, v, eps);
    return m_eps_apply_dense(u, v, eps, threads);
}

// Accumulate the contribution of a single u-mode to a (possibly weighted)
// product against all modes of v: callback(output_index, delta). The
// incremental step behind greedy extremizer moves. eps < 0 means unweighted.
template <typename F>
void for_each_mode_product(FreqPoint xi1, int j1, cplx c1, const SpaceTimeSpectrum& v, double eps,
                           F&& emit) {
    const GridSpec& g = v.grid();
    if (c1 == cplx(0.0, 0.0)) return;
    v.for_each([&](int kb, int eb1, int eb2, int jb, const cplx& cb) {
        if (cb == cplx(0.0, 0.0)) return;
        int k = xi1.k + kb;
        if (k == 0 || std::abs(k) > g.K) return;
        int e1 = xi1.e1 + eb1, e2 = xi1.e2 + eb2, j = j1 + jb;
        if (std::abs(e1) > g.M || std::abs(e2) > g.M || std::abs(j) > g.J) return;
        cplx d = c1 * cb;
        if (eps > 0.0) {
            int64_t w1 = int64_t(xi1.k) * e1 - int64_t(k) * xi1.e1;
            int64_t w2 = int64_t(xi1.k) * e2 - int64_t(k) * xi1.e2;
            d *= std::pow(1.0 + double(w1 * w1 + w2 * w2), -eps / 2.0);
        }
        emit(v.index(k, e1, e2, j), d);
    });
}

// ---------------------------------------------------------------------------
// Free evolution e^{it phi(D)} u0, as a space-time spectrum on the window
// [0, Tw) (exact geometric-sum time DFT of the sampled phases) and as
// time-sampled spatial slices.
// ---------------------------------------------------------------------------

inline SpaceTimeSpectrum free_evolution(const SpatialSpectrum& u0, const DispersionParams& p,
                                        const GridSpec& g) {
    if (u0.K() != g.K || u0.M() != g.M) throw shape_error("free_evolution: grid mismatch");
    if (!u0.mean_zero()) throw kpx_error("free_evolution: data must be mean-zero");
    SpaceTimeSpectrum out(g);
    const int nt = g.nj();
    const double dt = g.Tw / nt;
    u0.for_each([&](int k, int e1, int e2, const cplx& c0) {
        if (k == 0 || c0 == cplx(0.0, 0.0)) return;
        double ph = phi({k, e1, e2}, p);
        // (1/nt) sum_m e^{i (ph - tau_j) m dt}: geometric series, summed
        // term by term near the removable singularity q = 1
        cplx top = std::polar(1.0, ph * g.Tw) - 1.0;
        for (int j = -g.J; j <= g.J; ++j) {
            double theta = (ph - g.tau(j)) * dt;
            cplx q = std::polar(1.0, theta);
            cplx gsum;
            if (std::abs(q - cplx(1.0, 0.0)) < 1e-6) {
                gsum = cplx(0.0, 0.0);
                for (int m = 0; m < nt; ++m) gsum += std::polar(1.0, theta * m);
                gsum /= double(nt);
            } else {
                gsum = top / (double(nt) * (q - 1.0));
            }
            out.set(k, e1, e2, j, c0 * gsum);
        }
    });
    return out;
}

inline std::vector<SpatialSpectrum> free_evolution_samples(const SpatialSpectrum& u0,
                                                           const DispersionParams& p,
                                                           const std::vector<double>& times) {
    if (!u0.mean_zero()) throw kpx_error("free_evolution_samples: data must be mean-zero");
    std::vector<SpatialSpectrum> out;
    out.reserve(times.size());
    for (double t : times) {
        SpatialSpectrum s(u0.K(), u0.M());
        u0.for_each([&](int k, int e1, int e2, const cplx& c0) {
            if (k == 0 || c0 == cplx(0.0, 0.0)) return;
            s.set(k, e1, e2, c0 * std::polar(1.0, t * phi({k, e1, e2}, p)));
        });
        out.push_back(std::move(s));
    }
    return out;
}

// Factorization of the linearized flow at fixed x-frequency k through the
// free 2-d Schroedinger group with time rescaled by 1/k:
//   F_x e^{it phi(D)} u0 (k, .) = e^{it phi0(k)} e^{i (t/k) Laplacian_y} F_x u0 (k, .).
// Returns the max absolute deviation between the two sides over eta.
inline double schrodinger_factorization_check(const SpatialSpectrum& u0, int k, double t,
                                              const DispersionParams& p) {
    if (k == 0 || std::abs(k) > u0.K())
        throw kpx_error("schrodinger_factorization_check: k must be nonzero and on the grid");
    double worst = 0.0;
    cplx lead = std::polar(1.0, t * phi0(k, p));
    for (int e1 = -u0.M(); e1 <= u0.M(); ++e1)
        for (int e2 = -u0.M(); e2 <= u0.M(); ++e2) {
            cplx c0 = u0.at(k, e1, e2);
            cplx lhs = c0 * std::polar(1.0, t * phi({k, e1, e2}, p));
            double eta2 = double(e1) * e1 + double(e2) * e2;
            cplx rhs = lead * std::polar(1.0, -(t / double(k)) * eta2) * c0;
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    return worst;
}

} // namespace kpx

#endif
