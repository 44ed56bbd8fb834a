#ifndef KPX_FOURIER_FIELD_HPP
#define KPX_FOURIER_FIELD_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "kpx/common.hpp"
#include "kpx/fft.hpp"

namespace kpx {

// Integer frequency (k, eta) in Z x Z^2. k is the x-frequency, eta the pair
// of y-frequencies. The mean-zero sector is k != 0.
struct FreqPoint {
    int k = 0;
    int e1 = 0;
    int e2 = 0;

    friend FreqPoint operator+(FreqPoint a, FreqPoint b) {
        return {a.k + b.k, a.e1 + b.e1, a.e2 + b.e2};
    }
    friend FreqPoint operator-(FreqPoint a) { return {-a.k, -a.e1, -a.e2}; }
    friend bool operator==(FreqPoint a, FreqPoint b) {
        return a.k == b.k && a.e1 == b.e1 && a.e2 == b.e2;
    }
    double eta_norm2() const { return double(e1) * e1 + double(e2) * e2; }
};

// Truncated lattice bounds: |k| <= K, |eta_i| <= M, |j| <= J, with the
// discrete time frequencies tau_j = 2 pi j / Tw on the window [0, Tw).
struct GridSpec {
    int K = 4;
    int M = 4;
    int J = 4;
    double Tw = 2.0 * M_PI;

    GridSpec() = default;
    GridSpec(int K_, int M_, int J_, double Tw_ = 2.0 * M_PI) : K(K_), M(M_), J(J_), Tw(Tw_) {
        if (K < 1 || M < 1 || J < 1 || Tw <= 0.0)
            throw kpx_error("GridSpec: bounds must be >= 1 and Tw > 0");
    }

    int nk() const { return 2 * K + 1; }
    int ne() const { return 2 * M + 1; }
    int nj() const { return 2 * J + 1; }
    size_t total() const { return size_t(nk()) * ne() * ne() * nj(); }
    double tau(int j) const { return 2.0 * M_PI * j / Tw; }

    bool contains(FreqPoint xi) const {
        return std::abs(xi.k) <= K && std::abs(xi.e1) <= M && std::abs(xi.e2) <= M;
    }
    friend bool operator==(const GridSpec& a, const GridSpec& b) {
        return a.K == b.K && a.M == b.M && a.J == b.J && a.Tw == b.Tw;
    }
};

// Space-time Fourier coefficients on the truncated lattice, row-major over
// (k, eta1, eta2, j) with j contiguous. Values are immutable by convention
// once an operation has produced them; all operations return new values.
class SpaceTimeSpectrum {
  public:
    SpaceTimeSpectrum() : grid_(), c_(grid_.total(), cplx(0.0, 0.0)) {}
    explicit SpaceTimeSpectrum(const GridSpec& g) : grid_(g), c_(g.total(), cplx(0.0, 0.0)) {}

    const GridSpec& grid() const { return grid_; }
    const std::vector<cplx>& coeffs() const { return c_; }
    std::vector<cplx>& coeffs() { return c_; }

    size_t index(int k, int e1, int e2, int j) const {
        return ((size_t(k + grid_.K) * grid_.ne() + size_t(e1 + grid_.M)) * grid_.ne() +
                size_t(e2 + grid_.M)) *
                   grid_.nj() +
               size_t(j + grid_.J);
    }
    cplx at(int k, int e1, int e2, int j) const { return c_[index(k, e1, e2, j)]; }
    void set(int k, int e1, int e2, int j, cplx v) { c_[index(k, e1, e2, j)] = v; }
    void add(int k, int e1, int e2, int j, cplx v) { c_[index(k, e1, e2, j)] += v; }

    size_t nnz() const {
        size_t n = 0;
        for (const cplx& z : c_)
            if (z != cplx(0.0, 0.0)) ++n;
        return n;
    }

    double l2_norm() const {
        double s = 0.0;
        for (const cplx& z : c_) s += std::norm(z);
        return std::sqrt(s);
    }

    // coeff(-k,-eta,-j) == conj(coeff(k,eta,j)) up to `tol`, i.e. the field is
    // real-valued in physical space.
    double conj_symmetry_error() const {
        double worst = 0.0;
        const GridSpec& g = grid_;
        for (int k = -g.K; k <= g.K; ++k)
            for (int e1 = -g.M; e1 <= g.M; ++e1)
                for (int e2 = -g.M; e2 <= g.M; ++e2)
                    for (int j = -g.J; j <= g.J; ++j) {
                        cplx d = at(k, e1, e2, j) - std::conj(at(-k, -e1, -e2, -j));
                        worst = std::max(worst, std::abs(d));
                    }
        return worst;
    }

    template <typename F> // F(k,e1,e2,j, cplx&) applied to every slot
    void for_each(F&& f) {
        const GridSpec& g = grid_;
        size_t i = 0;
        for (int k = -g.K; k <= g.K; ++k)
            for (int e1 = -g.M; e1 <= g.M; ++e1)
                for (int e2 = -g.M; e2 <= g.M; ++e2)
                    for (int j = -g.J; j <= g.J; ++j) f(k, e1, e2, j, c_[i++]);
    }
    template <typename F>
    void for_each(F&& f) const {
        const GridSpec& g = grid_;
        size_t i = 0;
        for (int k = -g.K; k <= g.K; ++k)
            for (int e1 = -g.M; e1 <= g.M; ++e1)
                for (int e2 = -g.M; e2 <= g.M; ++e2)
                    for (int j = -g.J; j <= g.J; ++j) f(k, e1, e2, j, c_[i++]);
    }

  private:
    GridSpec grid_;
    std::vector<cplx> c_;
};

// Purely spatial coefficients (k, eta1, eta2); the solver state and the
// initial-data representation.
class SpatialSpectrum {
  public:
    SpatialSpectrum() : K_(4), M_(4), c_(size_t(9) * 9 * 9, cplx(0.0, 0.0)) {}
    SpatialSpectrum(int K, int M) : K_(K), M_(M) {
        if (K < 1 || M < 1) throw kpx_error("SpatialSpectrum: bounds must be >= 1");
        c_.assign(size_t(nk()) * ne() * ne(), cplx(0.0, 0.0));
    }

    int K() const { return K_; }
    int M() const { return M_; }
    int nk() const { return 2 * K_ + 1; }
    int ne() const { return 2 * M_ + 1; }
    size_t total() const { return c_.size(); }
    const std::vector<cplx>& coeffs() const { return c_; }
    std::vector<cplx>& coeffs() { return c_; }

    size_t index(int k, int e1, int e2) const {
        return (size_t(k + K_) * ne() + size_t(e1 + M_)) * ne() + size_t(e2 + M_);
    }
    cplx at(int k, int e1, int e2) const { return c_[index(k, e1, e2)]; }
    void set(int k, int e1, int e2, cplx v) { c_[index(k, e1, e2)] = v; }
    void add(int k, int e1, int e2, cplx v) { c_[index(k, e1, e2)] += v; }

    double l2_norm() const {
        double s = 0.0;
        for (const cplx& z : c_) s += std::norm(z);
        return std::sqrt(s);
    }

    double conj_symmetry_error() const {
        double worst = 0.0;
        for (int k = -K_; k <= K_; ++k)
            for (int e1 = -M_; e1 <= M_; ++e1)
                for (int e2 = -M_; e2 <= M_; ++e2) {
                    cplx d = at(k, e1, e2) - std::conj(at(-k, -e1, -e2));
                    worst = std::max(worst, std::abs(d));
                }
        return worst;
    }

    bool mean_zero() const {
        for (int e1 = -M_; e1 <= M_; ++e1)
            for (int e2 = -M_; e2 <= M_; ++e2)
                if (at(0, e1, e2) != cplx(0.0, 0.0)) return false;
        return true;
    }

    template <typename F>
    void for_each(F&& f) {
        size_t i = 0;
        for (int k = -K_; k <= K_; ++k)
            for (int e1 = -M_; e1 <= M_; ++e1)
                for (int e2 = -M_; e2 <= M_; ++e2) f(k, e1, e2, c_[i++]);
    }
    template <typename F>
    void for_each(F&& f) const {
        size_t i = 0;
        for (int k = -K_; k <= K_; ++k)
            for (int e1 = -M_; e1 <= M_; ++e1)
                for (int e2 = -M_; e2 <= M_; ++e2) f(k, e1, e2, c_[i++]);
    }

  private:
    int K_, M_;
    std::vector<cplx> c_;
};

namespace detail {
// DFT bin of frequency f on an n-point axis.
inline int bin_of(int f, int n) { return (f % n + n) % n; }
} // namespace detail

// ---------------------------------------------------------------------------
// Transforms. Unitary convention: with the normalized measure
// dx dy dt / ((2 pi)^3 Tw), u(x,y,t) = sum c(k,eta,j) e^{i(kx + eta.y + tau_j t)}
// and Parseval holds with constant 1. Samples are row-major [x][y1][y2][t];
// each dimension may be the exact size (2B+1) or any larger (padded) size.
// ---------------------------------------------------------------------------

inline SpaceTimeSpectrum forward_transform(const std::vector<cplx>& samples,
                                           const std::vector<int>& dims, const GridSpec& g) {
    if (dims.size() != 4) throw shape_error("forward_transform: need 4 dimensions");
    if (dims[0] < g.nk() || dims[1] < g.ne() || dims[2] < g.ne() || dims[3] < g.nj())
        throw shape_error("forward_transform: sample dimensions smaller than the grid");
    size_t total = size_t(dims[0]) * dims[1] * dims[2] * dims[3];
    if (samples.size() != total) throw shape_error("forward_transform: sample count mismatch");

    std::vector<cplx> work = samples;
    fft::forward(work, dims);
    double inv = 1.0 / double(total);

    SpaceTimeSpectrum out(g);
    for (int k = -g.K; k <= g.K; ++k)
        for (int e1 = -g.M; e1 <= g.M; ++e1)
            for (int e2 = -g.M; e2 <= g.M; ++e2)
                for (int j = -g.J; j <= g.J; ++j) {
                    size_t src = ((size_t(detail::bin_of(k, dims[0])) * dims[1] +
                                   detail::bin_of(e1, dims[1])) *
                                      dims[2] +
                                  detail::bin_of(e2, dims[2])) *
                                     dims[3] +
                                 detail::bin_of(j, dims[3]);
                    out.set(k, e1, e2, j, work[src] * inv);
                }
    return out;
}

// Inverse transform onto a (possibly oversampled) sample grid.
inline std::vector<cplx> inverse_transform(const SpaceTimeSpectrum& u,
                                           const std::vector<int>& dims) {
    const GridSpec& g = u.grid();
    if (dims.size() != 4) throw shape_error("inverse_transform: need 4 dimensions");
    if (dims[0] < g.nk() || dims[1] < g.ne() || dims[2] < g.ne() || dims[3] < g.nj())
        throw shape_error("inverse_transform: sample dimensions smaller than the grid");
    size_t total = size_t(dims[0]) * dims[1] * dims[2] * dims[3];
    std::vector<cplx> work(total, cplx(0.0, 0.0));
    u.for_each([&](int k, int e1, int e2, int j, const cplx& v) {
        if (v == cplx(0.0, 0.0)) return;
        size_t dst =
            ((size_t(detail::bin_of(k, dims[0])) * dims[1] + detail::bin_of(e1, dims[1])) *
                 dims[2] +
             detail::bin_of(e2, dims[2])) *
                dims[3] +
            detail::bin_of(j, dims[3]);
        work[dst] = v;
    });
    fft::backward(work, dims);
    return work;
}

// Spatial (3-d) versions used by the solver.
inline std::vector<cplx> spatial_to_physical(const SpatialSpectrum& u,
                                             const std::vector<int>& dims) {
    if (dims.size() != 3) throw shape_error("spatial_to_physical: need 3 dimensions");
    if (dims[0] < u.nk() || dims[1] < u.ne() || dims[2] < u.ne())
        throw shape_error("spatial_to_physical: dimensions smaller than the grid");
    size_t total = size_t(dims[0]) * dims[1] * dims[2];
    std::vector<cplx> work(total, cplx(0.0, 0.0));
    u.for_each([&](int k, int e1, int e2, const cplx& v) {
        if (v == cplx(0.0, 0.0)) return;
        size_t dst = (size_t(detail::bin_of(k, dims[0])) * dims[1] + detail::bin_of(e1, dims[1])) *
                         dims[2] +
                     detail::bin_of(e2, dims[2]);
        work[dst] = v;
    });
    fft::backward(work, dims);
    return work;
}

inline SpatialSpectrum physical_to_spatial(const std::vector<cplx>& samples,
                                           const std::vector<int>& dims, int K, int M) {
    if (dims.size() != 3) throw shape_error("physical_to_spatial: need 3 dimensions");
    size_t total = size_t(dims[0]) * dims[1] * dims[2];
    if (samples.size() != total) throw shape_error("physical_to_spatial: sample count mismatch");
    std::vector<cplx> work = samples;
    fft::forward(work, dims);
    double inv = 1.0 / double(total);
    SpatialSpectrum out(K, M);
    for (int k = -K; k <= K; ++k)
        for (int e1 = -M; e1 <= M; ++e1)
            for (int e2 = -M; e2 <= M; ++e2) {
                size_t src =
                    (size_t(detail::bin_of(k, dims[0])) * dims[1] + detail::bin_of(e1, dims[1])) *
                        dims[2] +
                    detail::bin_of(e2, dims[2]);
                out.set(k, e1, e2, work[src] * inv);
            }
    return out;
}

// ---------------------------------------------------------------------------
// Projections. All are coefficient-wise 0/1 multipliers, hence idempotent,
// self-adjoint and contractive.
// ---------------------------------------------------------------------------

inline SpaceTimeSpectrum project_mean_zero(const SpaceTimeSpectrum& u) {
    SpaceTimeSpectrum out = u;
    const GridSpec& g = u.grid();
    for (int e1 = -g.M; e1 <= g.M; ++e1)
        for (int e2 = -g.M; e2 <= g.M; ++e2)
            for (int j = -g.J; j <= g.J; ++j) out.set(0, e1, e2, j, cplx(0.0, 0.0));
    return out;
}

inline SpatialSpectrum project_mean_zero(const SpatialSpectrum& u) {
    SpatialSpectrum out = u;
    for (int e1 = -u.M(); e1 <= u.M(); ++e1)
        for (int e2 = -u.M(); e2 <= u.M(); ++e2) out.set(0, e1, e2, cplx(0.0, 0.0));
    return out;
}

// P_l: keep |eta| <= 2^l.
inline SpaceTimeSpectrum project_ball(const SpaceTimeSpectrum& u, int l) {
    if (l < 0) throw kpx_error("project_ball: l must be >= 0");
    SpaceTimeSpectrum out = u;
    double r2 = std::pow(4.0, l);
    out.for_each([&](int, int e1, int e2, int, cplx& v) {
        if (double(e1) * e1 + double(e2) * e2 > r2) v = cplx(0.0, 0.0);
    });
    return out;
}

// P_{Delta l} = P_l - P_{l-1}; P_{Delta 0} = P_0.
inline SpaceTimeSpectrum project_shell(const SpaceTimeSpectrum& u, int l) {
    if (l < 0) throw kpx_error("project_shell: l must be >= 0");
    SpaceTimeSpectrum out = u;
    double hi = std::pow(4.0, l);
    double lo = (l == 0) ? -1.0 : std::pow(4.0, l - 1);
    out.for_each([&](int, int e1, int e2, int, cplx& v) {
        double n2 = double(e1) * e1 + double(e2) * e2;
        if (!(n2 > lo && n2 <= hi)) v = cplx(0.0, 0.0);
    });
    return out;
}

// Square tile membership at scale 2^l. Half-open, lower-closed boxes
// [2^l a_i - 2^{l-1}, 2^l a_i + 2^{l-1}) tile Z^2 exactly; the widened
// variant doubles the sidelength around the same centers.
inline bool in_square_tile(int e1, int e2, int l, int a1, int a2, bool widened) {
    int64_t s = int64_t(1) << l; // sidelength of the base tile
    // base: s*a - s/2 <= e < s*a + s/2 with half-integer bounds at l = 0
    // widened: s*a - s <= e < s*a + s
    // compare 2e against integer bounds to stay exact at l = 0
    int64_t c1 = 2 * s * a1, c2 = 2 * s * a2;
    int64_t half = widened ? 2 * s : s;
    return (2 * e1 >= c1 - half) && (2 * e1 < c1 + half) && (2 * e2 >= c2 - half) &&
           (2 * e2 < c2 + half);
}

// The unique non-widened tile containing eta at scale 2^l:
// alpha_i = floor((2 eta_i + s) / (2 s)) with s = 2^l.
inline std::pair<int, int> square_tile_of(int e1, int e2, int l) {
    if (l == 0) return {e1, e2};
    int64_t s = int64_t(1) << l;
    auto fdiv = [](int64_t a, int64_t b) {
        int64_t q = a / b, r = a % b;
        return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
    };
    return {int(fdiv(2 * e1 + s, 2 * s)), int(fdiv(2 * e2 + s, 2 * s))};
}

inline SpaceTimeSpectrum project_square(const SpaceTimeSpectrum& u, int l, int a1, int a2,
                                        bool widened = false) {
    if (l < 0) throw kpx_error("project_square: l must be >= 0");
    SpaceTimeSpectrum out = u;
    out.for_each([&](int, int e1, int e2, int, cplx& v) {
        if (!in_square_tile(e1, e2, l, a1, a2, widened)) v = cplx(0.0, 0.0);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Lebesgue norms over T^3 x [0, Tw) with the normalized measure, computed
// from oversampled physical samples. The default oversampling factor 2 makes
// the quadrature exact for p in {2, 4} (|u|^2 and |u|^4 of a band-limited
// field stay below the sampled bandwidth); other p are plain Riemann sums.
// ---------------------------------------------------------------------------

inline double lebesgue_norm(const SpaceTimeSpectrum& u, double p, int oversample = 2) {
    if (p < 1.0) throw kpx_error("lebesgue_norm: p must be >= 1");
    if (oversample < 1) throw kpx_error("lebesgue_norm: oversample must be >= 1");
    const GridSpec& g = u.grid();
    int nx = oversample * g.nk(), ny = oversample * g.ne(), nt = oversample * g.nj();

    // Stage 1: pad and invert the time axis only; j is contiguous.
    size_t nsp = size_t(g.nk()) * g.ne() * g.ne();
    std::vector<cplx> tline(nsp * nt, cplx(0.0, 0.0));
    {
        const std::vector<cplx>& c = u.coeffs();
        for (size_t m = 0; m < nsp; ++m)
            for (int j = -g.J; j <= g.J; ++j)
                tline[m * nt + detail::bin_of(j, nt)] = c[m * g.nj() + size_t(j + g.J)];
        fft::transform_last_axis(tline, int(nsp), nt, FFTW_BACKWARD);
    }

    // Stage 2: per time slice, invert the spatial axes and accumulate.
    bool is_inf = std::isinf(p);
    double acc = 0.0, peak = 0.0;
    std::vector<int> sdims = {nx, ny, ny};
    std::vector<cplx> slice(size_t(nx) * ny * ny);
    for (int t = 0; t < nt; ++t) {
        std::fill(slice.begin(), slice.end(), cplx(0.0, 0.0));
        size_t m = 0;
        for (int k = -g.K; k <= g.K; ++k)
            for (int e1 = -g.M; e1 <= g.M; ++e1)
                for (int e2 = -g.M; e2 <= g.M; ++e2) {
                    cplx v = tline[m * nt + t];
                    ++m;
                    if (v == cplx(0.0, 0.0)) continue;
                    size_t dst = (size_t(detail::bin_of(k, nx)) * ny + detail::bin_of(e1, ny)) *
                                     ny +
                                 detail::bin_of(e2, ny);
                    slice[dst] = v;
                }
        fft::backward(slice, sdims);
        if (is_inf) {
            for (const cplx& z : slice) peak = std::max(peak, std::abs(z));
        } else {
            for (const cplx& z : slice) acc += std::pow(std::abs(z), p);
        }
    }
    if (is_inf) return peak;
    double mean = acc / (double(nx) * ny * ny * nt);
    return std::pow(mean, 1.0 / p);
}

} // namespace kpx

#endif
