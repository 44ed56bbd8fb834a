#ifndef KPX_KP_SOLVER_HPP
#define KPX_KP_SOLVER_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "kpx/bilinear_ops.hpp"
#include "kpx/bourgain_norms.hpp"
#include "kpx/fourier_field.hpp"
#include "kpx/phase_resonance.hpp"

namespace kpx {

enum class Scheme { integrating_factor_rk4, etdrk4 };

struct SolverConfig {
    DispersionParams disp{2.0};
    int K = 16, M = 16;
    double dt = 1e-3;
    double t_end = 1.0;
    Scheme scheme = Scheme::etdrk4;
    double dealias = 2.0 / 3.0;
    int picard_depth = 6;
    bool nonlinear = true;
    int state_stride = 0; // checkpoint every this many steps; 0: 16 checkpoints

    void check() const {
        if (K < 1 || M < 1) throw kpx_error("SolverConfig: K, M must be >= 1");
        if (dt <= 0.0 || t_end <= 0.0) throw kpx_error("SolverConfig: dt, t_end must be > 0");
        if (!(dealias > 0.0 && dealias <= 1.0))
            throw kpx_error("SolverConfig: dealias fraction must lie in (0, 1]");
    }
};

struct StepDiagnostics {
    double t = 0.0;
    double l2 = 0.0;
    double drift = 0.0;    // |l2 - l2(0)| / l2(0)
    double energy = 0.0;   // quadratic dispersive part + cubic term
    double max_mode = 0.0; // max |u_hat|
};

struct Trajectory {
    std::vector<double> times;            // checkpoint times
    std::vector<SpatialSpectrum> states;  // checkpoints (always includes first and last)
    std::vector<StepDiagnostics> diagnostics; // one record per step, plus t = 0
};

inline double l2_drift(const Trajectory& traj) {
    double worst = 0.0;
    for (const auto& d : traj.diagnostics) worst = std::max(worst, d.drift);
    return worst;
}

// ---------------------------------------------------------------------------
// Pseudospectral stepper. The linear flow e^{it phi(D)} is applied exactly
// mode-wise; the quadratic term is evaluated in physical space under the 2/3
// dealiasing rule. ETDRK4 weights use contour averaging near z = 0.
// ---------------------------------------------------------------------------

class KpSolver {
  public:
    explicit KpSolver(const SolverConfig& cfg) : cfg_(cfg) {
        cfg_.check();
        nk_ = 2 * cfg_.K + 1;
        ne_ = 2 * cfg_.M + 1;
        n_ = size_t(nk_) * ne_ * ne_;
        dims_ = {nk_, ne_, ne_};
        build_tables();
    }

    const SolverConfig& config() const { return cfg_; }

    // advective CFL-style bound dt <= 1 / (k_band * max |u|)
    double stability_bound(const SpatialSpectrum& u) const {
        double umax = 0.0;
        for (const cplx& z : spatial_to_physical(u, dims_)) umax = std::max(umax, std::abs(z));
        int kd = std::max(1, int(std::floor(cfg_.dealias * cfg_.K)));
        return 1.0 / std::max(1e-12, double(kd) * umax);
    }

    // -(i k / 2) F(u^2), dealiased; the quadratic term of the evolution
    SpatialSpectrum rhs_nonlinear(const SpatialSpectrum& u) const {
        check_grid(u);
        SpatialSpectrum out(cfg_.K, cfg_.M);
        nonlinear_raw(u.coeffs(), out.coeffs());
        return out;
    }

    // restriction to the retained (dealiased) band; solver states live there
    SpatialSpectrum dealias_mask(const SpatialSpectrum& u) const {
        check_grid(u);
        SpatialSpectrum out = u;
        for (size_t i = 0; i < n_; ++i) out.coeffs()[i] *= mask_[i];
        return out;
    }

    SpatialSpectrum step(const SpatialSpectrum& u) const {
        check_grid(u);
        SpatialSpectrum out(cfg_.K, cfg_.M);
        step_raw(u.coeffs(), out.coeffs());
        return out;
    }

    StepDiagnostics diagnostics(const SpatialSpectrum& u, double t, double l2_ref) const {
        StepDiagnostics d;
        d.t = t;
        d.l2 = u.l2_norm();
        d.drift = l2_ref > 0.0 ? std::abs(d.l2 - l2_ref) / l2_ref : 0.0;
        // conserved Hamiltonian: 1/2 sum (|k|^alpha - |eta|^2/k^2) |u_hat|^2
        // minus the cubic term / 6
        double quad = 0.0, maxmode = 0.0;
        u.for_each([&](int k, int e1, int e2, const cplx& v) {
            maxmode = std::max(maxmode, std::abs(v));
            if (k == 0 || v == cplx(0.0, 0.0)) return;
            double eta2 = double(e1) * e1 + double(e2) * e2;
            quad += 0.5 *
                    (std::pow(std::abs(double(k)), cfg_.disp.alpha) - eta2 / (double(k) * k)) *
                    std::norm(v);
        });
        // cubic term on the exact grid: alias-free for dealiased states,
        // whose cube stays below the grid bandwidth
        double cubic = 0.0;
        {
            auto phys = spatial_to_physical(u, dims_);
            for (const cplx& z : phys) cubic += std::real(z) * std::real(z) * std::real(z);
            cubic /= double(phys.size());
        }
        d.energy = quad - cubic / 6.0;
        d.max_mode = maxmode;
        return d;
    }

    using StepCallback = std::function<void(int step, double t, const SpatialSpectrum&)>;

    Trajectory solve_cauchy(const SpatialSpectrum& u0, const StepCallback& cb = {}) const {
        check_grid(u0);
        if (!u0.mean_zero()) throw kpx_error("solve_cauchy: data must be mean-zero");
        if (u0.conj_symmetry_error() > 1e-10 * std::max(1.0, u0.l2_norm()))
            throw kpx_error("solve_cauchy: data must be real (conjugate-symmetric)");
        double bound = stability_bound(u0);
        if (cfg_.dt > bound)
            throw kpx_error("solve_cauchy: dt " + std::to_string(cfg_.dt) +
                            " exceeds the stability bound " + std::to_string(bound));

        int nsteps = int(std::llround(cfg_.t_end / cfg_.dt));
        if (nsteps < 1) nsteps = 1;
        int stride = cfg_.state_stride > 0 ? cfg_.state_stride
                                           : std::max(1, nsteps / 16);

        Trajectory traj;
        SpatialSpectrum u = dealias_mask(u0);
        double l2_ref = u.l2_norm();
        traj.diagnostics.push_back(diagnostics(u, 0.0, l2_ref));
        traj.times.push_back(0.0);
        traj.states.push_back(u);
        for (int s = 1; s <= nsteps; ++s) {
            u = step(u);
            double t = s * cfg_.dt;
            const auto& c = u.coeffs();
            for (const cplx& z : c)
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                    throw kpx_error("solve_cauchy: instability detected at step " +
                                    std::to_string(s));
            traj.diagnostics.push_back(diagnostics(u, t, l2_ref));
            if (cb) cb(s, t, u);
            if (s % stride == 0 || s == nsteps) {
                traj.times.push_back(t);
                traj.states.push_back(u);
            }
        }
        return traj;
    }

  private:
    void check_grid(const SpatialSpectrum& u) const {
        if (u.K() != cfg_.K || u.M() != cfg_.M) throw shape_error("KpSolver: grid mismatch");
    }

    // ETDRK4 scalar weights via the closed forms, contour-averaged near 0
    static cplx phi_weight(cplx z, int which, int contour_points = 32) {
        auto f = [&](cplx w) -> cplx {
            cplx ew = std::exp(w);
            switch (which) {
                case 0: return (std::exp(w / 2.0) - 1.0) / w;                      // Q / h
                case 1: return (-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / (w * w * w);
                case 2: return (2.0 + w + ew * (-2.0 + w)) / (w * w * w);
                case 3: return (-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / (w * w * w);
            }
            return {0.0, 0.0};
        };
        if (std::abs(z) >= 0.5) return f(z);
        cplx acc(0.0, 0.0);
        for (int m = 0; m < contour_points; ++m) {
            double th = 2.0 * M_PI * (m + 0.5) / contour_points;
            acc += f(z + std::polar(1.0, th));
        }
        return acc / double(contour_points);
    }

    void build_tables() {
        E_.assign(n_, cplx(0.0, 0.0));
        E2_.assign(n_, cplx(0.0, 0.0));
        Q_.assign(n_, cplx(0.0, 0.0));
        f1_.assign(n_, cplx(0.0, 0.0));
        f2_.assign(n_, cplx(0.0, 0.0));
        f3_.assign(n_, cplx(0.0, 0.0));
        ikhalf_.assign(n_, cplx(0.0, 0.0));
        mask_.assign(n_, 0.0);
        to_bin_.assign(n_, 0);
        {
            size_t i = 0;
            for (int k = -cfg_.K; k <= cfg_.K; ++k)
                for (int e1 = -cfg_.M; e1 <= cfg_.M; ++e1)
                    for (int e2 = -cfg_.M; e2 <= cfg_.M; ++e2, ++i)
                        to_bin_[i] = (size_t(detail::bin_of(k, nk_)) * ne_ +
                                      detail::bin_of(e1, ne_)) *
                                         ne_ +
                                     detail::bin_of(e2, ne_);
        }

        int kd = int(std::floor(cfg_.dealias * cfg_.K));
        int ed = int(std::floor(cfg_.dealias * cfg_.M));
        auto idx = [&](int k, int e1, int e2) {
            return (size_t(k + cfg_.K) * ne_ + size_t(e1 + cfg_.M)) * ne_ + size_t(e2 + cfg_.M);
        };
        // fill k > 0, mirror conjugates onto k < 0 so the tables are exactly
        // symmetric and real data stays real to roundoff
        for (int k = 1; k <= cfg_.K; ++k)
            for (int e1 = -cfg_.M; e1 <= cfg_.M; ++e1)
                for (int e2 = -cfg_.M; e2 <= cfg_.M; ++e2) {
                    size_t i = idx(k, e1, e2), im = idx(-k, -e1, -e2);
                    cplx z = cplx(0.0, cfg_.dt * phi({k, e1, e2}, cfg_.disp));
                    E_[i] = std::exp(z);
                    E2_[i] = std::exp(z / 2.0);
                    Q_[i] = cfg_.dt * phi_weight(z, 0);
                    f1_[i] = cfg_.dt * phi_weight(z, 1);
                    f2_[i] = cfg_.dt * phi_weight(z, 2);
                    f3_[i] = cfg_.dt * phi_weight(z, 3);
                    E_[im] = std::conj(E_[i]);
                    E2_[im] = std::conj(E2_[i]);
                    Q_[im] = std::conj(Q_[i]);
                    f1_[im] = std::conj(f1_[i]);
                    f2_[im] = std::conj(f2_[i]);
                    f3_[im] = std::conj(f3_[i]);
                    bool keep = (std::abs(k) <= kd && std::abs(e1) <= ed && std::abs(e2) <= ed);
                    mask_[i] = keep ? 1.0 : 0.0;
                    mask_[im] = keep ? 1.0 : 0.0;
                    ikhalf_[i] = cplx(0.0, -0.5 * double(k));
                    ikhalf_[im] = cplx(0.0, 0.5 * double(k));
                }
    }

    void nonlinear_raw(const std::vector<cplx>& u, std::vector<cplx>& out) const {
        if (!cfg_.nonlinear) {
            std::fill(out.begin(), out.end(), cplx(0.0, 0.0));
            return;
        }
        std::vector<cplx> phys(n_, cplx(0.0, 0.0));
        for (size_t i = 0; i < n_; ++i) phys[to_bin_[i]] = u[i];
        fft::backward(phys, dims_);
        for (cplx& z : phys) z *= z;
        fft::forward(phys, dims_);
        double inv = 1.0 / double(n_);
        for (size_t i = 0; i < n_; ++i) out[i] = phys[to_bin_[i]] * inv * ikhalf_[i] * mask_[i];
    }

    void step_raw(const std::vector<cplx>& u, std::vector<cplx>& out) const {
        if (!cfg_.nonlinear) {
            for (size_t i = 0; i < n_; ++i) out[i] = E_[i] * u[i];
            return;
        }
        if (cfg_.scheme == Scheme::etdrk4) {
            std::vector<cplx> Nu(n_), a(n_), Na(n_), b(n_), Nb(n_), c(n_), Nc(n_);
            nonlinear_raw(u, Nu);
            for (size_t i = 0; i < n_; ++i) a[i] = E2_[i] * u[i] + Q_[i] * Nu[i];
            nonlinear_raw(a, Na);
            for (size_t i = 0; i < n_; ++i) b[i] = E2_[i] * u[i] + Q_[i] * Na[i];
            nonlinear_raw(b, Nb);
            for (size_t i = 0; i < n_; ++i) c[i] = E2_[i] * a[i] + Q_[i] * (2.0 * Nb[i] - Nu[i]);
            nonlinear_raw(c, Nc);
            for (size_t i = 0; i < n_; ++i)
                out[i] = E_[i] * u[i] + f1_[i] * Nu[i] + 2.0 * f2_[i] * (Na[i] + Nb[i]) +
                         f3_[i] * Nc[i];
        } else {
            // integrating-factor RK4 on w = e^{-tL} u
            std::vector<cplx> k1(n_), k2(n_), k3(n_), k4(n_), tmp(n_);
            nonlinear_raw(u, k1);
            for (size_t i = 0; i < n_; ++i) tmp[i] = E2_[i] * (u[i] + 0.5 * cfg_.dt * k1[i]);
            nonlinear_raw(tmp, k2);
            for (size_t i = 0; i < n_; ++i)
                tmp[i] = E2_[i] * u[i] + 0.5 * cfg_.dt * k2[i];
            nonlinear_raw(tmp, k3);
            for (size_t i = 0; i < n_; ++i)
                tmp[i] = E_[i] * u[i] + cfg_.dt * E2_[i] * k3[i];
            nonlinear_raw(tmp, k4);
            for (size_t i = 0; i < n_; ++i)
                out[i] = E_[i] * u[i] +
                         cfg_.dt / 6.0 *
                             (E_[i] * k1[i] + 2.0 * E2_[i] * (k2[i] + k3[i]) + k4[i]);
        }
    }

    SolverConfig cfg_;
    int nk_ = 0, ne_ = 0;
    size_t n_ = 0;
    std::vector<int> dims_;
    std::vector<cplx> E_, E2_, Q_, f1_, f2_, f3_, ikhalf_;
    std::vector<double> mask_;
    std::vector<size_t> to_bin_;
};

// ---------------------------------------------------------------------------
// Duhamel-Picard iteration on a periodic node grid over [0, T):
//   u_{n+1}(t) = e^{it phi} u0 - 1/2 int_0^t e^{i(t-s) phi} d_x(u_n^2)(s) ds,
// with the integral accumulated by exponential trapezoid panels (the linear
// phase integrated exactly, the nonlinearity linear per panel).
// ---------------------------------------------------------------------------

struct PicardReport {
    double T = 0.0;
    double final_time = 0.0;              // last node: T (nodes-1)/nodes
    int depth = 0;
    std::vector<double> diff_l2;          // sup-over-nodes l2 of u_{n+1} - u_n
    std::vector<double> rho_l2;           // contraction ratios in C0_t L2
    std::vector<double> rho_x;            // ... in the windowed X norm proxy
    bool diverged = false;
    int diverged_at = -1;
    std::vector<SpatialSpectrum> final_iterate; // values at the nodes
    std::vector<double> node_times;
};

namespace solver_detail {

inline cplx phi1(cplx z) {
    if (std::abs(z) < 0.5) {
        cplx acc(1.0, 0.0), term(1.0, 0.0);
        for (int n = 1; n <= 16; ++n) {
            term *= z / double(n + 1);
            acc += term;
        }
        return acc;
    }
    return (std::exp(z) - 1.0) / z;
}

inline cplx phi2(cplx z) {
    if (std::abs(z) < 0.5) {
        cplx acc(0.5, 0.0), term(0.5, 0.0);
        for (int n = 1; n <= 16; ++n) {
            term *= z / double(n + 2);
            acc += term;
        }
        return acc;
    }
    return (std::exp(z) - 1.0 - z) / (z * z);
}

} // namespace solver_detail

inline PicardReport duhamel_picard(const SpatialSpectrum& u0, const SolverConfig& cfg, int depth,
                                   double T, int nodes = 65) {
    cfg.check();
    if (depth < 1) throw kpx_error("duhamel_picard: depth must be >= 1");
    if (T <= 0.0) throw kpx_error("duhamel_picard: T must be > 0");
    if (!u0.mean_zero()) throw kpx_error("duhamel_picard: data must be mean-zero");
    if (nodes % 2 == 0) ++nodes;

    KpSolver solver(cfg); // reuse grid checks and the nonlinear evaluator
    const int K = cfg.K, M = cfg.M;
    const int ne = 2 * M + 1;
    const size_t n = size_t(2 * K + 1) * ne * ne;
    const double h = T / nodes;

    PicardReport rep;
    rep.T = T;
    rep.depth = depth;
    for (int m = 0; m < nodes; ++m) rep.node_times.push_back(m * h);
    rep.final_time = rep.node_times.back();

    // per-mode phase and panel weights
    std::vector<cplx> eh(n), w0(n), w1(n), phase_t(n);
    {
        size_t i = 0;
        for (int k = -K; k <= K; ++k)
            for (int e1 = -M; e1 <= M; ++e1)
                for (int e2 = -M; e2 <= M; ++e2, ++i) {
                    if (k == 0) {
                        eh[i] = w0[i] = w1[i] = cplx(0.0, 0.0);
                        continue;
                    }
                    cplx z(0.0, h * phi({k, e1, e2}, cfg.disp));
                    eh[i] = std::exp(z);
                    cplx p1 = solver_detail::phi1(z), p2 = solver_detail::phi2(z);
                    w0[i] = h * (p1 - p2);
                    w1[i] = h * p2;
                }
    }

    SpatialSpectrum u0m = solver.dealias_mask(u0);
    auto free_at = [&](double t) {
        SpatialSpectrum s(K, M);
        u0m.for_each([&](int k, int e1, int e2, const cplx& c0) {
            if (k == 0 || c0 == cplx(0.0, 0.0)) return;
            s.set(k, e1, e2, c0 * std::polar(1.0, t * phi({k, e1, e2}, cfg.disp)));
        });
        return s;
    };

    std::vector<SpatialSpectrum> prev, cur;
    for (int m = 0; m < nodes; ++m) prev.push_back(free_at(rep.node_times[size_t(m)]));

    double prev_diff = -1.0;

    auto sup_l2_diff = [&](const std::vector<SpatialSpectrum>& a,
                           const std::vector<SpatialSpectrum>& b) {
        double worst = 0.0;
        for (size_t m = 0; m < a.size(); ++m) {
            double acc = 0.0;
            for (size_t i = 0; i < n; ++i) acc += std::norm(a[m].coeffs()[i] - b[m].coeffs()[i]);
            worst = std::max(worst, std::sqrt(acc));
        }
        return worst;
    };

    // windowed X-norm proxy of a node sequence: smooth cutoff times samples,
    // transformed over the periodic node grid
    auto x_norm_diff = [&](const std::vector<SpatialSpectrum>& a,
                           const std::vector<SpatialSpectrum>& b) {
        GridSpec gw(K, M, (nodes - 1) / 2, T);
        size_t nsp = n;
        std::vector<cplx> rows(nsp * size_t(nodes), cplx(0.0, 0.0));
        for (int m = 0; m < nodes; ++m) {
            double cutv = smooth_bump((rep.node_times[size_t(m)] - 0.5 * T) / (0.5 * T));
            for (size_t i = 0; i < nsp; ++i)
                rows[i * size_t(nodes) + size_t(m)] =
                    cutv * (a[size_t(m)].coeffs()[i] - b[size_t(m)].coeffs()[i]);
        }
        fft::transform_last_axis(rows, int(nsp), nodes, FFTW_FORWARD);
        SpaceTimeSpectrum w(gw);
        double inv = 1.0 / double(nodes);
        for (size_t r2 = 0; r2 < nsp; ++r2)
            for (int j = -gw.J; j <= gw.J; ++j)
                w.coeffs()[r2 * size_t(nodes) + size_t(j + gw.J)] =
                    rows[r2 * size_t(nodes) + size_t(detail::bin_of(j, nodes))] * inv;
        return xsb_norm(w, NormParams(0.5, 0.1, 0.5, 0.0, cfg.disp, KWeight::homogeneous));
    };

    double prev_x_diff = -1.0;
    for (int it = 1; it < depth; ++it) {
        cur.assign(size_t(nodes), SpatialSpectrum(K, M));
        // g(s) = -1/2 d_x(u_prev^2)(s): exactly the solver's nonlinear term
        std::vector<SpatialSpectrum> g;
        g.reserve(size_t(nodes));
        for (int m = 0; m < nodes; ++m) g.push_back(solver.rhs_nonlinear(prev[size_t(m)]));

        // I(t_0) = 0; I(t_{m+1}) = e^{ih phi} I(t_m) + w0 g(t_m) + w1 g(t_{m+1})
        std::vector<cplx> I(n, cplx(0.0, 0.0));
        cur[0] = free_at(0.0);
        for (int m = 1; m < nodes; ++m) {
            for (size_t i = 0; i < n; ++i)
                I[i] = eh[i] * I[i] + w0[i] * g[size_t(m - 1)].coeffs()[i] +
                       w1[i] * g[size_t(m)].coeffs()[i];
            SpatialSpectrum s = free_at(rep.node_times[size_t(m)]);
            for (size_t i = 0; i < n; ++i) s.coeffs()[i] += I[i];
            cur[size_t(m)] = std::move(s);
        }

        double diff = sup_l2_diff(cur, prev);
        rep.diff_l2.push_back(diff);
        double xd = x_norm_diff(cur, prev);
        if (prev_diff >= 0.0) {
            double rho = prev_diff > 0.0 ? diff / prev_diff : 0.0;
            rep.rho_l2.push_back(rho);
            rep.rho_x.push_back(prev_x_diff > 0.0 ? xd / prev_x_diff : 0.0);
            if (rho > 10.0) {
                rep.diverged = true;
                rep.diverged_at = it;
                break;
            }
        }
        prev_diff = diff;
        prev_x_diff = xd;
        prev = std::move(cur);
    }
    rep.final_iterate = prev;
    return rep;
}

// ---------------------------------------------------------------------------
// Lipschitz dependence probe: paired runs, sup_t ||u - v||_{H^s_x H^eps_y} /
// ||u0 - v0||.
// ---------------------------------------------------------------------------

struct LipschitzReport {
    double ratio = 0.0;
    double initial_distance = 0.0;
    bool identical = false;
};

inline LipschitzReport lipschitz_probe(const SpatialSpectrum& u0, const SpatialSpectrum& v0,
                                       const SolverConfig& cfg, double T, double s = 0.5,
                                       double eps = 0.1) {
    SolverConfig c = cfg;
    c.t_end = T;
    KpSolver solver(c);
    auto hnorm = [&](const SpatialSpectrum& a, const SpatialSpectrum& b) {
        double acc = 0.0;
        a.for_each([&](int k, int e1, int e2, const cplx& va) {
            cplx d = va - b.at(k, e1, e2);
            if (d == cplx(0.0, 0.0)) return;
            double w = std::pow(bracket(double(k)), s) *
                       std::pow(bracket2(double(e1), double(e2)), eps);
            acc += w * w * std::norm(d);
        });
        return std::sqrt(acc);
    };

    LipschitzReport rep;
    rep.initial_distance = hnorm(u0, v0);
    if (rep.initial_distance == 0.0) {
        rep.identical = true;
        return rep;
    }

    int nsteps = std::max(1, int(std::llround(T / c.dt)));
    SpatialSpectrum u = u0, v = v0;
    double worst = rep.initial_distance;
    for (int s_i = 1; s_i <= nsteps; ++s_i) {
        u = solver.step(u);
        v = solver.step(v);
        worst = std::max(worst, hnorm(u, v));
    }
    rep.ratio = worst / rep.initial_distance;
    return rep;
}

} // namespace kpx

#endif
