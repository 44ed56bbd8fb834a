#ifndef KPX_COMMON_HPP
#define KPX_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace kpx {

using cplx = std::complex<double>;

// Japanese bracket <x> = sqrt(1 + |x|^2).
inline double bracket(double x) { return std::sqrt(1.0 + x * x); }
inline double bracket2(double x, double y) { return std::sqrt(1.0 + x * x + y * y); }

struct kpx_error : std::runtime_error {
    explicit kpx_error(const std::string& what) : std::runtime_error(what) {}
};

struct shape_error : kpx_error {
    explicit shape_error(const std::string& what) : kpx_error(what) {}
};

struct hypothesis_error : kpx_error {
    explicit hypothesis_error(const std::string& what) : kpx_error(what) {}
};

// Deterministic RNG. std::mt19937_64 has a pinned algorithm, but the
// distributions in <random> do not, so gaussians are generated by an
// explicit Box-Muller below. Reproducible across platforms and runs.
class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(splitmix(seed + 0x9e3779b97f4a7c15ull)) {}

    uint64_t next_u64() {
        // xorshift* variant seeded through splitmix
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545f4914f6cdd1dull;
    }

    // uniform in [0,1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi] inclusive
    int64_t uniform_int(int64_t lo, int64_t hi) {
        return lo + int64_t(next_u64() % uint64_t(hi - lo + 1));
    }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

    cplx gaussian_cplx() {
        double re = gaussian();
        double im = gaussian();
        return {re, im};
    }

    static uint64_t splitmix(uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    // stable derived seed for sub-streams (restart index, mode index, ...)
    static uint64_t derive(uint64_t seed, uint64_t stream) {
        return splitmix(seed ^ (0x517cc1b727220a95ull * (stream + 1)));
    }

  private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Least-squares slope of y against x. Used for all log-log growth fits.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw kpx_error("ls_slope: need at least two matching samples");
    double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw kpx_error("ls_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    lx.reserve(x.size());
    ly.reserve(y.size());
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0) throw kpx_error("loglog_slope: nonpositive sample");
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    return ls_slope(lx, ly);
}

// C^infty bump supported on (-1,1), normalized to 1 at the center.
inline double smooth_bump(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

// FNV-1a over a string; used to fingerprint resolved experiment configs.
inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace kpx

#endif
