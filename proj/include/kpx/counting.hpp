#ifndef KPX_COUNTING_HPP
#define KPX_COUNTING_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "kpx/common.hpp"

namespace kpx {

// Unit-width annulus { eta in Z^2 : r <= |eta - delta|^2 < r+1 } around a
// shifted center delta.
struct Annulus {
    int64_t r = 0;
    double d1 = 0.0;
    double d2 = 0.0;
};

struct Region {
    enum class Kind { disc, square };
    Kind kind = Kind::disc;
    double c1 = 0.0;
    double c2 = 0.0;
    double R = 1.0; // radius (disc) or halfside (square); boundary included

    bool contains(double x, double y) const {
        double dx = x - c1, dy = y - c2;
        if (kind == Kind::disc) return dx * dx + dy * dy <= R * R;
        return std::abs(dx) <= R && std::abs(dy) <= R;
    }
};

namespace detail {

inline bool is_half_integer_pair(double d1, double d2) {
    double t1 = 2.0 * d1, t2 = 2.0 * d2;
    return t1 == std::floor(t1) && t2 == std::floor(t2) && std::abs(t1) < 4.6e18 &&
           std::abs(t2) < 4.6e18;
}

// Membership r <= |eta-delta|^2 < r+1. Exact in scaled integers when
// 2*delta is integral; double comparison (half-open) otherwise.
struct AnnulusTest {
    int64_t r;
    double d1, d2;
    bool exact;
    int64_t td1, td2; // 2*delta when exact

    AnnulusTest(const Annulus& a)
        : r(a.r), d1(a.d1), d2(a.d2), exact(is_half_integer_pair(a.d1, a.d2)),
          td1(exact ? int64_t(std::llround(2.0 * a.d1)) : 0),
          td2(exact ? int64_t(std::llround(2.0 * a.d2)) : 0) {}

    bool contains(int64_t e1, int64_t e2) const {
        if (exact) {
            int64_t x = 2 * e1 - td1, y = 2 * e2 - td2;
            int64_t q = x * x + y * y;
            return q >= 4 * r && q < 4 * (r + 1);
        }
        double dx = double(e1) - d1, dy = double(e2) - d2;
        double q = dx * dx + dy * dy;
        return q >= double(r) && q < double(r + 1);
    }
};

// Visit every annulus point once. O(sqrt(r) + count) via per-column
// candidate ranges, with exact verification at the boundaries.
template <typename F>
void visit_annulus(const Annulus& a, F&& f) {
    if (a.r < 0) throw kpx_error("annulus: r must be >= 0");
    AnnulusTest test(a);
    double rad_hi = std::sqrt(double(a.r + 1));
    int64_t lo1 = int64_t(std::floor(a.d1 - rad_hi)) - 1;
    int64_t hi1 = int64_t(std::ceil(a.d1 + rad_hi)) + 1;
    for (int64_t e1 = lo1; e1 <= hi1; ++e1) {
        double dx = double(e1) - a.d1;
        double rem_hi = double(a.r + 1) - dx * dx;
        if (rem_hi <= 0.0) continue;
        double rem_lo = double(a.r) - dx * dx;
        double s_hi = std::sqrt(rem_hi);
        double s_lo = rem_lo > 0.0 ? std::sqrt(rem_lo) : 0.0;
        if (s_lo < 2.0) {
            // hole too small to split safely: scan the full segment
            int64_t lo2 = int64_t(std::floor(a.d2 - s_hi)) - 1;
            int64_t hi2 = int64_t(std::ceil(a.d2 + s_hi)) + 1;
            for (int64_t e2 = lo2; e2 <= hi2; ++e2)
                if (test.contains(e1, e2)) f(e1, e2);
        } else {
            // two disjoint arcs: |e2 - d2| in [s_lo, s_hi)
            int64_t lo2 = int64_t(std::floor(a.d2 - s_hi)) - 1;
            int64_t hi2 = int64_t(std::ceil(a.d2 - s_lo)) + 1;
            for (int64_t e2 = lo2; e2 <= hi2; ++e2)
                if (test.contains(e1, e2)) f(e1, e2);
            lo2 = int64_t(std::floor(a.d2 + s_lo)) - 1;
            hi2 = int64_t(std::ceil(a.d2 + s_hi)) + 1;
            for (int64_t e2 = lo2; e2 <= hi2; ++e2)
                if (test.contains(e1, e2)) f(e1, e2);
        }
    }
}

} // namespace detail

// #{ eta in Z^2 : r <= |eta - delta|^2 < r+1 }. delta is reduced to [0,1)^2
// first (integer translations leave the count unchanged).
inline int64_t count_annulus(const Annulus& a) {
    Annulus red = a;
    red.d1 = a.d1 - std::floor(a.d1);
    red.d2 = a.d2 - std::floor(a.d2);
    int64_t n = 0;
    detail::visit_annulus(red, [&](int64_t, int64_t) { ++n; });
    return n;
}

// Annulus points that also lie in B. No shift reduction here: B is absolute.
inline int64_t count_annulus_in_region(const Annulus& a, const Region& B) {
    if (B.R <= 0.0) throw kpx_error("count_annulus_in_region: region size must be > 0");
    int64_t n = 0;
    detail::visit_annulus(a, [&](int64_t e1, int64_t e2) {
        if (B.contains(double(e1), double(e2))) ++n;
    });
    return n;
}

// r2(n) = #{ eta in Z^2 : |eta|^2 = n } via the divisor-character formula
// 4 (d_1(n) - d_3(n)) for n >= 1 (Hardy-Wright r2), r2(0) = 1.
inline int64_t sum_two_squares(int64_t n) {
    if (n < 0) throw kpx_error("sum_two_squares: n must be >= 0");
    if (n == 0) return 1;
    int64_t diff = 0;
    for (int64_t d = 1; d * d <= n; ++d) {
        if (n % d != 0) continue;
        int64_t q = n / d;
        if (d % 4 == 1) diff += 1;
        else if (d % 4 == 3) diff -= 1;
        if (q != d) {
            if (q % 4 == 1) diff += 1;
            else if (q % 4 == 3) diff -= 1;
        }
    }
    return 4 * diff;
}

// Counts of annulus points by residue of |2 eta - 2 delta|^2 mod 4.
// Requires 2*delta integral; for genuinely half-integer shifts the residue
// class is forced by the congruence |2 eta - 2 delta|^2 = const (mod 4).
inline std::array<int64_t, 4> parity_class_counts(const Annulus& a) {
    if (!detail::is_half_integer_pair(a.d1, a.d2))
        throw kpx_error("parity_class_counts: delta must have half-integer coordinates");
    int64_t td1 = int64_t(std::llround(2.0 * a.d1));
    int64_t td2 = int64_t(std::llround(2.0 * a.d2));
    std::array<int64_t, 4> classes = {0, 0, 0, 0};
    detail::visit_annulus(a, [&](int64_t e1, int64_t e2) {
        int64_t x = 2 * e1 - td1, y = 2 * e2 - td2;
        classes[size_t((x * x + y * y) % 4)] += 1;
    });
    return classes;
}

struct GrowthFit {
    double exponent = 0.0;                 // fitted slope of log(max count) vs log r
    std::vector<int64_t> radii;            // dyadic radii used
    std::vector<int64_t> max_counts;       // max over the delta samples
};

// Fit the growth exponent of max_delta count_annulus(r, delta) over dyadic r.
inline GrowthFit fit_growth_exponent(int64_t r_max,
                                     const std::vector<std::pair<double, double>>& deltas) {
    if (r_max < 100) throw kpx_error("fit_growth_exponent: r_max must be >= 100");
    if (deltas.empty()) throw kpx_error("fit_growth_exponent: need at least one delta sample");
    GrowthFit out;
    std::vector<double> xs, ys;
    for (int64_t r = 1; r <= r_max; r *= 2) {
        int64_t best = 0;
        for (const auto& d : deltas)
            best = std::max(best, count_annulus({r, d.first, d.second}));
        out.radii.push_back(r);
        out.max_counts.push_back(best);
        if (best > 0) {
            xs.push_back(std::log(double(r)));
            ys.push_back(std::log(double(best)));
        }
    }
    out.exponent = ls_slope(xs, ys);
    return out;
}

} // namespace kpx

#endif
