#ifndef KPX_SERIALIZE_HPP
#define KPX_SERIALIZE_HPP

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "kpx/fourier_field.hpp"

namespace kpx {

// Flat binary field layout (little-endian, x86 native):
//   magic "KPXF" | u32 version = 1 | u32 kind (0 space-time, 1 spatial)
//   | i64 K | i64 M | i64 J (0 for spatial) | f64 Tw (0 for spatial)
//   | coefficient doubles, re/im interleaved, row-major (k, eta1, eta2[, j]).

namespace detail {

inline void put_u32(std::ostream& os, uint32_t v) { os.write(reinterpret_cast<char*>(&v), 4); }
inline void put_i64(std::ostream& os, int64_t v) { os.write(reinterpret_cast<char*>(&v), 8); }
inline void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<char*>(&v), 8); }

inline uint32_t get_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
inline int64_t get_i64(std::istream& is) {
    int64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}
inline double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

inline void write_header(std::ostream& os, uint32_t kind, int64_t K, int64_t M, int64_t J,
                         double Tw) {
    os.write("KPXF", 4);
    put_u32(os, 1);
    put_u32(os, kind);
    put_i64(os, K);
    put_i64(os, M);
    put_i64(os, J);
    put_f64(os, Tw);
}

inline uint32_t read_header(std::istream& is, int64_t& K, int64_t& M, int64_t& J, double& Tw) {
    char magic[4] = {};
    is.read(magic, 4);
    if (std::memcmp(magic, "KPXF", 4) != 0) throw kpx_error("field file: bad magic");
    uint32_t version = get_u32(is);
    if (version != 1) throw kpx_error("field file: unsupported version");
    uint32_t kind = get_u32(is);
    K = get_i64(is);
    M = get_i64(is);
    J = get_i64(is);
    Tw = get_f64(is);
    if (!is) throw kpx_error("field file: truncated header");
    return kind;
}

} // namespace detail

inline void save_field(const SpaceTimeSpectrum& u, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw kpx_error("save_field: cannot open " + path);
    const GridSpec& g = u.grid();
    detail::write_header(os, 0, g.K, g.M, g.J, g.Tw);
    for (const cplx& z : u.coeffs()) {
        detail::put_f64(os, z.real());
        detail::put_f64(os, z.imag());
    }
    if (!os) throw kpx_error("save_field: write failed for " + path);
}

inline void save_field(const SpatialSpectrum& u, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw kpx_error("save_field: cannot open " + path);
    detail::write_header(os, 1, u.K(), u.M(), 0, 0.0);
    for (const cplx& z : u.coeffs()) {
        detail::put_f64(os, z.real());
        detail::put_f64(os, z.imag());
    }
    if (!os) throw kpx_error("save_field: write failed for " + path);
}

inline SpaceTimeSpectrum load_spacetime_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw kpx_error("load_field: cannot open " + path);
    int64_t K, M, J;
    double Tw;
    if (detail::read_header(is, K, M, J, Tw) != 0)
        throw kpx_error("load_field: " + path + " is not a space-time field");
    GridSpec g(static_cast<int>(K), static_cast<int>(M), static_cast<int>(J), Tw);
    SpaceTimeSpectrum u(g);
    for (cplx& z : u.coeffs()) {
        double re = detail::get_f64(is), im = detail::get_f64(is);
        z = {re, im};
    }
    if (!is) throw kpx_error("load_field: truncated data in " + path);
    return u;
}

inline SpatialSpectrum load_spatial_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw kpx_error("load_field: cannot open " + path);
    int64_t K, M, J;
    double Tw;
    if (detail::read_header(is, K, M, J, Tw) != 1)
        throw kpx_error("load_field: " + path + " is not a spatial field");
    SpatialSpectrum u(static_cast<int>(K), static_cast<int>(M));
    for (cplx& z : u.coeffs()) {
        double re = detail::get_f64(is), im = detail::get_f64(is);
        z = {re, im};
    }
    if (!is) throw kpx_error("load_field: truncated data in " + path);
    return u;
}

// JSON debug form: header plus the nonzero coefficients as
// [k, eta1, eta2, j, re, im] tuples.
inline nlohmann::json field_debug_json(const SpaceTimeSpectrum& u) {
    nlohmann::json j;
    const GridSpec& g = u.grid();
    j["kind"] = "space_time";
    j["K"] = g.K;
    j["M"] = g.M;
    j["J"] = g.J;
    j["Tw"] = g.Tw;
    nlohmann::json coeffs = nlohmann::json::array();
    u.for_each([&](int k, int e1, int e2, int jj, const cplx& v) {
        if (v != cplx(0.0, 0.0))
            coeffs.push_back({k, e1, e2, jj, v.real(), v.imag()});
    });
    j["coeffs"] = std::move(coeffs);
    return j;
}

inline nlohmann::json field_debug_json(const SpatialSpectrum& u) {
    nlohmann::json j;
    j["kind"] = "spatial";
    j["K"] = u.K();
    j["M"] = u.M();
    nlohmann::json coeffs = nlohmann::json::array();
    u.for_each([&](int k, int e1, int e2, const cplx& v) {
        if (v != cplx(0.0, 0.0)) coeffs.push_back({k, e1, e2, v.real(), v.imag()});
    });
    j["coeffs"] = std::move(coeffs);
    return j;
}

} // namespace kpx

#endif
