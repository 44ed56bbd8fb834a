#ifndef KPX_FFT_HPP
#define KPX_FFT_HPP

#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "kpx/common.hpp"

namespace kpx {
namespace fft {

// FFTW's planner is not thread safe; executions on distinct arrays are.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// In-place c2c transform over an n-dimensional row-major array.
// sign: FFTW_FORWARD (-1) or FFTW_BACKWARD (+1). No normalization applied.
inline void transform(std::vector<cplx>& data, const std::vector<int>& dims, int sign) {
    size_t total = 1;
    for (int d : dims) total *= size_t(d);
    if (data.size() != total) throw shape_error("fft::transform: size mismatch");
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft(int(dims.size()), dims.data(),
                             reinterpret_cast<fftw_complex*>(data.data()),
                             reinterpret_cast<fftw_complex*>(data.data()), sign,
                             FFTW_ESTIMATE);
    }
    if (!plan) throw kpx_error("fft::transform: planning failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

inline void forward(std::vector<cplx>& data, const std::vector<int>& dims) {
    transform(data, dims, FFTW_FORWARD);
}

inline void backward(std::vector<cplx>& data, const std::vector<int>& dims) {
    transform(data, dims, FFTW_BACKWARD);
}

// Batch of 1-d transforms along the last (contiguous) axis of a row-major
// [howmany][n] array.
inline void transform_last_axis(std::vector<cplx>& data, int howmany, int n, int sign) {
    if (data.size() != size_t(howmany) * size_t(n))
        throw shape_error("fft::transform_last_axis: size mismatch");
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_many_dft(1, &n, howmany,
                                  reinterpret_cast<fftw_complex*>(data.data()), nullptr, 1, n,
                                  reinterpret_cast<fftw_complex*>(data.data()), nullptr, 1, n,
                                  sign, FFTW_ESTIMATE);
    }
    if (!plan) throw kpx_error("fft::transform_last_axis: planning failed");
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
}

} // namespace fft
} // namespace kpx

#endif
