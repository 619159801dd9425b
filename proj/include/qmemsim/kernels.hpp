#pragma once

#include <cstddef>

#include "qmemsim/types.hpp"

namespace qmemsim::kern {

// Vector kernels used by the Lindblad application and the RK stepper.
// Two implementations exist: a scalar reference and an AVX2+FMA variant.
// The active table is selected once at startup from CPU capabilities
// (override with QMEMSIM_KERNEL=scalar|avx2). Each backend uses a fixed
// evaluation and reduction order, so a given backend is bitwise
// reproducible from run to run; backends agree with each other to the
// floating-point reassociation level (tested at 1e-13).
struct Ops {
    const char* name;

    // y[i] += a * x[i]
    void (*axpy_re)(Complex* y, const Complex* x, double a, std::size_t n);


    // y[i] += a * f[i] * x[i]  (real factor table)
    void (*fma_facs)(Complex* y, const Complex* x, const double* f, double a, std::size_t n);

    // out[i] = -(ddm + dd[i] + xw[m ^ i]) * rho[i]; xw may be null (no dephasing)
    void (*diag_row)(Complex* out, const Complex* rho, const double* dd, const double* xw,
                     double ddm, std::size_t m, std::size_t n);

    // dst[i] = base[i] + h * sum_j w[j] * ks[j][i]   (nk <= 8; base may be null -> 0)
    void (*stage_comb)(Complex* dst, const Complex* base, double h, const double* w,
                       const Complex* const* ks, int nk, std::size_t n);

    // weighted rms of e against scale (atol + rtol*max(|y0|,|y1|)), per double component
    double (*err_norm)(const Complex* e, const Complex* y0, const Complex* y1,
                       double atol, double rtol, std::size_t n);

    // sum_i conj(a[i]) * b[i], fixed-order block accumulation
    Complex (*cdotc)(const Complex* a, const Complex* b, std::size_t n);
};

const Ops& scalar_ops();
const Ops* avx2_ops();   // nullptr when unsupported by the CPU or the build
const Ops& active_ops();

} // namespace qmemsim::kern
