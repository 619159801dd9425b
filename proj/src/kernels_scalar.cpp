#include "qmemsim/kernels.hpp"

#include <cmath>

namespace qmemsim::kern {
namespace {

void axpy_re(Complex* y, const Complex* x, double a, std::size_t n) {
    auto* yd = reinterpret_cast<double*>(y);
    const auto* xd = reinterpret_cast<const double*>(x);
    for (std::size_t i = 0; i < 2 * n; ++i) yd[i] += a * xd[i];
}


void fma_facs(Complex* y, const Complex* x, const double* f, double a, std::size_t n) {
    auto* yd = reinterpret_cast<double*>(y);
    const auto* xd = reinterpret_cast<const double*>(x);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = a * f[i];
        yd[2 * i] += c * xd[2 * i];
        yd[2 * i + 1] += c * xd[2 * i + 1];
    }
}

void diag_row(Complex* out, const Complex* rho, const double* dd, const double* xw,
              double ddm, std::size_t m, std::size_t n) {
    auto* od = reinterpret_cast<double*>(out);
    const auto* rd = reinterpret_cast<const double*>(rho);
    if (xw) {
        for (std::size_t i = 0; i < n; ++i) {
            const double c = -(ddm + dd[i] + xw[m ^ i]);
            od[2 * i] = c * rd[2 * i];
            od[2 * i + 1] = c * rd[2 * i + 1];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double c = -(ddm + dd[i]);
            od[2 * i] = c * rd[2 * i];
            od[2 * i + 1] = c * rd[2 * i + 1];
        }
    }
}

void stage_comb(Complex* dst, const Complex* base, double h, const double* w,
                const Complex* const* ks, int nk, std::size_t n) {
    auto* dd = reinterpret_cast<double*>(dst);
    const auto* bd = reinterpret_cast<const double*>(base);
    for (std::size_t i = 0; i < 2 * n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nk; ++j)
            acc += w[j] * reinterpret_cast<const double*>(ks[j])[i];
        dd[i] = (bd ? bd[i] : 0.0) + h * acc;
    }
}

double err_norm(const Complex* e, const Complex* y0, const Complex* y1,
                double atol, double rtol, std::size_t n) {
    const auto* ed = reinterpret_cast<const double*>(e);
    const auto* a0 = reinterpret_cast<const double*>(y0);
    const auto* a1 = reinterpret_cast<const double*>(y1);
    // four accumulators in fixed round-robin order, matching the AVX2 lane layout
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    const std::size_t nn = 2 * n;
    for (std::size_t i = 0; i < nn; ++i) {
        const double sc = atol + rtol * std::max(std::fabs(a0[i]), std::fabs(a1[i]));
        const double q = ed[i] / sc;
        acc[i % 4] += q * q;
    }
    const double total = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    return std::sqrt(total / static_cast<double>(nn));
}

Complex cdotc(const Complex* a, const Complex* b, std::size_t n) {
    double re[4] = {0, 0, 0, 0};
    double im[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re[i % 4] += ar * br + ai * bi;
        im[i % 4] += ar * bi - ai * br;
    }
    return {(re[0] + re[1]) + (re[2] + re[3]), (im[0] + im[1]) + (im[2] + im[3])};
}

constexpr Ops kScalarOps = {
    "scalar", axpy_re, fma_facs, diag_row, stage_comb, err_norm, cdotc,
};

} // namespace

const Ops& scalar_ops() { return kScalarOps; }

} // namespace qmemsim::kern
