// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; everything else in the library stays at the baseline ISA and
// reaches this code only through the dispatch table in kernels.cpp.

#include "qmemsim/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>

namespace qmemsim::kern {
namespace {

void axpy_re(Complex* y, const Complex* x, double a, std::size_t n) {
    auto* yd = reinterpret_cast<double*>(y);
    const auto* xd = reinterpret_cast<const double*>(x);
    const std::size_t nn = 2 * n;
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= nn; i += 4) {
        __m256d yv = _mm256_loadu_pd(yd + i);
        yv = _mm256_fmadd_pd(av, _mm256_loadu_pd(xd + i), yv);
        _mm256_storeu_pd(yd + i, yv);
    }
    for (; i < nn; ++i) yd[i] += a * xd[i];
}


void fma_facs(Complex* y, const Complex* x, const double* f, double a, std::size_t n) {
    auto* yd = reinterpret_cast<double*>(y);
    const auto* xd = reinterpret_cast<const double*>(x);
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m128d f01 = _mm_loadu_pd(f + i);
        // [f0, f0, f1, f1]
        __m256d fv = _mm256_permute4x64_pd(_mm256_castpd128_pd256(f01), 0x50);
        fv = _mm256_mul_pd(fv, av);
        __m256d yv = _mm256_loadu_pd(yd + 2 * i);
        yv = _mm256_fmadd_pd(fv, _mm256_loadu_pd(xd + 2 * i), yv);
        _mm256_storeu_pd(yd + 2 * i, yv);
    }
    for (; i < n; ++i) {
        const double c = a * f[i];
        yd[2 * i] += c * xd[2 * i];
        yd[2 * i + 1] += c * xd[2 * i + 1];
    }
}

void diag_row(Complex* out, const Complex* rho, const double* dd, const double* xw,
              double ddm, std::size_t m, std::size_t n) {
    auto* od = reinterpret_cast<double*>(out);
    const auto* rd = reinterpret_cast<const double*>(rho);
    std::size_t i = 0;
    if (xw) {
        for (; i + 2 <= n; i += 2) {
            const double c0 = -(ddm + dd[i] + xw[m ^ i]);
            const double c1 = -(ddm + dd[i + 1] + xw[m ^ (i + 1)]);
            const __m256d cv = _mm256_set_pd(c1, c1, c0, c0);
            _mm256_storeu_pd(od + 2 * i, _mm256_mul_pd(cv, _mm256_loadu_pd(rd + 2 * i)));
        }
        for (; i < n; ++i) {
            const double c = -(ddm + dd[i] + xw[m ^ i]);
            od[2 * i] = c * rd[2 * i];
            od[2 * i + 1] = c * rd[2 * i + 1];
        }
    } else {
        const __m256d dmv = _mm256_set1_pd(-ddm);
        for (; i + 2 <= n; i += 2) {
            const __m128d d01 = _mm_loadu_pd(dd + i);
            __m256d cv = _mm256_permute4x64_pd(_mm256_castpd128_pd256(d01), 0x50);
            cv = _mm256_sub_pd(dmv, cv);
            _mm256_storeu_pd(od + 2 * i, _mm256_mul_pd(cv, _mm256_loadu_pd(rd + 2 * i)));
        }
        for (; i < n; ++i) {
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
    const double* kd[8];
    __m256d wv[8];
    for (int j = 0; j < nk; ++j) {
        kd[j] = reinterpret_cast<const double*>(ks[j]);
        wv[j] = _mm256_set1_pd(w[j]);
    }
    const __m256d hv = _mm256_set1_pd(h);
    const std::size_t nn = 2 * n;
    std::size_t i = 0;
    for (; i + 4 <= nn; i += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (int j = 0; j < nk; ++j)
            acc = _mm256_fmadd_pd(wv[j], _mm256_loadu_pd(kd[j] + i), acc);
        const __m256d bv = bd ? _mm256_loadu_pd(bd + i) : _mm256_setzero_pd();
        _mm256_storeu_pd(dd + i, _mm256_fmadd_pd(hv, acc, bv));
    }
    for (; i < nn; ++i) {
        double acc = 0.0;
        for (int j = 0; j < nk; ++j) acc += w[j] * kd[j][i];
        dd[i] = (bd ? bd[i] : 0.0) + h * acc;
    }
}

double err_norm(const Complex* e, const Complex* y0, const Complex* y1,
                double atol, double rtol, std::size_t n) {
    const auto* ed = reinterpret_cast<const double*>(e);
    const auto* a0 = reinterpret_cast<const double*>(y0);
    const auto* a1 = reinterpret_cast<const double*>(y1);
    const std::size_t nn = 2 * n;
    const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
    const __m256d av = _mm256_set1_pd(atol);
    const __m256d rv = _mm256_set1_pd(rtol);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= nn; i += 4) {
        const __m256d m0 = _mm256_and_pd(_mm256_loadu_pd(a0 + i), absmask);
        const __m256d m1 = _mm256_and_pd(_mm256_loadu_pd(a1 + i), absmask);
        const __m256d sc = _mm256_fmadd_pd(rv, _mm256_max_pd(m0, m1), av);
        const __m256d q = _mm256_div_pd(_mm256_loadu_pd(ed + i), sc);
        acc = _mm256_fmadd_pd(q, q, acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    for (; i < nn; ++i) {
        const double sc = atol + rtol * std::max(std::fabs(a0[i]), std::fabs(a1[i]));
        const double q = ed[i] / sc;
        lanes[i % 4] += q * q;
    }
    const double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    return std::sqrt(total / static_cast<double>(nn));
}

Complex cdotc(const Complex* a, const Complex* b, std::size_t n) {
    const auto* ad = reinterpret_cast<const double*>(a);
    const auto* bd = reinterpret_cast<const double*>(b);
    __m256d re = _mm256_setzero_pd();
    __m256d im = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v0 = _mm256_loadu_pd(ad + 2 * i);      // ar0 ai0 ar1 ai1
        const __m256d v1 = _mm256_loadu_pd(ad + 2 * i + 4);  // ar2 ai2 ar3 ai3
        const __m256d u0 = _mm256_loadu_pd(bd + 2 * i);
        const __m256d u1 = _mm256_loadu_pd(bd + 2 * i + 4);
        const __m256d ar = _mm256_unpacklo_pd(v0, v1);  // ar0 ar2 ar1 ar3
        const __m256d ai = _mm256_unpackhi_pd(v0, v1);
        const __m256d br = _mm256_unpacklo_pd(u0, u1);
        const __m256d bi = _mm256_unpackhi_pd(u0, u1);
        re = _mm256_fmadd_pd(ar, br, re);
        re = _mm256_fmadd_pd(ai, bi, re);
        im = _mm256_fmadd_pd(ar, bi, im);
        im = _mm256_fnmadd_pd(ai, br, im);
    }
    alignas(32) double lr[4], li[4];
    _mm256_store_pd(lr, re);
    _mm256_store_pd(li, im);
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        lr[i % 4] += ar * br + ai * bi;
        li[i % 4] += ar * bi - ai * br;
    }
    return {(lr[0] + lr[1]) + (lr[2] + lr[3]), (li[0] + li[1]) + (li[2] + li[3])};
}

constexpr Ops kAvx2Ops = {
    "avx2", axpy_re, fma_facs, diag_row, stage_comb, err_norm, cdotc,
};

} // namespace

const Ops* avx2_ops() { return &kAvx2Ops; }

} // namespace qmemsim::kern

#else // !(__AVX2__ && __FMA__)

namespace qmemsim::kern {
const Ops* avx2_ops() { return nullptr; }
} // namespace qmemsim::kern

#endif
