// AVX2 variants of the reference kernels in kernels_scalar.cpp. Every
// expression tree mirrors the scalar code exactly and FMA is deliberately
// not used, so both backends round identically and the equivalence tests
// can assert bitwise equality. Compiled with -mavx2 -ffp-contract=off;
// only reached after a runtime CPU check.

#include "qflow/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace qflow::kernels {

void bulk_force_scalar(const std::array<const double*, 5>& q,
                       const std::array<double*, 5>& out, std::size_t begin,
                       std::size_t end, double a, double b, double c);
void laplacian_scalar(const double* f, double* out, const StencilDims& d,
                      std::size_t row_begin, std::size_t row_end);
void axpy_scalar(const double* x, const double* y, double s, double* out,
                 std::size_t begin, std::size_t end);
void lincomb_scalar(const double* x, double alpha, const double* y, double beta,
                    double* out, std::size_t begin, std::size_t end);

namespace {
inline __m256d mul(__m256d a, __m256d b) { return _mm256_mul_pd(a, b); }
inline __m256d add(__m256d a, __m256d b) { return _mm256_add_pd(a, b); }
inline __m256d sub(__m256d a, __m256d b) { return _mm256_sub_pd(a, b); }
// sign-bit flip == scalar unary minus (incl. signed zeros)
inline __m256d neg(__m256d a) { return _mm256_xor_pd(a, _mm256_set1_pd(-0.0)); }
}  // namespace

void bulk_force_avx2(const std::array<const double*, 5>& q,
                     const std::array<double*, 5>& out, std::size_t begin,
                     std::size_t end, double a, double b, double c) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vc = _mm256_set1_pd(c);
    const __m256d vb3 = _mm256_set1_pd(b / 3.0);
    const __m256d two = _mm256_set1_pd(2.0);

    std::size_t i = begin;
    for (; i + 4 <= end; i += 4) {
        const __m256d xx = _mm256_loadu_pd(q[0] + i);
        const __m256d yy = _mm256_loadu_pd(q[1] + i);
        const __m256d xy = _mm256_loadu_pd(q[2] + i);
        const __m256d xz = _mm256_loadu_pd(q[3] + i);
        const __m256d yz = _mm256_loadu_pd(q[4] + i);
        const __m256d zz = neg(add(xx, yy));

        const __m256d sq_d = add(add(mul(xx, xx), mul(yy, yy)), mul(zz, zz));
        const __m256d sq_o = add(add(mul(xy, xy), mul(xz, xz)), mul(yz, yz));
        const __m256d q2 = add(sq_d, mul(two, sq_o));

        const __m256d s_xx = add(add(mul(xx, xx), mul(xy, xy)), mul(xz, xz));
        const __m256d s_yy = add(add(mul(xy, xy), mul(yy, yy)), mul(yz, yz));
        const __m256d s_xy = add(add(mul(xx, xy), mul(xy, yy)), mul(xz, yz));
        const __m256d s_xz = add(add(mul(xx, xz), mul(xy, yz)), mul(xz, zz));
        const __m256d s_yz = add(add(mul(xy, xz), mul(yy, yz)), mul(yz, zz));

        const __m256d idt = mul(vb3, q2);
        const __m256d cq2 = mul(vc, q2);

        _mm256_storeu_pd(out[0] + i,
                         add(sub(sub(mul(cq2, xx), mul(va, xx)), mul(vb, s_xx)), idt));
        _mm256_storeu_pd(out[1] + i,
                         add(sub(sub(mul(cq2, yy), mul(va, yy)), mul(vb, s_yy)), idt));
        _mm256_storeu_pd(out[2] + i, sub(sub(mul(cq2, xy), mul(va, xy)), mul(vb, s_xy)));
        _mm256_storeu_pd(out[3] + i, sub(sub(mul(cq2, xz), mul(va, xz)), mul(vb, s_xz)));
        _mm256_storeu_pd(out[4] + i, sub(sub(mul(cq2, yz), mul(va, yz)), mul(vb, s_yz)));
    }
    if (i < end) bulk_force_scalar(q, out, i, end, a, b, c);
}

void laplacian_avx2(const double* f, double* out, const StencilDims& d,
                    std::size_t row_begin, std::size_t row_end) {
    const std::size_t nx = d.nx, ny = d.ny, nz = d.nz;
    if (nx < 12) {  // not worth vectorizing the interior
        laplacian_scalar(f, out, d, row_begin, row_end);
        return;
    }
    const __m256d wx = _mm256_set1_pd(d.wx);
    const __m256d wy = _mm256_set1_pd(d.wy);
    const __m256d wz = _mm256_set1_pd(d.wz);
    for (std::size_t row = row_begin; row < row_end; ++row) {
        const std::size_t iy = row % ny;
        const std::size_t iz = row / ny;
        const std::size_t base = row * nx;
        const std::size_t ym = (iy == 0 ? ny - 1 : iy - 1) * nx + iz * ny * nx;
        const std::size_t yp = (iy + 1 == ny ? 0 : iy + 1) * nx + iz * ny * nx;
        const std::size_t zm = iy * nx + (iz == 0 ? nz - 1 : iz - 1) * ny * nx;
        const std::size_t zp = iy * nx + (iz + 1 == nz ? 0 : iz + 1) * ny * nx;

        std::size_t ix = 1;
        for (; ix + 4 <= nx - 1; ix += 4) {
            const std::size_t i = base + ix;
            const __m256d c = _mm256_loadu_pd(f + i);
            const __m256d cc = add(c, c);
            __m256d acc = _mm256_setzero_pd();
            if (d.wx != 0.0) {
                const __m256d l = _mm256_loadu_pd(f + i - 1);
                const __m256d r = _mm256_loadu_pd(f + i + 1);
                acc = add(acc, mul(wx, sub(add(l, r), cc)));
            }
            if (d.wy != 0.0) {
                const __m256d u = _mm256_loadu_pd(f + ym + ix);
                const __m256d v = _mm256_loadu_pd(f + yp + ix);
                acc = add(acc, mul(wy, sub(add(u, v), cc)));
            }
            if (d.wz != 0.0) {
                const __m256d u = _mm256_loadu_pd(f + zm + ix);
                const __m256d v = _mm256_loadu_pd(f + zp + ix);
                acc = add(acc, mul(wz, sub(add(u, v), cc)));
            }
            _mm256_storeu_pd(out + i, acc);
        }
        // boundaries and vector tail, scalar per cell
        for (std::size_t j : {std::size_t{0}, std::size_t{nx - 1}}) {
            const std::size_t i = base + j;
            const double cc = f[i] + f[i];
            double acc = 0.0;
            if (d.wx != 0.0) {
                const std::size_t xm = base + (j == 0 ? nx - 1 : j - 1);
                const std::size_t xp = base + (j + 1 == nx ? 0 : j + 1);
                acc = acc + d.wx * ((f[xm] + f[xp]) - cc);
            }
            if (d.wy != 0.0) acc = acc + d.wy * ((f[ym + j] + f[yp + j]) - cc);
            if (d.wz != 0.0) acc = acc + d.wz * ((f[zm + j] + f[zp + j]) - cc);
            out[i] = acc;
        }
        for (; ix < nx - 1; ++ix) {
            const std::size_t i = base + ix;
            const double cc = f[i] + f[i];
            double acc = 0.0;
            if (d.wx != 0.0) acc = acc + d.wx * ((f[i - 1] + f[i + 1]) - cc);
            if (d.wy != 0.0) acc = acc + d.wy * ((f[ym + ix] + f[yp + ix]) - cc);
            if (d.wz != 0.0) acc = acc + d.wz * ((f[zm + ix] + f[zp + ix]) - cc);
            out[i] = acc;
        }
    }
}

void axpy_avx2(const double* x, const double* y, double s, double* out,
               std::size_t begin, std::size_t end) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = begin;
    for (; i + 4 <= end; i += 4)
        _mm256_storeu_pd(out + i,
                         add(_mm256_loadu_pd(x + i), mul(vs, _mm256_loadu_pd(y + i))));
    if (i < end) axpy_scalar(x, y, s, out, i, end);
}

void lincomb_avx2(const double* x, double alpha, const double* y, double beta,
                  double* out, std::size_t begin, std::size_t end) {
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vbt = _mm256_set1_pd(beta);
    std::size_t i = begin;
    for (; i + 4 <= end; i += 4)
        _mm256_storeu_pd(out + i, add(mul(va, _mm256_loadu_pd(x + i)),
                                      mul(vbt, _mm256_loadu_pd(y + i))));
    if (i < end) lincomb_scalar(x, alpha, y, beta, out, i, end);
}

}  // namespace qflow::kernels

#endif  // __AVX2__
