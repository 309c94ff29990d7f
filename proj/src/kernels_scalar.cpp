// Reference kernels. The AVX2 variants in kernels_avx2.cpp mirror the
// arithmetic here operation-for-operation; any change to an expression tree
// must be made in both files or the bit-equality tests will fail.

#include <cstddef>

#include "qflow/kernels.hpp"

namespace qflow::kernels {

void bulk_force_scalar(const std::array<const double*, 5>& q,
                       const std::array<double*, 5>& out, std::size_t begin,
                       std::size_t end, double a, double b, double c) {
    const double b3 = b / 3.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double xx = q[0][i], yy = q[1][i], xy = q[2][i], xz = q[3][i], yz = q[4][i];
        const double zz = -(xx + yy);
        const double sq_d = (xx * xx + yy * yy) + zz * zz;
        const double sq_o = (xy * xy + xz * xz) + yz * yz;
        const double q2 = sq_d + 2.0 * sq_o;
        const double s_xx = (xx * xx + xy * xy) + xz * xz;
        const double s_yy = (xy * xy + yy * yy) + yz * yz;
        const double s_xy = (xx * xy + xy * yy) + xz * yz;
        const double s_xz = (xx * xz + xy * yz) + xz * zz;
        const double s_yz = (xy * xz + yy * yz) + yz * zz;
        const double idt = b3 * q2;
        const double cq2 = c * q2;
        out[0][i] = ((cq2 * xx - a * xx) - b * s_xx) + idt;
        out[1][i] = ((cq2 * yy - a * yy) - b * s_yy) + idt;
        out[2][i] = (cq2 * xy - a * xy) - b * s_xy;
        out[3][i] = (cq2 * xz - a * xz) - b * s_xz;
        out[4][i] = (cq2 * yz - a * yz) - b * s_yz;
    }
}

void laplacian_scalar(const double* f, double* out, const StencilDims& d,
                      std::size_t row_begin, std::size_t row_end) {
    const std::size_t nx = d.nx, ny = d.ny, nz = d.nz;
    for (std::size_t row = row_begin; row < row_end; ++row) {
        const std::size_t iy = row % ny;
        const std::size_t iz = row / ny;
        const std::size_t base = row * nx;
        const std::size_t ym = (iy == 0 ? ny - 1 : iy - 1) * nx + iz * ny * nx;
        const std::size_t yp = (iy + 1 == ny ? 0 : iy + 1) * nx + iz * ny * nx;
        const std::size_t zm = iy * nx + (iz == 0 ? nz - 1 : iz - 1) * ny * nx;
        const std::size_t zp = iy * nx + (iz + 1 == nz ? 0 : iz + 1) * ny * nx;
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::size_t i = base + ix;
            const double cc = f[i] + f[i];
            double acc = 0.0;
            if (d.wx != 0.0) {
                const std::size_t xm = base + (ix == 0 ? nx - 1 : ix - 1);
                const std::size_t xp = base + (ix + 1 == nx ? 0 : ix + 1);
                acc = acc + d.wx * ((f[xm] + f[xp]) - cc);
            }
            if (d.wy != 0.0) acc = acc + d.wy * ((f[ym + ix] + f[yp + ix]) - cc);
            if (d.wz != 0.0) acc = acc + d.wz * ((f[zm + ix] + f[zp + ix]) - cc);
            out[i] = acc;
        }
    }
}

void axpy_scalar(const double* x, const double* y, double s, double* out,
                 std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = x[i] + s * y[i];
}

void lincomb_scalar(const double* x, double alpha, const double* y, double beta,
                    double* out, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = alpha * x[i] + beta * y[i];
}

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 32) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

}  // namespace qflow::kernels
