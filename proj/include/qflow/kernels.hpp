#pragma once

#include <array>
#include <cstddef>

namespace qflow::kernels {

/// Kernel backends. `scalar` is the reference implementation; `avx2` mirrors
/// its arithmetic operation-for-operation (no FMA) so results are bit-identical.
enum class Backend { scalar, avx2 };

const char* backend_name(Backend be);
bool backend_available(Backend be);

/// Backend picked at startup: AVX2 when the CPU supports it, else scalar.
/// Environment override: QFLOW_KERNELS=scalar|avx2|auto.
Backend active();

/// Stencil geometry for one channel; w[a] = 1/h_a^2, 0 disables the axis.
struct StencilDims {
    std::size_t nx = 1, ny = 1, nz = 1;
    double wx = 0.0, wy = 0.0, wz = 0.0;
};

/// J(Q) = -aQ - bQ^2 + c|Q|^2 Q + (b/3)|Q|^2 Id cellwise over SoA arrays
/// (components xx, yy, xy, xz, yz; zz = -(xx+yy) implicit).
void bulk_force(Backend be, const std::array<const double*, 5>& q,
                const std::array<double*, 5>& out, std::size_t begin, std::size_t end,
                double a, double b, double c);

/// Periodic second-order Laplacian of one channel, rows [row_begin, row_end)
/// of the (ny*nz) row-major row list.
void laplacian(Backend be, const double* f, double* out, const StencilDims& d,
               std::size_t row_begin, std::size_t row_end);

/// out[i] = x[i] + s*y[i].
void axpy(Backend be, const double* x, const double* y, double s, double* out,
          std::size_t begin, std::size_t end);

/// out[i] = alpha*x[i] + beta*y[i].
void lincomb(Backend be, const double* x, double alpha, const double* y, double beta,
             double* out, std::size_t begin, std::size_t end);

/// Deterministic pairwise summation; identical result on every backend and
/// thread count (fixed recursion tree).
double pairwise_sum(const double* x, std::size_t n);

}  // namespace qflow::kernels

namespace qflow {

/// Global worker count for data-parallel cell loops (1 = serial).
void set_threads(int n);
int threads();

/// Fork-join map over [begin, end); chunk boundaries do not affect results
/// (pure elementwise writes).
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn);

namespace detail {
void parallel_for_impl(std::size_t begin, std::size_t end,
                       void (*run)(void*, std::size_t, std::size_t), void* ctx);
}

template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
    auto thunk = [](void* ctx, std::size_t b, std::size_t e) {
        (*static_cast<Fn*>(ctx))(b, e);
    };
    detail::parallel_for_impl(begin, end, thunk, &fn);
}

}  // namespace qflow
