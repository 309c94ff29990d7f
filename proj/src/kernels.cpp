#include "qflow/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <thread>
#include <vector>

#include "qflow/errors.hpp"

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

#if defined(QFLOW_HAVE_AVX2)
void bulk_force_avx2(const std::array<const double*, 5>& q,
                     const std::array<double*, 5>& out, std::size_t begin,
                     std::size_t end, double a, double b, double c);
void laplacian_avx2(const double* f, double* out, const StencilDims& d,
                    std::size_t row_begin, std::size_t row_end);
void axpy_avx2(const double* x, const double* y, double s, double* out,
               std::size_t begin, std::size_t end);
void lincomb_avx2(const double* x, double alpha, const double* y, double beta,
                  double* out, std::size_t begin, std::size_t end);
#endif

const char* backend_name(Backend be) {
    return be == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend be) {
    if (be == Backend::scalar) return true;
#if defined(QFLOW_HAVE_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

namespace {
Backend detect() {
    if (const char* env = std::getenv("QFLOW_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!backend_available(Backend::avx2))
                throw ConfigError("QFLOW_KERNELS=avx2 but this CPU/build lacks AVX2");
            return Backend::avx2;
        }
        // anything else (incl. "auto") falls through to detection
    }
    return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}
}  // namespace

Backend active() {
    static const Backend be = detect();
    return be;
}

void bulk_force(Backend be, const std::array<const double*, 5>& q,
                const std::array<double*, 5>& out, std::size_t begin, std::size_t end,
                double a, double b, double c) {
#if defined(QFLOW_HAVE_AVX2)
    if (be == Backend::avx2) {
        bulk_force_avx2(q, out, begin, end, a, b, c);
        return;
    }
#endif
    (void)be;
    bulk_force_scalar(q, out, begin, end, a, b, c);
}

void laplacian(Backend be, const double* f, double* out, const StencilDims& d,
               std::size_t row_begin, std::size_t row_end) {
#if defined(QFLOW_HAVE_AVX2)
    if (be == Backend::avx2) {
        laplacian_avx2(f, out, d, row_begin, row_end);
        return;
    }
#endif
    (void)be;
    laplacian_scalar(f, out, d, row_begin, row_end);
}

void axpy(Backend be, const double* x, const double* y, double s, double* out,
          std::size_t begin, std::size_t end) {
#if defined(QFLOW_HAVE_AVX2)
    if (be == Backend::avx2) {
        axpy_avx2(x, y, s, out, begin, end);
        return;
    }
#endif
    (void)be;
    axpy_scalar(x, y, s, out, begin, end);
}

void lincomb(Backend be, const double* x, double alpha, const double* y, double beta,
             double* out, std::size_t begin, std::size_t end) {
#if defined(QFLOW_HAVE_AVX2)
    if (be == Backend::avx2) {
        lincomb_avx2(x, alpha, y, beta, out, begin, end);
        return;
    }
#endif
    (void)be;
    lincomb_scalar(x, alpha, y, beta, out, begin, end);
}

}  // namespace qflow::kernels

namespace qflow {

namespace {
int g_threads = 1;
}

void set_threads(int n) { g_threads = std::max(1, n); }
int threads() { return g_threads; }

namespace detail {

void parallel_for_impl(std::size_t begin, std::size_t end,
                       void (*run)(void*, std::size_t, std::size_t), void* ctx) {
    const std::size_t n = end > begin ? end - begin : 0;
    const int nt = std::min<std::size_t>(g_threads, std::max<std::size_t>(n / 1024, 1));
    if (nt <= 1 || n == 0) {
        run(ctx, begin, end);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nt));
    const std::size_t chunk = (n + static_cast<std::size_t>(nt) - 1) / static_cast<std::size_t>(nt);
    for (int t = 0; t < nt; ++t) {
        const std::size_t b = begin + static_cast<std::size_t>(t) * chunk;
        const std::size_t e = std::min(end, b + chunk);
        if (b >= e) break;
        pool.emplace_back(run, ctx, b, e);
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

}  // namespace qflow
