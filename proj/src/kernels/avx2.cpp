#include <immintrin.h>

#include "san/kernels.hpp"

namespace san::kernels {

namespace {

double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, int n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    int i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, int n) {
    const __m256d va = _mm256_set1_pd(alpha);
    int i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* w, const double* x, const double* b, double* y, int rows, int cols) {
    for (int r = 0; r < rows; ++r) y[r] = dot(w + static_cast<long>(r) * cols, x, cols) + (b ? b[r] : 0.0);
}

void gemv_t_acc(const double* w, const double* g, double* out, int rows, int cols) {
    for (int r = 0; r < rows; ++r) axpy(g[r], w + static_cast<long>(r) * cols, out, cols);
}

void ger_acc(double* gm, const double* g, const double* x, int rows, int cols) {
    for (int r = 0; r < rows; ++r) axpy(g[r], x, gm + static_cast<long>(r) * cols, cols);
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{dot, axpy, gemv, gemv_t_acc, ger_acc};
    return t;
}

}  // namespace san::kernels
