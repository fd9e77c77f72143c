#if defined(__aarch64__)
#include <arm_neon.h>

#include "san/kernels.hpp"

namespace san::kernels {

namespace {

double dot(const double* a, const double* b, int n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, int n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    int i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
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

const KernelTable& neon_table() {
    static const KernelTable t{dot, axpy, gemv, gemv_t_acc, ger_acc};
    return t;
}

}  // namespace san::kernels
#endif
