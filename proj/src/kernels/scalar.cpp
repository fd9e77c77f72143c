#include "san/kernels.hpp"

namespace san::kernels {

namespace {

double dot(const double* a, const double* b, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, int n) {
    for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
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

const KernelTable& scalar_table() {
    static const KernelTable t{dot, axpy, gemv, gemv_t_acc, ger_acc};
    return t;
}

}  // namespace san::kernels
