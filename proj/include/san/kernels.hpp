#pragma once

// Dense inner loops of the perceptrons. Each instruction set provides the same
// table; the scalar table is the reference the others are tested against.

#include <string>
#include <vector>

namespace san::kernels {

struct KernelTable {
    double (*dot)(const double* a, const double* b, int n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, int n);
    // y = W x + b, W row-major rows x cols; b may be null
    void (*gemv)(const double* w, const double* x, const double* b, double* y, int rows, int cols);
    // out += Wᵀ g
    void (*gemv_t_acc)(const double* w, const double* g, double* out, int rows, int cols);
    // G += g xᵀ
    void (*ger_acc)(double* gm, const double* g, const double* x, int rows, int cols);
};

enum class Isa { Scalar, Avx2, Neon };

std::string isa_name(Isa isa);

// Instruction sets this binary was built with and this CPU can run.
std::vector<Isa> supported();

// Best supported, unless SAN_SIMD=scalar|avx2|neon selects another.
Isa detect();

const KernelTable& table(Isa isa);
const KernelTable& active();
void set_active(Isa isa);
Isa active_isa();

const KernelTable& scalar_table();
#if defined(SAN_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__)
const KernelTable& neon_table();
#endif

}  // namespace san::kernels
