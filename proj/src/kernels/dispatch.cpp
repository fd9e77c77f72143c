#include <atomic>
#include <cstdlib>
#include <string>

#include "san/errors.hpp"
#include "san/kernels.hpp"

namespace san::kernels {

namespace {

bool cpu_has(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return true;
        case Isa::Avx2:
#if defined(SAN_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

std::atomic<int> g_active{-1};

}  // namespace

std::string isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar:
            return "scalar";
        case Isa::Avx2:
            return "avx2";
        case Isa::Neon:
            return "neon";
    }
    return "unknown";
}

std::vector<Isa> supported() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::Scalar, Isa::Avx2, Isa::Neon})
        if (cpu_has(isa)) out.push_back(isa);
    return out;
}

Isa detect() {
    if (const char* env = std::getenv("SAN_SIMD")) {
        const std::string want(env);
        for (Isa isa : supported())
            if (isa_name(isa) == want) return isa;
    }
    return supported().back();
}

const KernelTable& table(Isa isa) {
    require(cpu_has(isa), "kernel table " + isa_name(isa) + " not available");
    switch (isa) {
#if defined(SAN_HAVE_AVX2)
        case Isa::Avx2:
            return avx2_table();
#endif
#if defined(__aarch64__)
        case Isa::Neon:
            return neon_table();
#endif
        default:
            return scalar_table();
    }
}

Isa active_isa() {
    int v = g_active.load(std::memory_order_relaxed);
    if (v < 0) {
        v = static_cast<int>(detect());
        g_active.store(v, std::memory_order_relaxed);
    }
    return static_cast<Isa>(v);
}

const KernelTable& active() { return table(active_isa()); }

void set_active(Isa isa) {
    require(cpu_has(isa), "kernel table " + isa_name(isa) + " not available");
    g_active.store(static_cast<int>(isa), std::memory_order_relaxed);
}

}  // namespace san::kernels
