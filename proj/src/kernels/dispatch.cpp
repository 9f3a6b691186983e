#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "gazelab/errors.hpp"
#include "gazelab/kernels.hpp"

namespace gazelab::kernels {

#if defined(GAZELAB_HAVE_AVX2)
const KernelTable* avx2_kernels_unchecked();
#endif
#if defined(GAZELAB_HAVE_NEON)
const KernelTable* neon_kernels_unchecked();
#endif

const KernelTable* avx2_table() {
#if defined(GAZELAB_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? avx2_kernels_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(GAZELAB_HAVE_NEON)
    // Advanced SIMD is mandatory on AArch64.
    return neon_kernels_unchecked();
#else
    return nullptr;
#endif
}

std::span<const KernelTable* const> available() {
    static const std::vector<const KernelTable*> tables = [] {
        std::vector<const KernelTable*> t{&scalar_table()};
        if (const auto* k = avx2_table()) t.push_back(k);
        if (const auto* k = neon_table()) t.push_back(k);
        return t;
    }();
    return tables;
}

namespace {

const KernelTable* table_for(Backend backend) {
    switch (backend) {
        case Backend::scalar: return &scalar_table();
        case Backend::avx2: return avx2_table();
        case Backend::neon: return neon_table();
    }
    return nullptr;
}

const KernelTable* initial_table() {
    if (const char* env = std::getenv("GAZE_LAB_SIMD"); env != nullptr && *env != '\0' &&
                                                        std::string(env) != "auto") {
        const KernelTable* t = table_for(parse_backend(env));
        if (t == nullptr) {
            throw InvalidConfig(std::string("GAZE_LAB_SIMD=") + env +
                                " is not available on this machine");
        }
        return t;
    }
    return available().back();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Backend backend) {
    const KernelTable* t = table_for(backend);
    if (t == nullptr) {
        throw InvalidConfig(std::string("kernel backend ") + std::string(backend_name(backend)) +
                            " is not available");
    }
    current().store(t, std::memory_order_relaxed);
}

Backend parse_backend(std::string_view name) {
    if (name == "scalar") return Backend::scalar;
    if (name == "avx2") return Backend::avx2;
    if (name == "neon") return Backend::neon;
    throw InvalidConfig("unknown kernel backend '" + std::string(name) + "'");
}

std::string_view backend_name(Backend backend) {
    switch (backend) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "unknown";
}

}  // namespace gazelab::kernels
