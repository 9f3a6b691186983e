#pragma once

// Dense double-precision inner loops used by the autodiff tensors.
//
// Each backend fills a KernelTable. The scalar table is the reference.
// Elementwise kernels and the three gemm variants must match it bit for bit:
// vector backends parallelize across independent outputs only and never
// reorder a per-output accumulation. The two reductions (sum_sq, dot) are
// allowed to split the sum across lanes and agree to rounding only.
//
// The active backend is chosen once at first use: the best one the CPU
// supports, unless GAZE_LAB_SIMD=scalar|avx2|neon names another.

#include <cstddef>
#include <span>
#include <string_view>

namespace gazelab::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
    Backend backend;
    const char* name;

    // out[i] = a[i] + b[i]
    void (*add)(double* out, const double* a, const double* b, std::size_t n);
    // out[i] = a[i] - b[i]
    void (*sub)(double* out, const double* a, const double* b, std::size_t n);
    // out[i] = a[i] * b[i]
    void (*mul)(double* out, const double* a, const double* b, std::size_t n);
    // out[i] = s * a[i]
    void (*scale)(double* out, const double* a, double s, std::size_t n);
    // y[i] += s * x[i]
    void (*axpy)(double* y, const double* x, double s, std::size_t n);
    // out[i] = max(a[i], 0)
    void (*relu)(double* out, const double* a, std::size_t n);
    // out[i] += x[i] > 0 ? g[i] : 0
    void (*relu_backward)(double* out, const double* g, const double* x, std::size_t n);
    // out[i] = b[i] > a[i] ? b[i] : a[i]  (ties keep a)
    void (*maximum)(double* out, const double* a, const double* b, std::size_t n);
    // sum of a[i]^2
    double (*sum_sq)(const double* a, std::size_t n);
    // sum of a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    // C[m x n] = A[m x k] * B[k x n]
    void (*gemm_nn)(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                    std::size_t n);
    // C[k x n] = A[m x k]^T * B[m x n]
    void (*gemm_tn)(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                    std::size_t n);
    // C[m x k] = A[m x n] * B[k x n]^T
    void (*gemm_nt)(double* c, const double* a, const double* b, std::size_t m, std::size_t n,
                    std::size_t k);
    // buf = momentum * buf + grad + wd * p; p -= lr * buf
    void (*sgd_update)(double* p, double* buf, const double* grad, double lr, double momentum,
                       double weight_decay, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the backend was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Tables available on this machine, scalar first.
std::span<const KernelTable* const> available();

const KernelTable& active();
/// Overrides the active backend for the process. Throws InvalidConfig when
/// the backend is unavailable. Not safe while other threads run kernels.
void select(Backend backend);
Backend parse_backend(std::string_view name);
std::string_view backend_name(Backend backend);

}  // namespace gazelab::kernels
