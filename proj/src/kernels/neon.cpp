// AArch64 NEON kernels, two doubles per register. Separate multiply and add
// (never vfmaq) so results match the scalar reference.

#include <arm_neon.h>

#include <vector>

#include "gazelab/kernels.hpp"

namespace gazelab::kernels {

namespace {

constexpr std::size_t kLanes = 2;

void add(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double* out, const double* a, double s, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) vst1q_f64(out + i, vmulq_f64(vs, vld1q_f64(a + i)));
    for (; i < n; ++i) out[i] = s * a[i];
}

void axpy(double* y, const double* x, double s, std::size_t n) {
    const float64x2_t vs = vdupq_n_f64(s);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(vs, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) y[i] += s * x[i];
}

void relu(double* out, const double* a, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t v = vld1q_f64(a + i);
        vst1q_f64(out + i, vbslq_f64(vcgtq_f64(v, zero), v, zero));
    }
    for (; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(double* out, const double* g, const double* x, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t gi = vbslq_f64(vcgtq_f64(vld1q_f64(x + i), zero), vld1q_f64(g + i), zero);
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(out + i), gi));
    }
    for (; i < n; ++i) out[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void maximum(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t va = vld1q_f64(a + i);
        const float64x2_t vb = vld1q_f64(b + i);
        vst1q_f64(out + i, vbslq_f64(vcgtq_f64(vb, va), vb, va));
    }
    for (; i < n; ++i) out[i] = b[i] > a[i] ? b[i] : a[i];
}

double sum_sq(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const float64x2_t v = vld1q_f64(a + i);
        acc = vaddq_f64(acc, vmulq_f64(v, v));
    }
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) s += a[i] * a[i];
    return s;
}

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void gemm_row(double* ci, const double* a_row, std::size_t a_stride, const double* b,
              std::size_t ldb, std::size_t k, std::size_t n) {
    std::size_t j = 0;
    for (; j + 4 * kLanes <= n; j += 4 * kLanes) {
        float64x2_t c0 = vdupq_n_f64(0.0), c1 = c0, c2 = c0, c3 = c0;
        for (std::size_t p = 0; p < k; ++p) {
            const float64x2_t av = vdupq_n_f64(a_row[p * a_stride]);
            const double* bp = b + p * ldb + j;
            c0 = vaddq_f64(c0, vmulq_f64(av, vld1q_f64(bp)));
            c1 = vaddq_f64(c1, vmulq_f64(av, vld1q_f64(bp + 2)));
            c2 = vaddq_f64(c2, vmulq_f64(av, vld1q_f64(bp + 4)));
            c3 = vaddq_f64(c3, vmulq_f64(av, vld1q_f64(bp + 6)));
        }
        vst1q_f64(ci + j, c0);
        vst1q_f64(ci + j + 2, c1);
        vst1q_f64(ci + j + 4, c2);
        vst1q_f64(ci + j + 6, c3);
    }
    for (; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a_row[p * a_stride] * b[p * ldb + j];
        ci[j] = s;
    }
}

void gemm_nn(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) gemm_row(c + i * n, a + i * k, 1, b, n, k, n);
}

void gemm_tn(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) gemm_row(c + p * n, a + p, k, b, n, m, n);
}

void gemm_nt(double* c, const double* a, const double* b, std::size_t m, std::size_t n,
             std::size_t k) {
    thread_local std::vector<double> bt;
    bt.resize(n * k);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
    }
    for (std::size_t i = 0; i < m; ++i) gemm_row(c + i * k, a + i * n, 1, bt.data(), k, n, k);
}

void sgd_update(double* p, double* buf, const double* grad, double lr, double momentum,
                double weight_decay, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        buf[i] = momentum * buf[i] + grad[i] + weight_decay * p[i];
        p[i] -= lr * buf[i];
    }
}

constexpr KernelTable kNeon{
    Backend::neon, "neon", add,     sub,     mul,     scale,   axpy,       relu,
    relu_backward, maximum, sum_sq, dot,     gemm_nn, gemm_tn, gemm_nt, sgd_update,
};

}  // namespace

const KernelTable* neon_kernels_unchecked() { return &kNeon; }

}  // namespace gazelab::kernels
