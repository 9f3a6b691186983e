// AVX2 kernels. Compiled with -mavx2 (no FMA) so mul+add pairs round the
// same way as the scalar reference.

#include <immintrin.h>

#include <vector>

#include "gazelab/kernels.hpp"

namespace gazelab::kernels {

namespace {

constexpr std::size_t kLanes = 4;

void add(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double* out, const double* a, double s, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(vs, _mm256_loadu_pd(a + i)));
    }
    for (; i < n; ++i) out[i] = s * a[i];
}

void axpy(double* y, const double* x, double s, std::size_t n) {
    const __m256d vs = _mm256_set1_pd(s);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d prod = _mm256_mul_pd(vs, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += s * x[i];
}

void relu(double* out, const double* a, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d v = _mm256_loadu_pd(a + i);
        const __m256d keep = _mm256_cmp_pd(v, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(v, keep));
    }
    for (; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(double* out, const double* g, const double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d keep = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        const __m256d gi = _mm256_and_pd(_mm256_loadu_pd(g + i), keep);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(out + i), gi));
    }
    for (; i < n; ++i) out[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void maximum(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        const __m256d take_b = _mm256_cmp_pd(vb, va, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_blendv_pd(va, vb, take_b));
    }
    for (; i < n; ++i) out[i] = b[i] > a[i] ? b[i] : a[i];
}

double hsum(__m256d v) {
    alignas(32) double lanes[kLanes];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double sum_sq(const double* a, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
        const __m256d v0 = _mm256_loadu_pd(a + i);
        const __m256d v1 = _mm256_loadu_pd(a + i + kLanes);
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(v0, v0));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(v1, v1));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * a[i];
    return s;
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + kLanes),
                                                 _mm256_loadu_pd(b + i + kLanes)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

// Row i of C = a_row (length k) times B (k x n, row stride ldb), with the
// per-output sum over p kept in ascending order. Sixteen columns live in
// registers at a time.
void gemm_row(double* ci, const double* a_row, std::size_t a_stride, const double* b,
              std::size_t ldb, std::size_t k, std::size_t n) {
    std::size_t j = 0;
    for (; j + 4 * kLanes <= n; j += 4 * kLanes) {
        __m256d c0 = _mm256_setzero_pd();
        __m256d c1 = _mm256_setzero_pd();
        __m256d c2 = _mm256_setzero_pd();
        __m256d c3 = _mm256_setzero_pd();
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d av = _mm256_set1_pd(a_row[p * a_stride]);
            const double* bp = b + p * ldb + j;
            c0 = _mm256_add_pd(c0, _mm256_mul_pd(av, _mm256_loadu_pd(bp)));
            c1 = _mm256_add_pd(c1, _mm256_mul_pd(av, _mm256_loadu_pd(bp + kLanes)));
            c2 = _mm256_add_pd(c2, _mm256_mul_pd(av, _mm256_loadu_pd(bp + 2 * kLanes)));
            c3 = _mm256_add_pd(c3, _mm256_mul_pd(av, _mm256_loadu_pd(bp + 3 * kLanes)));
        }
        _mm256_storeu_pd(ci + j, c0);
        _mm256_storeu_pd(ci + j + kLanes, c1);
        _mm256_storeu_pd(ci + j + 2 * kLanes, c2);
        _mm256_storeu_pd(ci + j + 3 * kLanes, c3);
    }
    for (; j + kLanes <= n; j += kLanes) {
        __m256d c0 = _mm256_setzero_pd();
        for (std::size_t p = 0; p < k; ++p) {
            const __m256d av = _mm256_set1_pd(a_row[p * a_stride]);
            c0 = _mm256_add_pd(c0, _mm256_mul_pd(av, _mm256_loadu_pd(b + p * ldb + j)));
        }
        _mm256_storeu_pd(ci + j, c0);
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
    // Row p of C sums over r = 0..m-1 of a[r][p] * b[r][:]; column p of A has
    // stride k.
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
    const __m256d vm = _mm256_set1_pd(momentum);
    const __m256d vwd = _mm256_set1_pd(weight_decay);
    const __m256d vlr = _mm256_set1_pd(lr);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        const __m256d pv = _mm256_loadu_pd(p + i);
        __m256d b = _mm256_mul_pd(vm, _mm256_loadu_pd(buf + i));
        b = _mm256_add_pd(b, _mm256_loadu_pd(grad + i));
        b = _mm256_add_pd(b, _mm256_mul_pd(vwd, pv));
        _mm256_storeu_pd(buf + i, b);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(pv, _mm256_mul_pd(vlr, b)));
    }
    for (; i < n; ++i) {
        buf[i] = momentum * buf[i] + grad[i] + weight_decay * p[i];
        p[i] -= lr * buf[i];
    }
}

constexpr KernelTable kAvx2{
    Backend::avx2, "avx2", add,     sub,     mul,     scale,   axpy,       relu,
    relu_backward, maximum, sum_sq, dot,     gemm_nn, gemm_tn, gemm_nt, sgd_update,
};

}  // namespace

const KernelTable* avx2_kernels_unchecked() { return &kAvx2; }

}  // namespace gazelab::kernels
