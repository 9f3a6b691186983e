#include "gazelab/kernels.hpp"

namespace gazelab::kernels {

namespace {

void add(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(double* out, const double* a, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = s * a[i];
}

void axpy(double* y, const double* x, double s, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void relu(double* out, const double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] > 0.0 ? a[i] : 0.0;
}

void relu_backward(double* out, const double* g, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += x[i] > 0.0 ? g[i] : 0.0;
}

void maximum(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = b[i] > a[i] ? b[i] : a[i];
}

double sum_sq(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

// Every output accumulates its products in ascending order of the shared
// index, starting from zero. The vector backends reproduce that order.
void gemm_nn(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void gemm_tn(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
             std::size_t n) {
    for (std::size_t i = 0; i < k * n; ++i) c[i] = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const double* br = b + r * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double arp = a[r * k + p];
            double* cp = c + p * n;
            for (std::size_t j = 0; j < n; ++j) cp[j] += arp * br[j];
        }
    }
}

void gemm_nt(double* c, const double* a, const double* b, std::size_t m, std::size_t n,
             std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += ai[j] * bp[j];
            c[i * k + p] = s;
        }
    }
}

void sgd_update(double* p, double* buf, const double* grad, double lr, double momentum,
                double weight_decay, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        buf[i] = momentum * buf[i] + grad[i] + weight_decay * p[i];
        p[i] -= lr * buf[i];
    }
}

constexpr KernelTable kScalar{
    Backend::scalar, "scalar", add,     sub,     mul,     scale,   axpy,       relu,
    relu_backward,   maximum,  sum_sq,  dot,     gemm_nn, gemm_tn, gemm_nt, sgd_update,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace gazelab::kernels
