#include "gazelab/optim.hpp"

#include "gazelab/kernels.hpp"

namespace gazelab {

void sgd_step(std::span<Param* const> params, double lr, double momentum, double weight_decay) {
    const auto& k = kernels::active();
    for (Param* p : params) {
        k.sgd_update(p->value.ptr(), p->momentum.ptr(), p->grad.ptr(), lr, momentum, weight_decay,
                     p->value.size());
        p->zero_grad();
    }
}

void zero_grads(std::span<Param* const> params) {
    for (Param* p : params) p->zero_grad();
}

}  // namespace gazelab
