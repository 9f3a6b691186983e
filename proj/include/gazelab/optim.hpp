#pragma once

#include <span>

#include "gazelab/autodiff.hpp"

namespace gazelab {

/// One SGD-with-momentum update on every param, then zeroes the gradients:
///   buf <- momentum * buf + grad + weight_decay * value
///   value <- value - lr * buf
void sgd_step(std::span<Param* const> params, double lr, double momentum, double weight_decay);

void zero_grads(std::span<Param* const> params);

}  // namespace gazelab
