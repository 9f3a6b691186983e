#include "gazelab/losses.hpp"

#include <cmath>

#include "gazelab/errors.hpp"

namespace gazelab::losses {

void LossWeights::validate() const {
    for (double w : {lambda1, lambda2, lambda3}) {
        if (!std::isfinite(w) || w < 0.0) throw InvalidConfig("loss weights must be finite and nonnegative");
    }
}

namespace {

void require_cols(const char* what, Var a, std::size_t cols) {
    if (a.value().rank() != 2 || a.value().cols() != cols) {
        throw ShapeMismatch(std::string(what) + " expects [B, " + std::to_string(cols) + "], got " +
                            shape_string(a.shape()));
    }
}

}  // namespace

Var direction_loss_l1(Var pred, Var truth) {
    require_cols("direction_loss_l1", pred, 4);
    return ad::mse(pred, truth);
}

Var sph_to_cart(Var angles) {
    require_cols("sph_to_cart", angles, 2);
    const Var theta = ad::slice_cols(angles, 0, 1);
    const Var phi = ad::slice_cols(angles, 1, 2);
    const Var cos_phi = ad::cos(phi);
    return ad::concat({ad::mul(cos_phi, ad::sin(theta)), ad::sin(phi), ad::mul(cos_phi, ad::cos(theta))});
}

Var coplanar_loss_l2(Var pred, Var v) {
    require_cols("coplanar_loss_l2", pred, 4);
    require_cols("coplanar_loss_l2", v, 3);
    if (pred.value().rows() != v.value().rows()) {
        throw ShapeMismatch("coplanar_loss_l2: " + shape_string(pred.shape()) + " vs " + shape_string(v.shape()));
    }
    const Var g_l = sph_to_cart(ad::slice_cols(pred, 0, 2));
    const Var g_r = sph_to_cart(ad::slice_cols(pred, 2, 4));
    const Var triple = ad::dot3(ad::cross3(g_l, g_r), v);
    return ad::scale(ad::sq_l2(triple), 1.0 / static_cast<double>(pred.value().rows()));
}

Var point_loss(Var pred, Var truth) {
    require_cols("point_loss", pred, 2);
    return ad::mse(pred, truth);
}

Var weight_decay_term(Tape& tape, std::span<Param* const> params) {
    Var sum = tape.constant(Tensor::scalar(0.0));
    for (Param* p : params) {
        if (p->decay) sum = ad::add(sum, ad::sq_l2(tape.param(*p)));
    }
    return ad::scale(sum, 0.5);
}

JointLoss joint_loss(Tape& tape, const std::optional<DirectionTerms>& direction,
                     const std::optional<PointTerms>& point, std::span<Param* const> params,
                     const LossWeights& weights) {
    JointLoss out;
    Var total = tape.constant(Tensor::scalar(0.0));
    if (direction) {
        const Var l1 = direction_loss_l1(direction->pred, direction->truth);
        const Var l2 = coplanar_loss_l2(direction->pred, direction->v);
        out.l1 = l1.item();
        out.l2 = l2.item();
        total = ad::add(total, ad::add(l1, ad::scale(l2, weights.lambda1)));
    }
    if (point) {
        Var lp = point_loss(point->pred, point->truth);
        out.point = lp.item();
        if (!point->aux.empty()) {
            Var aux_sum = tape.constant(Tensor::scalar(0.0));
            for (const Var& a : point->aux) aux_sum = ad::add(aux_sum, point_loss(a, point->truth));
            out.aux = aux_sum.item();
            lp = ad::add(lp, ad::scale(aux_sum, kDeepSupervisionWeight));
        }
        total = ad::add(total, ad::scale(lp, weights.lambda2));
    }
    const Var decay = weight_decay_term(tape, params);
    out.decay = decay.item();
    out.total = ad::add(total, ad::scale(decay, weights.lambda3));
    return out;
}

}  // namespace gazelab::losses
