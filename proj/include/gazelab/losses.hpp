#pragma once

// Training objective:
//
//   l1 + lambda1 * l2 + lambda2 * (l_point + 0.1 * sum_v l_aux_v) + lambda3 * 0.5 * |w|^2
//
// l1      mean squared (theta, phi) error of both eyes
// l2      mean squared scalar triple product ((g_l x g_r) . v)^2 of the
//         predicted directions, converted to unit vectors on the tape
// l_point mean squared screen-point distance
// l_aux   the same for each per-view auxiliary head (deep supervision)
// |w|^2   squared weights of every decaying (non-bias) parameter

#include <optional>
#include <span>
#include <vector>

#include "gazelab/autodiff.hpp"

namespace gazelab::losses {

struct LossWeights {
    double lambda1 = 1e-6;
    double lambda2 = 1e-3;
    double lambda3 = 1e-4;

    void validate() const;
    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

inline constexpr double kDeepSupervisionWeight = 0.1;

/// pred, truth: [B, 4] as (theta_l, phi_l, theta_r, phi_r).
Var direction_loss_l1(Var pred, Var truth);
/// [B, 2] (theta, phi) to [B, 3] unit vectors, differentiably.
Var sph_to_cart(Var angles);
/// pred: [B, 4] angles, v: [B, 3] interocular vectors.
Var coplanar_loss_l2(Var pred, Var v);
/// pred, truth: [B, 2] in cm.
Var point_loss(Var pred, Var truth);
/// 0.5 * sum of squared entries over decaying params.
Var weight_decay_term(Tape& tape, std::span<Param* const> params);

struct DirectionTerms {
    Var pred;
    Var truth;
    Var v;
};

struct PointTerms {
    Var pred;
    Var truth;
    std::vector<Var> aux;
};

struct JointLoss {
    Var total;
    double l1 = 0.0;
    double l2 = 0.0;
    double point = 0.0;
    double aux = 0.0;
    double decay = 0.0;
    double value() const { return total.item(); }
};

/// Either batch may be absent (single-task modes); an absent batch adds 0.
JointLoss joint_loss(Tape& tape, const std::optional<DirectionTerms>& direction,
                     const std::optional<PointTerms>& point, std::span<Param* const> params,
                     const LossWeights& weights);

}  // namespace gazelab::losses
