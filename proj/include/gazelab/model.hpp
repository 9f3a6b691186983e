#pragma once

// Shared-trunk gaze network. One MLP trunk is applied to every eye and every
// view; a direction head maps the two eyes' trunk features to
// (theta_l, phi_l, theta_r, phi_r); a point head runs one weight-shared
// branch per view, pools the three branch outputs into a fourth branch and
// fuses all four into a 2-D screen point.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gazelab/autodiff.hpp"

namespace gazelab::model {

enum class PoolKind { mean, max };
const char* pool_name(PoolKind kind);
PoolKind parse_pool(const std::string& name);

struct ModelConfig {
    std::size_t input_dim = 32;
    std::vector<std::size_t> trunk_hidden{64, 64, 64};
    std::size_t trunk_out = 64;
    std::size_t head_hidden = 32;
    PoolKind pool_kind = PoolKind::mean;
    /// Adds one auxiliary point head per view on the branch features.
    bool deep_supervision = false;

    void validate() const;
    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// y = x W + b, W stored [in, out].
struct Dense {
    Param weight;
    Param bias;

    Dense() = default;
    Dense(std::size_t in, std::size_t out);
    Var apply(Tape& tape, Var x);
};

struct Mlp {
    std::vector<Dense> layers;
    /// relu after the last layer too (hidden layers always get one).
    bool relu_last = false;

    Var apply(Tape& tape, Var x);
};

struct NamedParam {
    std::string name;
    Param* param;
};

struct GazeModel {
    ModelConfig config;
    Mlp trunk;  // relu between layers, linear output
    Mlp direction_head;
    Dense point_branch;
    Mlp point_fusion;
    std::vector<Dense> aux_heads;

    /// Every parameter in a fixed order with a stable dotted name.
    std::vector<NamedParam> named_params();
    std::vector<Param*> params();
    std::vector<Param*> trunk_params();
    std::vector<Param*> direction_params();
    /// Branch, fusion and auxiliary heads.
    std::vector<Param*> point_params();
};

/// Weights ~ U(+-sqrt(6 / (fan_in + fan_out))), biases zero, drawn in
/// named_params() order from a generator seeded with `seed`.
GazeModel init(const ModelConfig& config, std::uint64_t seed);

/// Zeroes the final layer of both heads (and the auxiliary heads), so the
/// model predicts straight-ahead gaze and the screen origin.
void zero_output_layers(GazeModel& model);

/// Trunk features for a [B, input_dim] batch.
Var apply_trunk(Tape& tape, Mlp& trunk, Var features);

/// [B, 4] raw (theta_l, phi_l, theta_r, phi_r).
Var forward_direction(Tape& tape, GazeModel& model, Var feat_left, Var feat_right);

/// Elementwise mean or max across the three views.
Var cross_view_pool(Var f_l, Var f_m, Var f_r, PoolKind kind);

struct PointOutput {
    Var point;
    /// Per-view auxiliary predictions when deep supervision is on.
    std::vector<Var> aux;
};

/// [B, 2] predicted screen point in cm.
PointOutput forward_point(Tape& tape, GazeModel& model, Var feat_l, Var feat_m, Var feat_r);

}  // namespace gazelab::model
