#pragma once

// Turns dataset records into the dense tensors the model consumes.

#include <array>
#include <span>
#include <string>

#include "gazelab/synth.hpp"
#include "gazelab/tensor.hpp"

namespace gazelab {

/// Which camera views feed the point head. A single view is copied into all
/// three branch slots.
enum class ViewSelection { L, M, R, all };
const char* selection_name(ViewSelection s);
ViewSelection parse_selection(const std::string& name);

struct DirectionBatch {
    Tensor left;   // [B, feature_dim]
    Tensor right;  // [B, feature_dim]
    Tensor truth;  // [B, 4] theta_l, phi_l, theta_r, phi_r
    Tensor v;      // [B, 3]
};

struct PointBatch {
    std::array<Tensor, 3> views;  // slot L, M, R; each [B, feature_dim]
    Tensor truth;                 // [B, 2]
};

DirectionBatch make_direction_batch(std::span<const synth::DirectionSample> data,
                                    std::span<const std::size_t> indices);
PointBatch make_point_batch(std::span<const synth::PointSample> data, std::span<const std::size_t> indices,
                            ViewSelection views = ViewSelection::all);

}  // namespace gazelab
