#pragma once

// Geometric scene simulator. A subject's eyes sit in a box in front of a
// screen lying in the z = 0 plane; both eyes fixate one uniformly drawn
// screen point, so the two gaze rays and the interocular vector are
// coplanar by construction. Eye appearance is replaced by a fixed, seeded,
// smooth random map of (gaze, eye position relative to camera).

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "gazelab/geometry.hpp"

namespace gazelab::synth {

using geometry::CartesianGaze;
using geometry::EyePair;
using geometry::PlanePoint;
using geometry::SphericalGaze;
using geometry::Vec3;

using Rng = std::mt19937_64;

enum class View : int { L = 0, M = 1, R = 2 };
inline constexpr std::array<View, 3> kViews{View::L, View::M, View::R};
const char* view_name(View v);

struct SceneConfig {
    geometry::ScreenPlane screen{};
    /// Left, middle, right cameras along the bottom edge of the screen.
    std::array<Vec3, 3> cameras{{{-15.0, -15.0, 0.0}, {0.0, -15.0, 0.0}, {15.0, -15.0, 0.0}}};
    Vec3 head_min{-10.0, -5.0, 50.0};
    Vec3 head_max{10.0, 5.0, 70.0};
    double interocular = 6.3;
    std::size_t feature_dim = 32;
    double noise_sigma = 0.05;
    double glasses_prob = 0.0;
    double glasses_noise_multiplier = 3.0;
    /// Standard deviation of the appearance projection entries.
    double appearance_scale = 1.5;
    /// Seeds the appearance map only; datasets take their own sampling seed.
    std::uint64_t seed = 2024;

    /// Throws InvalidConfig on any violated invariant.
    void validate() const;
    const Vec3& camera(View v) const { return cameras[static_cast<int>(v)]; }
    friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

struct SceneLatent {
    EyePair eyes;
    Vec3 target;
    CartesianGaze g_l;
    CartesianGaze g_r;
    PlanePoint p;
    bool wears_glasses = false;
};

struct DirectionSample {
    std::vector<double> feat_left;
    std::vector<double> feat_right;
    /// Ground truth in the subject-facing frame (geometry::to_subject_frame), r = 1.
    SphericalGaze truth_l;
    SphericalGaze truth_r;
    /// Interocular vector in the same frame.
    Vec3 v;

    friend bool operator==(const DirectionSample&, const DirectionSample&) = default;
};

struct PointSample {
    /// Indexed by View: L, M, R.
    std::array<std::vector<double>, 3> feat_view;
    PlanePoint truth_p;
    EyePair eyes;
    bool wears_glasses = false;
    /// View whose noise was inflated, -1 when none.
    int glasses_view = -1;

    const std::vector<double>& feat(View v) const { return feat_view[static_cast<int>(v)]; }
    friend bool operator==(const PointSample&, const PointSample&) = default;
};

/// The fixed smooth map standing in for eye appearance:
///   feature_k = sin(sum_j A_kj z_j + b_k)
/// where z = (g_x, g_y, g_z + 1, d_x / 30, d_y / 30, (d_z - 60) / 30), g is the
/// world-frame gaze and d the eye position relative to the camera.
class AppearanceMap {
public:
    explicit AppearanceMap(const SceneConfig& cfg);
    std::vector<double> operator()(Vec3 gaze, Vec3 eye_from_camera) const;
    std::size_t dim() const { return bias_.size(); }

private:
    static constexpr std::size_t kInputs = 6;
    std::vector<double> weights_;  // dim x kInputs
    std::vector<double> bias_;
};

SceneLatent gen_scene_sample(const SceneConfig& cfg, Rng& rng);

/// One view's feature vector: appearance of the cyclopean gaze seen from
/// `camera`, plus N(0, (noise_sigma * noise_multiplier)^2) noise.
std::vector<double> featurize_view(const SceneLatent& latent, Vec3 camera, const SceneConfig& cfg,
                                   const AppearanceMap& map, Rng& rng, double noise_multiplier = 1.0);
std::vector<double> featurize_view(const SceneLatent& latent, Vec3 camera, const SceneConfig& cfg,
                                   Rng& rng);

/// Per-eye features for the single-view direction task, seen from the
/// middle camera.
std::vector<double> featurize_eye(Vec3 gaze, Vec3 eye, Vec3 camera, const SceneConfig& cfg,
                                  const AppearanceMap& map, Rng& rng);

DirectionSample make_direction_sample(const SceneLatent& latent, const SceneConfig& cfg,
                                      const AppearanceMap& map, Rng& rng);
PointSample make_point_sample(const SceneLatent& latent, const SceneConfig& cfg,
                              const AppearanceMap& map, Rng& rng);

/// Samples plus their 8:2 train/test partition: the first train_count
/// records are the training split.
template <class Sample>
struct Dataset {
    SceneConfig scene;
    std::uint64_t seed = 0;
    std::vector<Sample> samples;
    std::size_t train_count = 0;

    std::span<const Sample> train() const { return std::span(samples).first(train_count); }
    std::span<const Sample> test() const { return std::span(samples).subspan(train_count); }
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

using DirectionDataset = Dataset<DirectionSample>;
using PointDataset = Dataset<PointSample>;

/// floor(0.8 n).
std::size_t train_size(std::size_t n);

/// Pure functions of (n, cfg, seed). Sample i draws from its own generator
/// seeded by (seed, i), so generation order does not matter.
DirectionDataset make_direction_dataset(std::size_t n, const SceneConfig& cfg, std::uint64_t seed);
PointDataset make_point_dataset(std::size_t n, const SceneConfig& cfg, std::uint64_t seed);

/// Generator for sample `index` of a dataset drawn with `seed`.
Rng sample_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream);

}  // namespace gazelab::synth
