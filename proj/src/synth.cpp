#include "gazelab/synth.hpp"

#include <cmath>
#include <numbers>

#include "gazelab/errors.hpp"

namespace gazelab::synth {

namespace {

constexpr std::uint64_t kDirectionStream = 0x6469726563;  // "direc"
constexpr std::uint64_t kPointStream = 0x706f696e74;      // "point"

double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

void add_noise(std::vector<double>& features, double sigma, Rng& rng) {
    if (sigma <= 0.0) return;
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& f : features) f += noise(rng);
}

}  // namespace

const char* view_name(View v) {
    switch (v) {
        case View::L: return "L";
        case View::M: return "M";
        case View::R: return "R";
    }
    return "?";
}

void SceneConfig::validate() const {
    geometry::validate(screen);
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        if (!geometry::is_finite(cameras[i])) throw InvalidConfig("camera position must be finite");
        for (std::size_t j = i + 1; j < cameras.size(); ++j) {
            if (cameras[i] == cameras[j]) throw InvalidConfig("cameras must be distinct");
        }
    }
    if (head_min.x > head_max.x || head_min.y > head_max.y || head_min.z > head_max.z) {
        throw InvalidConfig("head box has min above max");
    }
    // Eyes must stay in front of the screen plane for the gaze rays to hit it.
    if (!(head_min.z > 0.0)) throw InvalidConfig("head box must lie in front of the screen (z > 0)");
    if (!(interocular > 0.0)) throw InvalidConfig("interocular distance must be positive");
    if (feature_dim == 0) throw InvalidConfig("feature_dim must be positive");
    if (!(noise_sigma >= 0.0)) throw InvalidConfig("noise_sigma must be >= 0");
    if (!(glasses_prob >= 0.0 && glasses_prob <= 1.0)) throw InvalidConfig("glasses_prob must be in [0, 1]");
    if (!(glasses_noise_multiplier >= 1.0)) throw InvalidConfig("glasses_noise_multiplier must be >= 1");
    if (!(appearance_scale > 0.0)) throw InvalidConfig("appearance_scale must be positive");
}

AppearanceMap::AppearanceMap(const SceneConfig& cfg) {
    Rng rng(cfg.seed);
    std::normal_distribution<double> entry(0.0, cfg.appearance_scale);
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    weights_.resize(cfg.feature_dim * kInputs);
    bias_.resize(cfg.feature_dim);
    for (double& w : weights_) w = entry(rng);
    for (double& b : bias_) b = phase(rng);
}

std::vector<double> AppearanceMap::operator()(Vec3 gaze, Vec3 d) const {
    const double z[kInputs] = {gaze.x, gaze.y, gaze.z + 1.0, d.x / 30.0, d.y / 30.0, (d.z - 60.0) / 30.0};
    std::vector<double> out(bias_.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        double s = bias_[k];
        for (std::size_t j = 0; j < kInputs; ++j) s += weights_[k * kInputs + j] * z[j];
        out[k] = std::sin(s);
    }
    return out;
}

SceneLatent gen_scene_sample(const SceneConfig& cfg, Rng& rng) {
    const Vec3 head{uniform(rng, cfg.head_min.x, cfg.head_max.x), uniform(rng, cfg.head_min.y, cfg.head_max.y),
                    uniform(rng, cfg.head_min.z, cfg.head_max.z)};
    const Vec3 half{0.5 * cfg.interocular, 0.0, 0.0};
    const EyePair eyes{head - half, head + half};

    const double u = uniform(rng, -0.5 * cfg.screen.width, 0.5 * cfg.screen.width);
    const double v = uniform(rng, -0.5 * cfg.screen.height, 0.5 * cfg.screen.height);
    const Vec3 target = cfg.screen.at(u, v);
    const bool glasses = std::bernoulli_distribution(cfg.glasses_prob)(rng);

    return SceneLatent{eyes,
                       target,
                       CartesianGaze(target - eyes.left),
                       CartesianGaze(target - eyes.right),
                       PlanePoint{u, v},
                       glasses};
}

std::vector<double> featurize_view(const SceneLatent& latent, Vec3 camera, const SceneConfig& cfg,
                                   const AppearanceMap& map, Rng& rng, double noise_multiplier) {
    const Vec3 gaze = geometry::normalized(latent.g_l.dir() + latent.g_r.dir());
    const Vec3 mid = 0.5 * (latent.eyes.left + latent.eyes.right);
    std::vector<double> f = map(gaze, mid - camera);
    add_noise(f, cfg.noise_sigma * noise_multiplier, rng);
    return f;
}

std::vector<double> featurize_view(const SceneLatent& latent, Vec3 camera, const SceneConfig& cfg,
                                   Rng& rng) {
    return featurize_view(latent, camera, cfg, AppearanceMap(cfg), rng);
}

std::vector<double> featurize_eye(Vec3 gaze, Vec3 eye, Vec3 camera, const SceneConfig& cfg,
                                  const AppearanceMap& map, Rng& rng) {
    std::vector<double> f = map(gaze, eye - camera);
    add_noise(f, cfg.noise_sigma, rng);
    return f;
}

DirectionSample make_direction_sample(const SceneLatent& latent, const SceneConfig& cfg,
                                      const AppearanceMap& map, Rng& rng) {
    const Vec3 cam = cfg.camera(View::M);
    DirectionSample s;
    s.feat_left = featurize_eye(latent.g_l.dir(), latent.eyes.left, cam, cfg, map, rng);
    s.feat_right = featurize_eye(latent.g_r.dir(), latent.eyes.right, cam, cfg, map, rng);
    s.truth_l = geometry::cart_to_sph(geometry::to_subject_frame(latent.g_l.dir()));
    s.truth_r = geometry::cart_to_sph(geometry::to_subject_frame(latent.g_r.dir()));
    s.truth_l.r = 1.0;
    s.truth_r.r = 1.0;
    s.v = geometry::to_subject_frame(latent.eyes.v());
    return s;
}

PointSample make_point_sample(const SceneLatent& latent, const SceneConfig& cfg,
                              const AppearanceMap& map, Rng& rng) {
    PointSample s;
    s.truth_p = latent.p;
    s.eyes = latent.eyes;
    s.wears_glasses = latent.wears_glasses;
    if (latent.wears_glasses) s.glasses_view = std::uniform_int_distribution<int>(0, 2)(rng);
    for (View v : kViews) {
        const int i = static_cast<int>(v);
        const double mult = i == s.glasses_view ? cfg.glasses_noise_multiplier : 1.0;
        s.feat_view[i] = featurize_view(latent, cfg.camera(v), cfg, map, rng, mult);
    }
    return s;
}

std::size_t train_size(std::size_t n) { return n * 8 / 10; }

Rng sample_rng(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Rng(seq);
}

namespace {

template <class Sample, class Make>
Dataset<Sample> make_dataset(std::size_t n, const SceneConfig& cfg, std::uint64_t seed,
                             std::uint64_t stream, Make make) {
    if (n == 0) throw EmptyDataset("dataset size must be positive");
    cfg.validate();
    const AppearanceMap map(cfg);
    Dataset<Sample> ds{cfg, seed, {}, train_size(n)};
    ds.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = sample_rng(seed, i, stream);
        const SceneLatent latent = gen_scene_sample(cfg, rng);
        ds.samples.push_back(make(latent, cfg, map, rng));
    }
    return ds;
}

}  // namespace

DirectionDataset make_direction_dataset(std::size_t n, const SceneConfig& cfg, std::uint64_t seed) {
    return make_dataset<DirectionSample>(n, cfg, seed, kDirectionStream, make_direction_sample);
}

PointDataset make_point_dataset(std::size_t n, const SceneConfig& cfg, std::uint64_t seed) {
    return make_dataset<PointSample>(n, cfg, seed, kPointStream, make_point_sample);
}

}  // namespace gazelab::synth
