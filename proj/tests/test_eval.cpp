#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "gazelab/errors.hpp"
#include "gazelab/eval.hpp"
#include "gazelab/losses.hpp"

using namespace gazelab;
using namespace gazelab::eval;
using geometry::PlanePoint;
using geometry::Vec3;

namespace {

model::GazeModel small_model(std::uint64_t seed) {
    model::ModelConfig c;
    c.trunk_hidden = {16};
    c.trunk_out = 16;
    c.head_hidden = 8;
    return model::init(c, seed);
}

}  // namespace

TEST(PointMetric, Examples) {
    const std::vector<PlanePoint> truth{{1, 1}, {0, 0}};
    EXPECT_EQ(mean_point_error(truth, truth), 0.0);
    const std::vector<PlanePoint> one{{0, 0}};
    const std::vector<PlanePoint> off{{3, 4}};
    EXPECT_EQ(mean_point_error(one, off), 5.0);
    const std::vector<PlanePoint> pred{{4, 5}, {0, 0}};
    EXPECT_EQ(mean_point_error(truth, pred), 2.5);
}

TEST(PointMetric, Errors) {
    const std::vector<PlanePoint> none;
    EXPECT_THROW(mean_point_error(none, none), EmptyDataset);
    const std::vector<PlanePoint> a{{0, 0}}, b{{0, 0}, {1, 1}};
    EXPECT_THROW(mean_point_error(a, b), ShapeMismatch);
}

TEST(PointMetric, UnsquaredWhileLossIsSquared) {
    const std::vector<PlanePoint> truth{{0, 0}}, pred{{2, 0}};
    EXPECT_EQ(mean_point_error(truth, pred), 2.0);
    Tape t;
    EXPECT_EQ(losses::point_loss(t.constant(Tensor::matrix(1, 2, {2, 0})), t.constant(Tensor::matrix(1, 2, {0, 0}))).item(),
              4.0);
}

TEST(AngleMetric, Examples) {
    const std::vector<Vec3> z{{0, 0, 1}};
    EXPECT_EQ(mean_angular_error(z, z), 0.0);
    const std::vector<Vec3> x{{1, 0, 0}, {0, 1, 0}}, y{{0, 1, 0}, {0, 0, 3}};
    EXPECT_EQ(mean_angular_error(x, y), 90.0);
    EXPECT_THROW(mean_angular_error(std::vector<Vec3>{}, std::vector<Vec3>{}), EmptyDataset);
}

TEST(AngleMetric, MatchesPerSampleOracle) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Vec3> a(200), b(200);
    double oracle = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = {n(rng), n(rng), n(rng)};
        b[i] = {n(rng), n(rng), n(rng)};
        const double c = geometry::dot(a[i], b[i]) / (geometry::norm(a[i]) * geometry::norm(b[i]));
        oracle += std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    }
    oracle /= 200.0;
    const double e = mean_angular_error(a, b);
    EXPECT_NEAR(e, oracle, 1e-9);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 180.0);
}

TEST(ModelEval, DirectionErrorMatchesPerSampleOracle) {
    const auto d = synth::make_direction_dataset(120, synth::SceneConfig{}, 2);
    model::GazeModel m = small_model(2);
    const DirectionError e = eval_direction(m, d.samples);
    const auto pred = predict_directions(m, d.samples);
    double left = 0.0, right = 0.0;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
        const auto& s = d.samples[i];
        left += geometry::angular_error_deg(geometry::sph_to_cart(s.truth_l),
                                            geometry::sph_to_cart({pred[i][0], pred[i][1], 1.0}));
        right += geometry::angular_error_deg(geometry::sph_to_cart(s.truth_r),
                                             geometry::sph_to_cart({pred[i][2], pred[i][3], 1.0}));
    }
    EXPECT_NEAR(e.left, left / 120.0, 1e-9);
    EXPECT_NEAR(e.right, right / 120.0, 1e-9);
    EXPECT_GE(e.left, 0.0);
    EXPECT_LE(e.left, 180.0);
}

TEST(ModelEval, PointErrorMatchesPerSampleOracle) {
    const auto d = synth::make_point_dataset(90, synth::SceneConfig{}, 3);
    model::GazeModel m = small_model(3);
    const auto pred = predict_points(m, d.samples);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        sum += std::hypot(pred[i].u - d.samples[i].truth_p.u, pred[i].v - d.samples[i].truth_p.v);
    }
    EXPECT_NEAR(eval_point(m, d.samples), sum / 90.0, 1e-9);
}

TEST(ModelEval, ZeroOutputModelErrorIsMeanTruthNorm) {
    const auto d = synth::make_point_dataset(100, synth::SceneConfig{}, 4);
    model::GazeModel m = small_model(4);
    model::zero_output_layers(m);
    double mean_norm = 0.0;
    for (const auto& s : d.test()) mean_norm += std::hypot(s.truth_p.u, s.truth_p.v);
    mean_norm /= static_cast<double>(d.test().size());
    const EvalReport r = report(m, {}, d.test());
    ASSERT_TRUE(r.E_p.has_value());
    EXPECT_NEAR(*r.E_p, mean_norm, 1e-12);
    EXPECT_FALSE(r.E_d_left.has_value());
}

TEST(ModelEval, MetricsArePermutationInvariant) {
    auto d = synth::make_point_dataset(64, synth::SceneConfig{}, 5);
    auto dd = synth::make_direction_dataset(64, synth::SceneConfig{}, 5);
    model::GazeModel m = small_model(5);
    const double e = eval_point(m, d.samples);
    const DirectionError de = eval_direction(m, dd.samples);
    std::mt19937_64 rng(1);
    std::shuffle(d.samples.begin(), d.samples.end(), rng);
    std::shuffle(dd.samples.begin(), dd.samples.end(), rng);
    EXPECT_NEAR(eval_point(m, d.samples), e, 1e-12);
    EXPECT_NEAR(eval_direction(m, dd.samples).left, de.left, 1e-12);
}

TEST(Report, GlassesBreakdownDecomposesTheMean) {
    synth::SceneConfig scene;
    scene.glasses_prob = 0.5;
    const auto d = synth::make_point_dataset(300, scene, 6);
    model::GazeModel m = small_model(6);
    const EvalReport r = report(m, {}, d.samples, {.glasses = true, .views = false});
    const EvalReport& g = r.breakdowns.at("glasses");
    const EvalReport& ng = r.breakdowns.at("no_glasses");
    EXPECT_EQ(g.n_point + ng.n_point, r.n_point);
    EXPECT_GT(g.n_point, 0u);
    EXPECT_GT(ng.n_point, 0u);
    const double weighted = (*g.E_p * g.n_point + *ng.E_p * ng.n_point) / static_cast<double>(r.n_point);
    EXPECT_NEAR(weighted, *r.E_p, 1e-9);
}

TEST(Report, ViewBreakdownKeys) {
    const auto d = synth::make_point_dataset(40, synth::SceneConfig{}, 7);
    const auto dd = synth::make_direction_dataset(40, synth::SceneConfig{}, 7);
    model::GazeModel m = small_model(7);
    const EvalReport r = report(m, dd.samples, d.samples, {.glasses = false, .views = true});
    std::vector<std::string> keys;
    for (const auto& [k, v] : r.breakdowns) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"L", "M", "R", "multi"}));
    EXPECT_EQ(*r.breakdowns.at("multi").E_p, *r.E_p);
    EXPECT_EQ(*r.breakdowns.at("L").E_p, eval_point(m, d.samples, ViewSelection::L));
    EXPECT_NEAR(*r.E_d_mean(), 0.5 * (*r.E_d_left + *r.E_d_right), 1e-15);
}

TEST(Report, CsvSchema) {
    const auto d = synth::make_point_dataset(20, synth::SceneConfig{}, 8);
    model::GazeModel m = small_model(8);
    const EvalReport r = report(m, {}, d.samples, {.glasses = false, .views = true});
    const std::string csv = report_csv(r, "multitask", 3);
    EXPECT_EQ(csv.rfind("variant,E_p_cm,E_d_left_deg,E_d_right_deg,n,seed\n", 0), 0u);
    EXPECT_NE(csv.find("\nmultitask," + format_metric(r.E_p) + ",NA,NA,20,3\n"), std::string::npos);
    EXPECT_NE(csv.find("\nmultitask/L,"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
    const std::string text = report_text(r, "multitask");
    EXPECT_NE(text.find("derived"), std::string::npos);
}

TEST(Report, NeedsSomeData) {
    model::GazeModel m = small_model(9);
    EXPECT_THROW(report(m, {}, {}), EmptyDataset);
}
