#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "gazelab/errors.hpp"
#include "gazelab/train.hpp"

using namespace gazelab;
using namespace gazelab::train;

namespace {

struct Fixture {
    synth::DirectionDataset dir;
    synth::PointDataset point;
    TrainData data() const { return TrainData::from(dir, point); }
};

Fixture make_data(std::size_t n_dir, std::size_t n_point, std::uint64_t seed) {
    const synth::SceneConfig scene;
    return {synth::make_direction_dataset(n_dir, scene, seed), synth::make_point_dataset(n_point, scene, seed)};
}

model::ModelConfig small_model() {
    model::ModelConfig c;
    c.trunk_hidden = {16};
    c.trunk_out = 16;
    c.head_hidden = 8;
    return c;
}

TrainConfig quick(std::size_t epochs = 2) {
    TrainConfig c;
    c.epochs = epochs;
    c.dir_batch = 32;
    c.point_batch = 8;
    c.eval_each_epoch = false;
    return c;
}

std::vector<Tensor> snapshot(const std::vector<Param*>& ps) {
    std::vector<Tensor> out;
    for (const Param* p : ps) out.push_back(p->value);
    return out;
}

}  // namespace

TEST(Iterator, FourStepsCoverEverySampleOnce) {
    TrainConfig cfg;
    synth::Rng rng(1);
    const auto steps = mixed_batch_iterator(512, 128, cfg, rng);
    ASSERT_EQ(steps.size(), 4u);
    std::multiset<std::size_t> dir, pt;
    for (const Step& s : steps) {
        EXPECT_EQ(s.direction.size(), 128u);
        EXPECT_EQ(s.point.size(), 32u);
        dir.insert(s.direction.begin(), s.direction.end());
        pt.insert(s.point.begin(), s.point.end());
    }
    EXPECT_EQ(dir.size(), 512u);
    EXPECT_EQ(std::set<std::size_t>(dir.begin(), dir.end()).size(), 512u);
    EXPECT_EQ(*dir.rbegin(), 511u);
    EXPECT_EQ(std::set<std::size_t>(pt.begin(), pt.end()).size(), 128u);
}

TEST(Iterator, SameSeedSameOrderAndEpochsReshuffle) {
    TrainConfig cfg;
    synth::Rng a(7), b(7);
    const auto first = mixed_batch_iterator(512, 128, cfg, a);
    const auto again = mixed_batch_iterator(512, 128, cfg, b);
    for (std::size_t s = 0; s < first.size(); ++s) {
        EXPECT_EQ(first[s].direction, again[s].direction);
        EXPECT_EQ(first[s].point, again[s].point);
    }
    const auto next = mixed_batch_iterator(512, 128, cfg, a);
    EXPECT_NE(first[0].direction, next[0].direction);
}

TEST(Iterator, PaperPresetRatioIsFourToOne) {
    const TrainConfig cfg = paper_preset();
    synth::Rng rng(2);
    for (const Step& s : mixed_batch_iterator(1600, 400, cfg, rng)) {
        EXPECT_EQ(s.direction.size(), 4 * s.point.size());
    }
    EXPECT_TRUE(cfg.warnings().empty());
}

TEST(Iterator, SingleTaskModesLeaveTheOtherBatchEmpty) {
    TrainConfig cfg;
    cfg.mode = Mode::direction_only;
    synth::Rng rng(3);
    const auto steps = mixed_batch_iterator(256, 0, cfg, rng);
    ASSERT_EQ(steps.size(), 2u);
    EXPECT_TRUE(steps[0].point.empty());
    cfg.mode = Mode::point_only;
    const auto p = mixed_batch_iterator(0, 96, cfg, rng);
    ASSERT_EQ(p.size(), 3u);
    EXPECT_TRUE(p[0].direction.empty());
}

TEST(Iterator, TooFewSamplesThrows) {
    TrainConfig cfg;
    synth::Rng rng(4);
    EXPECT_THROW(mixed_batch_iterator(100, 128, cfg, rng), EmptyDataset);
    EXPECT_THROW(mixed_batch_iterator(512, 0, cfg, rng), EmptyDataset);
}

TEST(Config, PresetsAndValidation) {
    const TrainConfig p = paper_preset();
    EXPECT_EQ(p.lr, 1e-5);
    EXPECT_EQ(p.momentum, 0.9);
    EXPECT_EQ(p.epochs, 80u);
    EXPECT_EQ(p.dir_batch, 128u);
    EXPECT_EQ(p.point_batch, 32u);
    EXPECT_EQ(p.weights.lambda1, 1e-6);
    EXPECT_EQ(p.weights.lambda2, 1e-3);
    EXPECT_EQ(preset("toy"), toy_preset());
    EXPECT_THROW(preset("huge"), InvalidConfig);
    TrainConfig bad;
    bad.lr = -1;
    EXPECT_THROW(bad.validate(), InvalidConfig);
    TrainConfig odd;
    odd.point_batch = 64;
    EXPECT_FALSE(odd.warnings().empty());
}

TEST(Config, LambdaScheduleIsLinear) {
    TrainConfig c;
    c.epochs = 5;
    c.weights.lambda1 = 1.0;
    EXPECT_EQ(c.lambda1_at(3), 1.0);
    c.lambda1_end = 0.0;
    EXPECT_DOUBLE_EQ(c.lambda1_at(0), 1.0);
    EXPECT_DOUBLE_EQ(c.lambda1_at(2), 0.5);
    EXPECT_DOUBLE_EQ(c.lambda1_at(4), 0.0);
}

TEST(Train, ZeroLearningRateLeavesParamsUnchanged) {
    const Fixture f = make_data(200, 60, 1);
    model::GazeModel m = model::init(small_model(), 1);
    const auto before = snapshot(m.params());
    TrainConfig cfg = quick();
    cfg.lr = 0.0;
    train::train(m, f.data(), cfg);
    EXPECT_EQ(snapshot(m.params()), before);
}

TEST(Train, LossDecreasesOnTheDefaultConfig) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Fixture f = make_data(2000, 500, seed);
        model::GazeModel m = model::init(model::ModelConfig{}, seed);
        TrainConfig cfg;
        cfg.seed = seed;
        cfg.eval_each_epoch = false;
        const TrainHistory h = train::train(m, f.data(), cfg);
        ASSERT_EQ(h.epochs.size(), cfg.epochs);
        EXPECT_LT(h.epochs.back().total, h.initial_loss) << "seed " << seed;
        ASSERT_TRUE(h.epochs.back().E_p.has_value());
    }
}

TEST(Train, DirectionOnlyNeverTouchesThePointHead) {
    const Fixture f = make_data(200, 60, 2);
    model::GazeModel m = model::init(small_model(), 2);
    const auto before = snapshot(m.point_params());
    TrainConfig cfg = quick();
    cfg.mode = Mode::direction_only;
    train::train(m, f.data(), cfg, [&](const StepInfo&) {
        for (const Param* p : m.point_params()) {
            for (double g : p->grad.data()) ASSERT_EQ(g, 0.0);
        }
    });
    EXPECT_EQ(snapshot(m.point_params()), before);
}

TEST(Train, PointOnlyNeverTouchesTheDirectionHead) {
    const Fixture f = make_data(200, 60, 3);
    model::GazeModel m = model::init(small_model(), 3);
    const auto before = snapshot(m.direction_params());
    const auto trunk = snapshot(m.trunk_params());
    TrainConfig cfg = quick();
    cfg.mode = Mode::point_only;
    train::train(m, f.data(), cfg, [&](const StepInfo&) {
        for (const Param* p : m.direction_params()) {
            for (double g : p->grad.data()) ASSERT_EQ(g, 0.0);
        }
    });
    EXPECT_EQ(snapshot(m.direction_params()), before);
    EXPECT_NE(snapshot(m.trunk_params()), trunk);
}

TEST(Train, HistoryMatchesIndependentRecomputation) {
    const Fixture f = make_data(200, 60, 4);
    model::ModelConfig mc = small_model();
    mc.deep_supervision = true;
    model::GazeModel m = model::init(mc, 4);
    TrainConfig cfg = quick(3);
    cfg.deep_supervision = true;
    cfg.lambda1_end = 0.5;
    const auto params = trainable_params(m, cfg.mode);
    std::vector<std::vector<double>> per_step(cfg.epochs);
    const TrainHistory h = train::train(m, f.data(), cfg, [&](const StepInfo& s) {
        losses::LossWeights w = cfg.weights;
        w.lambda1 = s.lambda1;
        Tape tape;
        const losses::JointLoss again = step_loss(tape, m, *s.direction, *s.point, params, w, true);
        EXPECT_NEAR(again.value(), s.loss->value(), 1e-12);
        per_step[s.epoch].push_back(again.value());
    });
    ASSERT_EQ(h.epochs.size(), 3u);
    for (std::size_t e = 0; e < 3; ++e) {
        double mean = 0.0;
        for (double x : per_step[e]) mean += x;
        mean /= static_cast<double>(per_step[e].size());
        EXPECT_NEAR(h.epochs[e].total, mean, 1e-12);
        EXPECT_DOUBLE_EQ(h.epochs[e].lambda1, cfg.lambda1_at(e));
    }
    EXPECT_EQ(h.initial_loss, per_step[0][0]);
}

TEST(Train, DivergenceIsReported) {
    const Fixture f = make_data(200, 60, 5);
    model::GazeModel m = model::init(small_model(), 5);
    TrainConfig cfg = quick(20);
    cfg.lr = 1e6;
    try {
        train::train(m, f.data(), cfg);
        FAIL() << "expected DivergenceDetected";
    } catch (const DivergenceDetected& e) {
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
    }
}

TEST(Train, EarlyStopHonorsThreshold) {
    const Fixture f = make_data(200, 60, 6);
    model::GazeModel m = model::init(small_model(), 6);
    TrainConfig cfg = quick(10);
    cfg.early_stop_loss = 1e9;
    const TrainHistory h = train::train(m, f.data(), cfg);
    EXPECT_TRUE(h.stopped_early);
    EXPECT_EQ(h.epochs.size(), 1u);
    EXPECT_TRUE(h.epochs[0].E_p.has_value());
}

TEST(Train, ReproducibleBitForBit) {
    const Fixture f = make_data(300, 80, 7);
    auto run = [&] {
        model::GazeModel m = model::init(small_model(), 7);
        TrainConfig cfg = quick(3);
        cfg.seed = 11;
        const TrainHistory h = train::train(m, f.data(), cfg);
        return std::pair{snapshot(m.params()), h.epochs.back().total};
    };
    EXPECT_EQ(run(), run());
}

TEST(Train, HistoryCsvHasOneRowPerEpoch) {
    const Fixture f = make_data(200, 60, 8);
    model::GazeModel m = model::init(small_model(), 8);
    const TrainHistory h = train::train(m, f.data(), quick(3));
    const std::string csv = h.to_csv();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_EQ(csv.rfind("epoch,total,l1,l2,point,aux,decay,lambda1,E_p_cm,E_d_left_deg,E_d_right_deg,wall_ms\n", 0), 0u);
}

TEST(Train, DeepSupervisionNeedsAuxHeads) {
    const Fixture f = make_data(200, 60, 9);
    model::GazeModel m = model::init(small_model(), 9);
    TrainConfig cfg = quick();
    cfg.deep_supervision = true;
    EXPECT_THROW(train::train(m, f.data(), cfg), InvalidConfig);
}
