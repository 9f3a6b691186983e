#include <gtest/gtest.h>

#include "gazelab/ablation.hpp"
#include "gazelab/config.hpp"
#include "gazelab/errors.hpp"

using namespace gazelab;
using namespace gazelab::config;

TEST(RunConfig, EchoRoundTrips) {
    RunConfig c = from_preset("toy");
    apply_text(c,
               "scene.noise_sigma = 0.125\n"
               "scene.camera_L = -14.5, -15, 0.25\n"
               "model.trunk_hidden = 32,16\n"
               "model.pool_kind = max\n"
               "train.mode = point_only\n"
               "train.views = M\n"
               "train.early_stop_loss = 0.1\n"
               "loss.lambda1 = 0.3\n"
               "out_dir = somewhere\n");
    c.resolve();
    RunConfig back = from_preset("toy");
    apply_text(back, c.echo());
    back.resolve();
    EXPECT_EQ(back, c);
    EXPECT_EQ(back.echo(), c.echo());
    EXPECT_EQ(c.scene.cameras[0].z, 0.25);
    EXPECT_EQ(c.model.trunk_hidden, (std::vector<std::size_t>{32, 16}));
}

TEST(RunConfig, PaperPresetValues) {
    RunConfig c = from_preset("paper");
    c.resolve();
    EXPECT_EQ(c.get("train.lr"), "1.0000000000000001e-05");
    EXPECT_EQ(c.train.lr, 1e-5);
    EXPECT_EQ(c.train.momentum, 0.9);
    EXPECT_EQ(c.train.epochs, 80u);
    EXPECT_EQ(c.train.dir_batch, 128u);
    EXPECT_EQ(c.train.point_batch, 32u);
    EXPECT_EQ(c.train.weights.lambda1, 1e-6);
    EXPECT_EQ(c.train.weights.lambda2, 1e-3);
}

TEST(RunConfig, ResolutionOrder) {
    RunConfig c = from_preset("toy");
    c.out_dir = "kept";
    apply_text(c, "preset = paper\ntrain.epochs = 3\n");
    apply_override(c, "train.epochs=4");
    EXPECT_EQ(c.preset, "paper");
    EXPECT_EQ(c.train.lr, 1e-5);
    EXPECT_EQ(c.train.epochs, 4u);
    EXPECT_EQ(c.out_dir, "kept");
}

TEST(RunConfig, CommentsAndBlankLines) {
    RunConfig c;
    apply_text(c, "# header\n\n  train.epochs = 9   # trailing\n");
    EXPECT_EQ(c.train.epochs, 9u);
}

TEST(RunConfig, ErrorsNameSourceLineAndKey) {
    RunConfig c;
    try {
        apply_text(c, "train.epochs = 3\nbogus.key = 1\n", "my.cfg");
        FAIL();
    } catch (const InvalidConfig& e) {
        EXPECT_NE(std::string(e.what()).find("my.cfg:2"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("bogus.key"), std::string::npos) << e.what();
    }
    EXPECT_THROW(apply_override(c, "train.lr"), InvalidConfig);
    EXPECT_THROW(apply_override(c, "train.lr=fast"), InvalidConfig);
    EXPECT_THROW(apply_override(c, "train.epochs=-3"), InvalidConfig);
    EXPECT_THROW(apply_override(c, "train.mode=both"), InvalidConfig);
    EXPECT_THROW(apply_override(c, "scene.head_min=1,2"), InvalidConfig);
    EXPECT_THROW(from_preset("giant"), InvalidConfig);
}

TEST(RunConfig, ResolveValidatesAndLinksInputDim) {
    RunConfig c;
    apply_override(c, "scene.feature_dim=12");
    c.resolve();
    EXPECT_EQ(c.model.input_dim, 12u);
    apply_override(c, "scene.glasses_prob=2");
    EXPECT_THROW(c.resolve(), InvalidConfig);
}

TEST(Ablation, VariantsAndThreadCount) {
    EXPECT_EQ(ablation::variants(ablation::Suite::task),
              (std::vector<std::string>{"multitask", "direction_only", "point_only"}));
    EXPECT_EQ(ablation::variants(ablation::Suite::view), (std::vector<std::string>{"L", "M", "R", "multi"}));
    EXPECT_EQ(ablation::worker_count(3), 3u);
    EXPECT_GE(ablation::worker_count(0), 1u);
    const synth::SceneConfig g = ablation::glasses_scene(synth::SceneConfig{});
    EXPECT_EQ(g.glasses_prob, 0.5);
    EXPECT_GE(g.glasses_noise_multiplier, 3.0);
}

TEST(Ablation, SmallTaskSuiteHasOneRowPerVariant) {
    ablation::AblationConfig cfg;
    cfg.model.trunk_hidden = {16};
    cfg.model.trunk_out = 16;
    cfg.model.head_hidden = 8;
    cfg.train.epochs = 2;
    cfg.train.eval_each_epoch = false;
    cfg.n_direction = 400;
    cfg.n_point = 100;
    cfg.seeds = {1, 2};
    cfg.threads = 2;
    const ablation::AblationResult r = ablation::run_ablation(ablation::Suite::task, cfg);
    EXPECT_EQ(r.runs.size(), 6u);
    EXPECT_TRUE(r.row("multitask").E_p.has_value());
    EXPECT_TRUE(r.row("multitask").E_d_left.has_value());
    EXPECT_FALSE(r.row("direction_only").E_p.has_value());
    EXPECT_FALSE(r.row("point_only").E_d_left.has_value());
    EXPECT_EQ(r.row("point_only").seeds, 2u);
    EXPECT_NE(r.summary_text().find("direction_only"), std::string::npos);
    // Parallel and serial runs agree exactly.
    cfg.threads = 1;
    EXPECT_EQ(ablation::run_ablation(ablation::Suite::task, cfg).runs_csv(), r.runs_csv());
}
