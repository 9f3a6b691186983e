#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gazelab/errors.hpp"
#include "gazelab/model.hpp"

using namespace gazelab;
using namespace gazelab::model;

namespace {

ModelConfig small_config() {
    ModelConfig c;
    c.input_dim = 6;
    c.trunk_hidden = {8, 8};
    c.trunk_out = 8;
    c.head_hidden = 5;
    return c;
}

Tensor random_features(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Tensor t({rows, dim});
    for (auto& x : t.data()) x = n(rng);
    return t;
}

Tensor point_of(GazeModel& m, const Tensor& l, const Tensor& mid, const Tensor& r) {
    Tape t;
    return forward_point(t, m, t.constant(l), t.constant(mid), t.constant(r)).point.value();
}

}  // namespace

TEST(Model, ZeroOutputLayerPredictsStraightAhead) {
    GazeModel m = init(small_config(), 1);
    zero_output_layers(m);
    Tape t;
    const Tensor x = random_features(4, 6, 2);
    const Var dir = forward_direction(t, m, t.constant(x), t.constant(x));
    EXPECT_EQ(dir.value(), Tensor({4, 4}));
    EXPECT_EQ(point_of(m, x, x, x), Tensor({4, 2}));
}

TEST(Model, OutputShapes) {
    ModelConfig c = small_config();
    c.deep_supervision = true;
    GazeModel m = init(c, 1);
    Tape t;
    const Var x = t.constant(random_features(3, 6, 1));
    EXPECT_EQ(forward_direction(t, m, x, x).shape(), (Shape{3, 4}));
    const PointOutput p = forward_point(t, m, x, x, x);
    EXPECT_EQ(p.point.shape(), (Shape{3, 2}));
    ASSERT_EQ(p.aux.size(), 3u);
    EXPECT_EQ(p.aux[0].shape(), (Shape{3, 2}));
}

TEST(Model, OneTrunkServesEveryEyeAndView) {
    GazeModel m = init(small_config(), 3);
    Tape t;
    const Var x = t.constant(random_features(2, 6, 4));
    const std::size_t leaf = t.param(m.trunk.layers[0].weight).id();
    forward_direction(t, m, x, x);
    forward_point(t, m, x, x, x);
    // Two eyes and three views later the trunk still has one leaf.
    const std::size_t size = t.size();
    EXPECT_EQ(t.param(m.trunk.layers[0].weight).id(), leaf);
    EXPECT_EQ(t.size(), size);
    // Perturbing the single trunk changes both heads.
    const Tensor before = point_of(m, x.value(), x.value(), x.value());
    m.trunk.layers[0].weight.value[0] += 0.5;
    EXPECT_NE(point_of(m, x.value(), x.value(), x.value()), before);
}

TEST(Model, BranchSlotsAreInterchangeableUnderMeanPool) {
    GazeModel m = init(small_config(), 5);
    const Tensor a = random_features(3, 6, 1), b = random_features(3, 6, 2), c = random_features(3, 6, 3);
    // Branch weights are shared, so swapping two views only permutes fusion inputs.
    const Tensor p1 = point_of(m, a, b, c);
    const Tensor p2 = point_of(m, b, a, c);
    EXPECT_NE(p1, p2);
    EXPECT_EQ(point_of(m, a, a, a), point_of(m, a, a, a));
}

TEST(Model, MeanPoolExample) {
    Tape t;
    const Var one = t.constant(Tensor::matrix(1, 2, {1, 1}));
    const Var two = t.constant(Tensor::matrix(1, 2, {2, 2}));
    const Var three = t.constant(Tensor::matrix(1, 2, {3, 3}));
    EXPECT_EQ(cross_view_pool(one, two, three, PoolKind::mean).value(), Tensor::matrix(1, 2, {2, 2}));
    EXPECT_EQ(cross_view_pool(one, two, three, PoolKind::max).value(), Tensor::matrix(1, 2, {3, 3}));
}

TEST(Model, PoolIsPermutationInvariant) {
    for (PoolKind kind : {PoolKind::mean, PoolKind::max}) {
        Tape t;
        const Var a = t.constant(random_features(4, 5, 1));
        const Var b = t.constant(random_features(4, 5, 2));
        const Var c = t.constant(random_features(4, 5, 3));
        const Tensor ref = cross_view_pool(a, b, c, kind).value();
        const Tensor perm = cross_view_pool(c, a, b, kind).value();
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(ref[i], perm[i], 1e-15);
    }
}

TEST(Model, EveryViewInfluencesThePoint) {
    GazeModel m = init(small_config(), 6);
    const Tensor a = random_features(2, 6, 1), b = random_features(2, 6, 2), c = random_features(2, 6, 3);
    const Tensor base = point_of(m, a, b, c);
    const Tensor zero({2, 6});
    EXPECT_NE(point_of(m, zero, b, c), base);
    EXPECT_NE(point_of(m, a, zero, c), base);
    EXPECT_NE(point_of(m, a, b, zero), base);
}

TEST(Model, InitIsSeededAndBiasesStartAtZero) {
    GazeModel a = init(small_config(), 9);
    GazeModel b = init(small_config(), 9);
    GazeModel c = init(small_config(), 10);
    const auto pa = a.named_params(), pb = b.named_params(), pc = c.named_params();
    ASSERT_EQ(pa.size(), pb.size());
    bool differs = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        EXPECT_EQ(pa[i].name, pb[i].name);
        EXPECT_EQ(pa[i].param->value, pb[i].param->value);
        differs = differs || pa[i].param->value != pc[i].param->value;
        if (!pa[i].param->decay) {
            for (double x : pa[i].param->value.data()) EXPECT_EQ(x, 0.0);
        }
    }
    EXPECT_TRUE(differs);
}

TEST(Model, ParamGroupsPartitionTheModel) {
    ModelConfig c = small_config();
    c.deep_supervision = true;
    GazeModel m = init(c, 1);
    std::set<Param*> all;
    for (auto* p : m.params()) all.insert(p);
    std::set<Param*> groups;
    for (auto* p : m.trunk_params()) EXPECT_TRUE(groups.insert(p).second);
    for (auto* p : m.direction_params()) EXPECT_TRUE(groups.insert(p).second);
    for (auto* p : m.point_params()) EXPECT_TRUE(groups.insert(p).second);
    EXPECT_EQ(all, groups);
    std::set<std::string> names;
    for (const auto& np : m.named_params()) EXPECT_TRUE(names.insert(np.name).second) << np.name;
}

TEST(Model, InvalidConfigsAreRejected) {
    ModelConfig c = small_config();
    c.trunk_out = 0;
    EXPECT_THROW(init(c, 1), InvalidConfig);
    EXPECT_THROW(parse_pool("median"), InvalidConfig);
}
