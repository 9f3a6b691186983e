#include "gazelab/model.hpp"

#include <cmath>
#include <random>

#include "gazelab/errors.hpp"

namespace gazelab::model {

namespace {

constexpr std::array<const char*, 3> kViewNames{"L", "M", "R"};

void append(std::vector<NamedParam>& out, const std::string& prefix, Dense& d) {
    out.push_back({prefix + ".weight", &d.weight});
    out.push_back({prefix + ".bias", &d.bias});
}

void append(std::vector<NamedParam>& out, const std::string& prefix, Mlp& mlp) {
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) append(out, prefix + "." + std::to_string(i), mlp.layers[i]);
}

Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& widths, bool relu_last) {
    Mlp mlp;
    mlp.relu_last = relu_last;
    for (std::size_t w : widths) {
        mlp.layers.emplace_back(in, w);
        in = w;
    }
    return mlp;
}

std::vector<Param*> pointers(const std::vector<NamedParam>& named) {
    std::vector<Param*> out;
    out.reserve(named.size());
    for (const auto& n : named) out.push_back(n.param);
    return out;
}

}  // namespace

const char* pool_name(PoolKind kind) { return kind == PoolKind::mean ? "mean" : "max"; }

PoolKind parse_pool(const std::string& name) {
    if (name == "mean") return PoolKind::mean;
    if (name == "max") return PoolKind::max;
    throw InvalidConfig("unknown pool kind '" + name + "' (expected mean or max)");
}

void ModelConfig::validate() const {
    if (input_dim == 0 || trunk_out == 0 || head_hidden == 0) throw InvalidConfig("model widths must be positive");
    for (std::size_t w : trunk_hidden) {
        if (w == 0) throw InvalidConfig("trunk_hidden widths must be positive");
    }
}

Dense::Dense(std::size_t in, std::size_t out)
    : weight(Tensor({in, out}), true), bias(Tensor({out}), false) {}

Var Dense::apply(Tape& tape, Var x) { return ad::affine(x, tape.param(weight), tape.param(bias)); }

Var Mlp::apply(Tape& tape, Var x) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        x = layers[i].apply(tape, x);
        if (i + 1 < layers.size() || relu_last) x = ad::relu(x);
    }
    return x;
}

std::vector<NamedParam> GazeModel::named_params() {
    std::vector<NamedParam> out;
    append(out, "trunk", trunk);
    append(out, "direction", direction_head);
    append(out, "point.branch", point_branch);
    append(out, "point.fusion", point_fusion);
    for (std::size_t v = 0; v < aux_heads.size(); ++v) append(out, std::string("point.aux.") + kViewNames[v], aux_heads[v]);
    return out;
}

std::vector<Param*> GazeModel::params() { return pointers(named_params()); }

std::vector<Param*> GazeModel::trunk_params() {
    std::vector<NamedParam> out;
    append(out, "trunk", trunk);
    return pointers(out);
}

std::vector<Param*> GazeModel::direction_params() {
    std::vector<NamedParam> out;
    append(out, "direction", direction_head);
    return pointers(out);
}

std::vector<Param*> GazeModel::point_params() {
    std::vector<NamedParam> out;
    append(out, "point.branch", point_branch);
    append(out, "point.fusion", point_fusion);
    for (auto& aux : aux_heads) append(out, "point.aux", aux);
    return pointers(out);
}

GazeModel init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    GazeModel m;
    m.config = config;
    std::vector<std::size_t> trunk_widths = config.trunk_hidden;
    trunk_widths.push_back(config.trunk_out);
    m.trunk = make_mlp(config.input_dim, trunk_widths, false);
    m.direction_head = make_mlp(2 * config.trunk_out, {config.head_hidden, config.head_hidden, 4}, false);
    m.point_branch = Dense(config.trunk_out, config.head_hidden);
    m.point_fusion = make_mlp(4 * config.head_hidden, {config.head_hidden, 2}, false);
    if (config.deep_supervision) {
        for (std::size_t v = 0; v < 3; ++v) m.aux_heads.emplace_back(config.head_hidden, 2);
    }

    std::mt19937_64 rng(seed);
    for (NamedParam& np : m.named_params()) {
        Tensor& w = np.param->value;
        if (!np.param->decay) continue;  // biases stay zero
        const double fan_in = static_cast<double>(w.shape()[0]);
        const double fan_out = static_cast<double>(w.shape()[1]);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& x : w.data()) x = dist(rng);
    }
    return m;
}

void zero_output_layers(GazeModel& model) {
    auto zero = [](Dense& d) {
        d.weight.value.fill(0.0);
        d.bias.value.fill(0.0);
    };
    zero(model.direction_head.layers.back());
    zero(model.point_fusion.layers.back());
    for (auto& aux : model.aux_heads) zero(aux);
}

Var apply_trunk(Tape& tape, Mlp& trunk, Var features) { return trunk.apply(tape, features); }

Var forward_direction(Tape& tape, GazeModel& model, Var feat_left, Var feat_right) {
    const Var left = apply_trunk(tape, model.trunk, feat_left);
    const Var right = apply_trunk(tape, model.trunk, feat_right);
    return model.direction_head.apply(tape, ad::concat({left, right}));
}

Var cross_view_pool(Var f_l, Var f_m, Var f_r, PoolKind kind) {
    return kind == PoolKind::mean ? ad::mean_of({f_l, f_m, f_r}) : ad::maximum({f_l, f_m, f_r});
}

PointOutput forward_point(Tape& tape, GazeModel& model, Var feat_l, Var feat_m, Var feat_r) {
    std::array<Var, 3> branch;
    const std::array<Var, 3> inputs{feat_l, feat_m, feat_r};
    for (std::size_t v = 0; v < 3; ++v) {
        branch[v] = ad::relu(model.point_branch.apply(tape, apply_trunk(tape, model.trunk, inputs[v])));
    }
    const Var pooled = cross_view_pool(branch[0], branch[1], branch[2], model.config.pool_kind);
    PointOutput out;
    out.point = model.point_fusion.apply(tape, ad::concat({branch[0], branch[1], branch[2], pooled}));
    for (std::size_t v = 0; v < model.aux_heads.size(); ++v) out.aux.push_back(model.aux_heads[v].apply(tape, branch[v]));
    return out;
}

}  // namespace gazelab::model
