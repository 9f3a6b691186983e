#include "gazelab/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "gazelab/errors.hpp"
#include "gazelab/eval.hpp"
#include "gazelab/optim.hpp"

namespace gazelab::train {

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::multitask: return "multitask";
        case Mode::direction_only: return "direction_only";
        case Mode::point_only: return "point_only";
    }
    return "?";
}

Mode parse_mode(const std::string& name) {
    if (name == "multitask") return Mode::multitask;
    if (name == "direction_only") return Mode::direction_only;
    if (name == "point_only") return Mode::point_only;
    throw InvalidConfig("unknown mode '" + name + "' (expected multitask, direction_only or point_only)");
}

void TrainConfig::validate() const {
    if (!std::isfinite(lr) || lr < 0.0) throw InvalidConfig("lr must be finite and nonnegative");
    if (!std::isfinite(momentum) || momentum < 0.0 || momentum >= 1.0) throw InvalidConfig("momentum must be in [0, 1)");
    if (epochs == 0) throw InvalidConfig("epochs must be positive");
    if (dir_batch == 0 || point_batch == 0) throw InvalidConfig("batch sizes must be positive");
    weights.validate();
    if (lambda1_end && (!std::isfinite(*lambda1_end) || *lambda1_end < 0.0)) {
        throw InvalidConfig("lambda1_end must be finite and nonnegative");
    }
    if (early_stop_loss && !std::isfinite(*early_stop_loss)) throw InvalidConfig("early_stop_loss must be finite");
}

std::vector<std::string> TrainConfig::warnings() const {
    std::vector<std::string> out;
    if (mode == Mode::multitask && dir_batch != 4 * point_batch) {
        out.push_back("dir_batch:point_batch = " + std::to_string(dir_batch) + ":" + std::to_string(point_batch) +
                      " does not reduce to 4:1");
    }
    return out;
}

double TrainConfig::lambda1_at(std::size_t epoch) const {
    if (!lambda1_end || epochs < 2) return weights.lambda1;
    const double t = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return weights.lambda1 + (*lambda1_end - weights.lambda1) * t;
}

TrainConfig toy_preset() { return TrainConfig{}; }

TrainConfig paper_preset() {
    TrainConfig c;
    c.lr = 1e-5;
    c.momentum = 0.9;
    c.epochs = 80;
    c.dir_batch = 128;
    c.point_batch = 32;
    c.weights.lambda1 = 1e-6;
    c.weights.lambda2 = 1e-3;
    return c;
}

TrainConfig preset(const std::string& name) {
    if (name == "toy") return toy_preset();
    if (name == "paper") return paper_preset();
    throw InvalidConfig("unknown preset '" + name + "' (expected toy or paper)");
}

namespace {

// Fisher-Yates on raw 64-bit draws, so the order does not depend on the
// standard library's distribution implementations.
std::vector<std::size_t> shuffled(std::size_t n, synth::Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
    return idx;
}

void require_batch(const char* what, std::size_t n, std::size_t batch) {
    if (n < batch) {
        throw EmptyDataset(std::string(what) + " split has " + std::to_string(n) + " samples, fewer than one batch of " +
                           std::to_string(batch));
    }
}

}  // namespace

std::vector<Step> mixed_batch_iterator(std::size_t n_direction, std::size_t n_point, const TrainConfig& cfg,
                                       synth::Rng& rng) {
    const bool use_dir = cfg.mode != Mode::point_only;
    const bool use_point = cfg.mode != Mode::direction_only;
    if (use_dir) require_batch("direction", n_direction, cfg.dir_batch);
    if (use_point) require_batch("point", n_point, cfg.point_batch);

    std::size_t steps = std::numeric_limits<std::size_t>::max();
    if (use_dir) steps = std::min(steps, n_direction / cfg.dir_batch);
    if (use_point) steps = std::min(steps, n_point / cfg.point_batch);

    const std::vector<std::size_t> dir_order = use_dir ? shuffled(n_direction, rng) : std::vector<std::size_t>{};
    const std::vector<std::size_t> point_order = use_point ? shuffled(n_point, rng) : std::vector<std::size_t>{};

    std::vector<Step> out(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        if (use_dir) {
            const auto first = dir_order.begin() + static_cast<std::ptrdiff_t>(s * cfg.dir_batch);
            out[s].direction.assign(first, first + static_cast<std::ptrdiff_t>(cfg.dir_batch));
        }
        if (use_point) {
            const auto first = point_order.begin() + static_cast<std::ptrdiff_t>(s * cfg.point_batch);
            out[s].point.assign(first, first + static_cast<std::ptrdiff_t>(cfg.point_batch));
        }
    }
    return out;
}

TrainData TrainData::from(const synth::DirectionDataset& d, const synth::PointDataset& p) {
    return {d.train(), p.train(), d.test(), p.test()};
}

std::string TrainHistory::to_csv() const {
    std::ostringstream os;
    os << "epoch,total,l1,l2,point,aux,decay,lambda1,E_p_cm,E_d_left_deg,E_d_right_deg,wall_ms\n";
    auto num = [](double x) { return eval::format_metric(x); };
    for (const EpochRecord& r : epochs) {
        os << r.epoch << ',' << num(r.total) << ',' << num(r.l1) << ',' << num(r.l2) << ',' << num(r.point) << ','
           << num(r.aux) << ',' << num(r.decay) << ',' << num(r.lambda1) << ',' << eval::format_metric(r.E_p) << ','
           << eval::format_metric(r.E_d_left) << ',' << eval::format_metric(r.E_d_right) << ','
           << eval::format_metric(r.wall_ms, 6) << '\n';
    }
    return os.str();
}

std::vector<Param*> trainable_params(model::GazeModel& model, Mode mode) {
    std::vector<Param*> out = model.trunk_params();
    if (mode != Mode::point_only) {
        for (Param* p : model.direction_params()) out.push_back(p);
    }
    if (mode != Mode::direction_only) {
        for (Param* p : model.point_params()) out.push_back(p);
    }
    return out;
}

losses::JointLoss step_loss(Tape& tape, model::GazeModel& model, const std::optional<DirectionBatch>& direction,
                            const std::optional<PointBatch>& point, std::span<Param* const> params,
                            const losses::LossWeights& weights, bool deep_supervision) {
    std::optional<losses::DirectionTerms> dir_terms;
    std::optional<losses::PointTerms> point_terms;
    if (direction) {
        const Var pred = model::forward_direction(tape, model, tape.constant(direction->left),
                                                  tape.constant(direction->right));
        dir_terms = losses::DirectionTerms{pred, tape.constant(direction->truth), tape.constant(direction->v)};
    }
    if (point) {
        if (deep_supervision && model.aux_heads.empty()) {
            throw InvalidConfig("deep supervision requested but the model has no auxiliary heads");
        }
        auto out = model::forward_point(tape, model, tape.constant(point->views[0]), tape.constant(point->views[1]),
                                        tape.constant(point->views[2]));
        point_terms = losses::PointTerms{out.point, tape.constant(point->truth), {}};
        if (deep_supervision) point_terms->aux = std::move(out.aux);
    }
    return losses::joint_loss(tape, dir_terms, point_terms, params, weights);
}

TrainHistory train(model::GazeModel& model, const TrainData& data, const TrainConfig& cfg,
                   const StepCallback& on_step) {
    cfg.validate();
    const std::vector<Param*> params = trainable_params(model, cfg.mode);
    zero_grads(params);
    std::seed_seq seq{cfg.seed, std::uint64_t{0x5452414e}};
    synth::Rng rng(seq);

    TrainHistory history;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        losses::LossWeights weights = cfg.weights;
        weights.lambda1 = cfg.lambda1_at(epoch);
        const std::vector<Step> steps =
            mixed_batch_iterator(data.direction_train.size(), data.point_train.size(), cfg, rng);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lambda1 = weights.lambda1;
        for (std::size_t s = 0; s < steps.size(); ++s) {
            std::optional<DirectionBatch> dir;
            std::optional<PointBatch> pt;
            if (!steps[s].direction.empty()) dir = make_direction_batch(data.direction_train, steps[s].direction);
            if (!steps[s].point.empty()) pt = make_point_batch(data.point_train, steps[s].point, cfg.views);

            Tape tape;
            losses::JointLoss loss;
            try {
                loss = step_loss(tape, model, dir, pt, params, weights, cfg.deep_supervision);
                if (!std::isfinite(loss.value())) throw NonFiniteValue("joint loss");
                tape.backward(loss.total);
            } catch (const NonFiniteValue& e) {
                throw DivergenceDetected("non-finite value at epoch " + std::to_string(epoch) + ", step " +
                                         std::to_string(s) + " (" + e.what() + ")");
            }
            if (epoch == 0 && s == 0) history.initial_loss = loss.value();
            if (on_step) on_step({epoch, s, weights.lambda1, &dir, &pt, &loss});
            sgd_step(params, cfg.lr, cfg.momentum, 0.0);

            rec.total += loss.value();
            rec.l1 += loss.l1;
            rec.l2 += loss.l2;
            rec.point += loss.point;
            rec.aux += loss.aux;
            rec.decay += loss.decay;
        }
        const double n = static_cast<double>(steps.size());
        for (double* x : {&rec.total, &rec.l1, &rec.l2, &rec.point, &rec.aux, &rec.decay}) *x /= n;

        const bool last = epoch + 1 == cfg.epochs;
        const bool stop = cfg.early_stop_loss && rec.total < *cfg.early_stop_loss;
        if (cfg.eval_each_epoch || last || stop) {
            if (!data.point_test.empty()) rec.E_p = eval::eval_point(model, data.point_test);
            if (!data.direction_test.empty()) {
                const auto e = eval::eval_direction(model, data.direction_test);
                rec.E_d_left = e.left;
                rec.E_d_right = e.right;
            }
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        history.epochs.push_back(rec);
        if (stop) {
            history.stopped_early = true;
            break;
        }
    }
    return history;
}

}  // namespace gazelab::train
