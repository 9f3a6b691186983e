#pragma once

// Mixed-batch SGD over the direction and point datasets.
//
// Every multitask step draws dir_batch direction samples and point_batch
// point samples, sums both terms into one joint loss and takes one momentum
// step. Single-task modes drop the other batch and only touch the trunk and
// their own head.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazelab/batch.hpp"
#include "gazelab/losses.hpp"
#include "gazelab/model.hpp"
#include "gazelab/synth.hpp"

namespace gazelab::train {

enum class Mode { multitask, direction_only, point_only };
const char* mode_name(Mode m);
Mode parse_mode(const std::string& name);

struct TrainConfig {
    double lr = 3e-2;
    double momentum = 0.9;
    std::size_t epochs = 80;
    std::size_t dir_batch = 128;
    std::size_t point_batch = 32;
    losses::LossWeights weights;
    Mode mode = Mode::multitask;
    std::uint64_t seed = 0;
    bool deep_supervision = false;
    /// Views fed to the point head during training.
    ViewSelection views = ViewSelection::all;
    /// Stop once an epoch's mean joint loss falls below this. Disabled if unset.
    std::optional<double> early_stop_loss;
    /// If set, lambda1 moves linearly from weights.lambda1 (first epoch) to
    /// this value (last epoch).
    std::optional<double> lambda1_end;
    /// Evaluate the held-out splits after every epoch.
    bool eval_each_epoch = true;

    void validate() const;
    /// Non-fatal notes, e.g. a batch ratio that does not reduce to 4:1.
    std::vector<std::string> warnings() const;
    double lambda1_at(std::size_t epoch) const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// The defaults above.
TrainConfig toy_preset();
/// lr 1e-5, momentum 0.9, 80 epochs, batches 128/32, lambda1 1e-6, lambda2 1e-3.
TrainConfig paper_preset();
TrainConfig preset(const std::string& name);

struct Step {
    std::vector<std::size_t> direction;  // indices into the direction train split
    std::vector<std::size_t> point;      // indices into the point train split
};

/// One epoch of steps. Each active split is reshuffled and cut into full
/// batches without replacement; the remainder is dropped. In multitask mode
/// the step count is min(n_dir / dir_batch, n_point / point_batch). Throws
/// EmptyDataset if an active split cannot fill one batch.
std::vector<Step> mixed_batch_iterator(std::size_t n_direction, std::size_t n_point, const TrainConfig& cfg,
                                       synth::Rng& rng);

struct TrainData {
    std::span<const synth::DirectionSample> direction_train;
    std::span<const synth::PointSample> point_train;
    std::span<const synth::DirectionSample> direction_test;
    std::span<const synth::PointSample> point_test;

    static TrainData from(const synth::DirectionDataset& d, const synth::PointDataset& p);
};

struct EpochRecord {
    std::size_t epoch = 0;
    double total = 0.0;  // mean over the epoch's steps
    double l1 = 0.0;
    double l2 = 0.0;
    double point = 0.0;
    double aux = 0.0;
    double decay = 0.0;
    double lambda1 = 0.0;
    std::optional<double> E_p;
    std::optional<double> E_d_left;
    std::optional<double> E_d_right;
    double wall_ms = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    /// Joint loss of the first step, before any update.
    double initial_loss = 0.0;
    bool stopped_early = false;

    std::string to_csv() const;
};

struct StepInfo {
    std::size_t epoch = 0;
    std::size_t step = 0;
    double lambda1 = 0.0;
    const std::optional<DirectionBatch>* direction = nullptr;
    const std::optional<PointBatch>* point = nullptr;
    const losses::JointLoss* loss = nullptr;
};
/// Called after backward and before the update.
using StepCallback = std::function<void(const StepInfo&)>;

/// Params the given mode trains: trunk plus the active heads.
std::vector<Param*> trainable_params(model::GazeModel& model, Mode mode);

/// Loss for one step, built on `tape`. Exposed so callers can recompute it.
losses::JointLoss step_loss(Tape& tape, model::GazeModel& model, const std::optional<DirectionBatch>& direction,
                            const std::optional<PointBatch>& point, std::span<Param* const> params,
                            const losses::LossWeights& weights, bool deep_supervision);

/// Trains in place. Throws DivergenceDetected naming epoch and step if the
/// loss or any intermediate value becomes non-finite.
TrainHistory train(model::GazeModel& model, const TrainData& data, const TrainConfig& cfg,
                   const StepCallback& on_step = {});

}  // namespace gazelab::train
