#pragma once

// Comparison suites. Every (variant, seed) run regenerates its datasets and
// model from the seed alone, so runs share nothing and may go in parallel.
//
//   task     multitask, direction_only, point_only on identical data
//   view     the point head trained and evaluated on L, M, R or all views;
//            a single view is copied into every branch slot
//   glasses  the view suite on data where half the subjects wear glasses,
//            with E_p split by the glasses flag

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gazelab/eval.hpp"
#include "gazelab/model.hpp"
#include "gazelab/synth.hpp"
#include "gazelab/train.hpp"

namespace gazelab::ablation {

enum class Suite { task, view, glasses };
const char* suite_name(Suite s);
Suite parse_suite(const std::string& name);

struct AblationConfig {
    synth::SceneConfig scene;
    model::ModelConfig model;
    train::TrainConfig train;
    std::size_t n_direction = 2000;
    std::size_t n_point = 500;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    /// Worker cap; 0 means GAZE_LAB_THREADS, else the hardware count.
    std::size_t threads = 0;
};

/// Glasses suite scene: glasses_prob 0.5 and a noise multiplier of at least 3.
synth::SceneConfig glasses_scene(const synth::SceneConfig& base);

struct Run {
    std::string variant;
    std::uint64_t seed = 0;
    eval::EvalReport report;
};

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for one seed
};

struct Row {
    std::string variant;
    std::optional<Stat> E_p;
    std::optional<Stat> E_d_left;
    std::optional<Stat> E_d_right;
    std::size_t seeds = 0;
};

struct AblationResult {
    Suite suite = Suite::task;
    std::vector<Run> runs;  // variant-major, seeds in config order
    std::vector<Row> rows;  // one per variant and per breakdown key

    const Row& row(const std::string& variant) const;
    /// Per-run rows with the eval CSV columns.
    std::string runs_csv() const;
    /// variant,E_p_cm_mean,E_p_cm_std,E_d_left_deg_mean,...,seeds
    std::string summary_csv() const;
    std::string summary_text() const;
};

std::size_t worker_count(std::size_t requested);

/// Trains and evaluates one variant for one seed.
eval::EvalReport run_variant(Suite suite, const std::string& variant, std::uint64_t seed, const AblationConfig& cfg);
std::vector<std::string> variants(Suite suite);

AblationResult run_ablation(Suite suite, const AblationConfig& cfg);

}  // namespace gazelab::ablation
