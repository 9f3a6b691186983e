#pragma once

// Run configuration as flat "section.key = value" lines. '#' starts a
// comment; blank lines are ignored. Lists are comma separated, vectors are
// "x,y,z", optional values accept "none". Unknown keys are errors.
//
// Resolution order: preset, then config file, then --set overrides.

#include <filesystem>
#include <string>
#include <vector>

#include "gazelab/model.hpp"
#include "gazelab/synth.hpp"
#include "gazelab/train.hpp"

namespace gazelab::config {

struct RunConfig {
    std::string preset = "toy";
    synth::SceneConfig scene;
    model::ModelConfig model;
    train::TrainConfig train;
    std::filesystem::path out_dir = "out";

    /// Throws InvalidConfig naming the key on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;
    /// Every settable key in echo order.
    static const std::vector<std::string>& keys();

    /// model.input_dim follows scene.feature_dim. Validates every section.
    void resolve();
    /// Full "key = value" listing; parsing it back gives an equal config.
    std::string echo() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Base config for a named preset ("toy" or "paper").
RunConfig from_preset(const std::string& name);
/// Applies the lines of `text` on top of `cfg`. A "preset = ..." line resets
/// to that preset before the remaining lines apply, so it must come first.
void apply_text(RunConfig& cfg, const std::string& text, const std::string& source = "<config>");
void apply_file(RunConfig& cfg, const std::filesystem::path& path);
/// "key=value".
void apply_override(RunConfig& cfg, const std::string& assignment);

}  // namespace gazelab::config
