#pragma once

// Line-oriented JSON files. Every double is written as a C99 hexadecimal
// float string ("%a"), so values round-trip exactly, negative zero included.
// Keys are sorted and no whitespace is emitted, so equal content gives equal
// bytes. The layout is documented in docs/formats.md.
//
//   .gzds  header line, then one sample per line
//   .gzck  header line, then one parameter tensor per line

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "gazelab/model.hpp"
#include "gazelab/synth.hpp"
#include "gazelab/tensor.hpp"
#include "gazelab/train.hpp"

namespace gazelab::io {

inline constexpr int kDatasetVersion = 1;
inline constexpr int kCheckpointVersion = 1;

std::string hex_double(double x);
/// Accepts hexadecimal or decimal text. Throws SchemaError naming `field`.
double parse_double(const std::string& text, const std::string& field);

std::string serialize(const synth::DirectionDataset& d);
std::string serialize(const synth::PointDataset& d);
synth::DirectionDataset parse_direction_dataset(const std::string& text);
synth::PointDataset parse_point_dataset(const std::string& text);

void write_dataset(const std::filesystem::path& path, const synth::DirectionDataset& d);
void write_dataset(const std::filesystem::path& path, const synth::PointDataset& d);
synth::DirectionDataset read_direction_dataset(const std::filesystem::path& path);
synth::PointDataset read_point_dataset(const std::filesystem::path& path);
/// "direction" or "point", from the header line.
std::string dataset_kind(const std::filesystem::path& path);

struct Checkpoint {
    model::ModelConfig model_config;
    train::TrainConfig train_config;
    std::size_t epoch = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, Tensor>> tensors;  // named_params() order

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Checkpoint make_checkpoint(model::GazeModel& model, const train::TrainConfig& cfg, std::size_t epoch,
                           std::uint64_t seed);
/// Rebuilds the model, checking every tensor name and shape against the config.
model::GazeModel load_model(const Checkpoint& ck);

std::string serialize(const Checkpoint& ck);
Checkpoint parse_checkpoint(const std::string& text);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace gazelab::io
