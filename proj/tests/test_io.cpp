#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "gazelab/errors.hpp"
#include "gazelab/io.hpp"

using namespace gazelab;
using namespace gazelab::io;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::string join(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gazelab_test_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

model::ModelConfig small_model() {
    model::ModelConfig c;
    c.trunk_hidden = {6};
    c.trunk_out = 5;
    c.head_hidden = 4;
    c.deep_supervision = true;
    return c;
}

}  // namespace

TEST(HexDouble, RoundTripsExactly) {
    for (double x : {0.0, -0.0, 1.0, -1.5, 1e-300, 4.9e-324, 1.7976931348623157e308, 0.1, std::nextafter(1.0, 2.0)}) {
        const double back = parse_double(hex_double(x), "x");
        EXPECT_EQ(back, x);
        EXPECT_EQ(std::signbit(back), std::signbit(x));
    }
    EXPECT_EQ(parse_double("2.5", "x"), 2.5);
    EXPECT_THROW(parse_double("nan", "x"), SchemaError);
    EXPECT_THROW(parse_double("1.0abc", "x"), SchemaError);
    EXPECT_THROW(hex_double(INFINITY), NonFiniteValue);
}

TEST(DatasetFile, DirectionRoundTrip) {
    const auto d = synth::make_direction_dataset(100, synth::SceneConfig{}, 3);
    EXPECT_EQ(parse_direction_dataset(serialize(d)), d);
}

TEST(DatasetFile, PointRoundTripWithGlasses) {
    synth::SceneConfig scene;
    scene.glasses_prob = 0.5;
    const auto d = synth::make_point_dataset(100, scene, 4);
    const auto back = parse_point_dataset(serialize(d));
    EXPECT_EQ(back, d);
    EXPECT_EQ(serialize(back), serialize(d));
}

TEST(DatasetFile, NegativeZeroSurvives) {
    auto d = synth::make_point_dataset(5, synth::SceneConfig{}, 5);
    d.samples[0].truth_p.u = -0.0;
    d.samples[1].feat_view[2][3] = -0.0;
    const auto back = parse_point_dataset(serialize(d));
    EXPECT_TRUE(std::signbit(back.samples[0].truth_p.u));
    EXPECT_TRUE(std::signbit(back.samples[1].feat_view[2][3]));
}

TEST(DatasetFile, FileRoundTripAndKind) {
    const fs::path dir = temp_dir("dataset");
    const auto d = synth::make_point_dataset(30, synth::SceneConfig{}, 6);
    write_dataset(dir / "p.gzds", d);
    EXPECT_EQ(read_point_dataset(dir / "p.gzds"), d);
    EXPECT_EQ(dataset_kind(dir / "p.gzds"), "point");
    EXPECT_THROW(read_direction_dataset(dir / "p.gzds"), SchemaError);
    EXPECT_THROW(read_point_dataset(dir / "missing.gzds"), IoError);
    fs::remove_all(dir);
}

TEST(DatasetFile, MissingTruthIsNamed) {
    const auto d = synth::make_point_dataset(10, synth::SceneConfig{}, 7);
    auto lines = lines_of(serialize(d));
    json rec = json::parse(lines[3]);
    rec.erase("truth_p");
    lines[3] = rec.dump();
    try {
        parse_point_dataset(join(lines));
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("truth_p"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
}

TEST(DatasetFile, WrongVersionIsRejected) {
    const auto d = synth::make_direction_dataset(10, synth::SceneConfig{}, 8);
    auto lines = lines_of(serialize(d));
    json header = json::parse(lines[0]);
    header["version"] = kDatasetVersion + 1;
    lines[0] = header.dump();
    EXPECT_THROW(parse_direction_dataset(join(lines)), VersionMismatch);
}

TEST(DatasetFile, TruncationIsDetected) {
    const std::string text = serialize(synth::make_direction_dataset(10, synth::SceneConfig{}, 9));
    // Cut mid-record: the last line has no newline.
    try {
        parse_direction_dataset(text.substr(0, text.size() - 40));
        FAIL() << "expected TruncatedFile";
    } catch (const TruncatedFile& e) {
        EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
    }
    // Cut at a record boundary: too few records.
    auto lines = lines_of(text);
    lines.pop_back();
    EXPECT_THROW(parse_direction_dataset(join(lines)), TruncatedFile);
    EXPECT_THROW(parse_direction_dataset(""), TruncatedFile);
}

TEST(DatasetFile, MalformedJsonAndExtraRecords) {
    const std::string text = serialize(synth::make_direction_dataset(4, synth::SceneConfig{}, 10));
    auto lines = lines_of(text);
    lines[2] = "{\"feat_left\": [";
    EXPECT_THROW(parse_direction_dataset(join(lines)), SchemaError);
    lines = lines_of(text);
    lines.push_back(lines.back());
    EXPECT_THROW(parse_direction_dataset(join(lines)), SchemaError);
}

TEST(DatasetFile, ReproducibleBytes) {
    const synth::SceneConfig scene;
    EXPECT_EQ(serialize(synth::make_point_dataset(40, scene, 11)), serialize(synth::make_point_dataset(40, scene, 11)));
}

TEST(CheckpointFile, RoundTripIsExactAndByteStable) {
    model::GazeModel m = model::init(small_model(), 12);
    m.trunk.layers[0].bias.value[0] = -0.0;
    train::TrainConfig cfg;
    cfg.seed = 3;
    cfg.early_stop_loss = 0.25;
    const Checkpoint ck = make_checkpoint(m, cfg, 7, 3);
    const std::string text = serialize(ck);
    const Checkpoint back = parse_checkpoint(text);
    EXPECT_EQ(back, ck);
    EXPECT_EQ(serialize(back), text);
    model::GazeModel loaded = load_model(back);
    const auto a = m.named_params(), b = loaded.named_params();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].param->value, b[i].param->value);
    EXPECT_TRUE(std::signbit(loaded.trunk.layers[0].bias.value[0]));
    EXPECT_EQ(serialize(make_checkpoint(loaded, back.train_config, back.epoch, back.seed)), text);
}

TEST(CheckpointFile, FileLoadSaveIsByteIdentical) {
    const fs::path dir = temp_dir("checkpoint");
    model::GazeModel m = model::init(small_model(), 13);
    write_checkpoint(dir / "a.gzck", make_checkpoint(m, train::TrainConfig{}, 1, 13));
    write_checkpoint(dir / "b.gzck", read_checkpoint(dir / "a.gzck"));
    EXPECT_EQ(read_text(dir / "a.gzck"), read_text(dir / "b.gzck"));
    fs::remove_all(dir);
}

TEST(CheckpointFile, ShapeMismatchIsRejected) {
    model::GazeModel m = model::init(small_model(), 14);
    auto lines = lines_of(serialize(make_checkpoint(m, train::TrainConfig{}, 0, 14)));
    json t = json::parse(lines[1]);
    auto shape = t["shape"].get<std::vector<std::size_t>>();
    auto data = t["data"];
    shape[1] += 1;
    for (std::size_t i = 0; i < shape[0]; ++i) data.push_back(hex_double(0.0));
    t["shape"] = shape;
    t["data"] = data;
    lines[1] = t.dump();
    try {
        parse_checkpoint(join(lines));
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("shape"), std::string::npos) << e.what();
    }
}

TEST(CheckpointFile, WrongNameAndCountAreRejected) {
    model::GazeModel m = model::init(small_model(), 15);
    const std::string text = serialize(make_checkpoint(m, train::TrainConfig{}, 0, 15));
    auto lines = lines_of(text);
    json t = json::parse(lines[2]);
    t["name"] = "trunk.bogus";
    lines[2] = t.dump();
    EXPECT_THROW(parse_checkpoint(join(lines)), SchemaError);
    lines = lines_of(text);
    lines.pop_back();
    EXPECT_THROW(parse_checkpoint(join(lines)), TruncatedFile);
    lines = lines_of(text);
    json h = json::parse(lines[0]);
    h["version"] = 99;
    lines[0] = h.dump();
    EXPECT_THROW(parse_checkpoint(join(lines)), VersionMismatch);
}

TEST(AtomicWrite, ReplacesWholeFile) {
    const fs::path dir = temp_dir("atomic");
    write_text_atomic(dir / "f.txt", "first version, longer\n");
    write_text_atomic(dir / "f.txt", "second\n");
    EXPECT_EQ(read_text(dir / "f.txt"), "second\n");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
    EXPECT_EQ(entries, 1u);
    fs::remove_all(dir);
}
