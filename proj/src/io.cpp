#include "gazelab/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gazelab/errors.hpp"

namespace gazelab::io {

using nlohmann::json;
using geometry::Vec3;

std::string hex_double(double x) {
    if (!std::isfinite(x)) throw NonFiniteValue("cannot serialize a non-finite double");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", x);
    return buf;
}

double parse_double(const std::string& text, const std::string& field) {
    if (text.empty()) throw SchemaError("field '" + field + "': empty number");
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(x)) {
        throw SchemaError("field '" + field + "': cannot parse '" + text + "' as a finite double");
    }
    return x;
}

namespace {

// ---- line framing ---------------------------------------------------------

struct Line {
    std::size_t number;  // 1-based
    json value;
};

std::vector<Line> split_lines(const std::string& text) {
    std::vector<Line> out;
    std::size_t pos = 0;
    std::size_t number = 1;
    while (pos < text.size()) {
        const std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) {
            throw TruncatedFile("line " + std::to_string(number) + " (byte offset " + std::to_string(pos) +
                                ") is not terminated by a newline");
        }
        const std::string_view raw(text.data() + pos, nl - pos);
        try {
            out.push_back({number, json::parse(raw)});
        } catch (const json::parse_error& e) {
            throw SchemaError("line " + std::to_string(number) + ", column " + std::to_string(e.byte) +
                              ": malformed record (" + e.what() + ")");
        }
        pos = nl + 1;
        ++number;
    }
    if (out.empty()) throw TruncatedFile("file is empty; expected a header line");
    return out;
}

// ---- field access with named errors ----------------------------------------

class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) fail("", "expected an object");
    }

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw SchemaError(where_ + ": field '" + field + "': " + what);
    }

    const json& at(const std::string& field) const {
        const auto it = j_.find(field);
        if (it == j_.end()) fail(field, "missing");
        return *it;
    }
    bool has(const std::string& field) const { return j_.contains(field); }

    double real(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_string()) fail(field, "expected a number string");
        try {
            return parse_double(v.get<std::string>(), field);
        } catch (const SchemaError&) {
            fail(field, "cannot parse '" + v.get<std::string>() + "' as a finite double");
        }
    }
    std::optional<double> optional_real(const std::string& field) const {
        if (at(field).is_null()) return std::nullopt;
        return real(field);
    }
    std::uint64_t uint(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_number_unsigned()) fail(field, "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }
    std::int64_t integer(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_number_integer()) fail(field, "expected an integer");
        return v.get<std::int64_t>();
    }
    bool boolean(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_boolean()) fail(field, "expected true or false");
        return v.get<bool>();
    }
    std::string string(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_string()) fail(field, "expected a string");
        return v.get<std::string>();
    }
    std::vector<double> reals(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_array()) fail(field, "expected an array");
        std::vector<double> out;
        out.reserve(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_string()) fail(field, "element " + std::to_string(i) + " is not a number string");
            try {
                out.push_back(parse_double(v[i].get<std::string>(), field));
            } catch (const SchemaError&) {
                fail(field, "element " + std::to_string(i) + " is not a finite double");
            }
        }
        return out;
    }
    std::vector<std::size_t> sizes(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_array()) fail(field, "expected an array");
        std::vector<std::size_t> out;
        for (const json& e : v) {
            if (!e.is_number_unsigned()) fail(field, "expected nonnegative integers");
            out.push_back(e.get<std::size_t>());
        }
        return out;
    }
    Vec3 vec3(const std::string& field) const {
        const auto r = reals(field);
        if (r.size() != 3) fail(field, "expected 3 components, got " + std::to_string(r.size()));
        return {r[0], r[1], r[2]};
    }
    Reader object(const std::string& field) const {
        const json& v = at(field);
        if (!v.is_object()) fail(field, "expected an object");
        return Reader(v, where_ + ": " + field);
    }

private:
    const json& j_;
    std::string where_;
};

std::string where(const Line& l) { return "line " + std::to_string(l.number); }

// ---- encoders ---------------------------------------------------------------

json reals(std::span<const double> xs) {
    json a = json::array();
    for (double x : xs) a.push_back(hex_double(x));
    return a;
}
json vec3(Vec3 v) { return reals(std::array<double, 3>{v.x, v.y, v.z}); }
json opt_real(const std::optional<double>& x) { return x ? json(hex_double(*x)) : json(nullptr); }

json to_json(const geometry::ScreenPlane& s) {
    return {{"origin", vec3(s.origin)},      {"u_axis", vec3(s.u_axis)},          {"v_axis", vec3(s.v_axis)},
            {"width", hex_double(s.width)}, {"height", hex_double(s.height)}};
}

geometry::ScreenPlane screen_from(const Reader& r) {
    geometry::ScreenPlane s;
    s.origin = r.vec3("origin");
    s.u_axis = r.vec3("u_axis");
    s.v_axis = r.vec3("v_axis");
    s.width = r.real("width");
    s.height = r.real("height");
    return s;
}

json to_json(const synth::SceneConfig& c) {
    json cams = json::array();
    for (const Vec3& v : c.cameras) cams.push_back(vec3(v));
    return {{"screen", to_json(c.screen)},
            {"cameras", cams},
            {"head_min", vec3(c.head_min)},
            {"head_max", vec3(c.head_max)},
            {"interocular", hex_double(c.interocular)},
            {"feature_dim", c.feature_dim},
            {"noise_sigma", hex_double(c.noise_sigma)},
            {"glasses_prob", hex_double(c.glasses_prob)},
            {"glasses_noise_multiplier", hex_double(c.glasses_noise_multiplier)},
            {"appearance_scale", hex_double(c.appearance_scale)},
            {"seed", c.seed}};
}

synth::SceneConfig scene_from(const Reader& r) {
    synth::SceneConfig c;
    c.screen = screen_from(r.object("screen"));
    const json& cams = r.at("cameras");
    if (!cams.is_array() || cams.size() != 3) r.fail("cameras", "expected 3 camera positions");
    for (std::size_t i = 0; i < 3; ++i) {
        const json wrapped = {{"camera", cams[i]}};
        c.cameras[i] = Reader(wrapped, "cameras[" + std::to_string(i) + "]").vec3("camera");
    }
    c.head_min = r.vec3("head_min");
    c.head_max = r.vec3("head_max");
    c.interocular = r.real("interocular");
    c.feature_dim = r.uint("feature_dim");
    c.noise_sigma = r.real("noise_sigma");
    c.glasses_prob = r.real("glasses_prob");
    c.glasses_noise_multiplier = r.real("glasses_noise_multiplier");
    c.appearance_scale = r.real("appearance_scale");
    c.seed = r.uint("seed");
    try {
        c.validate();
    } catch (const InvalidConfig& e) {
        r.fail("scene", e.what());
    }
    return c;
}

json to_json(const model::ModelConfig& c) {
    return {{"input_dim", c.input_dim},   {"trunk_hidden", c.trunk_hidden},       {"trunk_out", c.trunk_out},
            {"head_hidden", c.head_hidden}, {"pool_kind", model::pool_name(c.pool_kind)},
            {"deep_supervision", c.deep_supervision}};
}

model::ModelConfig model_from(const Reader& r) {
    model::ModelConfig c;
    c.input_dim = r.uint("input_dim");
    c.trunk_hidden = r.sizes("trunk_hidden");
    c.trunk_out = r.uint("trunk_out");
    c.head_hidden = r.uint("head_hidden");
    try {
        c.pool_kind = model::parse_pool(r.string("pool_kind"));
    } catch (const InvalidConfig& e) {
        r.fail("pool_kind", e.what());
    }
    c.deep_supervision = r.boolean("deep_supervision");
    try {
        c.validate();
    } catch (const InvalidConfig& e) {
        r.fail("model_config", e.what());
    }
    return c;
}

json to_json(const train::TrainConfig& c) {
    return {{"lr", hex_double(c.lr)},
            {"momentum", hex_double(c.momentum)},
            {"epochs", c.epochs},
            {"dir_batch", c.dir_batch},
            {"point_batch", c.point_batch},
            {"lambda1", hex_double(c.weights.lambda1)},
            {"lambda2", hex_double(c.weights.lambda2)},
            {"lambda3", hex_double(c.weights.lambda3)},
            {"mode", train::mode_name(c.mode)},
            {"seed", c.seed},
            {"deep_supervision", c.deep_supervision},
            {"views", selection_name(c.views)},
            {"early_stop_loss", opt_real(c.early_stop_loss)},
            {"lambda1_end", opt_real(c.lambda1_end)},
            {"eval_each_epoch", c.eval_each_epoch}};
}

train::TrainConfig train_from(const Reader& r) {
    train::TrainConfig c;
    c.lr = r.real("lr");
    c.momentum = r.real("momentum");
    c.epochs = r.uint("epochs");
    c.dir_batch = r.uint("dir_batch");
    c.point_batch = r.uint("point_batch");
    c.weights.lambda1 = r.real("lambda1");
    c.weights.lambda2 = r.real("lambda2");
    c.weights.lambda3 = r.real("lambda3");
    try {
        c.mode = train::parse_mode(r.string("mode"));
        c.views = parse_selection(r.string("views"));
    } catch (const InvalidConfig& e) {
        r.fail("train_config", e.what());
    }
    c.seed = r.uint("seed");
    c.deep_supervision = r.boolean("deep_supervision");
    c.early_stop_loss = r.optional_real("early_stop_loss");
    c.lambda1_end = r.optional_real("lambda1_end");
    c.eval_each_epoch = r.boolean("eval_each_epoch");
    return c;
}

json sph(const geometry::SphericalGaze& s) {
    return {{"theta", hex_double(s.theta)}, {"phi", hex_double(s.phi)}, {"r", hex_double(s.r)}};
}
geometry::SphericalGaze sph_from(const Reader& r) { return {r.real("theta"), r.real("phi"), r.real("r")}; }

json to_json(const synth::DirectionSample& s) {
    return {{"feat_left", reals(s.feat_left)},
            {"feat_right", reals(s.feat_right)},
            {"truth_l", sph(s.truth_l)},
            {"truth_r", sph(s.truth_r)},
            {"v", vec3(s.v)}};
}

json to_json(const synth::PointSample& s) {
    return {{"feat_L", reals(s.feat_view[0])},
            {"feat_M", reals(s.feat_view[1])},
            {"feat_R", reals(s.feat_view[2])},
            {"truth_p", reals(std::array<double, 2>{s.truth_p.u, s.truth_p.v})},
            {"eye_left", vec3(s.eyes.left)},
            {"eye_right", vec3(s.eyes.right)},
            {"wears_glasses", s.wears_glasses},
            {"glasses_view", s.glasses_view}};
}

void check_dim(const Reader& r, const std::string& field, const std::vector<double>& f, std::size_t dim) {
    if (f.size() != dim) {
        r.fail(field, "expected " + std::to_string(dim) + " features, got " + std::to_string(f.size()));
    }
}

synth::DirectionSample direction_from(const Reader& r, std::size_t dim) {
    synth::DirectionSample s;
    s.feat_left = r.reals("feat_left");
    s.feat_right = r.reals("feat_right");
    check_dim(r, "feat_left", s.feat_left, dim);
    check_dim(r, "feat_right", s.feat_right, dim);
    s.truth_l = sph_from(r.object("truth_l"));
    s.truth_r = sph_from(r.object("truth_r"));
    s.v = r.vec3("v");
    return s;
}

synth::PointSample point_from(const Reader& r, std::size_t dim) {
    synth::PointSample s;
    const char* names[3] = {"feat_L", "feat_M", "feat_R"};
    for (std::size_t i = 0; i < 3; ++i) {
        s.feat_view[i] = r.reals(names[i]);
        check_dim(r, names[i], s.feat_view[i], dim);
    }
    const auto p = r.reals("truth_p");
    if (p.size() != 2) r.fail("truth_p", "expected 2 components");
    s.truth_p = {p[0], p[1]};
    s.eyes = {r.vec3("eye_left"), r.vec3("eye_right")};
    s.wears_glasses = r.boolean("wears_glasses");
    const std::int64_t gv = r.integer("glasses_view");
    if (gv < -1 || gv > 2) r.fail("glasses_view", "expected -1, 0, 1 or 2");
    if ((gv >= 0) != s.wears_glasses) r.fail("glasses_view", "inconsistent with wears_glasses");
    s.glasses_view = static_cast<int>(gv);
    return s;
}

// ---- dataset framing ----------------------------------------------------------

constexpr const char* kDatasetFormat = "gazelab-dataset";
constexpr const char* kCheckpointFormat = "gazelab-checkpoint";

template <class Sample>
std::string serialize_dataset(const synth::Dataset<Sample>& d, const char* kind) {
    const json header = {{"format", kDatasetFormat},         {"version", kDatasetVersion},
                         {"sample_type", kind},              {"count", d.samples.size()},
                         {"seed", d.seed},                   {"train_count", d.train_count},
                         {"scene", to_json(d.scene)}};
    std::string out = header.dump() + "\n";
    for (const Sample& s : d.samples) out += to_json(s).dump() + "\n";
    return out;
}

void check_version(const Reader& h, const char* format, int version) {
    if (h.string("format") != format) h.fail("format", "expected '" + std::string(format) + "'");
    const std::int64_t v = h.integer("version");
    if (v != version) {
        throw VersionMismatch("format version " + std::to_string(v) + " is not supported (expected " +
                              std::to_string(version) + ")");
    }
}

template <class Sample, class Decode>
synth::Dataset<Sample> parse_dataset(const std::string& text, const char* kind, Decode decode) {
    const std::vector<Line> lines = split_lines(text);
    const Reader h(lines[0].value, "line 1 (header)");
    check_version(h, kDatasetFormat, kDatasetVersion);
    if (h.string("sample_type") != kind) {
        h.fail("sample_type", "expected '" + std::string(kind) + "', got '" + h.string("sample_type") + "'");
    }
    synth::Dataset<Sample> d;
    d.scene = scene_from(h.object("scene"));
    d.seed = h.uint("seed");
    const std::size_t count = h.uint("count");
    d.train_count = h.uint("train_count");
    if (d.train_count > count) h.fail("train_count", "exceeds count");
    if (lines.size() - 1 < count) {
        throw TruncatedFile("expected " + std::to_string(count) + " records, found " +
                            std::to_string(lines.size() - 1));
    }
    if (lines.size() - 1 > count) {
        throw SchemaError("line " + std::to_string(count + 2) + ": unexpected record beyond count " +
                          std::to_string(count));
    }
    d.samples.reserve(count);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        d.samples.push_back(decode(Reader(lines[i].value, where(lines[i])), d.scene.feature_dim));
    }
    return d;
}

}  // namespace

std::string serialize(const synth::DirectionDataset& d) { return serialize_dataset(d, "direction"); }
std::string serialize(const synth::PointDataset& d) { return serialize_dataset(d, "point"); }

synth::DirectionDataset parse_direction_dataset(const std::string& text) {
    return parse_dataset<synth::DirectionSample>(text, "direction", direction_from);
}

synth::PointDataset parse_point_dataset(const std::string& text) {
    return parse_dataset<synth::PointSample>(text, "point", point_from);
}

void write_dataset(const std::filesystem::path& path, const synth::DirectionDataset& d) {
    write_text_atomic(path, serialize(d));
}
void write_dataset(const std::filesystem::path& path, const synth::PointDataset& d) {
    write_text_atomic(path, serialize(d));
}

synth::DirectionDataset read_direction_dataset(const std::filesystem::path& path) {
    try {
        return parse_direction_dataset(read_text(path));
    } catch (const Error& e) {
        throw_with_context(e, path.string());
    }
}

synth::PointDataset read_point_dataset(const std::filesystem::path& path) {
    try {
        return parse_point_dataset(read_text(path));
    } catch (const Error& e) {
        throw_with_context(e, path.string());
    }
}

std::string dataset_kind(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::string first;
    std::getline(in, first);
    json h;
    try {
        h = json::parse(first);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": line 1: malformed header");
    }
    const Reader r(h, path.string() + ": line 1 (header)");
    check_version(r, kDatasetFormat, kDatasetVersion);
    return r.string("sample_type");
}

// ---- checkpoints ------------------------------------------------------------------

Checkpoint make_checkpoint(model::GazeModel& model, const train::TrainConfig& cfg, std::size_t epoch,
                           std::uint64_t seed) {
    Checkpoint ck{model.config, cfg, epoch, seed, {}};
    for (const auto& np : model.named_params()) ck.tensors.emplace_back(np.name, np.param->value);
    return ck;
}

model::GazeModel load_model(const Checkpoint& ck) {
    model::GazeModel m = model::init(ck.model_config, 0);
    auto named = m.named_params();
    if (named.size() != ck.tensors.size()) {
        throw SchemaError("checkpoint holds " + std::to_string(ck.tensors.size()) + " tensors, config expects " +
                          std::to_string(named.size()));
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
        const auto& [name, t] = ck.tensors[i];
        if (name != named[i].name) {
            throw SchemaError("field 'name': tensor " + std::to_string(i) + " is '" + name + "', expected '" +
                              named[i].name + "'");
        }
        if (t.shape() != named[i].param->value.shape()) {
            throw SchemaError("field 'shape': tensor '" + name + "' has shape " + shape_string(t.shape()) +
                              ", config expects " + shape_string(named[i].param->value.shape()));
        }
        named[i].param->value = t;
        named[i].param->zero_grad();
        named[i].param->momentum.fill(0.0);
    }
    return m;
}

std::string serialize(const Checkpoint& ck) {
    const json header = {{"format", kCheckpointFormat},
                         {"version", kCheckpointVersion},
                         {"model_config", to_json(ck.model_config)},
                         {"train_config", to_json(ck.train_config)},
                         {"epoch", ck.epoch},
                         {"seed", ck.seed},
                         {"tensors", ck.tensors.size()}};
    std::string out = header.dump() + "\n";
    for (const auto& [name, t] : ck.tensors) {
        const json line = {{"name", name}, {"shape", t.shape()}, {"data", reals(t.data())}};
        out += line.dump() + "\n";
    }
    return out;
}

Checkpoint parse_checkpoint(const std::string& text) {
    const std::vector<Line> lines = split_lines(text);
    const Reader h(lines[0].value, "line 1 (header)");
    check_version(h, kCheckpointFormat, kCheckpointVersion);
    Checkpoint ck;
    ck.model_config = model_from(h.object("model_config"));
    ck.train_config = train_from(h.object("train_config"));
    ck.epoch = h.uint("epoch");
    ck.seed = h.uint("seed");
    const std::size_t count = h.uint("tensors");
    if (lines.size() - 1 < count) {
        throw TruncatedFile("expected " + std::to_string(count) + " tensors, found " + std::to_string(lines.size() - 1));
    }
    if (lines.size() - 1 > count) {
        throw SchemaError("line " + std::to_string(count + 2) + ": unexpected tensor beyond count " +
                          std::to_string(count));
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const Reader r(lines[i].value, where(lines[i]));
        const std::string name = r.string("name");
        const Shape shape = r.sizes("shape");
        std::vector<double> data = r.reals("data");
        for (std::size_t d : shape) {
            if (d == 0) r.fail("shape", "zero-sized dimension");
        }
        if (shape_size(shape) != data.size()) {
            r.fail("data", "holds " + std::to_string(data.size()) + " values, shape " + shape_string(shape) +
                               " needs " + std::to_string(shape_size(shape)));
        }
        Tensor t(shape);
        std::copy(data.begin(), data.end(), t.data().begin());
        ck.tensors.emplace_back(name, std::move(t));
    }
    load_model(ck);  // validates names and shapes against model_config
    return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) { write_text_atomic(path, serialize(ck)); }

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    try {
        return parse_checkpoint(read_text(path));
    } catch (const Error& e) {
        throw_with_context(e, path.string());
    }
}

// ---- files ----------------------------------------------------------------------

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.flush();
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "'");
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace gazelab::io
