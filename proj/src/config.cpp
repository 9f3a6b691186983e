#include "gazelab/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "gazelab/errors.hpp"
#include "gazelab/io.hpp"

namespace gazelab::config {

namespace {

using geometry::Vec3;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
std::string fmt(Vec3 v) { return fmt(v.x) + "," + fmt(v.y) + "," + fmt(v.z); }
std::string fmt(bool b) { return b ? "true" : "false"; }
std::string fmt(std::size_t n) { return std::to_string(n); }
std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : "none"; }

double real(const std::string& key, const std::string& v) {
    try {
        return io::parse_double(v, key);
    } catch (const SchemaError&) {
        throw InvalidConfig("key '" + key + "': '" + v + "' is not a finite number");
    }
}

std::uint64_t uint(const std::string& key, const std::string& v) {
    if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
        throw InvalidConfig("key '" + key + "': '" + v + "' is not a nonnegative integer");
    }
    errno = 0;
    const unsigned long long x = std::strtoull(v.c_str(), nullptr, 10);
    if (errno == ERANGE) throw InvalidConfig("key '" + key + "': '" + v + "' is out of range");
    return x;
}

bool boolean(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw InvalidConfig("key '" + key + "': expected true or false, got '" + v + "'");
}

Vec3 vec3(const std::string& key, const std::string& v) {
    const auto parts = split(v, ',');
    if (parts.size() != 3) throw InvalidConfig("key '" + key + "': expected x,y,z");
    return {real(key, parts[0]), real(key, parts[1]), real(key, parts[2])};
}

std::optional<double> opt_real(const std::string& key, const std::string& v) {
    if (v == "none") return std::nullopt;
    return real(key, v);
}

template <class Fn>
auto rethrow_as_key(const std::string& key, Fn fn) {
    try {
        return fn();
    } catch (const InvalidConfig& e) {
        throw InvalidConfig("key '" + key + "': " + e.message());
    }
}

struct Entry {
    std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<std::pair<std::string, Entry>>& table() {
    static const std::vector<std::pair<std::string, Entry>> t = [] {
        std::vector<std::pair<std::string, Entry>> e;
        auto add = [&](std::string key, Entry entry) { e.emplace_back(std::move(key), std::move(entry)); };
#define REAL(KEY, FIELD) \
    add(KEY, {[](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = real(k, v); }, \
              [](const RunConfig& c) { return fmt(c.FIELD); }})
#define SIZE(KEY, FIELD) \
    add(KEY, {[](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = uint(k, v); }, \
              [](const RunConfig& c) { return fmt(static_cast<std::size_t>(c.FIELD)); }})
#define BOOL(KEY, FIELD) \
    add(KEY, {[](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = boolean(k, v); }, \
              [](const RunConfig& c) { return fmt(c.FIELD); }})
#define VEC3(KEY, FIELD) \
    add(KEY, {[](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = vec3(k, v); }, \
              [](const RunConfig& c) { return fmt(c.FIELD); }})
#define OPT(KEY, FIELD) \
    add(KEY, {[](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = opt_real(k, v); }, \
              [](const RunConfig& c) { return fmt(c.FIELD); }})

        add("out_dir", {[](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
                        [](const RunConfig& c) { return c.out_dir.string(); }});

        REAL("scene.screen_width", scene.screen.width);
        REAL("scene.screen_height", scene.screen.height);
        VEC3("scene.camera_L", scene.cameras[0]);
        VEC3("scene.camera_M", scene.cameras[1]);
        VEC3("scene.camera_R", scene.cameras[2]);
        VEC3("scene.head_min", scene.head_min);
        VEC3("scene.head_max", scene.head_max);
        REAL("scene.interocular", scene.interocular);
        SIZE("scene.feature_dim", scene.feature_dim);
        REAL("scene.noise_sigma", scene.noise_sigma);
        REAL("scene.glasses_prob", scene.glasses_prob);
        REAL("scene.glasses_noise_multiplier", scene.glasses_noise_multiplier);
        REAL("scene.appearance_scale", scene.appearance_scale);
        SIZE("scene.seed", scene.seed);

        add("model.trunk_hidden",
            {[](RunConfig& c, const std::string& k, const std::string& v) {
                 c.model.trunk_hidden.clear();
                 for (const auto& p : split(v, ',')) c.model.trunk_hidden.push_back(uint(k, p));
             },
             [](const RunConfig& c) {
                 std::string s;
                 for (std::size_t i = 0; i < c.model.trunk_hidden.size(); ++i) {
                     s += (i ? "," : "") + std::to_string(c.model.trunk_hidden[i]);
                 }
                 return s;
             }});
        SIZE("model.trunk_out", model.trunk_out);
        SIZE("model.head_hidden", model.head_hidden);
        add("model.pool_kind",
            {[](RunConfig& c, const std::string& k, const std::string& v) {
                 c.model.pool_kind = rethrow_as_key(k, [&] { return model::parse_pool(v); });
             },
             [](const RunConfig& c) { return std::string(model::pool_name(c.model.pool_kind)); }});
        BOOL("model.deep_supervision", model.deep_supervision);

        REAL("train.lr", train.lr);
        REAL("train.momentum", train.momentum);
        SIZE("train.epochs", train.epochs);
        SIZE("train.dir_batch", train.dir_batch);
        SIZE("train.point_batch", train.point_batch);
        add("train.mode",
            {[](RunConfig& c, const std::string& k, const std::string& v) {
                 c.train.mode = rethrow_as_key(k, [&] { return train::parse_mode(v); });
             },
             [](const RunConfig& c) { return std::string(train::mode_name(c.train.mode)); }});
        SIZE("train.seed", train.seed);
        BOOL("train.deep_supervision", train.deep_supervision);
        add("train.views",
            {[](RunConfig& c, const std::string& k, const std::string& v) {
                 c.train.views = rethrow_as_key(k, [&] { return parse_selection(v); });
             },
             [](const RunConfig& c) { return std::string(selection_name(c.train.views)); }});
        OPT("train.early_stop_loss", train.early_stop_loss);
        OPT("train.lambda1_end", train.lambda1_end);
        BOOL("train.eval_each_epoch", train.eval_each_epoch);

        REAL("loss.lambda1", train.weights.lambda1);
        REAL("loss.lambda2", train.weights.lambda2);
        REAL("loss.lambda3", train.weights.lambda3);
#undef REAL
#undef SIZE
#undef BOOL
#undef VEC3
#undef OPT
        return e;
    }();
    return t;
}

const Entry& entry(const std::string& key) {
    for (const auto& [k, e] : table()) {
        if (k == key) return e;
    }
    throw InvalidConfig("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "preset") {
        const std::filesystem::path out = out_dir;
        *this = from_preset(value);
        out_dir = out;
        return;
    }
    entry(key).set(*this, key, value);
}

std::string RunConfig::get(const std::string& key) const {
    if (key == "preset") return preset;
    return entry(key).get(*this);
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out{"preset"};
        for (const auto& [key, e] : table()) out.push_back(key);
        return out;
    }();
    return k;
}

void RunConfig::resolve() {
    model.input_dim = scene.feature_dim;
    scene.validate();
    model.validate();
    train.validate();
}

std::string RunConfig::echo() const {
    std::string out = "# resolved run configuration\n";
    for (const auto& key : keys()) out += key + " = " + get(key) + "\n";
    return out;
}

RunConfig from_preset(const std::string& name) {
    RunConfig c;
    c.preset = name;
    c.train = train::preset(name);
    return c;
}

void apply_text(RunConfig& cfg, const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidConfig(source + ":" + std::to_string(number) + ": expected 'key = value'");
        }
        try {
            cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const InvalidConfig& e) {
            throw InvalidConfig(source + ":" + std::to_string(number) + ": " + e.message());
        }
    }
}

void apply_file(RunConfig& cfg, const std::filesystem::path& path) {
    apply_text(cfg, io::read_text(path), path.string());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw InvalidConfig("override '" + assignment + "' is not key=value");
    cfg.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace gazelab::config
