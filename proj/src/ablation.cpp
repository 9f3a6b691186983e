#include "gazelab/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "gazelab/errors.hpp"

namespace gazelab::ablation {

const char* suite_name(Suite s) {
    switch (s) {
        case Suite::task: return "task";
        case Suite::view: return "view";
        case Suite::glasses: return "glasses";
    }
    return "?";
}

Suite parse_suite(const std::string& name) {
    if (name == "task") return Suite::task;
    if (name == "view") return Suite::view;
    if (name == "glasses") return Suite::glasses;
    throw InvalidConfig("unknown ablation suite '" + name + "' (expected task, view or glasses)");
}

synth::SceneConfig glasses_scene(const synth::SceneConfig& base) {
    synth::SceneConfig s = base;
    s.glasses_prob = 0.5;
    s.glasses_noise_multiplier = std::max(3.0, base.glasses_noise_multiplier);
    return s;
}

std::vector<std::string> variants(Suite suite) {
    if (suite == Suite::task) return {"multitask", "direction_only", "point_only"};
    return {"L", "M", "R", "multi"};
}

std::size_t worker_count(std::size_t requested) {
    std::size_t n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("GAZE_LAB_THREADS"); env != nullptr && *env != '\0') {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (*end != '\0' || v <= 0) throw InvalidConfig(std::string("GAZE_LAB_THREADS must be a positive integer, got '") + env + "'");
            n = static_cast<std::size_t>(v);
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

eval::EvalReport run_variant(Suite suite, const std::string& variant, std::uint64_t seed, const AblationConfig& cfg) {
    const synth::SceneConfig scene = suite == Suite::glasses ? glasses_scene(cfg.scene) : cfg.scene;
    const auto dir = synth::make_direction_dataset(cfg.n_direction, scene, seed);
    const auto pt = synth::make_point_dataset(cfg.n_point, scene, seed);

    model::GazeModel m = model::init(cfg.model, seed);
    train::TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.eval_each_epoch = false;
    eval::ReportOptions options;
    ViewSelection views = ViewSelection::all;
    if (suite == Suite::task) {
        tc.mode = train::parse_mode(variant);
    } else {
        views = parse_selection(variant);
        tc.views = views;
        options.glasses = suite == Suite::glasses;
    }
    train::train(m, train::TrainData::from(dir, pt), tc);

    const auto dir_test = tc.mode == train::Mode::point_only ? std::span<const synth::DirectionSample>{} : dir.test();
    const auto pt_test = tc.mode == train::Mode::direction_only ? std::span<const synth::PointSample>{} : pt.test();
    eval::EvalReport r = eval::report(m, dir_test, pt_test, {});
    if (!pt_test.empty() && views != ViewSelection::all) r.E_p = eval::eval_point(m, pt_test, views);
    if (options.glasses && !pt_test.empty()) {
        std::vector<synth::PointSample> with, without;
        for (const auto& s : pt_test) (s.wears_glasses ? with : without).push_back(s);
        for (auto [key, subset] : {std::pair{"glasses", &with}, std::pair{"no_glasses", &without}}) {
            if (subset->empty()) continue;
            eval::EvalReport sub;
            sub.n_point = subset->size();
            sub.E_p = eval::eval_point(m, *subset, views);
            r.breakdowns.emplace(key, sub);
        }
    }
    return r;
}

namespace {

std::optional<Stat> stat(const std::vector<double>& xs) {
    if (xs.empty()) return std::nullopt;
    Stat s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

Row aggregate(const std::string& name, const std::vector<const eval::EvalReport*>& reports) {
    std::vector<double> ep, el, er;
    for (const auto* r : reports) {
        if (r->E_p) ep.push_back(*r->E_p);
        if (r->E_d_left) el.push_back(*r->E_d_left);
        if (r->E_d_right) er.push_back(*r->E_d_right);
    }
    return {name, stat(ep), stat(el), stat(er), reports.size()};
}

std::optional<double> mean_of(const std::optional<Stat>& s) {
    return s ? std::optional<double>(s->mean) : std::nullopt;
}
std::optional<double> std_of(const std::optional<Stat>& s) {
    return s ? std::optional<double>(s->stddev) : std::nullopt;
}

}  // namespace

AblationResult run_ablation(Suite suite, const AblationConfig& cfg) {
    if (cfg.seeds.empty()) throw InvalidConfig("ablation needs at least one seed");
    cfg.scene.validate();
    cfg.model.validate();
    cfg.train.validate();

    const std::vector<std::string> names = variants(suite);
    AblationResult result;
    result.suite = suite;
    for (const auto& v : names) {
        for (std::uint64_t s : cfg.seeds) result.runs.push_back({v, s, {}});
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < result.runs.size(); i = next++) {
            try {
                Run& run = result.runs[i];
                run.report = run_variant(suite, run.variant, run.seed, cfg);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::min(worker_count(cfg.threads), result.runs.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (const auto& v : names) {
        std::vector<const eval::EvalReport*> reports;
        std::map<std::string, std::vector<const eval::EvalReport*>> sub;
        for (const Run& run : result.runs) {
            if (run.variant != v) continue;
            reports.push_back(&run.report);
            for (const auto& [key, b] : run.report.breakdowns) sub[key].push_back(&b);
        }
        result.rows.push_back(aggregate(v, reports));
        for (const auto& [key, list] : sub) result.rows.push_back(aggregate(v + "/" + key, list));
    }
    return result;
}

const Row& AblationResult::row(const std::string& variant) const {
    for (const Row& r : rows) {
        if (r.variant == variant) return r;
    }
    throw InvalidConfig("no ablation row named '" + variant + "'");
}

std::string AblationResult::runs_csv() const {
    std::string out = "variant,E_p_cm,E_d_left_deg,E_d_right_deg,n,seed\n";
    for (const Run& run : runs) out += eval::report_csv(run.report, run.variant, run.seed, false);
    return out;
}

std::string AblationResult::summary_csv() const {
    std::ostringstream os;
    os << "variant,E_p_cm_mean,E_p_cm_std,E_d_left_deg_mean,E_d_left_deg_std,E_d_right_deg_mean,E_d_right_deg_std,"
          "seeds\n";
    for (const Row& r : rows) {
        os << r.variant << ',' << eval::format_metric(mean_of(r.E_p)) << ',' << eval::format_metric(std_of(r.E_p))
           << ',' << eval::format_metric(mean_of(r.E_d_left)) << ',' << eval::format_metric(std_of(r.E_d_left)) << ','
           << eval::format_metric(mean_of(r.E_d_right)) << ',' << eval::format_metric(std_of(r.E_d_right)) << ','
           << r.seeds << '\n';
    }
    return os.str();
}

std::string AblationResult::summary_text() const {
    std::ostringstream os;
    char line[256];
    auto cell = [](const std::optional<Stat>& s) {
        if (!s) return std::string("NA");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f +- %.4f", s->mean, s->stddev);
        return std::string(buf);
    };
    std::snprintf(line, sizeof line, "%-22s %20s %20s %20s %6s\n", "variant", "E_p [cm]", "E_d left [deg]",
                  "E_d right [deg]", "seeds");
    os << line;
    for (const Row& r : rows) {
        std::snprintf(line, sizeof line, "%-22s %20s %20s %20s %6zu\n", r.variant.c_str(), cell(r.E_p).c_str(),
                      cell(r.E_d_left).c_str(), cell(r.E_d_right).c_str(), r.seeds);
        os << line;
    }
    return os.str();
}

}  // namespace gazelab::ablation
