// gaze_lab: dataset generation, training, evaluation, ablations and
// self-checks. Every command that takes --out writes its outputs, the
// resolved configuration (config.txt) and summary.json there.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gazelab/ablation.hpp"
#include "gazelab/config.hpp"
#include "gazelab/errors.hpp"
#include "gazelab/eval.hpp"
#include "gazelab/io.hpp"
#include "gazelab/train.hpp"
#include "gazelab/verify.hpp"

namespace fs = std::filesystem;
using namespace gazelab;
using nlohmann::json;

namespace {

struct ConfigFlags {
    std::string preset = "toy";
    std::string file;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "Base preset: toy or paper")->capture_default_str();
        cmd->add_option("--config", file, "Key-value config file applied after the preset")->check(CLI::ExistingFile);
        cmd->add_option("--set", overrides, "Override one key, e.g. --set train.epochs=20 (repeatable)");
    }

    config::RunConfig resolve(const std::string& out) const {
        config::RunConfig c = config::from_preset(preset);
        if (!file.empty()) config::apply_file(c, file);
        for (const auto& o : overrides) config::apply_override(c, o);
        if (!out.empty()) c.out_dir = out;
        c.resolve();
        return c;
    }
};

json metric(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json report_json(const eval::EvalReport& r) {
    json j = {{"E_p_cm", metric(r.E_p)},
              {"E_d_left_deg", metric(r.E_d_left)},
              {"E_d_right_deg", metric(r.E_d_right)},
              {"n_point", r.n_point},
              {"n_direction", r.n_direction}};
    for (const auto& [key, sub] : r.breakdowns) j["breakdowns"][key] = report_json(sub);
    return j;
}

void prepare(const config::RunConfig& c) {
    fs::create_directories(c.out_dir);
    io::write_text_atomic(c.out_dir / "config.txt", c.echo());
}

void finish(const config::RunConfig& c, json summary) {
    summary["status"] = "ok";
    io::write_text_atomic(c.out_dir / "summary.json", summary.dump(2) + "\n");
}

// ---- gen ---------------------------------------------------------------------

struct GenArgs {
    std::string kind;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::string out;
    ConfigFlags cfg;
};

int cmd_gen(const GenArgs& a) {
    const config::RunConfig c = a.cfg.resolve(a.out);
    prepare(c);
    const fs::path path = c.out_dir / (a.kind + ".gzds");
    std::size_t train_count = 0;
    if (a.kind == "direction") {
        const auto d = synth::make_direction_dataset(a.n, c.scene, a.seed);
        io::write_dataset(path, d);
        train_count = d.train_count;
    } else {
        const auto d = synth::make_point_dataset(a.n, c.scene, a.seed);
        io::write_dataset(path, d);
        train_count = d.train_count;
    }
    std::printf("wrote %s (%zu samples, %zu train / %zu test)\n", path.string().c_str(), a.n, train_count,
                a.n - train_count);
    finish(c, {{"command", "gen"},
               {"kind", a.kind},
               {"n", a.n},
               {"seed", a.seed},
               {"train_count", train_count},
               {"outputs", {path.filename().string(), "config.txt"}}});
    return 0;
}

// ---- train / eval ------------------------------------------------------------------

struct Data {
    std::optional<synth::DirectionDataset> direction;
    std::optional<synth::PointDataset> point;

    std::size_t feature_dim() const {
        const std::size_t d = direction ? direction->scene.feature_dim : point->scene.feature_dim;
        if (direction && point && point->scene.feature_dim != d) {
            throw InvalidConfig("direction and point datasets have different feature_dim");
        }
        return d;
    }
    train::TrainData splits() const {
        train::TrainData t;
        if (direction) {
            t.direction_train = direction->train();
            t.direction_test = direction->test();
        }
        if (point) {
            t.point_train = point->train();
            t.point_test = point->test();
        }
        return t;
    }
};

Data load_data(const std::string& direction, const std::string& point) {
    Data d;
    if (!direction.empty()) d.direction = io::read_direction_dataset(direction);
    if (!point.empty()) d.point = io::read_point_dataset(point);
    if (!d.direction && !d.point) throw InvalidConfig("pass --direction and/or --point dataset files");
    return d;
}

eval::EvalReport full_report(model::GazeModel& m, const train::TrainData& t) {
    eval::ReportOptions options;
    options.views = !t.point_test.empty();
    for (const auto& s : t.point_test) options.glasses = options.glasses || s.wears_glasses;
    return eval::report(m, t.direction_test, t.point_test, options);
}

void write_report(const config::RunConfig& c, const eval::EvalReport& r, const std::string& variant,
                  std::uint64_t seed) {
    io::write_text_atomic(c.out_dir / "report.csv", eval::report_csv(r, variant, seed));
    io::write_text_atomic(c.out_dir / "report.txt", eval::report_text(r, variant));
    std::cout << eval::report_text(r, variant);
}

struct TrainArgs {
    std::string direction;
    std::string point;
    std::string out;
    ConfigFlags cfg;
};

int cmd_train(const TrainArgs& a) {
    config::RunConfig c = a.cfg.resolve(a.out);
    const Data data = load_data(a.direction, a.point);
    if (c.train.mode != train::Mode::point_only && !data.direction) {
        throw InvalidConfig(std::string("mode ") + train::mode_name(c.train.mode) + " needs --direction");
    }
    if (c.train.mode != train::Mode::direction_only && !data.point) {
        throw InvalidConfig(std::string("mode ") + train::mode_name(c.train.mode) + " needs --point");
    }
    c.model.input_dim = data.feature_dim();
    for (const auto& w : c.train.warnings()) std::fprintf(stderr, "warning: %s\n", w.c_str());
    prepare(c);

    model::GazeModel m = model::init(c.model, c.train.seed);
    const train::TrainData splits = data.splits();
    const train::TrainHistory h = train::train(m, splits, c.train);
    io::write_checkpoint(c.out_dir / "model.gzck", io::make_checkpoint(m, c.train, h.epochs.size(), c.train.seed));
    io::write_text_atomic(c.out_dir / "history.csv", h.to_csv());

    train::TrainData eval_splits = splits;
    if (c.train.mode == train::Mode::point_only) eval_splits.direction_test = {};
    if (c.train.mode == train::Mode::direction_only) eval_splits.point_test = {};
    const eval::EvalReport r = full_report(m, eval_splits);
    write_report(c, r, train::mode_name(c.train.mode), c.train.seed);
    finish(c, {{"command", "train"},
               {"mode", train::mode_name(c.train.mode)},
               {"epochs_run", h.epochs.size()},
               {"stopped_early", h.stopped_early},
               {"initial_loss", h.initial_loss},
               {"final_loss", h.epochs.back().total},
               {"report", report_json(r)},
               {"outputs", {"model.gzck", "history.csv", "report.csv", "report.txt", "config.txt"}}});
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string direction;
    std::string point;
    std::string out;
    ConfigFlags cfg;
};

int cmd_eval(const EvalArgs& a) {
    const config::RunConfig c = a.cfg.resolve(a.out);
    const io::Checkpoint ck = io::read_checkpoint(a.checkpoint);
    model::GazeModel m = io::load_model(ck);
    const Data data = load_data(a.direction, a.point);
    if (data.feature_dim() != m.config.input_dim) {
        throw ShapeMismatch("dataset feature_dim " + std::to_string(data.feature_dim()) + " does not match model input_dim " +
                            std::to_string(m.config.input_dim));
    }
    prepare(c);
    const eval::EvalReport r = full_report(m, data.splits());
    write_report(c, r, "eval", ck.seed);
    finish(c, {{"command", "eval"},
               {"checkpoint", a.checkpoint},
               {"report", report_json(r)},
               {"outputs", {"report.csv", "report.txt", "config.txt"}}});
    return 0;
}

// ---- ablate ------------------------------------------------------------------------

struct AblateArgs {
    std::string suite;
    std::size_t seeds = 5;
    std::uint64_t first_seed = 1;
    std::size_t n_direction = 2000;
    std::size_t n_point = 500;
    std::size_t threads = 0;
    std::string out;
    ConfigFlags cfg;
};

json row_json(const ablation::Row& r) {
    auto stat = [](const std::optional<ablation::Stat>& s) {
        return s ? json{{"mean", s->mean}, {"std", s->stddev}} : json(nullptr);
    };
    return {{"E_p_cm", stat(r.E_p)}, {"E_d_left_deg", stat(r.E_d_left)}, {"E_d_right_deg", stat(r.E_d_right)},
            {"seeds", r.seeds}};
}

int cmd_ablate(const AblateArgs& a) {
    const config::RunConfig c = a.cfg.resolve(a.out);
    const ablation::Suite suite = ablation::parse_suite(a.suite);
    ablation::AblationConfig ac;
    ac.scene = c.scene;
    ac.model = c.model;
    ac.train = c.train;
    ac.n_direction = a.n_direction;
    ac.n_point = a.n_point;
    ac.threads = a.threads;
    ac.seeds.clear();
    for (std::size_t i = 0; i < a.seeds; ++i) ac.seeds.push_back(a.first_seed + i);
    prepare(c);
    const ablation::AblationResult r = ablation::run_ablation(suite, ac);
    io::write_text_atomic(c.out_dir / "runs.csv", r.runs_csv());
    io::write_text_atomic(c.out_dir / "summary.csv", r.summary_csv());
    io::write_text_atomic(c.out_dir / "summary.txt", r.summary_text());
    std::cout << r.summary_text();
    json rows = json::object();
    for (const auto& row : r.rows) rows[row.variant] = row_json(row);
    finish(c, {{"command", "ablate"},
               {"suite", a.suite},
               {"seeds", ac.seeds},
               {"n_direction", a.n_direction},
               {"n_point", a.n_point},
               {"rows", rows},
               {"outputs", {"runs.csv", "summary.csv", "summary.txt", "config.txt"}}});
    return 0;
}

// ---- check -------------------------------------------------------------------------

struct CheckArgs {
    std::string suite;
    std::uint64_t seed = 1;
    std::size_t trials = 50;
    std::string out;
};

int cmd_check(const CheckArgs& a) {
    verify::VerifyOptions o;
    o.seed = a.seed;
    o.grad_trials = a.trials;
    const verify::SuiteReport r = verify::run(verify::parse_suite(a.suite), o);
    std::cout << r.text();
    if (!a.out.empty()) {
        config::RunConfig c = config::from_preset("toy");
        c.out_dir = a.out;
        c.resolve();
        prepare(c);
        io::write_text_atomic(c.out_dir / "check.txt", r.text());
        json checks = json::array();
        for (const auto& ch : r.checks) {
            checks.push_back({{"name", ch.name}, {"value", ch.value}, {"bound", ch.bound}, {"passed", ch.passed()}});
        }
        json summary = {{"command", "check"},
                        {"suite", a.suite},
                        {"passed", r.passed()},
                        {"checks", checks},
                        {"outputs", {"check.txt"}}};
        summary["status"] = r.passed() ? "ok" : "failed";
        io::write_text_atomic(c.out_dir / "summary.json", summary.dump(2) + "\n");
    }
    return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiview multitask gaze estimation lab"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic dataset (.gzds)");
    g->add_option("--kind", gen.kind, "direction or point")->required()->check(CLI::IsMember({"direction", "point"}));
    g->add_option("--n", gen.n, "Number of samples")->required()->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "Sampling seed")->required();
    g->add_option("--out", gen.out, "Output directory")->required();
    gen.cfg.attach(g);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train a model on .gzds datasets");
    t->add_option("--direction", tr.direction, "Direction dataset")->check(CLI::ExistingFile);
    t->add_option("--point", tr.point, "Point dataset")->check(CLI::ExistingFile);
    t->add_option("--out", tr.out, "Output directory")->required();
    tr.cfg.attach(t);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on the test splits of .gzds datasets");
    e->add_option("--checkpoint", ev.checkpoint, "Checkpoint (.gzck)")->required()->check(CLI::ExistingFile);
    e->add_option("--direction", ev.direction, "Direction dataset")->check(CLI::ExistingFile);
    e->add_option("--point", ev.point, "Point dataset")->check(CLI::ExistingFile);
    e->add_option("--out", ev.out, "Output directory")->required();
    ev.cfg.attach(e);

    AblateArgs ab;
    auto* a = app.add_subcommand("ablate", "Run a comparison suite over several seeds");
    a->add_option("suite", ab.suite, "task, view or glasses")->required()->check(CLI::IsMember({"task", "view", "glasses"}));
    a->add_option("--seeds", ab.seeds, "Number of seeds")->capture_default_str()->check(CLI::PositiveNumber);
    a->add_option("--first-seed", ab.first_seed, "First seed; the rest follow consecutively")->capture_default_str();
    a->add_option("--n-direction", ab.n_direction, "Direction samples per run")->capture_default_str();
    a->add_option("--n-point", ab.n_point, "Point samples per run")->capture_default_str();
    a->add_option("--threads", ab.threads, "Parallel runs (default: GAZE_LAB_THREADS or all cores)");
    a->add_option("--out", ab.out, "Output directory")->required();
    ab.cfg.attach(a);

    CheckArgs ck;
    auto* c = app.add_subcommand("check", "Run a verification suite; exits nonzero on failure");
    c->add_option("suite", ck.suite, "grad, geometry or invariants")
        ->required()
        ->check(CLI::IsMember({"grad", "geometry", "invariants"}));
    c->add_option("--seed", ck.seed, "Seed")->capture_default_str();
    c->add_option("--trials", ck.trials, "Random configurations for the grad suite")->capture_default_str();
    c->add_option("--out", ck.out, "Optional output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err);
    }

    try {
        if (*g) return cmd_gen(gen);
        if (*t) return cmd_train(tr);
        if (*e) return cmd_eval(ev);
        if (*a) return cmd_ablate(ab);
        if (*c) return cmd_check(ck);
    } catch (const Error& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 2;
}
