// Acceptance harness. Prints one PASS/FAIL line per criterion with the
// measured values next to their bounds; exits nonzero if any selected
// criterion fails.
//
//   gaze_acceptance            all criteria
//   gaze_acceptance 4 6        only criteria 4 and 6

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gazelab/ablation.hpp"
#include "gazelab/eval.hpp"
#include "gazelab/io.hpp"
#include "gazelab/train.hpp"
#include "gazelab/verify.hpp"

using namespace gazelab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void print_checks(const verify::SuiteReport& r) {
    for (const auto& c : r.checks) {
        std::printf("    %s %s = %.3g (%s %.3g) %s\n", c.passed() ? "ok  " : "FAIL", c.name.c_str(), c.value,
                    c.at_least ? ">=" : "<=", c.bound, c.detail.c_str());
    }
}

// 1. Every loss term and the joint loss against central differences, < 1e-4
//    over >= 50 random configurations, in under 30 s.
Outcome gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    verify::VerifyOptions o;
    o.grad_trials = 50;
    const verify::SuiteReport r = verify::run(verify::Suite::grad, o);
    const double secs = seconds_since(t0);
    print_checks(r);
    double worst = 0.0;
    for (const auto& c : r.checks) {
        if (!c.at_least) worst = std::max(worst, c.value);
    }
    return {r.passed() && secs < 30.0,
            fmt("max rel error %.3g < 1e-04 over %zu trials; %.2f s < 30 s", worst, o.grad_trials, secs)};
}

// 2. Spherical round trip, synthetic coplanarity and ray reprojection.
Outcome geometry_exactness() {
    verify::VerifyOptions o;
    o.geometry_samples = 1000;
    const verify::SuiteReport r = verify::run(verify::Suite::geometry, o);
    print_checks(r);
    std::string d;
    for (const auto& c : r.checks) d += fmt("%s %.2g; ", c.name.c_str(), c.value);
    return {r.passed(), d};
}

// 3. Model metrics against per-sample oracles, plus crafted exact cases.
Outcome metric_oracles() {
    const synth::SceneConfig scene;
    const auto pd = synth::make_point_dataset(500, scene, 31);
    const auto dd = synth::make_direction_dataset(500, scene, 31);
    model::GazeModel m = model::init(model::ModelConfig{}, 31);

    const auto pts = eval::predict_points(m, pd.samples);
    double ep = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ep += std::sqrt(std::pow(pts[i].u - pd.samples[i].truth_p.u, 2) + std::pow(pts[i].v - pd.samples[i].truth_p.v, 2));
    }
    ep /= static_cast<double>(pts.size());
    const double dp = std::abs(eval::eval_point(m, pd.samples) - ep);

    const auto dirs = eval::predict_directions(m, dd.samples);
    double el = 0.0, er = 0.0;
    auto angle = [](geometry::Vec3 a, geometry::Vec3 b) {
        const double c = geometry::dot(a, b) / (geometry::norm(a) * geometry::norm(b));
        return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    };
    for (std::size_t i = 0; i < dirs.size(); ++i) {
        el += angle(geometry::sph_to_cart(dd.samples[i].truth_l), geometry::sph_to_cart({dirs[i][0], dirs[i][1], 1.0}));
        er += angle(geometry::sph_to_cart(dd.samples[i].truth_r), geometry::sph_to_cart({dirs[i][2], dirs[i][3], 1.0}));
    }
    const auto e = eval::eval_direction(m, dd.samples);
    const double dd_err = std::max(std::abs(e.left - el / 500.0), std::abs(e.right - er / 500.0));

    const std::vector<geometry::PlanePoint> origin{{0, 0}}, off{{3, 4}};
    const double crafted_p = eval::mean_point_error(origin, off);
    const std::vector<geometry::Vec3> x{{1, 0, 0}}, y{{0, 1, 0}};
    const double crafted_d = eval::mean_angular_error(x, y);
    const bool pass = dp <= 1e-9 && dd_err <= 1e-9 && crafted_p == 5.0 && crafted_d == 90.0;
    return {pass, fmt("|E_p - oracle| %.2g <= 1e-9; |E_d - oracle| %.2g <= 1e-9; 3-4-5 -> %.17g cm; "
                      "orthogonal -> %.17g deg",
                      dp, dd_err, crafted_p, crafted_d)};
}

double mean_of(const ablation::AblationResult& r, const std::string& row, auto field) {
    const auto& s = r.row(row).*field;
    return s ? s->mean : NAN;
}

// 4. Multitask vs single-task on the default config, 5 seeds, under 2 min.
Outcome task_suite() {
    const auto t0 = std::chrono::steady_clock::now();
    const ablation::AblationConfig cfg;
    const auto r = ablation::run_ablation(ablation::Suite::task, cfg);
    const double secs = seconds_since(t0);
    std::printf("%s", r.summary_text().c_str());
    using R = ablation::Row;
    const double ep_multi = mean_of(r, "multitask", &R::E_p);
    const double ep_point = mean_of(r, "point_only", &R::E_p);
    const double ed_multi = 0.5 * (mean_of(r, "multitask", &R::E_d_left) + mean_of(r, "multitask", &R::E_d_right));
    const double ed_dir =
        0.5 * (mean_of(r, "direction_only", &R::E_d_left) + mean_of(r, "direction_only", &R::E_d_right));
    const double edl_gap = mean_of(r, "multitask", &R::E_d_left) - mean_of(r, "direction_only", &R::E_d_left);
    const double edr_gap = mean_of(r, "multitask", &R::E_d_right) - mean_of(r, "direction_only", &R::E_d_right);
    const bool pass = ep_multi <= ep_point && edl_gap <= 0.1 && edr_gap <= 0.1 && secs < 120.0;
    return {pass, fmt("E_p multitask %.4f <= point_only %.4f cm; E_d multitask - direction_only: left %+.4f, "
                      "right %+.4f <= 0.1 deg (means %.4f vs %.4f); %.1f s < 120 s",
                      ep_multi, ep_point, edl_gap, edr_gap, ed_multi, ed_dir, secs)};
}

// 5. Multiview vs each single view.
Outcome view_suite() {
    const auto r = ablation::run_ablation(ablation::Suite::view, ablation::AblationConfig{});
    std::printf("%s", r.summary_text().c_str());
    using R = ablation::Row;
    const double l = mean_of(r, "L", &R::E_p), mm = mean_of(r, "M", &R::E_p), rr = mean_of(r, "R", &R::E_p);
    const double multi = mean_of(r, "multi", &R::E_p);
    return {multi <= std::min({l, mm, rr}),
            fmt("E_p multi %.4f <= min(L %.4f, M %.4f, R %.4f) cm", multi, l, mm, rr)};
}

// 6. Glasses subset is harder, and multiview helps at least as much there.
Outcome glasses_suite() {
    const auto r = ablation::run_ablation(ablation::Suite::glasses, ablation::AblationConfig{});
    std::printf("%s", r.summary_text().c_str());
    using R = ablation::Row;
    bool harder = true;
    std::string per_variant;
    double best_single_g = INFINITY, best_single_ng = INFINITY;
    for (const std::string v : {"L", "M", "R", "multi"}) {
        const double g = mean_of(r, v + "/glasses", &R::E_p);
        const double ng = mean_of(r, v + "/no_glasses", &R::E_p);
        harder = harder && g > ng;
        per_variant += fmt("%s %.4f>%.4f ", v.c_str(), g, ng);
        if (v != "multi") {
            best_single_g = std::min(best_single_g, g);
            best_single_ng = std::min(best_single_ng, ng);
        }
    }
    const double gain_g = best_single_g - mean_of(r, "multi/glasses", &R::E_p);
    const double gain_ng = best_single_ng - mean_of(r, "multi/no_glasses", &R::E_p);
    const bool larger = gain_g >= gain_ng;
    return {harder && larger,
            fmt("(a) glasses > no_glasses E_p: %s[%s]; (b) multiview gain over best single view: glasses %.4f "
                ">= no_glasses %.4f cm [%s]",
                per_variant.c_str(), harder ? "ok" : "FAIL", gain_g, gain_ng, larger ? "ok" : "FAIL")};
}

// 7. Coplanar term lowers the held-out coplanarity residual (5 seeds).
Outcome coplanar_effect() {
    // lambda1 = 1e-6 * scale, scale 1e5.
    const double lambda1 = 1e-6 * 1e5;
    double on = 0.0, off = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        synth::SceneConfig scene;
        const auto d = synth::make_direction_dataset(2000, scene, seed);
        const auto p = synth::make_point_dataset(500, scene, seed);
        synth::SceneConfig clean = scene;
        clean.noise_sigma = 0.0;
        const auto held_out = synth::make_direction_dataset(500, clean, seed + 100);
        for (const double l : {lambda1, 0.0}) {
            model::GazeModel m = model::init(model::ModelConfig{}, seed);
            train::TrainConfig tc;
            tc.seed = seed;
            tc.eval_each_epoch = false;
            tc.weights.lambda1 = l;
            train::train(m, train::TrainData::from(d, p), tc);
            const auto pred = eval::predict_directions(m, held_out.samples);
            double res = 0.0;
            for (std::size_t i = 0; i < pred.size(); ++i) {
                const geometry::CartesianGaze gl(geometry::sph_to_cart({pred[i][0], pred[i][1], 1.0}));
                const geometry::CartesianGaze gr(geometry::sph_to_cart({pred[i][2], pred[i][3], 1.0}));
                res += geometry::coplanarity_residual(gl, gr, held_out.samples[i].v);
            }
            res /= static_cast<double>(pred.size());
            std::printf("    seed %llu lambda1 %g residual %.5g\n", static_cast<unsigned long long>(seed), l, res);
            (l > 0 ? on : off) += res / 5.0;
        }
    }
    return {on < off, fmt("mean residual lambda1=%g: %.5g < lambda1=0: %.5g", lambda1, on, off)};
}

// 8. Same seeds and config give identical dataset, checkpoint and report bytes.
Outcome reproducibility() {
    auto once = [] {
        const synth::SceneConfig scene;
        const auto d = synth::make_direction_dataset(2000, scene, 8);
        const auto p = synth::make_point_dataset(500, scene, 8);
        model::GazeModel m = model::init(model::ModelConfig{}, 8);
        train::TrainConfig tc;
        tc.seed = 8;
        tc.epochs = 10;
        train::train(m, train::TrainData::from(d, p), tc);
        const auto rep = eval::report(m, d.test(), p.test(), {.glasses = false, .views = true});
        return std::vector<std::string>{io::serialize(d), io::serialize(p), io::serialize(io::make_checkpoint(m, tc, 10, 8)),
                                        eval::report_csv(rep, "multitask", 8)};
    };
    const auto a = once(), b = once();
    const char* names[] = {"direction dataset", "point dataset", "checkpoint", "report"};
    std::string d;
    bool pass = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool same = a[i] == b[i];
        pass = pass && same;
        d += fmt("%s %s (%zu bytes); ", names[i], same ? "identical" : "DIFFERENT", a[i].size());
    }
    return {pass, d};
}

// 9. Paper preset: every step carries 128 direction and 32 point samples.
Outcome batch_ratio() {
    const train::TrainConfig cfg = train::paper_preset();
    synth::Rng rng(9);
    std::size_t steps = 0, bad = 0;
    for (int epoch = 0; epoch < 3; ++epoch) {
        for (const auto& s : train::mixed_batch_iterator(1600, 400, cfg, rng)) {
            ++steps;
            if (s.direction.size() != 128 || s.point.size() != 32 || s.direction.size() != 4 * s.point.size()) ++bad;
        }
    }
    return {bad == 0 && steps > 0, fmt("%zu steps, %zu not 128:32 (4:1)", steps, bad)};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> selected;
    app.add_option("criteria", selected, "Criterion numbers (default: all)")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);
    if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9};

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"gradient correctness", gradients},     {"geometry exactness", geometry_exactness},
        {"metric oracles", metric_oracles},      {"multitask vs single-task", task_suite},
        {"multiview vs single-view", view_suite}, {"glasses effect", glasses_suite},
        {"coplanar term effect", coplanar_effect}, {"reproducibility", reproducibility},
        {"4:1 batch ratio", batch_ratio},
    };
    int failures = 0;
    for (int n : selected) {
        const auto& [name, fn] = criteria[n - 1];
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("%s C%d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
