#include "gazelab/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "gazelab/batch.hpp"
#include "gazelab/errors.hpp"
#include "gazelab/eval.hpp"
#include "gazelab/gradcheck.hpp"
#include "gazelab/io.hpp"
#include "gazelab/kernels.hpp"
#include "gazelab/losses.hpp"
#include "gazelab/model.hpp"
#include "gazelab/synth.hpp"
#include "gazelab/train.hpp"

namespace gazelab::verify {

const char* suite_name(Suite s) {
    switch (s) {
        case Suite::grad: return "grad";
        case Suite::geometry: return "geometry";
        case Suite::invariants: return "invariants";
    }
    return "?";
}

Suite parse_suite(const std::string& name) {
    if (name == "grad") return Suite::grad;
    if (name == "geometry") return Suite::geometry;
    if (name == "invariants") return Suite::invariants;
    throw InvalidConfig("unknown check suite '" + name + "' (expected grad, geometry or invariants)");
}

bool SuiteReport::passed() const {
    for (const Check& c : checks) {
        if (!c.passed()) return false;
    }
    return true;
}

std::string SuiteReport::text() const {
    std::string out;
    char line[512];
    for (const Check& c : checks) {
        std::snprintf(line, sizeof line, "%s %-40s %.6g %s %.6g%s%s\n", c.passed() ? "PASS" : "FAIL", c.name.c_str(),
                      c.value, c.at_least ? ">=" : "<=", c.bound, c.detail.empty() ? "" : "  ", c.detail.c_str());
        out += line;
    }
    std::snprintf(line, sizeof line, "%s suite %s: %zu checks in %.2f s\n", passed() ? "PASS" : "FAIL", suite.c_str(),
                  checks.size(), seconds);
    return out + line;
}

namespace {

using Rng = std::mt19937_64;
using geometry::Vec3;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi) {
    Tensor t(std::move(shape));
    for (double& x : t.data()) x = uniform(rng, lo, hi);
    return t;
}

Vec3 random_direction(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        const Vec3 v{n(rng), n(rng), n(rng)};
        if (geometry::norm(v) > 1e-3) return v;
    }
}

// Running maximum of one gradient-check family.
struct GradTally {
    explicit GradTally(std::string n) : name(std::move(n)) {}

    std::string name;
    double worst = 0.0;
    std::size_t compared = 0;
    std::size_t skipped = 0;
    std::string where;

    void add(const GradCheckResult& r, std::size_t trial) {
        compared += r.compared;
        skipped += r.skipped;
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            where = "trial " + std::to_string(trial) + " " + r.worst;
        }
    }
    Check check() const {
        return {"grad." + name, worst, 1e-4, false,
                std::to_string(compared) + " compared, " + std::to_string(skipped) + " skipped; worst " + where};
    }
};

SuiteReport grad_suite(const VerifyOptions& o) {
    GradTally l1{"direction_loss_l1"}, l2{"coplanar_loss_l2"}, lp{"point_loss"}, wd{"weight_decay"},
        joint{"joint_loss"};
    for (std::size_t trial = 0; trial < o.grad_trials; ++trial) {
        std::seed_seq seq{o.seed, static_cast<std::uint64_t>(trial)};
        Rng rng(seq);
        const std::size_t B = pick(rng, 1, 5);

        Param pred_dir(random_tensor(rng, {B, 4}, -1.2, 1.2));
        const Tensor truth_dir = random_tensor(rng, {B, 4}, -1.2, 1.2);
        const Tensor v = random_tensor(rng, {B, 3}, -7.0, 7.0);
        Param* dir_params[] = {&pred_dir};
        l1.add(gradient_check(
                   [&](Tape& t) { return losses::direction_loss_l1(t.param(pred_dir), t.constant(truth_dir)); },
                   dir_params),
               trial);
        l2.add(gradient_check([&](Tape& t) { return losses::coplanar_loss_l2(t.param(pred_dir), t.constant(v)); },
                              dir_params),
               trial);

        Param pred_pt(random_tensor(rng, {B, 2}, -25.0, 25.0));
        const Tensor truth_pt = random_tensor(rng, {B, 2}, -25.0, 25.0);
        Param* pt_params[] = {&pred_pt};
        lp.add(gradient_check([&](Tape& t) { return losses::point_loss(t.param(pred_pt), t.constant(truth_pt)); },
                              pt_params),
               trial);

        Param w(random_tensor(rng, {pick(rng, 1, 4), pick(rng, 1, 4)}, -2.0, 2.0), true);
        Param b(random_tensor(rng, {pick(rng, 1, 4)}, -2.0, 2.0), false);
        Param* decay_params[] = {&w, &b};
        wd.add(gradient_check([&](Tape& t) { return losses::weight_decay_term(t, decay_params); }, decay_params),
               trial);

        model::ModelConfig mc;
        mc.input_dim = pick(rng, 2, 6);
        mc.trunk_hidden.assign(pick(rng, 0, 2), 0);
        for (auto& h : mc.trunk_hidden) h = pick(rng, 2, 6);
        mc.trunk_out = pick(rng, 2, 6);
        mc.head_hidden = pick(rng, 2, 5);
        mc.pool_kind = rng() % 2 ? model::PoolKind::max : model::PoolKind::mean;
        mc.deep_supervision = rng() % 2 == 1;
        model::GazeModel m = model::init(mc, rng());
        for (Param* p : m.params()) {
            for (double& x : p->value.data()) x += uniform(rng, -0.1, 0.1);  // nonzero biases too
        }
        losses::LossWeights lw{uniform(rng, 0.05, 2.0), uniform(rng, 1e-3, 1.0), uniform(rng, 1e-4, 0.1)};
        const std::size_t Bp = pick(rng, 1, 4);
        DirectionBatch db{random_tensor(rng, {B, mc.input_dim}, -1, 1), random_tensor(rng, {B, mc.input_dim}, -1, 1),
                          truth_dir, v};
        PointBatch pb{{random_tensor(rng, {Bp, mc.input_dim}, -1, 1), random_tensor(rng, {Bp, mc.input_dim}, -1, 1),
                       random_tensor(rng, {Bp, mc.input_dim}, -1, 1)},
                      random_tensor(rng, {Bp, 2}, -25.0, 25.0)};
        const std::optional<DirectionBatch> od = db;
        const std::optional<PointBatch> op = pb;
        const std::vector<Param*> params = m.params();
        joint.add(gradient_check(
                      [&](Tape& t) {
                          return train::step_loss(t, m, od, op, params, lw, mc.deep_supervision).total;
                      },
                      params),
                  trial);
    }
    SuiteReport r;
    for (const GradTally* g : {&l1, &l2, &lp, &wd, &joint}) r.checks.push_back(g->check());
    r.checks.push_back({"grad.trials", static_cast<double>(o.grad_trials), 50.0, true, "random seeds and shapes"});
    return r;
}

SuiteReport geometry_suite(const VerifyOptions& o) {
    std::seed_seq seq{o.seed, std::uint64_t{7}};
    Rng rng(seq);
    double round_trip = 0.0;
    for (std::size_t i = 0; i < o.geometry_samples; ++i) {
        const Vec3 g = uniform(rng, 0.1, 10.0) * geometry::normalized(random_direction(rng));
        const Vec3 back = geometry::sph_to_cart(geometry::cart_to_sph(g));
        round_trip = std::max(round_trip, geometry::norm(back - g) / geometry::norm(g));
    }

    synth::SceneConfig clean;
    clean.noise_sigma = 0.0;
    const synth::AppearanceMap map(clean);
    double coplanar = 0.0, reproject = 0.0, on_ray = 0.0, sample_coplanar = 0.0;
    for (std::size_t i = 0; i < o.geometry_samples; ++i) {
        synth::Rng srng = synth::sample_rng(o.seed, i, 99);
        const synth::SceneLatent lat = synth::gen_scene_sample(clean, srng);
        coplanar = std::max(coplanar, geometry::coplanarity_residual(lat.g_l, lat.g_r, lat.eyes.v()));
        for (const auto& [eye, g] : {std::pair{lat.eyes.left, lat.g_l}, std::pair{lat.eyes.right, lat.g_r}}) {
            const geometry::PlanePoint p = geometry::ray_plane_intersect(eye, g, clean.screen);
            reproject = std::max(reproject, std::hypot(p.u - lat.p.u, p.v - lat.p.v));
            // Distance from the intersection to the ray's supporting line.
            const Vec3 q = clean.screen.at(p.u, p.v) - eye;
            on_ray = std::max(on_ray, geometry::norm(geometry::cross(q, g.dir())));
        }
        const synth::DirectionSample s = synth::make_direction_sample(lat, clean, map, srng);
        sample_coplanar = std::max(
            sample_coplanar, geometry::coplanarity_residual(geometry::CartesianGaze(geometry::sph_to_cart(s.truth_l)),
                                                            geometry::CartesianGaze(geometry::sph_to_cart(s.truth_r)),
                                                            s.v));
    }
    SuiteReport r;
    const std::string n = std::to_string(o.geometry_samples);
    r.checks.push_back({"geometry.spherical_round_trip_rel", round_trip, 1e-9, false, n + " random directions"});
    r.checks.push_back({"geometry.latent_coplanarity", coplanar, 1e-12, false, n + " noiseless scenes"});
    r.checks.push_back({"geometry.sample_truth_coplanarity", sample_coplanar, 1e-12, false, "from stored angles and v"});
    r.checks.push_back({"geometry.intersection_vs_target_cm", reproject, 1e-9, false, "both eyes"});
    r.checks.push_back({"geometry.intersection_off_ray_cm", on_ray, 1e-9, false, "both eyes"});
    return r;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

SuiteReport invariants_suite(const VerifyOptions& o) {
    SuiteReport r;
    std::seed_seq seq{o.seed, std::uint64_t{11}};
    Rng rng(seq);

    {
        Tape t;
        const Var a = t.constant(random_tensor(rng, {7, 5}, -3, 3));
        const Var pooled = model::cross_view_pool(a, a, a, model::PoolKind::mean);
        r.checks.push_back({"model.mean_pool_of_identical_is_exact", max_abs_diff(pooled.value().data(), a.value().data()),
                            0.0, false, ""});
    }

    synth::SceneConfig scene;
    const auto d1 = synth::make_direction_dataset(100, scene, o.seed);
    const auto d2 = synth::make_direction_dataset(100, scene, o.seed);
    const auto p1 = synth::make_point_dataset(100, scene, o.seed);
    const auto p2 = synth::make_point_dataset(100, scene, o.seed);
    r.checks.push_back({"synth.datasets_reproducible",
                        (io::serialize(d1) == io::serialize(d2) && io::serialize(p1) == io::serialize(p2)) ? 1.0 : 0.0,
                        1.0, true, "byte comparison of serialized datasets"});
    r.checks.push_back({"synth.split_8_2", d1.train().size() == 80 && d1.test().size() == 20 ? 1.0 : 0.0, 1.0, true,
                        "n = 100"});

    model::GazeModel m1 = model::init({}, o.seed);
    model::GazeModel m2 = model::init({}, o.seed);
    double init_diff = 0.0;
    for (std::size_t i = 0; i < m1.params().size(); ++i) {
        init_diff = std::max(init_diff, max_abs_diff(m1.params()[i]->value.data(), m2.params()[i]->value.data()));
    }
    r.checks.push_back({"model.init_reproducible", init_diff, 0.0, false, ""});
    r.checks.push_back({"model.single_trunk", static_cast<double>(m1.trunk_params().size()),
                        static_cast<double>(2 * (m1.config.trunk_hidden.size() + 1)), false,
                        "trunk tensors (weight and bias per layer)"});

    {
        // The trunk maps a feature row identically whichever input slot it arrives in.
        const std::vector<std::size_t> idx{0, 1, 2};
        const DirectionBatch db = make_direction_batch(d1.samples, idx);
        Tape t;
        const Var a = model::apply_trunk(t, m1.trunk, t.constant(db.left));
        const PointBatch pb{{db.left, db.left, db.left}, Tensor({3, 2})};
        const auto out = model::forward_point(t, m1, t.constant(pb.views[0]), t.constant(pb.views[1]),
                                              t.constant(pb.views[2]));
        const Var b = model::apply_trunk(t, m1.trunk, t.constant(pb.views[2]));
        r.checks.push_back({"model.trunk_slot_invariant", max_abs_diff(a.value().data(), b.value().data()), 0.0, false,
                            ""});
        (void)out;
    }

    {
        const std::vector<geometry::PlanePoint> truth{{0.0, 0.0}}, pred{{2.0, 0.0}};
        const double metric = eval::mean_point_error(truth, pred);
        Tape t;
        const double loss = losses::point_loss(t.constant(Tensor::matrix(1, 2, {2.0, 0.0})),
                                               t.constant(Tensor::matrix(1, 2, {0.0, 0.0})))
                                .item();
        r.checks.push_back({"eval.metric_unsquared_vs_loss_squared", std::abs(metric - 2.0) + std::abs(loss - 4.0), 0.0,
                            false, "error 2 cm: metric 2, loss 4"});
    }

    {
        const train::TrainConfig paper = train::paper_preset();
        synth::Rng it_rng(o.seed);
        const auto steps = train::mixed_batch_iterator(1600, 400, paper, it_rng);
        double worst = 0.0;
        for (const auto& s : steps) {
            worst = std::max(worst, std::abs(static_cast<double>(s.direction.size()) -
                                             4.0 * static_cast<double>(s.point.size())));
        }
        r.checks.push_back({"train.paper_batch_ratio_4_to_1", worst, 0.0, false,
                            std::to_string(steps.size()) + " steps of 128:32"});
    }

    {
        const io::Checkpoint ck = io::make_checkpoint(m1, train::toy_preset(), 0, o.seed);
        const std::string a = io::serialize(ck);
        const std::string b = io::serialize(io::parse_checkpoint(a));
        r.checks.push_back({"io.checkpoint_load_save_identical", a == b ? 1.0 : 0.0, 1.0, true, ""});
    }

    {
        const kernels::KernelTable& s = kernels::scalar_table();
        const kernels::KernelTable& v = kernels::active();
        const std::size_t m = 13, k = 37, n = 29;
        const Tensor a = random_tensor(rng, {m, k}, -1, 1), b = random_tensor(rng, {k, n}, -1, 1);
        Tensor c1({m, n}), c2({m, n});
        s.gemm_nn(c1.ptr(), a.ptr(), b.ptr(), m, k, n);
        v.gemm_nn(c2.ptr(), a.ptr(), b.ptr(), m, k, n);
        r.checks.push_back({std::string("kernels.gemm_scalar_vs_") + v.name,
                            max_abs_diff(c1.data(), c2.data()), 0.0, false, "bit-exact"});
    }
    return r;
}

}  // namespace

SuiteReport run(Suite suite, const VerifyOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    SuiteReport r;
    switch (suite) {
        case Suite::grad: r = grad_suite(options); break;
        case Suite::geometry: r = geometry_suite(options); break;
        case Suite::invariants: r = invariants_suite(options); break;
    }
    r.suite = suite_name(suite);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace gazelab::verify
