#include "gazelab/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "gazelab/errors.hpp"

namespace gazelab::eval {

namespace {

constexpr std::size_t kChunk = 256;

std::vector<std::size_t> iota(std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    return idx;
}

template <class Sample, class Fn>
void for_chunks(std::span<const Sample> samples, Fn fn) {
    for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
        fn(iota(begin, std::min(samples.size(), begin + kChunk)));
    }
}

}  // namespace

double mean_point_error(std::span<const geometry::PlanePoint> truth, std::span<const geometry::PlanePoint> pred) {
    if (truth.empty()) throw EmptyDataset("point error over zero samples");
    if (truth.size() != pred.size()) throw ShapeMismatch("point error: truth and prediction counts differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) sum += std::hypot(truth[i].u - pred[i].u, truth[i].v - pred[i].v);
    return sum / static_cast<double>(truth.size());
}

double mean_angular_error(std::span<const geometry::Vec3> truth, std::span<const geometry::Vec3> pred) {
    if (truth.empty()) throw EmptyDataset("angular error over zero samples");
    if (truth.size() != pred.size()) throw ShapeMismatch("angular error: truth and prediction counts differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) sum += geometry::angular_error_deg(truth[i], pred[i]);
    return sum / static_cast<double>(truth.size());
}

std::vector<geometry::PlanePoint> predict_points(model::GazeModel& model, std::span<const synth::PointSample> samples,
                                                 ViewSelection views) {
    std::vector<geometry::PlanePoint> out;
    out.reserve(samples.size());
    for_chunks(samples, [&](const std::vector<std::size_t>& idx) {
        const PointBatch batch = make_point_batch(samples, idx, views);
        Tape tape;
        const auto pred = model::forward_point(tape, model, tape.constant(batch.views[0]),
                                               tape.constant(batch.views[1]), tape.constant(batch.views[2]));
        const Tensor& p = pred.point.value();
        for (std::size_t r = 0; r < idx.size(); ++r) out.push_back({p.at(r, 0), p.at(r, 1)});
    });
    return out;
}

std::vector<std::array<double, 4>> predict_directions(model::GazeModel& model,
                                                      std::span<const synth::DirectionSample> samples) {
    std::vector<std::array<double, 4>> out;
    out.reserve(samples.size());
    for_chunks(samples, [&](const std::vector<std::size_t>& idx) {
        const DirectionBatch batch = make_direction_batch(samples, idx);
        Tape tape;
        const Var pred = model::forward_direction(tape, model, tape.constant(batch.left), tape.constant(batch.right));
        const Tensor& a = pred.value();
        for (std::size_t r = 0; r < idx.size(); ++r) out.push_back({a.at(r, 0), a.at(r, 1), a.at(r, 2), a.at(r, 3)});
    });
    return out;
}

double eval_point(model::GazeModel& model, std::span<const synth::PointSample> samples, ViewSelection views) {
    if (samples.empty()) throw EmptyDataset("eval_point needs at least one sample");
    const auto pred = predict_points(model, samples, views);
    std::vector<geometry::PlanePoint> truth;
    truth.reserve(samples.size());
    for (const auto& s : samples) truth.push_back(s.truth_p);
    return mean_point_error(truth, pred);
}

DirectionError eval_direction(model::GazeModel& model, std::span<const synth::DirectionSample> samples) {
    if (samples.empty()) throw EmptyDataset("eval_direction needs at least one sample");
    const auto pred = predict_directions(model, samples);
    std::vector<geometry::Vec3> tl, tr, pl, pr;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        tl.push_back(geometry::sph_to_cart({samples[i].truth_l.theta, samples[i].truth_l.phi, 1.0}));
        tr.push_back(geometry::sph_to_cart({samples[i].truth_r.theta, samples[i].truth_r.phi, 1.0}));
        pl.push_back(geometry::sph_to_cart({pred[i][0], pred[i][1], 1.0}));
        pr.push_back(geometry::sph_to_cart({pred[i][2], pred[i][3], 1.0}));
    }
    return {mean_angular_error(tl, pl), mean_angular_error(tr, pr)};
}

std::optional<double> EvalReport::E_d_mean() const {
    if (!E_d_left || !E_d_right) return std::nullopt;
    return 0.5 * (*E_d_left + *E_d_right);
}

EvalReport report(model::GazeModel& model, std::span<const synth::DirectionSample> direction_test,
                  std::span<const synth::PointSample> point_test, const ReportOptions& options) {
    if (direction_test.empty() && point_test.empty()) throw EmptyDataset("report needs a nonempty test split");
    EvalReport r;
    r.n_direction = direction_test.size();
    r.n_point = point_test.size();
    if (!direction_test.empty()) {
        const DirectionError e = eval_direction(model, direction_test);
        r.E_d_left = e.left;
        r.E_d_right = e.right;
    }
    if (point_test.empty()) return r;
    r.E_p = eval_point(model, point_test);

    if (options.glasses) {
        std::vector<synth::PointSample> with, without;
        for (const auto& s : point_test) (s.wears_glasses ? with : without).push_back(s);
        for (auto [key, subset] : {std::pair{"glasses", &with}, std::pair{"no_glasses", &without}}) {
            if (subset->empty()) continue;
            EvalReport sub;
            sub.n_point = subset->size();
            sub.E_p = eval_point(model, *subset);
            r.breakdowns.emplace(key, sub);
        }
    }
    if (options.views) {
        for (ViewSelection v : {ViewSelection::L, ViewSelection::M, ViewSelection::R, ViewSelection::all}) {
            EvalReport sub;
            sub.n_point = point_test.size();
            sub.E_p = eval_point(model, point_test, v);
            r.breakdowns.emplace(selection_name(v), sub);
        }
    }
    return r;
}

std::string format_metric(const std::optional<double>& value, int precision) {
    if (!value) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, *value);
    return buf;
}

std::string report_csv(const EvalReport& report, const std::string& variant, std::uint64_t seed, bool header) {
    std::ostringstream os;
    if (header) os << "variant,E_p_cm,E_d_left_deg,E_d_right_deg,n,seed\n";
    auto row = [&](const std::string& name, const EvalReport& r) {
        os << name << ',' << format_metric(r.E_p) << ',' << format_metric(r.E_d_left) << ','
           << format_metric(r.E_d_right) << ',' << r.n() << ',' << seed << '\n';
    };
    row(variant, report);
    for (const auto& [key, sub] : report.breakdowns) row(variant + "/" + key, sub);
    return os.str();
}

std::string report_text(const EvalReport& report, const std::string& variant) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-24s %10s %12s %12s %12s %8s\n", "variant", "E_p [cm]", "E_d_l [deg]",
                  "E_d_r [deg]", "E_d_mean*", "n");
    os << line;
    auto row = [&](const std::string& name, const EvalReport& r) {
        std::snprintf(line, sizeof line, "%-24s %10s %12s %12s %12s %8zu\n", name.c_str(),
                      format_metric(r.E_p, 4).c_str(), format_metric(r.E_d_left, 4).c_str(),
                      format_metric(r.E_d_right, 4).c_str(), format_metric(r.E_d_mean(), 4).c_str(), r.n());
        os << line;
    };
    row(variant, report);
    for (const auto& [key, sub] : report.breakdowns) row("  " + key, sub);
    os << "* derived: mean of the left and right eye errors\n";
    return os.str();
}

}  // namespace gazelab::eval
