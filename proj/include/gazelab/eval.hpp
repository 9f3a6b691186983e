#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gazelab/batch.hpp"
#include "gazelab/geometry.hpp"
#include "gazelab/model.hpp"

namespace gazelab::eval {

/// Mean Euclidean (not squared) distance in cm. Throws EmptyDataset.
double mean_point_error(std::span<const geometry::PlanePoint> truth,
                        std::span<const geometry::PlanePoint> pred);
/// Mean angle between paired nonzero vectors, in degrees.
double mean_angular_error(std::span<const geometry::Vec3> truth, std::span<const geometry::Vec3> pred);

std::vector<geometry::PlanePoint> predict_points(model::GazeModel& model,
                                                 std::span<const synth::PointSample> samples,
                                                 ViewSelection views = ViewSelection::all);
/// Rows of (theta_l, phi_l, theta_r, phi_r).
std::vector<std::array<double, 4>> predict_directions(model::GazeModel& model,
                                                      std::span<const synth::DirectionSample> samples);

/// E_p in cm.
double eval_point(model::GazeModel& model, std::span<const synth::PointSample> samples,
                  ViewSelection views = ViewSelection::all);

struct DirectionError {
    double left = 0.0;
    double right = 0.0;
};
/// E_d per eye in degrees; predictions go through sph_to_cart with r = 1.
DirectionError eval_direction(model::GazeModel& model, std::span<const synth::DirectionSample> samples);

struct EvalReport {
    std::optional<double> E_p;
    std::optional<double> E_d_left;
    std::optional<double> E_d_right;
    std::size_t n_point = 0;
    std::size_t n_direction = 0;
    std::map<std::string, EvalReport> breakdowns;

    /// Derived convenience value: (left + right) / 2.
    std::optional<double> E_d_mean() const;
    /// Point count when E_p is present, direction count otherwise.
    std::size_t n() const { return E_p ? n_point : n_direction; }
};

struct ReportOptions {
    /// Sub-reports "glasses" and "no_glasses" over the point split.
    bool glasses = false;
    /// Sub-reports "L", "M", "R" (single view in every slot) and "multi".
    bool views = false;
};

/// Either split may be empty, but not both.
EvalReport report(model::GazeModel& model, std::span<const synth::DirectionSample> direction_test,
                  std::span<const synth::PointSample> point_test, const ReportOptions& options = {});

/// Header "variant,E_p_cm,E_d_left_deg,E_d_right_deg,n,seed" then one row for
/// the report and one per breakdown ("<variant>/<key>"). Missing metrics are
/// written as NA. Doubles use 17 significant digits.
std::string report_csv(const EvalReport& report, const std::string& variant, std::uint64_t seed,
                       bool header = true);
/// Aligned, human-readable table of the same rows.
std::string report_text(const EvalReport& report, const std::string& variant);

std::string format_metric(const std::optional<double>& value, int precision = 17);

}  // namespace gazelab::eval
