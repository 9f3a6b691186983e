#include "gazelab/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

#include "gazelab/errors.hpp"

namespace gazelab::geometry {

namespace {

constexpr double kParallelTolerance = 1e-12;
constexpr double kAxisTolerance = 1e-9;

std::string describe(Vec3 a) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << a.x << ", " << a.y << ", " << a.z << ")";
    return os.str();
}

}  // namespace

bool is_finite(Vec3 a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

Vec3 normalized(Vec3 a) {
    const double n = norm(a);
    if (!is_finite(a) || n == 0.0 || !std::isfinite(n)) {
        throw DegenerateDirection("cannot normalize " + describe(a));
    }
    return (1.0 / n) * a;
}

CartesianGaze::CartesianGaze(Vec3 direction) : dir_(normalized(direction)) {}

bool ScreenPlane::contains(double u, double v, double slack) const {
    return std::abs(u) <= 0.5 * width + slack && std::abs(v) <= 0.5 * height + slack;
}

void validate(const ScreenPlane& plane) {
    if (std::abs(norm(plane.u_axis) - 1.0) > kAxisTolerance ||
        std::abs(norm(plane.v_axis) - 1.0) > kAxisTolerance) {
        throw InvalidConfig("screen axes must be unit length");
    }
    if (std::abs(dot(plane.u_axis, plane.v_axis)) > kAxisTolerance) {
        throw InvalidConfig("screen axes must be orthogonal");
    }
    if (!(plane.width > 0.0) || !(plane.height > 0.0)) {
        throw InvalidConfig("screen extent must be positive");
    }
}

SphericalGaze cart_to_sph(Vec3 g) {
    const double r = norm(g);
    if (!is_finite(g) || r == 0.0) {
        throw DegenerateDirection("zero or non-finite gaze vector " + describe(g));
    }
    // asin argument can leave [-1, 1] by an ulp for vectors along y.
    const double s = std::clamp(g.y / r, -1.0, 1.0);
    return {std::atan2(g.x, g.z), std::asin(s), r};
}

Vec3 sph_to_cart(const SphericalGaze& s) {
    const double c = std::cos(s.phi);
    return {s.r * c * std::sin(s.theta), s.r * std::sin(s.phi), s.r * c * std::cos(s.theta)};
}

double coplanarity_residual(const CartesianGaze& g_l, const CartesianGaze& g_r, Vec3 v) {
    const double triple = dot(cross(g_l.dir(), g_r.dir()), v);
    return triple * triple;
}

PlanePoint ray_plane_intersect(Vec3 origin, const CartesianGaze& dir, const ScreenPlane& plane) {
    const Vec3 n = plane.normal();
    const double denom = dot(dir.dir(), n);
    if (std::abs(denom) <= kParallelTolerance) {
        throw ParallelRay("ray " + describe(dir.dir()) + " is parallel to the screen");
    }
    const double t = dot(plane.origin - origin, n) / denom;
    if (!(t > 0.0)) {
        throw BehindOrigin("screen lies behind the ray origin (t = " + std::to_string(t) + ")");
    }
    const Vec3 hit = origin + t * dir.dir();
    const Vec3 rel = hit - plane.origin;
    return {dot(rel, plane.u_axis), dot(rel, plane.v_axis)};
}

double angular_error_deg(Vec3 g, Vec3 g_hat) {
    const double ng = norm(g);
    const double nh = norm(g_hat);
    if (ng == 0.0 || nh == 0.0 || !is_finite(g) || !is_finite(g_hat)) {
        throw DegenerateDirection("angular error needs two nonzero vectors");
    }
    const double c = std::clamp(dot(g, g_hat) / (ng * nh), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace gazelab::geometry
