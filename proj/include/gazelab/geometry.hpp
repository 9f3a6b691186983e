#pragma once

// Reference geometry for the eye/screen model: positions in centimeters,
// directions as unit vectors. Every function here is pure and thread-safe.

#include <array>
#include <cmath>

namespace gazelab::geometry {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
bool is_finite(Vec3 a);

/// Unit-length copy of `a`; throws DegenerateDirection for a zero or
/// non-finite vector.
Vec3 normalized(Vec3 a);

/// A gaze direction in Cartesian form. Construction normalizes, so the
/// unit-norm invariant always holds.
class CartesianGaze {
public:
    explicit CartesianGaze(Vec3 direction);
    Vec3 dir() const { return dir_; }

private:
    Vec3 dir_;
};

/// Spherical gaze: azimuth theta = atan2(x, z), elevation phi = asin(y / r).
/// At the poles theta is taken as atan2(0, 0) = 0.
struct SphericalGaze {
    double theta = 0.0;
    double phi = 0.0;
    double r = 1.0;
    friend bool operator==(const SphericalGaze&, const SphericalGaze&) = default;
};

struct EyePair {
    Vec3 left;
    Vec3 right;

    /// Interocular vector, left eye to right eye.
    Vec3 v() const { return right - left; }
    friend bool operator==(const EyePair&, const EyePair&) = default;
};

struct ScreenPlane {
    Vec3 origin{};
    Vec3 u_axis{1.0, 0.0, 0.0};
    Vec3 v_axis{0.0, 1.0, 0.0};
    double width = 50.0;
    double height = 30.0;

    Vec3 normal() const { return cross(u_axis, v_axis); }
    /// 3-D position of in-plane coordinates (u, v).
    Vec3 at(double u, double v) const { return origin + u * u_axis + v * v_axis; }
    /// True when (u, v) lies inside the centered width x height extent.
    bool contains(double u, double v, double slack = 1e-9) const;
    friend bool operator==(const ScreenPlane&, const ScreenPlane&) = default;
};

/// Throws InvalidConfig unless the axes are unit-norm and orthogonal within 1e-9.
void validate(const ScreenPlane& plane);

struct PlanePoint {
    double u = 0.0;
    double v = 0.0;
    friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

SphericalGaze cart_to_sph(Vec3 g);
Vec3 sph_to_cart(const SphericalGaze& s);

/// Squared scalar triple product ((g_l x g_r) . v)^2. Zero iff the three
/// vectors are coplanar.
double coplanarity_residual(const CartesianGaze& g_l, const CartesianGaze& g_r, Vec3 v);

/// Where the ray origin + t * dir (t > 0) meets the plane, in the plane's
/// (u_axis, v_axis) frame relative to plane.origin.
PlanePoint ray_plane_intersect(Vec3 origin, const CartesianGaze& dir, const ScreenPlane& plane);

/// Angle between two nonzero vectors in degrees, in [0, 180].
double angular_error_deg(Vec3 g, Vec3 g_hat);

/// The subject-facing frame: a half-turn about the vertical axis, so gaze
/// toward the screen has positive z and azimuths stay far from +-pi.
/// Proper rotation, so triple products are preserved.
constexpr Vec3 to_subject_frame(Vec3 world) { return {-world.x, world.y, -world.z}; }
constexpr Vec3 from_subject_frame(Vec3 subject) { return {-subject.x, subject.y, -subject.z}; }

}  // namespace gazelab::geometry
