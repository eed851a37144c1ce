#pragma once

// Rigid-body pose algebra shared by every module in the toolkit.
//
// Conventions:
//  * Pose (t, q) maps child-frame coordinates into the parent frame:
//    p_parent = q * p_child + t. compose(a, b) applies b first, then a.
//  * Quaternions are kept unit-norm and on the canonical hemisphere
//    (scalar part >= 0) so value equality is well defined.
//  * Euler angles are intrinsic Z-Y-X (yaw, pitch, roll). At |pitch| = pi/2
//    roll is fixed to 0 and the remaining freedom folds into yaw.
//  * Serialized quaternion component order is qx, qy, qz, qw.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <spelaeo/errors.hpp>

namespace spelaeo {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) {
        a += 2.0 * kPi;
    } else if (a > kPi) {
        a -= 2.0 * kPi;
    }
    return a;
}

// Unit-norm, scalar part >= 0. Rejects near-zero quaternions. Already-unit
// inputs pass through untouched so parse/serialize round trips stay exact.
inline Quat canonical(Quat q) {
    const double n = q.norm();
    if (n < 1e-12) {
        throw ValidationError("quaternion has near-zero norm");
    }
    if (std::abs(n - 1.0) > 1e-12) {
        q.coeffs() /= n;
    }
    if (q.w() < 0.0) {
        q.coeffs() = -q.coeffs();
    }
    return q;
}

struct Pose {
    Vec3 t = Vec3::Zero();
    Quat q = Quat::Identity();

    Pose() = default;
    Pose(const Vec3& translation, const Quat& rotation)
        : t(translation), q(canonical(rotation)) {}

    static Pose identity() { return {}; }

    static Pose from_translation(const Vec3& translation) {
        return {translation, Quat::Identity()};
    }

    // Serialized component order.
    static Pose from_xyzw(const Vec3& translation, double qx, double qy,
                          double qz, double qw) {
        return {translation, Quat(qw, qx, qy, qz)};
    }

    Vec3 transform_point(const Vec3& p) const { return q * p + t; }
    Vec3 rotate_vector(const Vec3& v) const { return q * v; }
};

inline Pose compose(const Pose& a, const Pose& b) {
    return {a.t + a.q * b.t, a.q * b.q};
}

inline Pose invert(const Pose& p) {
    const Quat qi = p.q.conjugate();
    return {qi * (-p.t), qi};
}

// Geodesic angle between two rotations, in [0, pi]. atan2 form keeps full
// precision for near-identical rotations where acos would bottom out.
inline double angular_distance(const Quat& a, const Quat& b) {
    const Quat r = a.conjugate() * b;
    return 2.0 * std::atan2(r.vec().norm(), std::abs(r.w()));
}

struct EulerAngles {
    double roll = 0.0;   // about x, (-pi, pi]
    double pitch = 0.0;  // about y, [-pi/2, pi/2]
    double yaw = 0.0;    // about z, (-pi, pi]
};

inline constexpr double kGimbalLockTol = 1e-6;

inline EulerAngles euler_angles(const Quat& q) {
    const Eigen::Matrix3d r = q.toRotationMatrix();
    const double sp = std::clamp(-r(2, 0), -1.0, 1.0);
    EulerAngles e;
    e.pitch = std::asin(sp);
    if (kPi / 2.0 - std::abs(e.pitch) < kGimbalLockTol) {
        // Gimbal lock: roll := 0, remaining freedom folds into yaw.
        e.roll = 0.0;
        e.yaw = wrap_angle(std::atan2(-r(0, 1), r(1, 1)));
    } else {
        e.yaw = wrap_angle(std::atan2(r(1, 0), r(0, 0)));
        e.roll = wrap_angle(std::atan2(r(2, 1), r(2, 2)));
    }
    return e;
}

inline EulerAngles euler_angles(const Pose& p) { return euler_angles(p.q); }

inline Quat quat_from_euler(const EulerAngles& e) {
    return canonical(Quat(Eigen::AngleAxisd(e.yaw, Vec3::UnitZ()) *
                          Eigen::AngleAxisd(e.pitch, Vec3::UnitY()) *
                          Eigen::AngleAxisd(e.roll, Vec3::UnitX())));
}

// Arithmetic translation mean plus sign-aligned, normalized quaternion mean
// (chordal mean; signs aligned to the first element).
inline Pose mean_pose(std::span<const Pose> poses) {
    if (poses.empty()) {
        throw EmptyInput("mean_pose: empty pose list");
    }
    Vec3 t = Vec3::Zero();
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    const Eigen::Vector4d ref = poses.front().q.coeffs();
    for (const Pose& p : poses) {
        t += p.t;
        Eigen::Vector4d c = p.q.coeffs();
        if (c.dot(ref) < 0.0) {
            c = -c;
        }
        acc += c;
    }
    t /= static_cast<double>(poses.size());
    if (acc.norm() < 1e-9) {
        throw DegenerateMean("mean_pose: quaternion mean has near-zero norm");
    }
    return {t, Quat(acc(3), acc(0), acc(1), acc(2))};
}

// atan2 of the mean sine and cosine, mapped to (-pi, pi].
inline double circular_mean(std::span<const double> angles) {
    if (angles.empty()) {
        throw EmptyInput("circular_mean: empty angle list");
    }
    double s = 0.0;
    double c = 0.0;
    for (double a : angles) {
        s += std::sin(a);
        c += std::cos(a);
    }
    s /= static_cast<double>(angles.size());
    c /= static_cast<double>(angles.size());
    if (std::hypot(s, c) < 1e-9) {
        throw DegenerateMean("circular_mean: resultant is near zero (antipodal inputs)");
    }
    return wrap_angle(std::atan2(s, c));
}

struct TrajectorySample {
    double timestamp = 0.0;  // seconds
    Pose pose;
};

// Time-ordered keyframe poses in a named frame.
struct Trajectory {
    std::string frame_id;
    std::vector<TrajectorySample> samples;

    void validate() const {
        if (samples.empty()) {
            throw EmptyTrajectory("trajectory '" + frame_id + "' has no samples");
        }
        for (std::size_t i = 1; i < samples.size(); ++i) {
            if (samples[i].timestamp <= samples[i - 1].timestamp) {
                throw ValidationError("trajectory '" + frame_id +
                                      "': timestamps not strictly increasing at sample " +
                                      std::to_string(i));
            }
        }
    }

    // Index of the sample whose timestamp is closest to t. Samples sorted.
    std::size_t nearest_index(double t) const {
        if (samples.empty()) {
            throw EmptyTrajectory("nearest_index on empty trajectory");
        }
        std::size_t lo = 0;
        std::size_t hi = samples.size();
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (samples[mid].timestamp < t) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if (lo == 0) return 0;
        if (lo == samples.size()) return samples.size() - 1;
        const double after = samples[lo].timestamp - t;
        const double before = t - samples[lo - 1].timestamp;
        return before <= after ? lo - 1 : lo;
    }
};

}  // namespace spelaeo
