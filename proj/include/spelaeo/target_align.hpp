#pragma once

// Co-registration of SLAM world frames through a shared fiducial target:
// compose per-keyframe target detections into world-frame target poses,
// reject outliers by distance then by orientation, average the survivors,
// and derive the frame-to-frame transform from two such estimates.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>

namespace spelaeo::target {

inline constexpr double kDefaultAssocTol = 0.02;  // seconds

struct TargetObservation {
    double timestamp = 0.0;   // matches a trajectory keyframe within tolerance
    std::string camera_id;
    Pose rel_pose;            // camera -> target
};

struct TargetEstimate {
    Pose world_pose;
    int inlier_count = 0;
    int total_count = 0;
    double distance_sigma = 0.0;             // RMS distance from the mean position
    std::array<double, 3> angle_sigmas{};    // roll, pitch, yaw (radians)
    bool fallback_stage1 = false;            // angle filter rejected everything
};

struct FrameTransform {
    std::string from_frame;
    std::string to_frame;
    Pose transform;  // maps from_frame coordinates into to_frame
};

// One world-frame target pose per observation (camera pose composed with the
// camera->target detection); order preserved.
inline std::vector<Pose> target_world_poses(const Trajectory& traj,
                                            std::span<const TargetObservation> observations,
                                            double tol = kDefaultAssocTol) {
    traj.validate();
    std::vector<Pose> out;
    out.reserve(observations.size());
    for (const TargetObservation& obs : observations) {
        const std::size_t i = traj.nearest_index(obs.timestamp);
        if (std::abs(traj.samples[i].timestamp - obs.timestamp) > tol) {
            throw UnmatchedObservation(
                "no keyframe within " + std::to_string(tol) + " s of observation at t=" +
                std::to_string(obs.timestamp) + " (camera " + obs.camera_id + ")");
        }
        out.push_back(compose(traj.samples[i].pose, obs.rel_pose));
    }
    return out;
}

// Two-stage sigma filter over world-frame target poses, then the mean of the
// survivors. Stage 1 drops poses whose distance to the mean position exceeds
// the RMS distance; stage 2 recomputes per-angle statistics over the stage-1
// survivors (circular mean for yaw) and drops poses off by more than one
// sigma on any angle. If stage 2 empties the set, the stage-1 mean is
// returned with fallback_stage1 set instead of failing.
inline TargetEstimate filter_and_average(std::span<const Pose> world_poses) {
    const std::size_t n = world_poses.size();
    if (n < 3) {
        throw TooFewObservations("filter_and_average: need at least 3 poses, got " +
                                 std::to_string(n));
    }
    TargetEstimate est;
    est.total_count = static_cast<int>(n);

    std::vector<Pose> all(world_poses.begin(), world_poses.end());
    const Pose stage0_mean = mean_pose(all);

    double sum_d2 = 0.0;
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        dist[i] = (world_poses[i].t - stage0_mean.t).norm();
        sum_d2 += dist[i] * dist[i];
    }
    est.distance_sigma = std::sqrt(sum_d2 / static_cast<double>(n));

    std::vector<Pose> stage1;
    stage1.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] <= est.distance_sigma) {
            stage1.push_back(world_poses[i]);
        }
    }

    std::vector<EulerAngles> angles(stage1.size());
    std::vector<double> yaws(stage1.size());
    for (std::size_t i = 0; i < stage1.size(); ++i) {
        angles[i] = euler_angles(stage1[i]);
        yaws[i] = angles[i].yaw;
    }
    double mean_roll = 0.0, mean_pitch = 0.0;
    for (const EulerAngles& a : angles) {
        mean_roll += a.roll;
        mean_pitch += a.pitch;
    }
    mean_roll /= static_cast<double>(angles.size());
    mean_pitch /= static_cast<double>(angles.size());

    bool yaw_usable = true;
    double mean_yaw = 0.0;
    try {
        mean_yaw = circular_mean(yaws);
    } catch (const DegenerateMean&) {
        yaw_usable = false;  // antipodal yaws: skip the yaw criterion
    }

    // Deviations: plain differences for roll/pitch, circular distance for yaw.
    std::vector<std::array<double, 3>> dev(stage1.size());
    std::array<double, 3> s2{};
    for (std::size_t i = 0; i < stage1.size(); ++i) {
        dev[i][0] = angles[i].roll - mean_roll;
        dev[i][1] = angles[i].pitch - mean_pitch;
        dev[i][2] = yaw_usable ? wrap_angle(angles[i].yaw - mean_yaw) : 0.0;
        for (int j = 0; j < 3; ++j) s2[j] += dev[i][j] * dev[i][j];
    }
    for (int j = 0; j < 3; ++j) {
        est.angle_sigmas[j] = std::sqrt(s2[j] / static_cast<double>(stage1.size()));
    }

    std::vector<Pose> inliers;
    inliers.reserve(stage1.size());
    for (std::size_t i = 0; i < stage1.size(); ++i) {
        bool keep = true;
        for (int j = 0; j < 3; ++j) {
            if (j == 2 && !yaw_usable) continue;
            if (std::abs(dev[i][j]) > est.angle_sigmas[j]) {
                keep = false;
                break;
            }
        }
        if (keep) inliers.push_back(stage1[i]);
    }
    if (inliers.empty()) {
        est.fallback_stage1 = true;
        inliers = stage1;
    }
    est.inlier_count = static_cast<int>(inliers.size());
    est.world_pose = mean_pose(inliers);
    return est;
}

// Transform taking from-frame (b) coordinates into to-frame (a) coordinates,
// from two estimates of the same physical target.
inline FrameTransform estimate_frame_transform(const TargetEstimate& est_a,
                                               const TargetEstimate& est_b,
                                               std::string frame_a = {},
                                               std::string frame_b = {}) {
    FrameTransform ft;
    ft.to_frame = std::move(frame_a);
    ft.from_frame = std::move(frame_b);
    ft.transform = compose(est_a.world_pose, invert(est_b.world_pose));
    return ft;
}

inline Trajectory apply_frame_transform(const Trajectory& traj, const FrameTransform& ft) {
    if (traj.frame_id != ft.from_frame) {
        throw FrameMismatch("apply_frame_transform: trajectory frame '" + traj.frame_id +
                            "' does not match transform source frame '" + ft.from_frame + "'");
    }
    Trajectory out;
    out.frame_id = ft.to_frame;
    out.samples.reserve(traj.samples.size());
    for (const TrajectorySample& s : traj.samples) {
        out.samples.push_back({s.timestamp, compose(ft.transform, s.pose)});
    }
    return out;
}

}  // namespace spelaeo::target
