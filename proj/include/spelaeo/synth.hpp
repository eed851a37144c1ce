#pragma once

// Synthetic corridor and sensor-data generator: fabricates a rectangular cave
// corridor with known geometry, flies a three-camera rig through it, and
// emits every sensor product the pipeline consumes, together with a record of
// every injected distortion (time shift, depth offset, frame misalignments,
// observation outliers) so tests can assert recovery.
//
// Randomness is MT19937-64 with hand-rolled distributions (see random.hpp):
// the draw stream for a given seed is platform-independent, and a given build
// reproduces bundles byte-identically run to run.
//
// Frames: the "world" frame is the corrected frame (x east, y north, z depth
// positive-down). Each camera trajectory is emitted in its own SLAM frame,
// offset from the world by a yaw + horizontal translation, a z offset, and a
// vertical flip when z_sign = -1 (gravity-aligned VI frames leave no other
// freedom). The wall cloud is emitted in the center camera's corrected frame
// so the full pipeline sees consistent coordinates; with z_sign = -1 that
// frame relates to the world by a reflection, so end-to-end fixtures use
// z_sign = +1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <spelaeo/config.hpp>
#include <spelaeo/depth_fusion.hpp>
#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>
#include <spelaeo/random.hpp>
#include <spelaeo/skeleton.hpp>
#include <spelaeo/survey.hpp>
#include <spelaeo/target_align.hpp>

namespace spelaeo::synth {

inline constexpr std::array<const char*, 3> kCameraNames = {"left", "center", "right"};

struct CorridorSpec {
    std::vector<Vec3> waypoints;  // corridor centerline, z = depth (m, >= 0)
    double width = 4.0;           // meters
    double height = 2.0;          // meters
    double wall_density = 25.0;   // points per square meter

    std::array<double, 3> camera_yaw_deg = {-30.0, 0.0, 30.0};     // left, center, right
    std::array<double, 3> camera_lateral_m = {0.3, 0.0, -0.3};     // offset along the left axis
    double center_pitch_deg = 30.0;                                // center camera tilts up
    double speed_mps = 0.5;
    double keyframe_rate_hz = 3.0;
    double depth_log_rate_hz = 0.1;

    double position_sigma_m = 0.0;
    double rotation_sigma_deg = 0.0;
    double depth_sigma_m = 0.0;

    double time_shift_s = 0.0;    // trajectory clocks lag the dive clock by this much
    double depth_offset_m = 0.0;  // regression offset ground truth
    int z_sign = 1;               // +1 z-down SLAM frames, -1 z-up
    double misalign_yaw_range_deg = 0.0;      // per-camera yaw drawn uniform in +-range
    double misalign_translation_range_m = 0.0;

    Pose target_pose;  // world frame
    int target_observations = 10;
    double outlier_fraction = 0.0;

    double survey_spacing_m = 5.0;
    double survey_azimuth_sigma_deg = 0.0;

    std::uint64_t seed = 1;

    void validate() const {
        if (waypoints.size() < 2) {
            throw SpecError("corridor needs at least 2 waypoints");
        }
        for (const Vec3& w : waypoints) {
            if (!w.allFinite()) throw SpecError("non-finite waypoint");
            if (w.z() < 0.0) throw SpecError("waypoint depth must be >= 0");
        }
        for (std::size_t i = 1; i < waypoints.size(); ++i) {
            const Vec3 d = waypoints[i] - waypoints[i - 1];
            if (d.norm() < 1e-9) throw SpecError("zero-length corridor segment");
            if (std::hypot(d.x(), d.y()) < 1e-9) throw SpecError("vertical corridor segment");
        }
        if (!(width > 0.0) || !(height > 0.0)) throw SpecError("width and height must be > 0");
        if (!(wall_density > 0.0)) throw SpecError("wall_density must be > 0");
        if (!(speed_mps > 0.0)) throw SpecError("speed must be > 0");
        if (!(keyframe_rate_hz > 0.0) || !(depth_log_rate_hz > 0.0)) {
            throw SpecError("rates must be > 0");
        }
        if (position_sigma_m < 0.0 || rotation_sigma_deg < 0.0 || depth_sigma_m < 0.0 ||
            survey_azimuth_sigma_deg < 0.0) {
            throw SpecError("noise sigmas must be >= 0");
        }
        if (z_sign != 1 && z_sign != -1) throw SpecError("z_sign must be +1 or -1");
        if (misalign_yaw_range_deg < 0.0 || misalign_translation_range_m < 0.0) {
            throw SpecError("misalignment ranges must be >= 0");
        }
        if (target_observations < 0) throw SpecError("target_observations must be >= 0");
        if (outlier_fraction < 0.0 || outlier_fraction >= 1.0) {
            throw SpecError("outlier_fraction must be in [0, 1)");
        }
        if (!(survey_spacing_m > 0.0)) throw SpecError("survey_spacing must be > 0");
    }

    static CorridorSpec from_config(const config::Config& cfg) {
        cfg.check_sections({"corridor", "rig", "depth", "noise", "distortion", "target", "survey",
                            "random"});
        cfg.check_keys("corridor", {"waypoints", "width", "height", "wall_density"});
        cfg.check_keys("rig", {"camera_yaws_deg", "lateral_offsets_m", "center_pitch_deg", "speed_mps",
                               "keyframe_rate_hz"});
        cfg.check_keys("depth", {"log_rate_hz"});
        cfg.check_keys("noise", {"position_sigma_m", "rotation_sigma_deg", "depth_sigma_m"});
        cfg.check_keys("distortion", {"time_shift_s", "depth_offset_m", "z_sign",
                                      "misalign_yaw_range_deg", "misalign_translation_range_m"});
        cfg.check_keys("target", {"position", "rpy_deg", "observations", "outlier_fraction"});
        cfg.check_keys("survey", {"shot_spacing_m", "azimuth_sigma_deg"});
        cfg.check_keys("random", {"seed"});

        CorridorSpec spec;
        const std::string raw = cfg.get_string("corridor", "waypoints");
        for (std::string_view triple : spelaeo::detail::split(raw, ';')) {
            const auto parts = spelaeo::detail::split(triple, ',');
            if (parts.size() != 3) {
                throw SpecError("waypoints: expected 'x,y,z' triples separated by ';'");
            }
            spec.waypoints.emplace_back(spelaeo::detail::parse_double(parts[0], 0, "waypoint x"),
                                        spelaeo::detail::parse_double(parts[1], 0, "waypoint y"),
                                        spelaeo::detail::parse_double(parts[2], 0, "waypoint z"));
        }
        spec.width = cfg.get_double("corridor", "width", spec.width);
        spec.height = cfg.get_double("corridor", "height", spec.height);
        spec.wall_density = cfg.get_double("corridor", "wall_density", spec.wall_density);

        if (cfg.has("rig", "camera_yaws_deg")) {
            const auto yaws = cfg.get_double_list("rig", "camera_yaws_deg");
            if (yaws.size() != 3) throw SpecError("camera_yaws_deg needs 3 values");
            for (int i = 0; i < 3; ++i) spec.camera_yaw_deg[static_cast<std::size_t>(i)] = yaws[static_cast<std::size_t>(i)];
        }
        if (cfg.has("rig", "lateral_offsets_m")) {
            const auto offs = cfg.get_double_list("rig", "lateral_offsets_m");
            if (offs.size() != 3) throw SpecError("lateral_offsets_m needs 3 values");
            for (int i = 0; i < 3; ++i) spec.camera_lateral_m[static_cast<std::size_t>(i)] = offs[static_cast<std::size_t>(i)];
        }
        spec.center_pitch_deg = cfg.get_double("rig", "center_pitch_deg", spec.center_pitch_deg);
        spec.speed_mps = cfg.get_double("rig", "speed_mps", spec.speed_mps);
        spec.keyframe_rate_hz = cfg.get_double("rig", "keyframe_rate_hz", spec.keyframe_rate_hz);
        spec.depth_log_rate_hz = cfg.get_double("depth", "log_rate_hz", spec.depth_log_rate_hz);

        spec.position_sigma_m = cfg.get_double("noise", "position_sigma_m", 0.0);
        spec.rotation_sigma_deg = cfg.get_double("noise", "rotation_sigma_deg", 0.0);
        spec.depth_sigma_m = cfg.get_double("noise", "depth_sigma_m", 0.0);

        spec.time_shift_s = cfg.get_double("distortion", "time_shift_s", 0.0);
        spec.depth_offset_m = cfg.get_double("distortion", "depth_offset_m", 0.0);
        spec.z_sign = static_cast<int>(cfg.get_int("distortion", "z_sign", 1));
        spec.misalign_yaw_range_deg = cfg.get_double("distortion", "misalign_yaw_range_deg", 0.0);
        spec.misalign_translation_range_m =
            cfg.get_double("distortion", "misalign_translation_range_m", 0.0);

        Vec3 target_pos = Vec3::Zero();
        if (cfg.has("target", "position")) {
            const auto p = cfg.get_double_list("target", "position");
            if (p.size() != 3) throw SpecError("target position needs 3 values");
            target_pos = {p[0], p[1], p[2]};
        }
        EulerAngles target_rpy;
        if (cfg.has("target", "rpy_deg")) {
            const auto r = cfg.get_double_list("target", "rpy_deg");
            if (r.size() != 3) throw SpecError("target rpy_deg needs 3 values");
            target_rpy = {deg2rad(r[0]), deg2rad(r[1]), deg2rad(r[2])};
        }
        spec.target_pose = Pose(target_pos, quat_from_euler(target_rpy));
        spec.target_observations =
            static_cast<int>(cfg.get_int("target", "observations", spec.target_observations));
        spec.outlier_fraction = cfg.get_double("target", "outlier_fraction", 0.0);

        spec.survey_spacing_m = cfg.get_double("survey", "shot_spacing_m", spec.survey_spacing_m);
        spec.survey_azimuth_sigma_deg = cfg.get_double("survey", "azimuth_sigma_deg", 0.0);
        spec.seed = static_cast<std::uint64_t>(cfg.get_int("random", "seed", 1));

        spec.validate();
        return spec;
    }
};

struct GroundTruth {
    double time_shift = 0.0;
    double depth_offset = 0.0;
    int z_sign = 1;
    std::array<Pose, 3> slam_from_world;  // per camera
    std::array<Pose, 3> world_from_slam;
    Pose cloud_from_world;  // horizontal part of the center camera misalignment
    Pose target_world;
    std::array<std::vector<int>, 3> outlier_indices;  // per camera, into its observation list
    std::vector<Vec3> centerline;                     // diver positions at keyframe times
    double corridor_width = 0.0;
    double corridor_height = 0.0;
    double duration_s = 0.0;
};

struct Bundle {
    std::array<Trajectory, 3> trajectories;  // SLAM frames, ids "left"/"center"/"right"
    std::array<std::vector<target::TargetObservation>, 3> observations;
    depth::DepthLog depth_log;
    skeleton::PointCloud cloud;  // center camera's corrected frame
    survey::SurveyNetwork survey;
    GroundTruth truth;
};

namespace detail {

struct Path {
    std::vector<Vec3> pts;
    std::vector<double> cum;  // cumulative arc length, cum[0] = 0
    double total = 0.0;

    explicit Path(const std::vector<Vec3>& waypoints) : pts(waypoints) {
        cum.resize(pts.size(), 0.0);
        for (std::size_t i = 1; i < pts.size(); ++i) {
            cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
        }
        total = cum.back();
    }

    std::size_t segment_of(double s) const {
        const auto it = std::upper_bound(cum.begin() + 1, cum.end() - 1, s);
        return static_cast<std::size_t>(it - cum.begin()) - 1;  // pts[i] -> pts[i+1]
    }

    Vec3 position(double s) const {
        const std::size_t i = segment_of(s);
        const double len = cum[i + 1] - cum[i];
        const double u = std::clamp((s - cum[i]) / len, 0.0, 1.0);
        return pts[i] + u * (pts[i + 1] - pts[i]);
    }

    Vec3 tangent(double s) const {
        const std::size_t i = segment_of(s);
        return (pts[i + 1] - pts[i]).normalized();
    }
};

// Horizontal left axis for a (non-vertical) direction, z-down frame.
inline Vec3 left_axis(const Vec3& forward) {
    const double hn = std::hypot(forward.x(), forward.y());
    return {-forward.y() / hn, forward.x() / hn, 0.0};
}

inline double wrap360(double deg) {
    double a = std::fmod(deg, 360.0);
    if (a < 0.0) a += 360.0;
    return a;
}

}  // namespace detail

inline Bundle generate(const CorridorSpec& spec) {
    spec.validate();
    Bundle bundle;
    GroundTruth& truth = bundle.truth;
    Rng rng(spec.seed);

    const detail::Path path(spec.waypoints);
    const double duration = path.total / spec.speed_mps;

    truth.time_shift = spec.time_shift_s;
    truth.depth_offset = spec.depth_offset_m;
    truth.z_sign = spec.z_sign;
    truth.target_world = spec.target_pose;
    truth.corridor_width = spec.width;
    truth.corridor_height = spec.height;
    truth.duration_s = duration;

    // Per-camera SLAM frame misalignment: yaw + horizontal translation, a z
    // offset matching the depth model, and a vertical flip when z_sign = -1.
    const Quat flip = spec.z_sign < 0 ? Quat(Eigen::AngleAxisd(kPi, Vec3::UnitX()))
                                      : Quat::Identity();
    for (int cam = 0; cam < 3; ++cam) {
        const double yaw = deg2rad(rng.uniform(-spec.misalign_yaw_range_deg,
                                               spec.misalign_yaw_range_deg));
        const double tx = rng.uniform(-spec.misalign_translation_range_m,
                                      spec.misalign_translation_range_m);
        const double ty = rng.uniform(-spec.misalign_translation_range_m,
                                      spec.misalign_translation_range_m);
        const Quat rot = canonical(Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * flip);
        const Pose h(Vec3(tx, ty, -static_cast<double>(spec.z_sign) * spec.depth_offset_m), rot);
        truth.slam_from_world[static_cast<std::size_t>(cam)] = h;
        truth.world_from_slam[static_cast<std::size_t>(cam)] = invert(h);
        if (cam == 1) {
            truth.cloud_from_world =
                Pose(Vec3(tx, ty, 0.0), Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())));
        }
    }

    // Trajectories and ground-truth camera poses (world frame).
    const std::size_t n_keyframes =
        static_cast<std::size_t>(std::floor(duration * spec.keyframe_rate_hz + 1e-9)) + 1;
    std::array<std::vector<Pose>, 3> world_poses;
    truth.centerline.reserve(n_keyframes);
    for (int cam = 0; cam < 3; ++cam) {
        const std::size_t ci = static_cast<std::size_t>(cam);
        Trajectory& traj = bundle.trajectories[ci];
        traj.frame_id = kCameraNames[ci];
        traj.samples.reserve(n_keyframes);
        world_poses[ci].reserve(n_keyframes);
        for (std::size_t k = 0; k < n_keyframes; ++k) {
            const double t = static_cast<double>(k) / spec.keyframe_rate_hz;
            const double s = std::min(spec.speed_mps * t, path.total);
            const Vec3 c = path.position(s);
            if (cam == 0) truth.centerline.push_back(c);
            const Vec3 f = path.tangent(s);
            const Vec3 l = detail::left_axis(f);

            EulerAngles e;
            e.yaw = std::atan2(f.y(), f.x()) + deg2rad(spec.camera_yaw_deg[ci]);
            e.pitch = std::asin(std::clamp(-f.z(), -1.0, 1.0));
            if (cam == 1) e.pitch += deg2rad(spec.center_pitch_deg);
            const Pose world_pose(c + l * spec.camera_lateral_m[ci], quat_from_euler(e));
            world_poses[ci].push_back(world_pose);

            Pose slam_pose = compose(truth.slam_from_world[ci], world_pose);
            slam_pose.t += rng.normal_vec3(spec.position_sigma_m);
            slam_pose.q = canonical(slam_pose.q * rng.small_rotation(deg2rad(spec.rotation_sigma_deg)));
            traj.samples.push_back({t - spec.time_shift_s, slam_pose});
        }
    }

    // Target observations: the first N keyframes of each camera see the
    // target; relative poses are frame-independent so they come from the
    // world-frame geometry directly.
    for (int cam = 0; cam < 3; ++cam) {
        const std::size_t ci = static_cast<std::size_t>(cam);
        const int n_obs = std::min<int>(spec.target_observations,
                                        static_cast<int>(world_poses[ci].size()));
        std::vector<int> order(static_cast<std::size_t>(n_obs));
        for (int i = 0; i < n_obs; ++i) order[static_cast<std::size_t>(i)] = i;
        for (int i = n_obs - 1; i > 0; --i) {
            const std::size_t j = rng.index(static_cast<std::size_t>(i) + 1);
            std::swap(order[static_cast<std::size_t>(i)], order[j]);
        }
        const int n_outliers = static_cast<int>(std::lround(n_obs * spec.outlier_fraction));
        std::vector<char> is_outlier(static_cast<std::size_t>(n_obs), 0);
        for (int i = 0; i < n_outliers; ++i) {
            is_outlier[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 1;
            truth.outlier_indices[ci].push_back(order[static_cast<std::size_t>(i)]);
        }
        std::sort(truth.outlier_indices[ci].begin(), truth.outlier_indices[ci].end());

        for (int i = 0; i < n_obs; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            Pose rel = compose(invert(world_poses[ci][k]), spec.target_pose);
            rel.t += rng.normal_vec3(spec.position_sigma_m);
            rel.q = canonical(rel.q * rng.small_rotation(deg2rad(spec.rotation_sigma_deg)));
            if (is_outlier[k]) {
                rel.t += rng.unit_vec3() * (1.0 + rng.uniform());
                rel.q = canonical(rel.q * rng.rotation(rng.unit_vec3(),
                                                       deg2rad(20.0 + 20.0 * rng.uniform())));
            }
            bundle.observations[ci].push_back(
                {bundle.trajectories[ci].samples[k].timestamp, kCameraNames[ci], rel});
        }
    }

    // Dive-computer depth log (world/dive clock, absolute depth).
    const std::size_t n_log =
        static_cast<std::size_t>(std::floor(duration * spec.depth_log_rate_hz + 1e-9)) + 1;
    bundle.depth_log.samples.reserve(n_log);
    for (std::size_t j = 0; j < n_log; ++j) {
        const double t = static_cast<double>(j) / spec.depth_log_rate_hz;
        const double s = std::min(spec.speed_mps * t, path.total);
        const double d = path.position(s).z() + rng.normal(spec.depth_sigma_m);
        bundle.depth_log.samples.push_back({t, std::max(0.0, d)});
    }

    // Wall cloud: points drawn on the four corridor surfaces, then jittered
    // and expressed in the cloud frame.
    for (std::size_t i = 0; i + 1 < spec.waypoints.size(); ++i) {
        const Vec3& a = spec.waypoints[i];
        const Vec3& b = spec.waypoints[i + 1];
        const Vec3 d = b - a;
        const double len = d.norm();
        const Vec3 l = detail::left_axis(d / len);
        const auto emit = [&](std::size_t count, bool lateral_surface, double fixed_offset) {
            for (std::size_t p = 0; p < count; ++p) {
                const double u = rng.uniform();
                const double v = lateral_surface ? rng.uniform(-spec.height / 2.0, spec.height / 2.0)
                                                 : rng.uniform(-spec.width / 2.0, spec.width / 2.0);
                Vec3 pt = a + u * d;
                if (lateral_surface) {
                    pt += l * fixed_offset + Vec3(0.0, 0.0, v);
                } else {
                    pt += l * v + Vec3(0.0, 0.0, fixed_offset);
                }
                pt += rng.normal_vec3(spec.position_sigma_m);
                bundle.cloud.points.push_back(truth.cloud_from_world.transform_point(pt));
            }
        };
        const std::size_t n_wall =
            static_cast<std::size_t>(std::llround(len * spec.height * spec.wall_density));
        const std::size_t n_flat =
            static_cast<std::size_t>(std::llround(len * spec.width * spec.wall_density));
        emit(n_wall, true, spec.width / 2.0);    // left wall
        emit(n_wall, true, -spec.width / 2.0);   // right wall
        emit(n_flat, false, -spec.height / 2.0); // ceiling
        emit(n_flat, false, spec.height / 2.0);  // floor
    }

    // Caveline survey along the centerline (world frame, exact lengths and
    // depths, azimuth noise only).
    std::vector<Vec3> stations;
    for (double s = 0.0; s < path.total + 1e-9; s += spec.survey_spacing_m) {
        stations.push_back(path.position(std::min(s, path.total)));
    }
    if ((stations.back() - path.position(path.total)).norm() > 1e-9) {
        stations.push_back(path.position(path.total));
    }
    bundle.survey.declination = 0.0;
    for (std::size_t i = 0; i + 1 < stations.size(); ++i) {
        const Vec3 d = stations[i + 1] - stations[i];
        survey::SurveySegment seg;
        seg.from_station = "S" + std::to_string(i);
        seg.to_station = "S" + std::to_string(i + 1);
        seg.length = d.norm();
        const double az = detail::wrap360(rad2deg(std::atan2(d.x(), d.y())));
        seg.azimuth_in = detail::wrap360(az + rng.normal(spec.survey_azimuth_sigma_deg));
        seg.azimuth_out = detail::wrap360(az + rng.normal(spec.survey_azimuth_sigma_deg));
        seg.depth_from = stations[i].z();
        seg.depth_to = stations[i + 1].z();
        bundle.survey.segments.push_back(std::move(seg));
    }

    return bundle;
}

}  // namespace spelaeo::synth
