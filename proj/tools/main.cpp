// spelaeo: command-line pipeline for fusing diver-collected sensor data into
// corrected, co-registered cave maps.
//
// Subcommands: fuse-depth, align, skeleton, select-area, survey adjust,
// survey stickmap, synth, pipeline. Exit codes: 0 success, 1 usage error,
// 2 data/validation error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spelaeo/config.hpp>
#include <spelaeo/depth_fusion.hpp>
#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>
#include <spelaeo/io.hpp>
#include <spelaeo/log.hpp>
#include <spelaeo/recon_prep.hpp>
#include <spelaeo/skeleton.hpp>
#include <spelaeo/survey.hpp>
#include <spelaeo/synth.hpp>
#include <spelaeo/target_align.hpp>
#include <spelaeo/version.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spelaeo;

namespace {

json pose_json(const Pose& p) {
    return json{{"tx", p.t.x()}, {"ty", p.t.y()}, {"tz", p.t.z()},
                {"qx", p.q.x()}, {"qy", p.q.y()}, {"qz", p.q.z()}, {"qw", p.q.w()}};
}

void write_json(const fs::path& path, const json& j) {
    io::write_file(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- fuse-depth

struct FuseArgs {
    std::string trajectory, depth_log, out, report;
    double rate = 100.0;
    double max_shift = 1200.0;
};

json fuse_report_json(const depth::DepthCorrection& corr) {
    return json{{"time_shift_s", corr.time_shift},
                {"scale", corr.scale},
                {"offset_m", corr.offset},
                {"residual_rms_m", corr.residual_rms}};
}

void run_fuse_depth(const FuseArgs& args) {
    const Trajectory traj = io::load_trajectory(args.trajectory);
    std::vector<std::string> warnings;
    const depth::DepthLog dlog = io::load_depth_log(args.depth_log, &warnings);
    for (const std::string& w : warnings) log::warn(w);

    const auto [corrected, corr] = depth::fuse(traj, dlog, args.rate, args.max_shift);
    io::write_file(args.out, io::trajectory_csv(corrected));
    log::info("fuse-depth: shift " + detail::fmt_double(corr.time_shift) + " s, scale " +
              detail::fmt_double(corr.scale) + ", offset " + detail::fmt_double(corr.offset) +
              " m, residual rms " + detail::fmt_double(corr.residual_rms) + " m");
    if (!args.report.empty()) write_json(args.report, fuse_report_json(corr));
}

// --------------------------------------------------------------------- align

struct AlignArgs {
    std::string ref, ref_obs, mov, mov_obs, out, report;
    double tolerance = target::kDefaultAssocTol;
};

json align_report_json(const target::TargetEstimate& ref_est,
                       const target::TargetEstimate& mov_est,
                       const target::FrameTransform& ft) {
    const auto est_json = [](const target::TargetEstimate& e) {
        return json{{"inlier_count", e.inlier_count},
                    {"total_count", e.total_count},
                    {"distance_sigma_m", e.distance_sigma},
                    {"angle_sigmas_rad", {e.angle_sigmas[0], e.angle_sigmas[1], e.angle_sigmas[2]}},
                    {"fallback_stage1", e.fallback_stage1},
                    {"world_pose", pose_json(e.world_pose)}};
    };
    return json{{"reference", est_json(ref_est)},
                {"moving", est_json(mov_est)},
                {"from_frame", ft.from_frame},
                {"to_frame", ft.to_frame},
                {"transform", pose_json(ft.transform)}};
}

void run_align(const AlignArgs& args) {
    const Trajectory ref = io::load_trajectory(args.ref);
    const Trajectory mov = io::load_trajectory(args.mov);
    const auto ref_obs = io::load_observations(args.ref_obs, ref.frame_id);
    const auto mov_obs = io::load_observations(args.mov_obs, mov.frame_id);

    const auto ref_poses = target::target_world_poses(ref, ref_obs, args.tolerance);
    const auto mov_poses = target::target_world_poses(mov, mov_obs, args.tolerance);
    const auto ref_est = target::filter_and_average(ref_poses);
    const auto mov_est = target::filter_and_average(mov_poses);
    if (ref_est.fallback_stage1) log::warn("reference target: orientation filter rejected all poses");
    if (mov_est.fallback_stage1) log::warn("moving target: orientation filter rejected all poses");

    const auto ft = target::estimate_frame_transform(ref_est, mov_est, ref.frame_id, mov.frame_id);
    const Trajectory aligned = target::apply_frame_transform(mov, ft);
    io::write_file(args.out, io::trajectory_csv(aligned));
    log::info("align: " + ft.from_frame + " -> " + ft.to_frame + ", inliers " +
              std::to_string(mov_est.inlier_count) + "/" + std::to_string(mov_est.total_count));
    if (!args.report.empty()) write_json(args.report, align_report_json(ref_est, mov_est, ft));
}

// ------------------------------------------------------------------ skeleton

struct SkeletonArgs {
    std::vector<std::string> trajs;
    std::string cloud, out_dir;
    int center_index = 0;
    double flag_radius = 1.0;
    double depth_tol = 0.2;
    double lateral_radius = 0.5;
};

void write_skeleton(const fs::path& out_dir, const skeleton::CaveSkeleton& skel) {
    io::write_file(out_dir / "nodes.csv", io::nodes_csv(skel.nodes));
    io::write_file(out_dir / "edges.csv", io::edges_csv(skel.edges));
    io::write_file(out_dir / "lrud.csv", io::lrud_csv(skel.lrud));
}

void run_skeleton(const SkeletonArgs& args) {
    std::vector<Trajectory> trajs;
    for (const std::string& p : args.trajs) trajs.push_back(io::load_trajectory(p));
    const skeleton::PointCloud cloud = io::load_ply(args.cloud);
    skeleton::SkeletonParams params;
    params.center_index = args.center_index;
    params.flag_radius = args.flag_radius;
    params.depth_tol = args.depth_tol;
    params.lateral_radius = args.lateral_radius;
    const auto skel = skeleton::build_skeleton(trajs, cloud, params);
    write_skeleton(args.out_dir, skel);
    log::info("skeleton: " + std::to_string(skel.nodes.size()) + " nodes, " +
              std::to_string(skel.edges.size()) + " edges");
}

// --------------------------------------------------------------- select-area

struct SelectArgs {
    std::vector<std::string> trajs;
    std::string center_traj, out;
    double center_time = 0.0;
    double radius = 2.5;
    std::string pattern = "{camera}_{timestamp}.png";
};

void run_select_area(const SelectArgs& args) {
    std::vector<Trajectory> trajs;
    for (const std::string& p : args.trajs) trajs.push_back(io::load_trajectory(p));
    const Trajectory center_traj = io::load_trajectory(args.center_traj);
    const std::size_t idx = center_traj.nearest_index(args.center_time);
    const double dt = std::abs(center_traj.samples[idx].timestamp - args.center_time);
    if (dt > 1.0) {
        log::warn("select-area: nearest keyframe is " + detail::fmt_double(dt) +
                  " s from the requested center time");
    }
    const Pose center = center_traj.samples[idx].pose;
    const auto sel = recon::select_keyframes(trajs, center, args.radius);
    if (sel.members.empty()) {
        log::warn("select-area: no keyframe within " + detail::fmt_double(args.radius) + " m");
    }
    io::write_file(args.out, recon::export_manifest(sel, args.pattern));
    log::info("select-area: " + std::to_string(sel.members.size()) + " keyframes");
}

// -------------------------------------------------------------------- survey

struct SurveyArgs {
    std::string shots, closures, anchor, out, svg;
    double declination = 0.0;
};

survey::SurveyNetwork load_network(const SurveyArgs& args) {
    survey::SurveyNetwork net = survey::parse_survey(io::read_file(args.shots), args.declination);
    if (!args.closures.empty()) {
        net.closures = survey::parse_closures(io::read_file(args.closures), net);
    }
    return net;
}

void run_survey_adjust(const SurveyArgs& args) {
    const survey::SurveyNetwork net = load_network(args);
    const survey::StickMap map = survey::adjust_loops(net, args.anchor);
    io::write_file(args.out, io::stations_csv(map));
    if (!args.svg.empty()) io::write_file(args.svg, survey::stickmap_svg(map, net));
    double max_residual = 0.0;
    for (double r : map.segment_residuals) max_residual = std::max(max_residual, r);
    log::info("survey adjust: " + std::to_string(map.stations.size()) + " stations, max residual " +
              detail::fmt_double(max_residual) + " m");
}

void run_survey_stickmap(const SurveyArgs& args) {
    const survey::SurveyNetwork net = load_network(args);
    const survey::StickMap map = survey::dead_reckon(net, args.anchor);
    io::write_file(args.svg, survey::stickmap_svg(map, net));
    log::info("survey stickmap: " + std::to_string(map.stations.size()) + " stations (dead reckoning)");
}

// --------------------------------------------------------------------- synth

struct SynthArgs {
    std::string spec, out_dir;
};

void write_truth_json(const fs::path& path, const synth::Bundle& bundle) {
    const synth::GroundTruth& t = bundle.truth;
    json cams = json::object();
    for (int i = 0; i < 3; ++i) {
        const std::size_t ci = static_cast<std::size_t>(i);
        cams[synth::kCameraNames[ci]] = {
            {"slam_from_world", pose_json(t.slam_from_world[ci])},
            {"world_from_slam", pose_json(t.world_from_slam[ci])},
            {"outlier_indices", t.outlier_indices[ci]},
        };
    }
    write_json(path, json{{"time_shift_s", t.time_shift},
                          {"depth_offset_m", t.depth_offset},
                          {"z_sign", t.z_sign},
                          {"duration_s", t.duration_s},
                          {"corridor_width_m", t.corridor_width},
                          {"corridor_height_m", t.corridor_height},
                          {"cameras", cams},
                          {"cloud_from_world", pose_json(t.cloud_from_world)},
                          {"target_world", pose_json(t.target_world)}});
}

std::string pipeline_config_text(const synth::Bundle& bundle) {
    const synth::GroundTruth& t = bundle.truth;
    std::string cfg;
    cfg += "[inputs]\n";
    for (const char* cam : synth::kCameraNames) {
        cfg += std::string("traj_") + cam + " = traj_" + cam + ".csv\n";
        cfg += std::string("obs_") + cam + " = obs_" + cam + ".csv\n";
    }
    cfg += "depth_log = depth_log.csv\ncloud = cloud.ply\n\n";
    cfg += "[fuse]\nrate = 100\nmax_shift = 1200\n\n";
    cfg += "[align]\nreference = center\ntolerance = 0.02\n\n";
    cfg += "[skeleton]\ncenter = center\nflag_radius = 1.0\ndepth_tol = 0.2\nlateral_radius = 0.5\n\n";
    cfg += "[select]\ncamera = center\ntime = " +
           detail::fmt_double(t.time_shift + t.duration_s / 2.0) +
           "\nradius = 2.5\npattern = {camera}_{timestamp}.png\n\n";
    cfg += "[pipeline]\nout_dir = out\n";
    return cfg;
}

void run_synth(const SynthArgs& args) {
    const auto cfg = config::Config::load(args.spec);
    const synth::CorridorSpec spec = synth::CorridorSpec::from_config(cfg);
    const synth::Bundle bundle = synth::generate(spec);
    const fs::path out(args.out_dir);
    for (int i = 0; i < 3; ++i) {
        const std::size_t ci = static_cast<std::size_t>(i);
        const std::string cam = synth::kCameraNames[ci];
        io::write_file(out / ("traj_" + cam + ".csv"),
                       io::trajectory_csv(bundle.trajectories[ci]));
        io::write_file(out / ("obs_" + cam + ".csv"),
                       io::observations_csv(bundle.observations[ci]));
    }
    io::write_file(out / "depth_log.csv", io::depth_csv(bundle.depth_log));
    io::write_file(out / "cloud.ply", io::ply(bundle.cloud));
    {
        std::string shots(survey::kShotsHeader);
        shots += '\n';
        for (const auto& seg : bundle.survey.segments) {
            shots += seg.from_station + ',' + seg.to_station + ',' +
                     detail::fmt_double(seg.length) + ',' + detail::fmt_double(seg.azimuth_in) +
                     ',' + detail::fmt_double(seg.azimuth_out) + ',' +
                     detail::fmt_double(seg.depth_from) + ',' + detail::fmt_double(seg.depth_to) +
                     '\n';
        }
        io::write_file(out / "survey_shots.csv", shots);
        io::write_file(out / "survey_closures.csv", std::string(survey::kClosuresHeader) + "\n");
    }
    {
        std::string centerline = "x,y,z\n";
        for (const Vec3& p : bundle.truth.centerline) {
            centerline += detail::fmt_double(p.x()) + ',' + detail::fmt_double(p.y()) + ',' +
                          detail::fmt_double(p.z()) + '\n';
        }
        io::write_file(out / "centerline.csv", centerline);
    }
    write_truth_json(out / "truth.json", bundle);
    io::write_file(out / "pipeline.toml", pipeline_config_text(bundle));
    log::info("synth: wrote fixture bundle to " + out.string());
}

// ------------------------------------------------------------------ pipeline

struct PipelineArgs {
    std::string config;
    std::string out_dir;  // overrides [pipeline] out_dir
};

int camera_index(const std::string& name) {
    for (int i = 0; i < 3; ++i) {
        if (name == synth::kCameraNames[static_cast<std::size_t>(i)]) return i;
    }
    throw ValidationError("unknown camera '" + name + "' (expected left, center or right)");
}

void run_pipeline(const PipelineArgs& args) {
    const fs::path cfg_path(args.config);
    const auto cfg = config::Config::load(cfg_path);
    cfg.check_sections({"inputs", "fuse", "align", "skeleton", "select", "pipeline"});
    cfg.check_keys("inputs", {"traj_left", "traj_center", "traj_right", "obs_left", "obs_center",
                              "obs_right", "depth_log", "cloud"});
    cfg.check_keys("fuse", {"rate", "max_shift"});
    cfg.check_keys("align", {"reference", "tolerance"});
    cfg.check_keys("skeleton", {"center", "flag_radius", "depth_tol", "lateral_radius"});
    cfg.check_keys("select", {"camera", "time", "radius", "pattern"});
    cfg.check_keys("pipeline", {"out_dir"});

    const fs::path base = cfg_path.has_parent_path() ? cfg_path.parent_path() : fs::path(".");
    const auto resolve = [&](const std::string& p) {
        const fs::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    const fs::path out = !args.out_dir.empty()
                             ? fs::path(args.out_dir)
                             : resolve(cfg.get_string("pipeline", "out_dir", "out"));

    // Stage 1: absolute depth correction per camera.
    std::vector<std::string> warnings;
    const depth::DepthLog dlog =
        io::load_depth_log(resolve(cfg.get_string("inputs", "depth_log")), &warnings);
    for (const std::string& w : warnings) log::warn(w);
    const double rate = cfg.get_double("fuse", "rate", 100.0);
    const double max_shift = cfg.get_double("fuse", "max_shift", 1200.0);

    std::array<Trajectory, 3> corrected;
    std::array<depth::DepthCorrection, 3> corrections;
    for (int i = 0; i < 3; ++i) {
        const std::size_t ci = static_cast<std::size_t>(i);
        const std::string cam = synth::kCameraNames[ci];
        const Trajectory traj =
            io::load_trajectory(resolve(cfg.get_string("inputs", "traj_" + cam)), cam);
        auto [corr_traj, corr] = depth::fuse(traj, dlog, rate, max_shift);
        corrected[ci] = std::move(corr_traj);
        corrections[ci] = corr;
        io::write_file(out / ("corrected_" + cam + ".csv"), io::trajectory_csv(corrected[ci]));
        write_json(out / ("fuse_" + cam + ".json"), fuse_report_json(corr));
        log::info("pipeline: " + cam + " depth-corrected (shift " +
                  detail::fmt_double(corr.time_shift) + " s)");
    }

    // Stage 2: co-register onto the reference camera through the shared
    // target. Observation timestamps ride along with each camera's clock
    // correction before association.
    const std::string ref_name = cfg.get_string("align", "reference", "center");
    const int ref = camera_index(ref_name);
    const double tol = cfg.get_double("align", "tolerance", target::kDefaultAssocTol);

    std::array<std::vector<target::TargetObservation>, 3> obs;
    std::array<target::TargetEstimate, 3> estimates;
    for (int i = 0; i < 3; ++i) {
        const std::size_t ci = static_cast<std::size_t>(i);
        const std::string cam = synth::kCameraNames[ci];
        obs[ci] = io::load_observations(resolve(cfg.get_string("inputs", "obs_" + cam)), cam);
        for (auto& o : obs[ci]) o.timestamp += corrections[ci].time_shift;
        estimates[ci] =
            target::filter_and_average(target::target_world_poses(corrected[ci], obs[ci], tol));
        if (estimates[ci].fallback_stage1) {
            log::warn("pipeline: " + cam + " target orientation filter rejected all poses");
        }
    }

    std::array<Trajectory, 3> aligned;
    aligned[static_cast<std::size_t>(ref)] = corrected[static_cast<std::size_t>(ref)];
    for (int i = 0; i < 3; ++i) {
        const std::size_t ci = static_cast<std::size_t>(i);
        const std::string cam = synth::kCameraNames[ci];
        if (i != ref) {
            const auto ft = target::estimate_frame_transform(
                estimates[static_cast<std::size_t>(ref)], estimates[ci],
                corrected[static_cast<std::size_t>(ref)].frame_id, corrected[ci].frame_id);
            aligned[ci] = target::apply_frame_transform(corrected[ci], ft);
            write_json(out / ("align_" + cam + ".json"),
                       align_report_json(estimates[static_cast<std::size_t>(ref)], estimates[ci], ft));
        }
        // Everything now lives in the reference frame; keep the camera name
        // as the trajectory label so downstream manifests stay per-camera.
        aligned[ci].frame_id = cam;
        io::write_file(out / ("aligned_" + cam + ".csv"), io::trajectory_csv(aligned[ci]));
    }
    log::info("pipeline: trajectories aligned to " + ref_name);

    // Stage 3: centerline skeleton with wall boundaries.
    const skeleton::PointCloud cloud = io::load_ply(resolve(cfg.get_string("inputs", "cloud")));
    skeleton::SkeletonParams params;
    params.center_index = camera_index(cfg.get_string("skeleton", "center", "center"));
    params.flag_radius = cfg.get_double("skeleton", "flag_radius", 1.0);
    params.depth_tol = cfg.get_double("skeleton", "depth_tol", 0.2);
    params.lateral_radius = cfg.get_double("skeleton", "lateral_radius", 0.5);
    const std::vector<Trajectory> aligned_vec(aligned.begin(), aligned.end());
    const auto skel = skeleton::build_skeleton(aligned_vec, cloud, params);
    write_skeleton(out / "skeleton", skel);
    log::info("pipeline: skeleton with " + std::to_string(skel.nodes.size()) + " nodes");

    // Stage 4: keyframe selection for dense reconstruction.
    const int sel_cam = camera_index(cfg.get_string("select", "camera", "center"));
    const double sel_time = cfg.get_double("select", "time");
    const double sel_radius = cfg.get_double("select", "radius", 2.5);
    const std::string pattern = cfg.get_string("select", "pattern", "{camera}_{timestamp}.png");
    const Trajectory& sel_traj = aligned[static_cast<std::size_t>(sel_cam)];
    const Pose center = sel_traj.samples[sel_traj.nearest_index(sel_time)].pose;
    const auto sel = recon::select_keyframes(aligned_vec, center, sel_radius);
    if (sel.members.empty()) log::warn("pipeline: area selection is empty");
    io::write_file(out / "area.csv", recon::export_manifest(sel, pattern));
    log::info("pipeline: selected " + std::to_string(sel.members.size()) + " keyframes");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spelaeo: underwater cave mapping toolkit"};
    app.set_version_flag("--version", std::string("spelaeo ") + kVersion);
    bool quiet = false;
    app.add_flag("--quiet", quiet, "suppress informational logging");
    app.require_subcommand(1);

    FuseArgs fuse_args;
    auto* fuse_cmd = app.add_subcommand("fuse-depth",
                                        "synchronize a trajectory with a dive-computer depth log");
    fuse_cmd->add_option("--trajectory", fuse_args.trajectory, "trajectory CSV")->required();
    fuse_cmd->add_option("--depth-log", fuse_args.depth_log, "depth log CSV")->required();
    fuse_cmd->add_option("--rate", fuse_args.rate, "resampling rate, Hz");
    fuse_cmd->add_option("--max-shift", fuse_args.max_shift, "maximum time shift, seconds");
    fuse_cmd->add_option("--out", fuse_args.out, "corrected trajectory CSV")->required();
    fuse_cmd->add_option("--report", fuse_args.report, "JSON correction report");

    AlignArgs align_args;
    auto* align_cmd =
        app.add_subcommand("align", "co-register a trajectory onto a reference via the shared target");
    align_cmd->add_option("--ref", align_args.ref, "reference trajectory CSV")->required();
    align_cmd->add_option("--ref-obs", align_args.ref_obs, "reference target observations CSV")
        ->required();
    align_cmd->add_option("--mov", align_args.mov, "moving trajectory CSV")->required();
    align_cmd->add_option("--mov-obs", align_args.mov_obs, "moving target observations CSV")
        ->required();
    align_cmd->add_option("--out", align_args.out, "aligned trajectory CSV")->required();
    align_cmd->add_option("--report", align_args.report, "JSON alignment report");
    align_cmd->add_option("--tolerance", align_args.tolerance, "timestamp association tolerance, s");

    SkeletonArgs skel_args;
    auto* skel_cmd = app.add_subcommand("skeleton", "centerline, MST and wall boundaries");
    skel_cmd->add_option("--traj", skel_args.trajs, "aligned trajectory CSV (repeatable)")
        ->required();
    skel_cmd->add_option("--center-index", skel_args.center_index, "index of the center trajectory");
    skel_cmd->add_option("--cloud", skel_args.cloud, "fused point cloud PLY")->required();
    skel_cmd->add_option("--flag-radius", skel_args.flag_radius, "pose flagging radius, m");
    skel_cmd->add_option("--depth-tol", skel_args.depth_tol, "left/right depth gate, m");
    skel_cmd->add_option("--lateral-radius", skel_args.lateral_radius, "up/down cylinder radius, m");
    skel_cmd->add_option("--out-dir", skel_args.out_dir, "output directory")->required();

    SelectArgs select_args;
    auto* select_cmd = app.add_subcommand("select-area", "keyframe selection around a central pose");
    select_cmd->add_option("--traj", select_args.trajs, "trajectory CSV (repeatable)")->required();
    select_cmd->add_option("--center-traj", select_args.center_traj, "trajectory holding the center pose")
        ->required();
    select_cmd->add_option("--center-time", select_args.center_time, "timestamp of the central pose")
        ->required();
    select_cmd->add_option("--radius", select_args.radius, "selection radius, m");
    select_cmd->add_option("--out", select_args.out, "manifest CSV")->required();
    select_cmd->add_option("--pattern", select_args.pattern,
                           "image id pattern with {camera} and {timestamp}");

    auto* survey_cmd = app.add_subcommand("survey", "caveline survey processing");
    survey_cmd->require_subcommand(1);
    SurveyArgs adjust_args;
    auto* adjust_cmd = survey_cmd->add_subcommand("adjust", "least-squares loop-closure adjustment");
    adjust_cmd->add_option("--shots", adjust_args.shots, "survey shots CSV")->required();
    adjust_cmd->add_option("--closures", adjust_args.closures, "loop closures CSV");
    adjust_cmd->add_option("--anchor", adjust_args.anchor, "anchor station")->required();
    adjust_cmd->add_option("--declination", adjust_args.declination, "magnetic declination, degrees");
    adjust_cmd->add_option("--out", adjust_args.out, "adjusted stations CSV")->required();
    adjust_cmd->add_option("--svg", adjust_args.svg, "plan-view stick map SVG");

    SurveyArgs stickmap_args;
    auto* stickmap_cmd = survey_cmd->add_subcommand("stickmap", "dead-reckoned stick map SVG");
    stickmap_cmd->add_option("--shots", stickmap_args.shots, "survey shots CSV")->required();
    stickmap_cmd->add_option("--anchor", stickmap_args.anchor, "anchor station")->required();
    stickmap_cmd->add_option("--declination", stickmap_args.declination,
                             "magnetic declination, degrees");
    stickmap_cmd->add_option("--svg", stickmap_args.svg, "output SVG")->required();

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic fixture bundle");
    synth_cmd->add_option("--spec", synth_args.spec, "corridor spec file")->required();
    synth_cmd->add_option("--out-dir", synth_args.out_dir, "output directory")->required();

    PipelineArgs pipeline_args;
    auto* pipeline_cmd =
        app.add_subcommand("pipeline", "fuse-depth, align, skeleton and select-area from a config");
    pipeline_cmd->add_option("--config", pipeline_args.config, "pipeline config file")->required();
    pipeline_cmd->add_option("--out-dir", pipeline_args.out_dir, "override [pipeline] out_dir");

    for (CLI::App* sub : {fuse_cmd, align_cmd, skel_cmd, select_cmd, adjust_cmd, stickmap_cmd,
                          synth_cmd, pipeline_cmd, survey_cmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        std::cout << app.version() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "[error] " << e.what() << "\n";
        std::cerr << "run '" << (argc > 0 ? argv[0] : "spelaeo") << " --help' for usage\n";
        return 1;
    }
    if (quiet && log::threshold() > log::Level::warn) {
        log::threshold() = log::Level::warn;
    }

    try {
        if (*fuse_cmd) run_fuse_depth(fuse_args);
        if (*align_cmd) run_align(align_args);
        if (*skel_cmd) run_skeleton(skel_args);
        if (*select_cmd) run_select_area(select_args);
        if (*adjust_cmd) run_survey_adjust(adjust_args);
        if (*stickmap_cmd) run_survey_stickmap(stickmap_args);
        if (*synth_cmd) run_synth(synth_args);
        if (*pipeline_cmd) run_pipeline(pipeline_args);
    } catch (const NumericalError& e) {
        log::error(e.what());
        return 3;
    } catch (const ValidationError& e) {
        log::error(e.what());
        return 2;
    } catch (const std::exception& e) {
        log::error(std::string("unexpected: ") + e.what());
        return 2;
    }
    return 0;
}
