#pragma once

// Keyframe selection around a central pose and pose-prior manifest export for
// an external dense-reconstruction tool. Distance is position-only.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <spelaeo/detail/text.hpp>
#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>

namespace spelaeo::recon {

struct SelectedKeyframe {
    std::string camera_id;
    double timestamp = 0.0;
    Pose pose;
};

struct AreaSelection {
    Pose center;
    double radius = 0.0;
    std::vector<SelectedKeyframe> members;  // sorted by (camera_id, timestamp)
};

inline AreaSelection select_keyframes(std::span<const Trajectory> trajs, const Pose& center,
                                      double radius) {
    if (!(radius > 0.0)) {
        throw ValidationError("select_keyframes: radius must be > 0");
    }
    AreaSelection sel;
    sel.center = center;
    sel.radius = radius;
    for (const Trajectory& traj : trajs) {
        for (const TrajectorySample& s : traj.samples) {
            if ((s.pose.t - center.t).norm() <= radius) {
                sel.members.push_back({traj.frame_id, s.timestamp, s.pose});
            }
        }
    }
    std::stable_sort(sel.members.begin(), sel.members.end(),
                     [](const SelectedKeyframe& a, const SelectedKeyframe& b) {
                         return a.camera_id != b.camera_id ? a.camera_id < b.camera_id
                                                           : a.timestamp < b.timestamp;
                     });
    return sel;
}

inline constexpr std::string_view kManifestHeader =
    "image_id,camera_id,timestamp_s,tx,ty,tz,qx,qy,qz,qw";

namespace detail {

inline std::string substitute(std::string pattern, std::string_view placeholder,
                              std::string_view value) {
    std::size_t pos = 0;
    while ((pos = pattern.find(placeholder, pos)) != std::string::npos) {
        pattern.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
    return pattern;
}

}  // namespace detail

// CSV manifest, one row per member. The pattern must contain both {camera}
// and {timestamp}; timestamps inside image ids are fixed to 6 decimals.
inline std::string export_manifest(const AreaSelection& sel, std::string_view image_name_pattern) {
    const std::string pattern(image_name_pattern);
    if (pattern.find("{camera}") == std::string::npos ||
        pattern.find("{timestamp}") == std::string::npos) {
        throw PatternError("image name pattern must contain {camera} and {timestamp}");
    }
    std::string out(kManifestHeader);
    out += '\n';
    for (const SelectedKeyframe& kf : sel.members) {
        std::string image_id = detail::substitute(pattern, "{camera}", kf.camera_id);
        image_id =
            detail::substitute(image_id, "{timestamp}", spelaeo::detail::fmt_fixed(kf.timestamp, 6));
        const Pose& p = kf.pose;
        out += image_id + ',' + kf.camera_id + ',' + spelaeo::detail::fmt_double(kf.timestamp) +
               ',' + spelaeo::detail::fmt_double(p.t.x()) + ',' +
               spelaeo::detail::fmt_double(p.t.y()) + ',' + spelaeo::detail::fmt_double(p.t.z()) +
               ',' + spelaeo::detail::fmt_double(p.q.x()) + ',' +
               spelaeo::detail::fmt_double(p.q.y()) + ',' + spelaeo::detail::fmt_double(p.q.z()) +
               ',' + spelaeo::detail::fmt_double(p.q.w()) + '\n';
    }
    return out;
}

inline std::vector<SelectedKeyframe> parse_manifest(std::string_view text) {
    std::vector<SelectedKeyframe> members;
    bool header_seen = false;
    spelaeo::detail::for_each_data_line(text, [&](std::size_t line_no, std::string_view line) {
        if (!header_seen) {
            if (line != kManifestHeader) {
                throw ParseError(line_no, "expected header '" + std::string(kManifestHeader) + "'");
            }
            header_seen = true;
            return;
        }
        const auto f = spelaeo::detail::split(line, ',');
        if (f.size() != 10) {
            throw ParseError(line_no, "expected 10 fields, got " + std::to_string(f.size()));
        }
        SelectedKeyframe kf;
        kf.camera_id = std::string(f[1]);
        kf.timestamp = spelaeo::detail::parse_double(f[2], line_no, "timestamp_s");
        const double tx = spelaeo::detail::parse_double(f[3], line_no, "tx");
        const double ty = spelaeo::detail::parse_double(f[4], line_no, "ty");
        const double tz = spelaeo::detail::parse_double(f[5], line_no, "tz");
        const double qx = spelaeo::detail::parse_double(f[6], line_no, "qx");
        const double qy = spelaeo::detail::parse_double(f[7], line_no, "qy");
        const double qz = spelaeo::detail::parse_double(f[8], line_no, "qz");
        const double qw = spelaeo::detail::parse_double(f[9], line_no, "qw");
        kf.pose = Pose::from_xyzw({tx, ty, tz}, qx, qy, qz, qw);
        members.push_back(std::move(kf));
    });
    if (!header_seen) {
        throw ParseError("manifest has no header");
    }
    return members;
}

}  // namespace spelaeo::recon
