#pragma once

// File formats. All CSVs are UTF-8 with '#' comment lines; doubles are
// written in shortest round-trip form, so serialize -> parse is exact and
// identical data always serializes identically.
//
//   trajectory:   timestamp_s,tx,ty,tz,qx,qy,qz,qw
//   depth log:    timestamp_s,depth_m
//   observations: timestamp_s,tx,ty,tz,qx,qy,qz,qw   (camera -> target)
//   point cloud:  ASCII PLY, float/double x y z, optional uchar red green blue
//   skeleton:     nodes.csv / edges.csv / lrud.csv
//   survey out:   station,x_m,y_m,z_m,misclosure_m

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <spelaeo/depth_fusion.hpp>
#include <spelaeo/detail/text.hpp>
#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>
#include <spelaeo/skeleton.hpp>
#include <spelaeo/survey.hpp>
#include <spelaeo/target_align.hpp>

namespace spelaeo::io {

using spelaeo::detail::fmt_double;

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open file: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ValidationError("cannot write file: " + path.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw ValidationError("write failed: " + path.string());
    }
}

inline constexpr std::string_view kPoseCsvHeader = "timestamp_s,tx,ty,tz,qx,qy,qz,qw";
inline constexpr std::string_view kDepthCsvHeader = "timestamp_s,depth_m";

namespace detail_io {

struct TimedPoseRow {
    double timestamp = 0.0;
    Pose pose;
    std::size_t line = 0;
};

inline std::vector<TimedPoseRow> parse_pose_rows(std::string_view text, std::string_view what) {
    std::vector<TimedPoseRow> rows;
    bool header_seen = false;
    spelaeo::detail::for_each_data_line(text, [&](std::size_t line_no, std::string_view line) {
        if (!header_seen) {
            if (line != kPoseCsvHeader) {
                throw ParseError(line_no, std::string(what) + ": expected header '" +
                                              std::string(kPoseCsvHeader) + "'");
            }
            header_seen = true;
            return;
        }
        const auto f = spelaeo::detail::split(line, ',');
        if (f.size() != 8) {
            throw ParseError(line_no, "expected 8 fields, got " + std::to_string(f.size()));
        }
        TimedPoseRow row;
        row.line = line_no;
        row.timestamp = spelaeo::detail::parse_double(f[0], line_no, "timestamp_s");
        const double tx = spelaeo::detail::parse_double(f[1], line_no, "tx");
        const double ty = spelaeo::detail::parse_double(f[2], line_no, "ty");
        const double tz = spelaeo::detail::parse_double(f[3], line_no, "tz");
        const double qx = spelaeo::detail::parse_double(f[4], line_no, "qx");
        const double qy = spelaeo::detail::parse_double(f[5], line_no, "qy");
        const double qz = spelaeo::detail::parse_double(f[6], line_no, "qz");
        const double qw = spelaeo::detail::parse_double(f[7], line_no, "qw");
        try {
            row.pose = Pose::from_xyzw({tx, ty, tz}, qx, qy, qz, qw);
        } catch (const ValidationError& e) {
            throw ParseError(line_no, e.what());
        }
        rows.push_back(row);
    });
    if (!header_seen) {
        throw ParseError(std::string(what) + ": empty file");
    }
    return rows;
}

inline std::string pose_row(double timestamp, const Pose& p) {
    return fmt_double(timestamp) + ',' + fmt_double(p.t.x()) + ',' + fmt_double(p.t.y()) + ',' +
           fmt_double(p.t.z()) + ',' + fmt_double(p.q.x()) + ',' + fmt_double(p.q.y()) + ',' +
           fmt_double(p.q.z()) + ',' + fmt_double(p.q.w()) + '\n';
}

}  // namespace detail_io

inline Trajectory parse_trajectory_csv(std::string_view text, std::string frame_id) {
    Trajectory traj;
    traj.frame_id = std::move(frame_id);
    const auto rows = detail_io::parse_pose_rows(text, "trajectory");
    if (rows.empty()) {
        throw ParseError("trajectory has no samples");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].timestamp <= rows[i - 1].timestamp) {
            throw ParseError(rows[i].line, "timestamps not strictly increasing");
        }
        traj.samples.push_back({rows[i].timestamp, rows[i].pose});
    }
    return traj;
}

inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out(kPoseCsvHeader);
    out += '\n';
    for (const TrajectorySample& s : traj.samples) {
        out += detail_io::pose_row(s.timestamp, s.pose);
    }
    return out;
}

inline depth::DepthLog parse_depth_csv(std::string_view text,
                                       std::vector<std::string>* warnings = nullptr) {
    depth::DepthLog log;
    bool header_seen = false;
    spelaeo::detail::for_each_data_line(text, [&](std::size_t line_no, std::string_view line) {
        if (!header_seen) {
            if (line != kDepthCsvHeader) {
                throw ParseError(line_no, "depth log: expected header '" +
                                              std::string(kDepthCsvHeader) + "'");
            }
            header_seen = true;
            return;
        }
        const auto f = spelaeo::detail::split(line, ',');
        if (f.size() != 2) {
            throw ParseError(line_no, "expected 2 fields, got " + std::to_string(f.size()));
        }
        depth::TimedSample s;
        s.timestamp = spelaeo::detail::parse_double(f[0], line_no, "timestamp_s");
        s.value = spelaeo::detail::parse_double(f[1], line_no, "depth_m");
        if (s.value < 0.0) {
            throw RangeError("line " + std::to_string(line_no) + ": depth must be >= 0");
        }
        if (!log.samples.empty() && s.timestamp <= log.samples.back().timestamp) {
            throw ParseError(line_no, "timestamps not strictly increasing");
        }
        log.samples.push_back(s);
    });
    if (!header_seen || log.samples.empty()) {
        throw ParseError("depth log has no samples");
    }
    // Dive computers log around 0.1 Hz; flag anything far off the nominal 10 s.
    if (warnings && log.samples.size() >= 2) {
        std::vector<double> gaps;
        gaps.reserve(log.samples.size() - 1);
        for (std::size_t i = 1; i < log.samples.size(); ++i) {
            gaps.push_back(log.samples[i].timestamp - log.samples[i - 1].timestamp);
        }
        std::sort(gaps.begin(), gaps.end());
        const double median = gaps[gaps.size() / 2];
        if (median < 5.0 || median > 15.0) {
            warnings->push_back("depth log median spacing " + fmt_double(median) +
                                " s deviates >50% from the nominal 10 s");
        }
    }
    return log;
}

inline std::string depth_csv(const depth::DepthLog& log) {
    std::string out(kDepthCsvHeader);
    out += '\n';
    for (const depth::TimedSample& s : log.samples) {
        out += fmt_double(s.timestamp) + ',' + fmt_double(s.value) + '\n';
    }
    return out;
}

inline std::vector<target::TargetObservation> parse_observations_csv(std::string_view text,
                                                                     std::string camera_id) {
    const auto rows = detail_io::parse_pose_rows(text, "observations");
    std::vector<target::TargetObservation> obs;
    obs.reserve(rows.size());
    for (const auto& row : rows) {
        obs.push_back({row.timestamp, camera_id, row.pose});
    }
    return obs;
}

inline std::string observations_csv(std::span<const target::TargetObservation> obs) {
    std::string out(kPoseCsvHeader);
    out += '\n';
    for (const target::TargetObservation& o : obs) {
        out += detail_io::pose_row(o.timestamp, o.rel_pose);
    }
    return out;
}

// ASCII PLY, vertex element with float/double x y z and optional
// uchar red green blue. Anything else is rejected.
inline skeleton::PointCloud parse_ply(std::string_view text) {
    skeleton::PointCloud cloud;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    const auto next_line = [&](std::string_view& out) {
        if (pos > text.size()) return false;
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        out = spelaeo::detail::trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        return true;
    };

    std::string_view line;
    if (!next_line(line) || line != "ply") {
        throw ParseError(line_no, "not a PLY file (missing 'ply' magic)");
    }
    std::size_t vertex_count = 0;
    bool have_format = false;
    bool in_vertex_element = false;
    bool seen_vertex_element = false;
    std::vector<std::string> vertex_props;
    while (true) {
        if (!next_line(line)) {
            throw ParseError(line_no, "unexpected end of PLY header");
        }
        if (line == "end_header") break;
        const auto tok = spelaeo::detail::split(line, ' ');
        std::vector<std::string_view> t;
        for (auto v : tok) {
            if (!v.empty()) t.push_back(v);
        }
        if (t.empty() || t[0] == "comment") continue;
        if (t[0] == "format") {
            if (t.size() < 2 || t[1] != "ascii") {
                throw ParseError(line_no, "only ascii PLY is supported");
            }
            have_format = true;
        } else if (t[0] == "element") {
            if (t.size() != 3) throw ParseError(line_no, "malformed element line");
            if (t[1] == "vertex") {
                const double raw_count =
                    spelaeo::detail::parse_double(t[2], line_no, "vertex count");
                if (raw_count < 0.0 || raw_count > 1e9 ||
                    raw_count != std::floor(raw_count)) {
                    throw ParseError(line_no, "invalid vertex count");
                }
                vertex_count = static_cast<std::size_t>(raw_count);
                in_vertex_element = true;
                seen_vertex_element = true;
            } else {
                if (!seen_vertex_element) {
                    throw ParseError(line_no, "unsupported leading element '" + std::string(t[1]) +
                                                  "' before vertex");
                }
                in_vertex_element = false;
            }
        } else if (t[0] == "property" && in_vertex_element) {
            if (t.size() == 3) {
                vertex_props.emplace_back(t[2]);
            } else {
                throw ParseError(line_no, "unsupported property layout");
            }
        }
    }
    if (!have_format || !seen_vertex_element) {
        throw ParseError(line_no, "PLY header missing format or vertex element");
    }
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    for (std::size_t i = 0; i < vertex_props.size(); ++i) {
        const std::string& p = vertex_props[i];
        const int idx = static_cast<int>(i);
        if (p == "x") ix = idx;
        if (p == "y") iy = idx;
        if (p == "z") iz = idx;
        if (p == "red") ir = idx;
        if (p == "green") ig = idx;
        if (p == "blue") ib = idx;
    }
    if (ix < 0 || iy < 0 || iz < 0) {
        throw ParseError(line_no, "PLY vertex element lacks x/y/z properties");
    }
    const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;

    cloud.points.reserve(vertex_count);
    for (std::size_t v = 0; v < vertex_count; ++v) {
        if (!next_line(line) || line.empty()) {
            throw ParseError(line_no, "truncated PLY: expected " + std::to_string(vertex_count) +
                                          " vertices, got " + std::to_string(v));
        }
        const auto tok = spelaeo::detail::split(line, ' ');
        std::vector<std::string_view> t;
        for (auto f : tok) {
            if (!f.empty()) t.push_back(f);
        }
        if (t.size() < vertex_props.size()) {
            throw ParseError(line_no, "vertex row has " + std::to_string(t.size()) +
                                          " fields, expected " +
                                          std::to_string(vertex_props.size()));
        }
        const double x = spelaeo::detail::parse_double(t[static_cast<std::size_t>(ix)], line_no, "x");
        const double y = spelaeo::detail::parse_double(t[static_cast<std::size_t>(iy)], line_no, "y");
        const double z = spelaeo::detail::parse_double(t[static_cast<std::size_t>(iz)], line_no, "z");
        cloud.points.emplace_back(x, y, z);
        if (has_color) {
            const auto channel = [&](int idx) {
                const double c =
                    spelaeo::detail::parse_double(t[static_cast<std::size_t>(idx)], line_no, "color");
                if (c < 0.0 || c > 255.0) {
                    throw ParseError(line_no, "color channel out of range");
                }
                return static_cast<std::uint8_t>(c);
            };
            cloud.colors.push_back({channel(ir), channel(ig), channel(ib)});
        }
    }
    cloud.validate();
    return cloud;
}

inline std::string ply(const skeleton::PointCloud& cloud) {
    cloud.validate();
    const bool has_color = !cloud.colors.empty();
    std::string out = "ply\nformat ascii 1.0\nelement vertex " +
                      std::to_string(cloud.points.size()) +
                      "\nproperty double x\nproperty double y\nproperty double z\n";
    if (has_color) {
        out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    out += "end_header\n";
    for (std::size_t i = 0; i < cloud.points.size(); ++i) {
        const Vec3& p = cloud.points[i];
        out += fmt_double(p.x()) + ' ' + fmt_double(p.y()) + ' ' + fmt_double(p.z());
        if (has_color) {
            out += ' ' + std::to_string(cloud.colors[i][0]) + ' ' +
                   std::to_string(cloud.colors[i][1]) + ' ' + std::to_string(cloud.colors[i][2]);
        }
        out += '\n';
    }
    return out;
}

inline std::string nodes_csv(std::span<const skeleton::CenterlineNode> nodes) {
    std::string out = "id,tx,ty,tz,qx,qy,qz,qw,source_count\n";
    for (const skeleton::CenterlineNode& n : nodes) {
        const Pose& p = n.pose;
        out += std::to_string(n.id) + ',' + fmt_double(p.t.x()) + ',' + fmt_double(p.t.y()) + ',' +
               fmt_double(p.t.z()) + ',' + fmt_double(p.q.x()) + ',' + fmt_double(p.q.y()) + ',' +
               fmt_double(p.q.z()) + ',' + fmt_double(p.q.w()) + ',' +
               std::to_string(n.source_count) + '\n';
    }
    return out;
}

inline std::string edges_csv(std::span<const skeleton::SkeletonEdge> edges) {
    std::string out = "a,b,length_m\n";
    for (const skeleton::SkeletonEdge& e : edges) {
        out += std::to_string(e.a) + ',' + std::to_string(e.b) + ',' + fmt_double(e.length) + '\n';
    }
    return out;
}

inline std::string lrud_csv(std::span<const skeleton::LrudEntry> lrud) {
    std::string out =
        "id,left_x,left_y,left_z,left_d,right_x,right_y,right_z,right_d,"
        "up_x,up_y,up_z,up_d,down_x,down_y,down_z,down_d\n";
    const auto side = [](const std::optional<skeleton::Boundary>& b) {
        if (!b) return std::string(",,,");
        return fmt_double(b->point.x()) + ',' + fmt_double(b->point.y()) + ',' +
               fmt_double(b->point.z()) + ',' + fmt_double(b->distance);
    };
    for (std::size_t i = 0; i < lrud.size(); ++i) {
        const skeleton::LrudEntry& e = lrud[i];
        out += std::to_string(i) + ',' + side(e.left) + ',' + side(e.right) + ',' + side(e.up) +
               ',' + side(e.down) + '\n';
    }
    return out;
}

inline std::string stations_csv(const survey::StickMap& map) {
    std::string out = "station,x_m,y_m,z_m,misclosure_m\n";
    for (const auto& [name, p] : map.stations) {
        const auto mit = map.misclosures.find(name);
        out += name + ',' + fmt_double(p.x()) + ',' + fmt_double(p.y()) + ',' + fmt_double(p.z()) +
               ',' + (mit == map.misclosures.end() ? std::string() : fmt_double(mit->second)) +
               '\n';
    }
    return out;
}

// Convenience file wrappers.

inline Trajectory load_trajectory(const std::filesystem::path& path, std::string frame_id = {}) {
    if (frame_id.empty()) frame_id = path.stem().string();
    return parse_trajectory_csv(read_file(path), std::move(frame_id));
}

inline depth::DepthLog load_depth_log(const std::filesystem::path& path,
                                      std::vector<std::string>* warnings = nullptr) {
    return parse_depth_csv(read_file(path), warnings);
}

inline std::vector<target::TargetObservation> load_observations(const std::filesystem::path& path,
                                                                std::string camera_id = {}) {
    if (camera_id.empty()) camera_id = path.stem().string();
    return parse_observations_csv(read_file(path), std::move(camera_id));
}

inline skeleton::PointCloud load_ply(const std::filesystem::path& path) {
    return parse_ply(read_file(path));
}

}  // namespace spelaeo::io
