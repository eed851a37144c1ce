#pragma once

// Caveline survey processing: shot parsing, dead reckoning into a stick map,
// and weighted least-squares loop-closure adjustment.
//
// Coordinates: x east, y north, z down (meters), anchor station at the
// origin. Station depths are measured absolutely by the dive computer, so the
// adjustment solves x/y only and pins every station's z to its mean recorded
// depth relative to the anchor's. Horizontal residuals are weighted 1/length
// (compass error grows displacement error with shot length). Closure pairs
// are merged into a single unknown, so closures are satisfied exactly.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <spelaeo/detail/text.hpp>
#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>

namespace spelaeo::survey {

struct SurveySegment {
    std::string from_station;
    std::string to_station;
    double length = 0.0;        // meters, > 0
    double azimuth_in = 0.0;    // degrees clockwise from north, [0, 360)
    double azimuth_out = 0.0;
    double depth_from = 0.0;    // meters positive-down, >= 0
    double depth_to = 0.0;
};

struct SurveyNetwork {
    std::vector<SurveySegment> segments;
    std::vector<std::pair<std::string, std::string>> closures;
    double declination = 0.0;  // degrees, already folded into the azimuths
};

struct StickMap {
    std::map<std::string, Vec3> stations;       // anchor at origin
    std::vector<double> segment_residuals;      // per input segment, meters
    std::map<std::string, double> misclosures;  // stations reached by >1 path
};

inline constexpr std::string_view kShotsHeader =
    "from,to,length_m,azimuth_in_deg,azimuth_out_deg,depth_from_m,depth_to_m";
inline constexpr std::string_view kClosuresHeader = "station_a,station_b";

inline SurveyNetwork parse_survey(std::string_view text, double declination_deg = 0.0) {
    SurveyNetwork net;
    net.declination = declination_deg;
    bool header_seen = false;
    spelaeo::detail::for_each_data_line(text, [&](std::size_t line_no, std::string_view line) {
        if (!header_seen) {
            if (line != kShotsHeader) {
                throw ParseError(line_no, "expected header '" + std::string(kShotsHeader) + "'");
            }
            header_seen = true;
            return;
        }
        const auto fields = spelaeo::detail::split(line, ',');
        if (fields.size() != 7) {
            throw ParseError(line_no, "expected 7 fields, got " + std::to_string(fields.size()));
        }
        SurveySegment seg;
        seg.from_station = std::string(fields[0]);
        seg.to_station = std::string(fields[1]);
        if (seg.from_station.empty() || seg.to_station.empty()) {
            throw ParseError(line_no, "empty station name");
        }
        seg.length = spelaeo::detail::parse_double(fields[2], line_no, "length_m");
        seg.azimuth_in = spelaeo::detail::parse_double(fields[3], line_no, "azimuth_in_deg");
        seg.azimuth_out = spelaeo::detail::parse_double(fields[4], line_no, "azimuth_out_deg");
        seg.depth_from = spelaeo::detail::parse_double(fields[5], line_no, "depth_from_m");
        seg.depth_to = spelaeo::detail::parse_double(fields[6], line_no, "depth_to_m");

        if (!(seg.length > 0.0)) {
            throw RangeError("line " + std::to_string(line_no) + ": length must be > 0");
        }
        for (const auto& [name, az] :
             {std::pair{"azimuth_in_deg", seg.azimuth_in}, {"azimuth_out_deg", seg.azimuth_out}}) {
            if (az < 0.0 || az >= 360.0) {
                throw RangeError("line " + std::to_string(line_no) + ": " + name + " " +
                                 spelaeo::detail::fmt_double(az) + " out of range [0, 360)");
            }
        }
        if (seg.depth_from < 0.0 || seg.depth_to < 0.0) {
            throw RangeError("line " + std::to_string(line_no) + ": depths must be >= 0");
        }
        // Magnetic-to-true rotation, wrapped back into [0, 360).
        const auto rotated = [&](double az) {
            double a = std::fmod(az + declination_deg, 360.0);
            if (a < 0.0) a += 360.0;
            return a;
        };
        seg.azimuth_in = rotated(seg.azimuth_in);
        seg.azimuth_out = rotated(seg.azimuth_out);
        net.segments.push_back(std::move(seg));
    });
    if (net.segments.empty()) {
        throw ParseError("no segments");
    }
    return net;
}

inline std::vector<std::pair<std::string, std::string>> parse_closures(
    std::string_view text, const SurveyNetwork& net) {
    std::set<std::string> stations;
    for (const SurveySegment& seg : net.segments) {
        stations.insert(seg.from_station);
        stations.insert(seg.to_station);
    }
    std::vector<std::pair<std::string, std::string>> closures;
    bool header_seen = false;
    spelaeo::detail::for_each_data_line(text, [&](std::size_t line_no, std::string_view line) {
        if (!header_seen) {
            if (line != kClosuresHeader) {
                throw ParseError(line_no,
                                 "expected header '" + std::string(kClosuresHeader) + "'");
            }
            header_seen = true;
            return;
        }
        const auto fields = spelaeo::detail::split(line, ',');
        if (fields.size() != 2) {
            throw ParseError(line_no, "expected 2 fields, got " + std::to_string(fields.size()));
        }
        const std::string a(fields[0]);
        const std::string b(fields[1]);
        for (const std::string& s : {a, b}) {
            if (!stations.count(s)) {
                throw ParseError(line_no, "unknown station '" + s + "'");
            }
        }
        closures.emplace_back(a, b);
    });
    return closures;
}

// Displacement (east, north, down) implied by one shot. The azimuth is the
// circular mean of the two endpoint readings; the horizontal run comes from
// the depth change by Pythagoras.
inline Vec3 segment_displacement(const SurveySegment& seg) {
    const double dz = seg.depth_to - seg.depth_from;
    if (std::abs(dz) > seg.length * (1.0 + 1e-6)) {
        throw InconsistentSegment("segment " + seg.from_station + "->" + seg.to_station +
                                  ": depth change " + spelaeo::detail::fmt_double(dz) +
                                  " exceeds length " + spelaeo::detail::fmt_double(seg.length));
    }
    const double h = std::sqrt(std::max(0.0, seg.length * seg.length - dz * dz));
    const std::array<double, 2> azimuths = {deg2rad(seg.azimuth_in), deg2rad(seg.azimuth_out)};
    const double az = circular_mean(azimuths);
    return {h * std::sin(az), h * std::cos(az), dz};
}

namespace detail {

inline std::vector<Vec3> segment_displacements(const SurveyNetwork& net) {
    std::vector<Vec3> d;
    d.reserve(net.segments.size());
    for (const SurveySegment& seg : net.segments) {
        d.push_back(segment_displacement(seg));
    }
    return d;
}

inline std::set<std::string> station_names(const SurveyNetwork& net) {
    std::set<std::string> names;
    for (const SurveySegment& seg : net.segments) {
        names.insert(seg.from_station);
        names.insert(seg.to_station);
    }
    return names;
}

}  // namespace detail

// Breadth-first accumulation of shot displacements from the anchor. A station
// reached again by another path keeps its first coordinate; the largest
// discrepancy seen is recorded as that station's misclosure.
inline StickMap dead_reckon(const SurveyNetwork& net, const std::string& anchor) {
    if (net.segments.empty()) {
        throw EmptyInput("dead_reckon: no segments");
    }
    const std::set<std::string> names = detail::station_names(net);
    if (!names.count(anchor)) {
        throw ValidationError("dead_reckon: anchor station '" + anchor + "' not in survey");
    }
    const std::vector<Vec3> disp = detail::segment_displacements(net);

    StickMap map;
    map.stations[anchor] = Vec3::Zero();
    std::deque<std::string> queue{anchor};
    while (!queue.empty()) {
        const std::string s = queue.front();
        queue.pop_front();
        const Vec3 base = map.stations.at(s);
        for (std::size_t i = 0; i < net.segments.size(); ++i) {
            const SurveySegment& seg = net.segments[i];
            std::string neighbor;
            Vec3 d;
            if (seg.from_station == s) {
                neighbor = seg.to_station;
                d = disp[i];
            } else if (seg.to_station == s) {
                neighbor = seg.from_station;
                d = -disp[i];
            } else {
                continue;
            }
            const Vec3 candidate = base + d;
            const auto it = map.stations.find(neighbor);
            if (it == map.stations.end()) {
                map.stations[neighbor] = candidate;
                queue.push_back(neighbor);
            } else {
                const double mis = (it->second - candidate).norm();
                auto mit = map.misclosures.find(neighbor);
                if (mit == map.misclosures.end()) {
                    map.misclosures[neighbor] = mis;
                } else {
                    mit->second = std::max(mit->second, mis);
                }
            }
        }
    }
    if (map.stations.size() != names.size()) {
        std::string missing;
        for (const std::string& n : names) {
            if (!map.stations.count(n)) {
                missing += missing.empty() ? n : ", " + n;
            }
        }
        throw DisconnectedStation("dead_reckon: unreachable stations: " + missing);
    }
    map.segment_residuals.reserve(net.segments.size());
    for (std::size_t i = 0; i < net.segments.size(); ++i) {
        const SurveySegment& seg = net.segments[i];
        map.segment_residuals.push_back(
            (map.stations.at(seg.to_station) - map.stations.at(seg.from_station) - disp[i]).norm());
    }
    return map;
}

namespace detail {

// Union-find with the lexicographically smallest member as representative,
// so station merging is deterministic.
class StationMerge {
public:
    explicit StationMerge(const std::set<std::string>& names) {
        for (const std::string& n : names) parent_[n] = n;
    }

    const std::string& find(const std::string& s) {
        auto it = parent_.find(s);
        if (it == parent_.end()) {
            throw ValidationError("unknown station '" + s + "'");
        }
        if (it->second == s) return it->first;
        const std::string root = find(it->second);
        it->second = root;
        return parent_.find(root)->first;
    }

    void merge(const std::string& a, const std::string& b) {
        const std::string ra = find(a);
        const std::string rb = find(b);
        if (ra == rb) return;
        if (ra < rb) {
            parent_[rb] = ra;
        } else {
            parent_[ra] = rb;
        }
    }

private:
    std::map<std::string, std::string> parent_;
};

}  // namespace detail

// Weighted least-squares adjustment over station positions: closure pairs
// collapse into one unknown, depths are pinned, the anchor sits at the
// origin, and the normal equations are solved per horizontal axis.
inline StickMap adjust_loops(const SurveyNetwork& net, const std::string& anchor) {
    if (net.segments.empty()) {
        throw EmptyInput("adjust_loops: no segments");
    }
    const std::set<std::string> names = detail::station_names(net);
    if (!names.count(anchor)) {
        throw ValidationError("adjust_loops: anchor station '" + anchor + "' not in survey");
    }
    const std::vector<Vec3> disp = detail::segment_displacements(net);

    detail::StationMerge merge(names);
    for (const auto& [a, b] : net.closures) {
        merge.merge(a, b);
    }

    // Mean recorded depth per merged station.
    std::map<std::string, std::pair<double, int>> depth_acc;
    for (const SurveySegment& seg : net.segments) {
        auto& from_acc = depth_acc[merge.find(seg.from_station)];
        from_acc.first += seg.depth_from;
        from_acc.second += 1;
        auto& to_acc = depth_acc[merge.find(seg.to_station)];
        to_acc.first += seg.depth_to;
        to_acc.second += 1;
    }
    const std::string anchor_rep = merge.find(anchor);
    const auto mean_depth = [&](const std::string& rep) {
        const auto& [sum, cnt] = depth_acc.at(rep);
        return sum / static_cast<double>(cnt);
    };
    const double anchor_depth = mean_depth(anchor_rep);

    // Connectivity over merged stations.
    std::map<std::string, std::vector<std::string>> adj;
    for (const SurveySegment& seg : net.segments) {
        const std::string rf = merge.find(seg.from_station);
        const std::string rt = merge.find(seg.to_station);
        adj[rf].push_back(rt);
        adj[rt].push_back(rf);
    }
    std::set<std::string> reachable{anchor_rep};
    std::deque<std::string> queue{anchor_rep};
    while (!queue.empty()) {
        const std::string s = queue.front();
        queue.pop_front();
        for (const std::string& n : adj[s]) {
            if (reachable.insert(n).second) {
                queue.push_back(n);
            }
        }
    }
    {
        std::string missing;
        for (const std::string& n : names) {
            if (!reachable.count(merge.find(n))) {
                missing += missing.empty() ? n : ", " + n;
            }
        }
        if (!missing.empty()) {
            throw DisconnectedStation("adjust_loops: unreachable stations: " + missing);
        }
    }

    // Unknown index per merged station (anchor excluded), in name order.
    std::map<std::string, int> index;
    for (const std::string& rep : reachable) {
        if (rep != anchor_rep) {
            index.emplace(rep, static_cast<int>(index.size()));
        }
    }
    const int m = static_cast<int>(index.size());

    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd bx = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd by = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < net.segments.size(); ++i) {
        const std::string rf = merge.find(net.segments[i].from_station);
        const std::string rt = merge.find(net.segments[i].to_station);
        if (rf == rt) continue;  // closure collapsed this shot; constant residual
        const double w = 1.0 / (net.segments[i].length * net.segments[i].length);
        const int fi = rf == anchor_rep ? -1 : index.at(rf);
        const int ti = rt == anchor_rep ? -1 : index.at(rt);
        if (fi >= 0) {
            normal(fi, fi) += w;
            bx(fi) -= w * disp[i].x();
            by(fi) -= w * disp[i].y();
        }
        if (ti >= 0) {
            normal(ti, ti) += w;
            bx(ti) += w * disp[i].x();
            by(ti) += w * disp[i].y();
        }
        if (fi >= 0 && ti >= 0) {
            normal(fi, ti) -= w;
            normal(ti, fi) -= w;
        }
    }

    Eigen::VectorXd sol_x(m), sol_y(m);
    if (m > 0) {
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
        if (ldlt.info() != Eigen::Success) {
            throw SingularSystem("adjust_loops: normal equations are singular");
        }
        sol_x = ldlt.solve(bx);
        sol_y = ldlt.solve(by);
        const double scale = std::max(1.0, bx.norm() + by.norm());
        if ((normal * sol_x - bx).norm() + (normal * sol_y - by).norm() > 1e-6 * scale) {
            throw SingularSystem("adjust_loops: under-constrained component");
        }
    }

    StickMap map;
    for (const std::string& name : names) {
        const std::string rep = merge.find(name);
        Vec3 p = Vec3::Zero();
        if (rep != anchor_rep) {
            const int idx = index.at(rep);
            p.x() = sol_x(idx);
            p.y() = sol_y(idx);
        }
        p.z() = mean_depth(rep) - anchor_depth;
        map.stations[name] = p;
    }
    map.segment_residuals.reserve(net.segments.size());
    for (std::size_t i = 0; i < net.segments.size(); ++i) {
        const SurveySegment& seg = net.segments[i];
        map.segment_residuals.push_back(
            (map.stations.at(seg.to_station) - map.stations.at(seg.from_station) - disp[i]).norm());
    }
    return map;
}

// Plan-view SVG: x east to the right, y north up; one <line> per segment,
// labeled station dots, a 10 m scale bar (drawn as a <rect>).
inline std::string stickmap_svg(const StickMap& map, const SurveyNetwork& net) {
    if (map.stations.empty()) {
        throw EmptyInput("stickmap_svg: no stations");
    }
    double min_x = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();
    for (const auto& [name, p] : map.stations) {
        min_x = std::min(min_x, p.x());
        max_x = std::max(max_x, p.x());
        min_y = std::min(min_y, p.y());
        max_y = std::max(max_y, p.y());
    }
    const double extent = std::max({max_x - min_x, max_y - min_y, 1e-6});
    const double scale = 760.0 / extent;
    const double margin = 40.0;
    const double width = (max_x - min_x) * scale + 2.0 * margin;
    const double height = (max_y - min_y) * scale + 2.0 * margin + 30.0;  // room for scale bar
    const auto sx = [&](double x) { return margin + (x - min_x) * scale; };
    const auto sy = [&](double y) { return margin + (max_y - y) * scale; };
    const auto px = [](double v) { return spelaeo::detail::fmt_fixed(v, 2); };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(width) + "\" height=\"" +
           px(height) + "\" viewBox=\"0 0 " + px(width) + " " + px(height) + "\">\n";
    for (const SurveySegment& seg : net.segments) {
        const auto fit = map.stations.find(seg.from_station);
        const auto tit = map.stations.find(seg.to_station);
        if (fit == map.stations.end() || tit == map.stations.end()) continue;
        svg += "  <line x1=\"" + px(sx(fit->second.x())) + "\" y1=\"" + px(sy(fit->second.y())) +
               "\" x2=\"" + px(sx(tit->second.x())) + "\" y2=\"" + px(sy(tit->second.y())) +
               "\" stroke=\"#345\" stroke-width=\"2\"/>\n";
    }
    for (const auto& [name, p] : map.stations) {
        svg += "  <circle cx=\"" + px(sx(p.x())) + "\" cy=\"" + px(sy(p.y())) +
               "\" r=\"3\" fill=\"#c2322d\"/>\n";
        svg += "  <text x=\"" + px(sx(p.x()) + 5.0) + "\" y=\"" + px(sy(p.y()) - 5.0) +
               "\" font-size=\"10\" font-family=\"sans-serif\">" + name + " (" +
               spelaeo::detail::fmt_fixed(p.z(), 1) + " m)</text>\n";
    }
    const double bar_y = height - 18.0;
    svg += "  <rect x=\"" + px(margin) + "\" y=\"" + px(bar_y) + "\" width=\"" +
           px(10.0 * scale) + "\" height=\"3\" fill=\"#000\"/>\n";
    svg += "  <text x=\"" + px(margin) + "\" y=\"" + px(bar_y - 4.0) +
           "\" font-size=\"10\" font-family=\"sans-serif\">10 m</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace spelaeo::survey
