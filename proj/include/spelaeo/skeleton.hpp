#pragma once

// One-dimensional retract of the cave: average the aligned trajectories into
// centerline nodes (greedy flag sweep along the center trajectory), connect
// the nodes with a Euclidean minimum spanning tree, and pick wall/ceiling/
// floor boundary points from the fused sparse cloud.
//
// Frame convention: z is water depth, positive down. Ceiling points have
// smaller z than the node, floor points larger z.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>

namespace spelaeo::skeleton {

struct PointCloud {
    std::vector<Vec3> points;
    std::vector<std::array<std::uint8_t, 3>> colors;  // empty, or one per point

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!points[i].allFinite()) {
                throw ValidationError("point cloud: non-finite coordinate at point " +
                                      std::to_string(i));
            }
        }
        if (!colors.empty() && colors.size() != points.size()) {
            throw ValidationError("point cloud: color count does not match point count");
        }
    }
};

struct CenterlineNode {
    int id = 0;
    Pose pose;
    int source_count = 0;  // flagged poses absorbed into this node
};

struct SkeletonEdge {
    int a = 0;  // a < b
    int b = 0;
    double length = 0.0;
};

struct Boundary {
    Vec3 point = Vec3::Zero();
    double distance = 0.0;  // horizontal for left/right, vertical for up/down
};

struct LrudEntry {
    std::optional<Boundary> left, right, up, down;
    int lateral_candidates = 0;   // cloud points passing the depth gate
    int vertical_candidates = 0;  // cloud points inside the lateral cylinder
};

struct CaveSkeleton {
    std::vector<CenterlineNode> nodes;
    std::vector<SkeletonEdge> edges;
    std::vector<LrudEntry> lrud;  // parallel to nodes
};

struct PoseRef {
    int trajectory = 0;
    int sample = 0;
};

struct SkeletonParams {
    int center_index = 0;
    double flag_radius = 1.0;     // meters
    double depth_tol = 0.2;       // meters, left/right depth gate
    double lateral_radius = 0.5;  // meters, up/down cylinder radius
};

namespace detail {

// Uniform grid over pose positions; cell size = radius so a radius query only
// touches the 27 neighboring cells.
class PoseGrid {
public:
    PoseGrid(std::span<const Vec3> positions, double cell) : cell_(cell) {
        for (std::size_t i = 0; i < positions.size(); ++i) {
            cells_[key(positions[i])].push_back(static_cast<int>(i));
        }
    }

    template <typename Fn>
    void for_each_near(const Vec3& p, Fn&& fn) const {
        const auto [cx, cy, cz] = coords(p);
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    const auto it = cells_.find(std::make_tuple(cx + dx, cy + dy, cz + dz));
                    if (it == cells_.end()) continue;
                    for (int idx : it->second) fn(idx);
                }
            }
        }
    }

private:
    std::tuple<int, int, int> coords(const Vec3& p) const {
        return {static_cast<int>(std::floor(p.x() / cell_)),
                static_cast<int>(std::floor(p.y() / cell_)),
                static_cast<int>(std::floor(p.z() / cell_))};
    }
    std::tuple<int, int, int> key(const Vec3& p) const { return coords(p); }

    double cell_;
    std::map<std::tuple<int, int, int>, std::vector<int>> cells_;
};

}  // namespace detail

// Greedy flag sweep: walk the center trajectory in time order; each not-yet-
// flagged center pose flags every unflagged pose (all trajectories) within
// flag_radius and emits the mean of that set as a node. Poses of the other
// trajectories that never fall inside any sweep radius stay unabsorbed; the
// optional provenance output records exactly which pose went where.
inline std::vector<CenterlineNode> average_trajectory(
    std::span<const Trajectory> trajs, int center_index, double flag_radius,
    std::vector<std::vector<PoseRef>>* provenance = nullptr) {
    if (trajs.empty()) {
        throw EmptyTrajectory("average_trajectory: no trajectories");
    }
    if (center_index < 0 || center_index >= static_cast<int>(trajs.size())) {
        throw ValidationError("average_trajectory: center index " +
                              std::to_string(center_index) + " out of range");
    }
    if (!(flag_radius > 0.0)) {
        throw ValidationError("average_trajectory: flag_radius must be > 0");
    }
    for (const Trajectory& t : trajs) {
        t.validate();
    }

    std::vector<PoseRef> refs;
    std::vector<Vec3> positions;
    std::vector<int> center_start(trajs.size(), 0);
    for (std::size_t ti = 0; ti < trajs.size(); ++ti) {
        center_start[ti] = static_cast<int>(refs.size());
        for (std::size_t si = 0; si < trajs[ti].samples.size(); ++si) {
            refs.push_back({static_cast<int>(ti), static_cast<int>(si)});
            positions.push_back(trajs[ti].samples[si].pose.t);
        }
    }
    std::vector<char> flagged(refs.size(), 0);
    const detail::PoseGrid grid(positions, flag_radius);

    std::vector<CenterlineNode> nodes;
    if (provenance) provenance->clear();
    const Trajectory& center = trajs[static_cast<std::size_t>(center_index)];
    for (std::size_t si = 0; si < center.samples.size(); ++si) {
        const int gi = center_start[static_cast<std::size_t>(center_index)] + static_cast<int>(si);
        if (flagged[static_cast<std::size_t>(gi)]) continue;
        const Vec3& c = positions[static_cast<std::size_t>(gi)];

        std::vector<int> members;
        grid.for_each_near(c, [&](int idx) {
            if (!flagged[static_cast<std::size_t>(idx)] &&
                (positions[static_cast<std::size_t>(idx)] - c).norm() <= flag_radius) {
                members.push_back(idx);
            }
        });
        std::sort(members.begin(), members.end());

        std::vector<Pose> member_poses;
        member_poses.reserve(members.size());
        std::vector<PoseRef> member_refs;
        for (int idx : members) {
            flagged[static_cast<std::size_t>(idx)] = 1;
            const PoseRef& r = refs[static_cast<std::size_t>(idx)];
            member_poses.push_back(
                trajs[static_cast<std::size_t>(r.trajectory)].samples[static_cast<std::size_t>(r.sample)].pose);
            member_refs.push_back(r);
        }
        CenterlineNode node;
        node.id = static_cast<int>(nodes.size());
        node.pose = mean_pose(member_poses);
        node.source_count = static_cast<int>(member_poses.size());
        nodes.push_back(node);
        if (provenance) provenance->push_back(std::move(member_refs));
    }
    return nodes;
}

// Euclidean MST over the complete node graph (Prim). Edge order is made total
// by breaking weight ties on the (min id, max id) pair, so the result is
// unique and reproducible by any algorithm using the same order.
inline std::vector<SkeletonEdge> build_mst(std::span<const CenterlineNode> nodes) {
    const std::size_t n = nodes.size();
    if (n == 0) {
        throw EmptyInput("build_mst: no nodes");
    }
    std::vector<SkeletonEdge> edges;
    if (n == 1) return edges;

    const auto edge_less = [](double d1, int a1, int b1, double d2, int a2, int b2) {
        if (d1 != d2) return d1 < d2;
        const int lo1 = std::min(a1, b1), hi1 = std::max(a1, b1);
        const int lo2 = std::min(a2, b2), hi2 = std::max(a2, b2);
        if (lo1 != lo2) return lo1 < lo2;
        return hi1 < hi2;
    };

    std::vector<char> used(n, 0);
    std::vector<double> best_d(n, std::numeric_limits<double>::infinity());
    std::vector<int> best_from(n, 0);
    used[0] = 1;
    for (std::size_t v = 1; v < n; ++v) {
        best_d[v] = (nodes[v].pose.t - nodes[0].pose.t).norm();
    }
    edges.reserve(n - 1);
    for (std::size_t it = 1; it < n; ++it) {
        int pick = -1;
        for (std::size_t v = 0; v < n; ++v) {
            if (used[v]) continue;
            if (pick < 0 ||
                edge_less(best_d[v], best_from[v], static_cast<int>(v),
                          best_d[static_cast<std::size_t>(pick)],
                          best_from[static_cast<std::size_t>(pick)], pick)) {
                pick = static_cast<int>(v);
            }
        }
        const std::size_t v = static_cast<std::size_t>(pick);
        used[v] = 1;
        SkeletonEdge e;
        e.a = std::min(best_from[v], pick);
        e.b = std::max(best_from[v], pick);
        e.length = best_d[v];
        edges.push_back(e);
        for (std::size_t u = 0; u < n; ++u) {
            if (used[u]) continue;
            const double d = (nodes[u].pose.t - nodes[v].pose.t).norm();
            if (edge_less(d, pick, static_cast<int>(u), best_d[u], best_from[u],
                          static_cast<int>(u))) {
                best_d[u] = d;
                best_from[u] = pick;
            }
        }
    }
    std::sort(edges.begin(), edges.end(), [](const SkeletonEdge& x, const SkeletonEdge& y) {
        return x.a != y.a ? x.a < y.a : x.b < y.b;
    });
    return edges;
}

// Nearest wall point on each side of the node at the node's depth. Sides are
// split by the sign of the lateral coordinate in the node-centered frame
// whose forward axis is the horizontal projection of `heading`; distance is
// horizontal.
inline std::pair<std::optional<Boundary>, std::optional<Boundary>> extract_lr(
    const CenterlineNode& node, const Vec3& heading, const PointCloud& cloud, double depth_tol,
    int* candidate_count = nullptr) {
    const double hn = std::hypot(heading.x(), heading.y());
    if (hn < 1e-9) {
        throw DegenerateHeading("extract_lr: heading has no horizontal component");
    }
    const double fx = heading.x() / hn;
    const double fy = heading.y() / hn;
    // Left axis in a z-down frame: z x forward = (-fy, fx, 0).
    const Vec3& c = node.pose.t;
    std::optional<Boundary> left, right;
    int count = 0;
    for (const Vec3& p : cloud.points) {
        if (std::abs(p.z() - c.z()) > depth_tol) continue;
        ++count;
        const double dx = p.x() - c.x();
        const double dy = p.y() - c.y();
        const double lateral = dx * -fy + dy * fx;
        if (lateral == 0.0) continue;
        const double hd = std::hypot(dx, dy);
        std::optional<Boundary>& side = lateral > 0.0 ? left : right;
        if (!side || hd < side->distance) {
            side = Boundary{p, hd};
        }
    }
    if (candidate_count) *candidate_count = count;
    return {left, right};
}

// Ceiling and floor picks inside a vertical cylinder around the node:
// the shallowest point above and the deepest point below; distance vertical.
inline std::pair<std::optional<Boundary>, std::optional<Boundary>> extract_ud(
    const CenterlineNode& node, const PointCloud& cloud, double lateral_radius,
    int* candidate_count = nullptr) {
    if (!(lateral_radius > 0.0)) {
        throw ValidationError("extract_ud: lateral_radius must be > 0");
    }
    const Vec3& c = node.pose.t;
    std::optional<Boundary> up, down;
    double up_hd = 0.0, down_hd = 0.0;
    int count = 0;
    for (const Vec3& p : cloud.points) {
        const double hd = std::hypot(p.x() - c.x(), p.y() - c.y());
        if (hd > lateral_radius) continue;
        ++count;
        if (p.z() < c.z()) {
            if (!up || p.z() < up->point.z() || (p.z() == up->point.z() && hd < up_hd)) {
                up = Boundary{p, c.z() - p.z()};
                up_hd = hd;
            }
        } else if (p.z() > c.z()) {
            if (!down || p.z() > down->point.z() || (p.z() == down->point.z() && hd < down_hd)) {
                down = Boundary{p, p.z() - c.z()};
                down_hd = hd;
            }
        }
    }
    if (candidate_count) *candidate_count = count;
    return {up, down};
}

namespace detail {

// Per-node headings from a depth-first traversal of the MST rooted at node 0:
// a node points at its first DFS child; leaves reuse their incoming
// direction; an isolated root falls back to its pose's forward axis.
inline std::vector<Vec3> traversal_headings(std::span<const CenterlineNode> nodes,
                                            std::span<const SkeletonEdge> edges) {
    const std::size_t n = nodes.size();
    std::vector<std::vector<int>> adj(n);
    for (const SkeletonEdge& e : edges) {
        adj[static_cast<std::size_t>(e.a)].push_back(e.b);
        adj[static_cast<std::size_t>(e.b)].push_back(e.a);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());

    std::vector<int> parent(n, -1);
    std::vector<int> first_child(n, -1);
    std::vector<char> visited(n, 0);
    std::vector<std::pair<int, int>> stack;  // (node, from)
    stack.emplace_back(0, -1);
    while (!stack.empty()) {
        const auto [v, from] = stack.back();
        stack.pop_back();
        if (visited[static_cast<std::size_t>(v)]) continue;
        visited[static_cast<std::size_t>(v)] = 1;
        parent[static_cast<std::size_t>(v)] = from;
        if (from >= 0 && first_child[static_cast<std::size_t>(from)] < 0) {
            first_child[static_cast<std::size_t>(from)] = v;
        }
        const auto& nb = adj[static_cast<std::size_t>(v)];
        for (auto it = nb.rbegin(); it != nb.rend(); ++it) {
            if (!visited[static_cast<std::size_t>(*it)]) {
                stack.emplace_back(*it, v);
            }
        }
    }

    std::vector<Vec3> headings(n);
    for (std::size_t v = 0; v < n; ++v) {
        Vec3 dir = Vec3::Zero();
        if (first_child[v] >= 0) {
            dir = nodes[static_cast<std::size_t>(first_child[v])].pose.t - nodes[v].pose.t;
        } else if (parent[v] >= 0) {
            dir = nodes[v].pose.t - nodes[static_cast<std::size_t>(parent[v])].pose.t;
        }
        if (std::hypot(dir.x(), dir.y()) < 1e-9) {
            dir = nodes[v].pose.rotate_vector(Vec3::UnitX());  // pose-yaw fallback
        }
        headings[v] = dir;
    }
    return headings;
}

}  // namespace detail

inline CaveSkeleton build_skeleton(std::span<const Trajectory> trajs, const PointCloud& cloud,
                                   const SkeletonParams& params,
                                   std::vector<std::vector<PoseRef>>* provenance = nullptr) {
    cloud.validate();
    CaveSkeleton skel;
    skel.nodes = average_trajectory(trajs, params.center_index, params.flag_radius, provenance);
    skel.edges = build_mst(skel.nodes);
    const std::vector<Vec3> headings = detail::traversal_headings(skel.nodes, skel.edges);

    skel.lrud.resize(skel.nodes.size());
    for (std::size_t i = 0; i < skel.nodes.size(); ++i) {
        LrudEntry& entry = skel.lrud[i];
        if (std::hypot(headings[i].x(), headings[i].y()) >= 1e-9) {
            auto [l, r] = extract_lr(skel.nodes[i], headings[i], cloud, params.depth_tol,
                                     &entry.lateral_candidates);
            entry.left = l;
            entry.right = r;
        }
        auto [u, d] =
            extract_ud(skel.nodes[i], cloud, params.lateral_radius, &entry.vertical_candidates);
        entry.up = u;
        entry.down = d;
    }
    return skel;
}

}  // namespace spelaeo::skeleton
