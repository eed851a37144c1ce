#include <catch2/catch.hpp>

#include <map>
#include <set>
#include <vector>

#include <spelaeo/random.hpp>
#include <spelaeo/skeleton.hpp>
#include <spelaeo/synth.hpp>

#include "oracles.hpp"

using namespace spelaeo;
using namespace spelaeo::skeleton;

namespace {

Trajectory straight_track(int n, double spacing, const Vec3& start, const Vec3& step_dir) {
    Trajectory traj;
    traj.frame_id = "t";
    for (int i = 0; i < n; ++i) {
        traj.samples.push_back(
            {static_cast<double>(i), Pose::from_translation(start + spacing * i * step_dir)});
    }
    return traj;
}

synth::CorridorSpec corridor_spec(std::vector<Vec3> waypoints) {
    synth::CorridorSpec spec;
    spec.waypoints = std::move(waypoints);
    spec.width = 4.0;
    spec.height = 2.0;
    spec.wall_density = 30.0;
    spec.keyframe_rate_hz = 2.0;
    spec.position_sigma_m = 0.01;
    spec.target_observations = 0;
    spec.survey_spacing_m = 10.0;
    spec.seed = 5;
    return spec;
}

}  // namespace

TEST_CASE("average_trajectory: radius below spacing keeps every pose") {
    const Trajectory traj = straight_track(10, 1.0, {0, 0, 5}, Vec3::UnitX());
    const std::vector<Trajectory> trajs{traj};
    const auto nodes = average_trajectory(trajs, 0, 0.4);
    REQUIRE(nodes.size() == 10);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        CHECK(nodes[i].source_count == 1);
        CHECK((nodes[i].pose.t - traj.samples[i].pose.t).norm() < 1e-12);
    }
}

TEST_CASE("average_trajectory: coincident trajectories fold together") {
    const Trajectory traj = straight_track(8, 1.0, {0, 0, 5}, Vec3::UnitX());
    const std::vector<Trajectory> trajs{traj, traj, traj};
    const auto nodes = average_trajectory(trajs, 1, 0.4);
    REQUIRE(nodes.size() == 8);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        CHECK(nodes[i].source_count == 3);
        CHECK((nodes[i].pose.t - traj.samples[i].pose.t).norm() < 1e-12);
    }
}

TEST_CASE("average_trajectory: validation") {
    CHECK_THROWS_AS(average_trajectory(std::vector<Trajectory>{}, 0, 1.0), EmptyTrajectory);
    const std::vector<Trajectory> trajs{straight_track(3, 1.0, {0, 0, 0}, Vec3::UnitX())};
    CHECK_THROWS_AS(average_trajectory(trajs, 2, 1.0), ValidationError);
    CHECK_THROWS_AS(average_trajectory(trajs, 0, 0.0), ValidationError);
}

TEST_CASE("average_trajectory: parallel offset tracks recover the corridor axis") {
    const auto spec = corridor_spec({{0, 0, 17}, {60, 0, 17}});
    const auto bundle = synth::generate(spec);
    const std::vector<Trajectory> trajs(bundle.trajectories.begin(), bundle.trajectories.end());

    std::vector<std::vector<PoseRef>> provenance;
    const auto nodes = average_trajectory(trajs, 1, 1.0, &provenance);
    REQUIRE(!nodes.empty());
    double worst = 0.0;
    for (const auto& n : nodes) {
        worst = std::max(worst, std::hypot(n.pose.t.y(), n.pose.t.z() - 17.0));
    }
    CHECK(worst < 0.05);

    // Flag sets partition the full pose set: every pose absorbed exactly once.
    std::set<std::pair<int, int>> seen;
    std::size_t absorbed = 0;
    for (const auto& members : provenance) {
        for (const PoseRef& r : members) {
            CHECK(seen.insert({r.trajectory, r.sample}).second);
            ++absorbed;
        }
    }
    std::size_t total = 0;
    for (const auto& t : trajs) total += t.samples.size();
    CHECK(absorbed == total);
    CHECK(nodes.size() <= trajs[1].samples.size());
}

TEST_CASE("build_mst: degenerate and forced-chain cases") {
    CHECK_THROWS_AS(build_mst(std::vector<CenterlineNode>{}), EmptyInput);

    std::vector<CenterlineNode> one{{0, Pose::identity(), 1}};
    CHECK(build_mst(one).empty());

    std::vector<CenterlineNode> line;
    for (double x : {0.0, 1.0, 3.0}) {
        line.push_back({static_cast<int>(line.size()), Pose::from_translation({x, 0, 0}), 1});
    }
    const auto edges = build_mst(line);
    REQUIRE(edges.size() == 2);
    CHECK(edges[0].a == 0);
    CHECK(edges[0].b == 1);
    CHECK(edges[1].a == 1);
    CHECK(edges[1].b == 2);
    CHECK(edges[0].length + edges[1].length == Approx(3.0));
}

TEST_CASE("build_mst: exact weight ties resolve by the documented order") {
    // Integer grid: nearly every candidate edge weight ties with another.
    std::vector<CenterlineNode> nodes;
    std::vector<Vec3> pts;
    for (int gx = 0; gx < 4; ++gx) {
        for (int gy = 0; gy < 4; ++gy) {
            const Vec3 p(gx, gy, 0.0);
            pts.push_back(p);
            nodes.push_back({static_cast<int>(nodes.size()), Pose::from_translation(p), 1});
        }
    }
    // Plus a coincident pair (zero-length edge somewhere in the tree).
    pts.push_back(pts[5]);
    nodes.push_back({static_cast<int>(nodes.size()), Pose::from_translation(pts[5]), 1});

    const auto mine = build_mst(nodes);
    const auto theirs = oracle::kruskal_mst(pts);
    REQUIRE(mine.size() == theirs.size());
    for (std::size_t i = 0; i < mine.size(); ++i) {
        CHECK(mine[i].a == theirs[i].a);
        CHECK(mine[i].b == theirs[i].b);
        CHECK(mine[i].length == theirs[i].w);
    }
}

TEST_CASE("build_mst matches the Kruskal oracle on random point sets") {
    Rng rng(41);
    for (int round = 0; round < 30; ++round) {
        const int n = 2 + static_cast<int>(rng.index(49));
        std::vector<CenterlineNode> nodes;
        std::vector<Vec3> pts;
        for (int i = 0; i < n; ++i) {
            const Vec3 p = rng.normal_vec3(10.0);
            pts.push_back(p);
            nodes.push_back({i, Pose::from_translation(p), 1});
        }
        const auto mine = build_mst(nodes);
        const auto theirs = oracle::kruskal_mst(pts);
        REQUIRE(mine.size() == theirs.size());
        double w_mine = 0.0, w_theirs = 0.0;
        for (std::size_t i = 0; i < mine.size(); ++i) {
            CHECK(mine[i].a == theirs[i].a);
            CHECK(mine[i].b == theirs[i].b);
            w_mine += mine[i].length;
            w_theirs += theirs[i].w;
        }
        CHECK(w_mine == w_theirs);
    }
}

TEST_CASE("extract_lr: symmetric corridor walls") {
    CenterlineNode node{0, Pose::identity(), 1};
    PointCloud empty;
    const auto [l0, r0] = extract_lr(node, Vec3::UnitY(), empty, 0.2);
    CHECK_FALSE(l0.has_value());
    CHECK_FALSE(r0.has_value());

    PointCloud cloud;
    cloud.points = {{-2, 0, 0}, {2, 0, 0}, {0.5, 0, 5.0}};  // third fails the depth gate
    int candidates = 0;
    const auto [l, r] = extract_lr(node, Vec3::UnitY(), cloud, 0.2, &candidates);
    CHECK(candidates == 2);
    REQUIRE(l.has_value());
    REQUIRE(r.has_value());
    CHECK((l->point - Vec3(-2, 0, 0)).norm() < 1e-12);
    CHECK(l->distance == Approx(2.0));
    CHECK((r->point - Vec3(2, 0, 0)).norm() < 1e-12);
    CHECK(r->distance == Approx(2.0));

    CHECK_THROWS_AS(extract_lr(node, Vec3::UnitZ(), cloud, 0.2), DegenerateHeading);
}

TEST_CASE("extract_ud: ceiling and floor picks") {
    CenterlineNode node{0, Pose::from_translation({0, 0, 10}), 1};
    PointCloud empty;
    const auto [u0, d0] = extract_ud(node, empty, 0.5);
    CHECK_FALSE(u0.has_value());
    CHECK_FALSE(d0.has_value());

    PointCloud cloud;
    cloud.points = {{0.1, 0, 8.5}, {0, 0.1, 11.5}, {3.0, 0, 7.0}};  // third outside the cylinder
    const auto [u, d] = extract_ud(node, cloud, 0.5);
    REQUIRE(u.has_value());
    REQUIRE(d.has_value());
    CHECK(u->distance == Approx(1.5));
    CHECK(d->distance == Approx(1.5));
    CHECK(u->point.z() < node.pose.t.z());
    CHECK(d->point.z() > node.pose.t.z());

    CHECK_THROWS_AS(extract_ud(node, cloud, 0.0), ValidationError);
}

TEST_CASE("build_skeleton: vertical chain falls back to the pose heading") {
    // Nodes stacked vertically: every MST direction is vertical, so the
    // left/right split has to come from the poses' own yaw.
    Trajectory traj;
    traj.frame_id = "t";
    const Quat facing_north = quat_from_euler({0.0, 0.0, kPi / 2.0});
    for (int i = 0; i < 3; ++i) {
        traj.samples.push_back({static_cast<double>(i), Pose(Vec3(0, 0, 10.0 + i), facing_north)});
    }
    PointCloud cloud;
    cloud.points = {{-2, 0, 11}, {2, 0, 11}};
    SkeletonParams params;
    params.center_index = 0;
    params.flag_radius = 0.4;
    const auto skel = build_skeleton(std::vector<Trajectory>{traj}, cloud, params);
    REQUIRE(skel.nodes.size() == 3);
    REQUIRE(skel.lrud.size() == 3);
    // Facing +y with z down: (-2,0) is on the left, (2,0) on the right.
    REQUIRE(skel.lrud[1].left.has_value());
    REQUIRE(skel.lrud[1].right.has_value());
    CHECK(skel.lrud[1].left->point.x() == -2.0);
    CHECK(skel.lrud[1].right->point.x() == 2.0);
}

TEST_CASE("build_skeleton: single pose, empty cloud") {
    std::vector<Trajectory> trajs{straight_track(1, 1.0, {1, 1, 9}, Vec3::UnitX())};
    SkeletonParams params;
    const auto skel = build_skeleton(trajs, PointCloud{}, params);
    CHECK(skel.nodes.size() == 1);
    CHECK(skel.edges.empty());
    REQUIRE(skel.lrud.size() == 1);
    CHECK_FALSE(skel.lrud[0].left.has_value());
    CHECK_FALSE(skel.lrud[0].up.has_value());
}

TEST_CASE("build_skeleton: straight corridor geometry") {
    const auto spec = corridor_spec({{0, 0, 17}, {60, 0, 17}});
    const auto bundle = synth::generate(spec);
    const std::vector<Trajectory> trajs(bundle.trajectories.begin(), bundle.trajectories.end());

    SkeletonParams params;
    params.center_index = 1;
    const auto skel = build_skeleton(trajs, bundle.cloud, params);
    REQUIRE(skel.nodes.size() > 10);
    CHECK(skel.edges.size() == skel.nodes.size() - 1);

    double width_sum = 0.0, height_sum = 0.0;
    int width_n = 0, height_n = 0;
    for (std::size_t i = 0; i < skel.lrud.size(); ++i) {
        const LrudEntry& e = skel.lrud[i];
        if (e.left && e.right) {
            width_sum += e.left->distance + e.right->distance;
            ++width_n;
        }
        if (e.up && e.down) {
            height_sum += e.up->distance + e.down->distance;
            ++height_n;
        }
        const CenterlineNode& node = skel.nodes[i];
        if (e.up) CHECK(e.up->point.z() < node.pose.t.z());
        if (e.down) CHECK(e.down->point.z() > node.pose.t.z());
    }
    REQUIRE(width_n > 10);
    REQUIRE(height_n > 10);
    CHECK(width_sum / width_n == Approx(4.0).margin(0.4));
    CHECK(height_sum / height_n == Approx(2.0).margin(0.2));
}

TEST_CASE("build_skeleton: L-shaped corridor keeps the MST local") {
    const auto spec = corridor_spec({{0, 0, 17}, {30, 0, 17}, {30, 30, 17}});
    const auto bundle = synth::generate(spec);
    const std::vector<Trajectory> trajs(bundle.trajectories.begin(), bundle.trajectories.end());
    SkeletonParams params;
    params.center_index = 1;
    const auto skel = build_skeleton(trajs, bundle.cloud, params);

    // The tree follows the L: no chord jumps between the far ends.
    double max_edge = 0.0;
    for (const auto& e : skel.edges) max_edge = std::max(max_edge, e.length);
    CHECK(max_edge < 2.0);
}

TEST_CASE("build_skeleton: equivariance under horizontal rigid motion") {
    const auto spec = corridor_spec({{0, 0, 17}, {25, 0, 17}});
    const auto bundle = synth::generate(spec);
    std::vector<Trajectory> trajs(bundle.trajectories.begin(), bundle.trajectories.end());

    const Pose motion(Vec3(12.0, -7.0, 0.0), Quat(Eigen::AngleAxisd(0.7, Vec3::UnitZ())));
    std::vector<Trajectory> moved = trajs;
    for (auto& t : moved) {
        for (auto& s : t.samples) s.pose = compose(motion, s.pose);
    }
    PointCloud moved_cloud = bundle.cloud;
    for (auto& p : moved_cloud.points) p = motion.transform_point(p);

    SkeletonParams params;
    params.center_index = 1;
    const auto base = build_skeleton(trajs, bundle.cloud, params);
    const auto rot = build_skeleton(moved, moved_cloud, params);

    REQUIRE(base.nodes.size() == rot.nodes.size());
    REQUIRE(base.edges.size() == rot.edges.size());
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
        CHECK((rot.nodes[i].pose.t - motion.transform_point(base.nodes[i].pose.t)).norm() < 1e-9);
    }
    for (std::size_t i = 0; i < base.edges.size(); ++i) {
        CHECK(base.edges[i].a == rot.edges[i].a);
        CHECK(base.edges[i].b == rot.edges[i].b);
    }
    for (std::size_t i = 0; i < base.lrud.size(); ++i) {
        const auto check_side = [&](const std::optional<Boundary>& b,
                                    const std::optional<Boundary>& m) {
            REQUIRE(b.has_value() == m.has_value());
            if (b) {
                CHECK((m->point - motion.transform_point(b->point)).norm() < 1e-9);
                CHECK(m->distance == Approx(b->distance).margin(1e-9));
            }
        };
        check_side(base.lrud[i].left, rot.lrud[i].left);
        check_side(base.lrud[i].right, rot.lrud[i].right);
        check_side(base.lrud[i].up, rot.lrud[i].up);
        check_side(base.lrud[i].down, rot.lrud[i].down);
    }
}
