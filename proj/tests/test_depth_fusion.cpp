#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include <spelaeo/depth_fusion.hpp>
#include <spelaeo/io.hpp>
#include <spelaeo/random.hpp>

using namespace spelaeo;
using namespace spelaeo::depth;

namespace {

// Aperiodic smooth test profile, meters positive-down.
double profile(double t) {
    return 17.0 + 3.0 * std::sin(2.0 * kPi * t / 193.0) + 2.0 * std::sin(2.0 * kPi * t / 47.0) +
           1.2 * std::sin(2.0 * kPi * t / 331.0);
}

std::vector<TimedSample> sample_series(double t0, double t1, double dt, double (*fn)(double)) {
    std::vector<TimedSample> out;
    for (double t = t0; t <= t1 + 1e-9; t += dt) {
        out.push_back({t, fn(t)});
    }
    return out;
}

Trajectory z_trajectory(const std::vector<TimedSample>& zs) {
    Trajectory traj;
    traj.frame_id = "cam";
    for (const TimedSample& s : zs) {
        traj.samples.push_back({s.timestamp, Pose::from_translation({0.1 * s.timestamp, 2.0, s.value})});
    }
    return traj;
}

}  // namespace

TEST_CASE("resample: linear ramp and constants") {
    const std::vector<TimedSample> ramp{{0.0, 0.0}, {10.0, 10.0}};
    const UniformSeries r = resample(ramp, 1.0);
    REQUIRE(r.values.size() == 11);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        CHECK(r.values[i] == Approx(static_cast<double>(i)).margin(1e-12));
    }

    const std::vector<TimedSample> flat{{2.0, 4.5}, {3.0, 4.5}, {9.0, 4.5}};
    const UniformSeries f = resample(flat, 2.0);
    CHECK(f.values.size() == 15);  // floor(7 * 2) + 1
    for (double v : f.values) CHECK(v == 4.5);

    CHECK_THROWS_AS(resample(std::vector<TimedSample>{{0.0, 1.0}}, 1.0), TooFewSamples);
}

TEST_CASE("resample matches a pointwise interpolation oracle") {
    Rng rng(21);
    std::vector<TimedSample> samples;
    double t = 0.0;
    for (int i = 0; i < 60; ++i) {
        samples.push_back({t, rng.uniform(-5.0, 5.0)});
        t += 0.2 + rng.uniform() * 3.0;
    }
    const double rate = 7.0;
    const UniformSeries out = resample(samples, rate);

    const auto interp = [&](double at) {
        std::size_t j = 0;
        while (j + 2 < samples.size() && samples[j + 1].timestamp < at) ++j;
        const double u = (at - samples[j].timestamp) /
                         (samples[j + 1].timestamp - samples[j].timestamp);
        return samples[j].value + u * (samples[j + 1].value - samples[j].value);
    };
    const double span = samples.back().timestamp - samples.front().timestamp;
    CHECK(out.values.size() == static_cast<std::size_t>(std::floor(span * rate + 1e-9)) + 1);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double at = std::min(out.time_at(i), samples.back().timestamp);
        CHECK(out.values[i] == Approx(interp(at)).margin(1e-12));
    }
}

TEST_CASE("estimate_time_shift: identical series give zero") {
    const auto s = sample_series(0.0, 400.0, 0.5, profile);
    const UniformSeries u = resample(s, 20.0);
    CHECK(estimate_time_shift(u, u, 30.0) == Approx(0.0).margin(1e-6));
}

TEST_CASE("estimate_time_shift: recovers an exact 37 second delay") {
    // Dive clock leads the trajectory clock by 37 s.
    const auto z = sample_series(0.0, 600.0, 0.25, profile);
    std::vector<TimedSample> dive;
    for (double t = 37.0; t <= 637.0 + 1e-9; t += 1.0) {
        dive.push_back({t, profile(t - 37.0)});
    }
    const UniformSeries uz = resample(z, 100.0);
    const UniformSeries ud = resample(dive, 100.0);
    const double shift = estimate_time_shift(uz, ud, 60.0);
    CHECK(shift == Approx(37.0).margin(0.02));
}

TEST_CASE("estimate_time_shift: anti-symmetry under swapping") {
    const auto z = sample_series(0.0, 500.0, 0.25, profile);
    std::vector<TimedSample> dive;
    for (double t = 12.5; t <= 512.5 + 1e-9; t += 1.0) {
        dive.push_back({t, profile(t - 12.5)});
    }
    const UniformSeries uz = resample(z, 50.0);
    const UniformSeries ud = resample(dive, 50.0);
    const double fwd = estimate_time_shift(uz, ud, 40.0);
    const double back = estimate_time_shift(ud, uz, 40.0);
    CHECK(fwd == Approx(12.5).margin(0.02));
    CHECK(fwd + back == Approx(0.0).margin(0.02));
}

TEST_CASE("estimate_time_shift: anti-correlated series (z-up frame)") {
    std::vector<TimedSample> z;
    for (double t = 0.0; t <= 600.0 + 1e-9; t += 0.25) {
        z.push_back({t, -profile(t) + 19.4});
    }
    std::vector<TimedSample> dive;
    for (double t = 21.0; t <= 621.0 + 1e-9; t += 1.0) {
        dive.push_back({t, profile(t - 21.0)});
    }
    const double shift = estimate_time_shift(resample(z, 50.0), resample(dive, 50.0), 60.0);
    CHECK(shift == Approx(21.0).margin(0.02));
}

TEST_CASE("estimate_time_shift: zero max_shift pins the lag") {
    const auto s = sample_series(0.0, 200.0, 0.5, profile);
    const UniformSeries u = resample(s, 10.0);
    CHECK(estimate_time_shift(u, u, 0.0) == Approx(0.0).margin(1e-9));
}

TEST_CASE("estimate_time_shift: degenerate inputs") {
    const std::vector<TimedSample> flat{{0.0, 5.0}, {50.0, 5.0}, {100.0, 5.0}};
    const auto varied = sample_series(0.0, 100.0, 1.0, profile);
    const UniformSeries uf = resample(flat, 10.0);
    const UniformSeries uv = resample(varied, 10.0);
    CHECK_THROWS_AS(estimate_time_shift(uf, uv, 10.0), FlatSignal);
    CHECK_THROWS_AS(estimate_time_shift(uv, uf, 10.0), FlatSignal);

    // 20 s of data cannot give 30 s of overlap at any lag.
    const auto shorty = sample_series(0.0, 20.0, 0.5, profile);
    const UniformSeries us = resample(shorty, 10.0);
    CHECK_THROWS_AS(estimate_time_shift(us, uv, 10.0), InsufficientOverlap);
}

TEST_CASE("estimate_depth_regression: exact fits") {
    const auto d = sample_series(0.0, 300.0, 1.0, profile);
    const UniformSeries ud = resample(d, 10.0);

    const RegressionFit same = estimate_depth_regression(ud, ud);
    CHECK(same.scale == Approx(1.0).margin(1e-9));
    CHECK(same.offset == Approx(0.0).margin(1e-9));
    CHECK(same.residual_rms < 1e-9);

    // z-up SLAM frame with a 19.4 m surface offset: depth = -z + 19.4.
    UniformSeries uz = ud;
    for (double& v : uz.values) v = -v + 19.4;
    const RegressionFit fit = estimate_depth_regression(uz, ud);
    CHECK(fit.scale == Approx(-1.0).margin(1e-9));
    CHECK(fit.offset == Approx(19.4).margin(1e-9));
    CHECK(fit.residual_rms < 1e-9);

    UniformSeries flat = ud;
    for (double& v : flat.values) v = 3.0;
    CHECK_THROWS_AS(estimate_depth_regression(flat, ud), DegenerateRegression);
}

TEST_CASE("apply_correction: identity correction only relabels") {
    const auto z = sample_series(0.0, 50.0, 1.0, profile);
    const Trajectory traj = z_trajectory(z);
    const Trajectory out = apply_correction(traj, DepthCorrection{});
    CHECK(out.frame_id == "cam:depth-corrected");
    REQUIRE(out.samples.size() == traj.samples.size());
    // x, y and rotations pass through bit-exactly: serialized forms match.
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        CHECK(io::detail_io::pose_row(out.samples[i].timestamp, out.samples[i].pose) ==
              io::detail_io::pose_row(traj.samples[i].timestamp, traj.samples[i].pose));
    }
}

TEST_CASE("apply_correction: time shift moves every timestamp exactly") {
    const auto z = sample_series(0.0, 50.0, 1.0, profile);
    const Trajectory traj = z_trajectory(z);
    DepthCorrection corr;
    corr.time_shift = 578.4;  // 9.64 minutes
    const Trajectory out = apply_correction(traj, corr);
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        CHECK(out.samples[i].timestamp == traj.samples[i].timestamp + 578.4);
        CHECK(out.samples[i].pose.t.x() == traj.samples[i].pose.t.x());
        CHECK(out.samples[i].pose.t.y() == traj.samples[i].pose.t.y());
    }
    CHECK_THROWS_AS(apply_correction(traj, DepthCorrection{0.0, 0.0, 0.0, 0.0}), ValidationError);
}

TEST_CASE("fuse: already-synchronized trajectory is a fixed point") {
    const auto z = sample_series(0.0, 400.0, 0.4, profile);
    const Trajectory traj = z_trajectory(z);
    DepthLog log;
    for (double t = 0.0; t <= 400.0 + 1e-9; t += 2.0) {
        log.samples.push_back({t, profile(t)});
    }
    const auto [out, corr] = fuse(traj, log, 50.0, 120.0);
    CHECK(std::abs(corr.time_shift) < 0.05);
    CHECK(corr.scale == Approx(1.0).margin(0.01));
    CHECK(corr.offset == Approx(0.0).margin(0.05));

    // Idempotence in effect: fusing the corrected output again is a no-op.
    const auto [out2, corr2] = fuse(out, log, 50.0, 120.0);
    CHECK(std::abs(corr2.time_shift) < 0.05);
    CHECK(corr2.scale == Approx(1.0).margin(0.01));
    CHECK(corr2.offset == Approx(0.0).margin(0.05));
}

TEST_CASE("fuse: recovers shift 120 s, scale -1, offset 19.36 under noise") {
    Rng rng(22);
    // Trajectory clock lags the dive clock by 120 s; SLAM z axis points up.
    std::vector<TimedSample> z;
    for (double t = 0.0; t <= 900.0 + 1e-9; t += 0.3) {
        z.push_back({t - 120.0, -profile(t) + 19.36});
    }
    DepthLog log;
    for (double t = 0.0; t <= 900.0 + 1e-9; t += 2.0) {
        log.samples.push_back({t, profile(t) + rng.normal(0.05)});
    }
    const auto [out, corr] = fuse(z_trajectory(z), log, 100.0, 300.0);
    CHECK(corr.time_shift == Approx(120.0).margin(0.1));
    CHECK(corr.scale < 0.0);
    CHECK(corr.offset == Approx(19.36).margin(0.05));
}

TEST_CASE("fuse: refuses overlaps shorter than 30 s") {
    const auto z = sample_series(0.0, 25.0, 0.5, profile);
    DepthLog log;
    for (double t = 0.0; t <= 25.0 + 1e-9; t += 10.0) {
        log.samples.push_back({t, profile(t)});
    }
    log.samples.push_back({35.0, profile(35.0)});
    CHECK_THROWS_AS(fuse(z_trajectory(z), log, 10.0, 5.0), InsufficientOverlap);
}
