#pragma once

// Absolute water-depth correction: synchronize a visual-SLAM trajectory's
// vertical axis with the dive computer's depth record.
//
// Pipeline: resample both series to a common rate, estimate the time shift by
// cross-correlation (sub-sample refinement via a parabolic fit around the
// peak), estimate scale/offset by ordinary least squares, rewrite the
// trajectory. The correlation score is |normalized correlation|: the SLAM
// z-axis may point up or down, so the z series can anti-correlate with depth;
// the regression recovers the sign as a negative scale.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <spelaeo/errors.hpp>
#include <spelaeo/geometry.hpp>

namespace spelaeo::depth {

struct TimedSample {
    double timestamp = 0.0;  // seconds
    double value = 0.0;
};

// Dive-computer depth record, meters positive-down, nominally 0.1 Hz.
struct DepthLog {
    std::vector<TimedSample> samples;

    void validate() const {
        if (samples.empty()) {
            throw EmptyInput("depth log has no samples");
        }
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].value < 0.0) {
                throw RangeError("depth log: negative depth at sample " + std::to_string(i));
            }
            if (i > 0 && samples[i].timestamp <= samples[i - 1].timestamp) {
                throw ValidationError("depth log: timestamps not strictly increasing at sample " +
                                      std::to_string(i));
            }
        }
    }
};

struct UniformSeries {
    double start_time = 0.0;
    double rate = 0.0;  // Hz
    std::vector<double> values;

    double time_at(std::size_t i) const { return start_time + static_cast<double>(i) / rate; }
    double end_time() const { return time_at(values.empty() ? 0 : values.size() - 1); }
};

struct DepthCorrection {
    double time_shift = 0.0;  // add to trajectory timestamps to land on the dive-computer clock
    double scale = 1.0;       // z := scale * z + offset
    double offset = 0.0;      // meters
    double residual_rms = 0.0;
};

struct RegressionFit {
    double scale = 1.0;
    double offset = 0.0;
    double residual_rms = 0.0;
};

inline constexpr double kMinOverlapSeconds = 30.0;
inline constexpr double kFlatVariance = 1e-12;

// Linear interpolation onto a uniform grid over the closed input span.
// Sample count = floor(span * rate) + 1; no extrapolation.
inline UniformSeries resample(std::span<const TimedSample> samples, double rate) {
    if (samples.size() < 2) {
        throw TooFewSamples("resample: need at least 2 samples, got " +
                            std::to_string(samples.size()));
    }
    if (!(rate > 0.0)) {
        throw ValidationError("resample: rate must be > 0");
    }
    for (std::size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].timestamp <= samples[i - 1].timestamp) {
            throw ValidationError("resample: timestamps not strictly increasing at sample " +
                                  std::to_string(i));
        }
    }
    const double t0 = samples.front().timestamp;
    const double t1 = samples.back().timestamp;
    const double span = t1 - t0;
    const std::size_t count = static_cast<std::size_t>(std::floor(span * rate + 1e-9)) + 1;

    UniformSeries out;
    out.start_time = t0;
    out.rate = rate;
    out.values.resize(count);
    std::size_t seg = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = std::min(t0 + static_cast<double>(i) / rate, t1);
        while (seg + 2 < samples.size() && samples[seg + 1].timestamp < t) {
            ++seg;
        }
        const TimedSample& a = samples[seg];
        const TimedSample& b = samples[seg + 1];
        const double u = std::clamp((t - a.timestamp) / (b.timestamp - a.timestamp), 0.0, 1.0);
        out.values[i] = a.value + u * (b.value - a.value);
    }
    return out;
}

namespace detail {

struct LagScorer {
    // Mean-removed copies with prefix sums of squares.
    std::vector<double> x, y, px2, py2;
    long min_count = 0;

    LagScorer(std::span<const double> xs, std::span<const double> ys, long min_count_)
        : x(xs.begin(), xs.end()), y(ys.begin(), ys.end()), min_count(min_count_) {
        remove_mean(x);
        remove_mean(y);
        px2 = prefix_sq(x);
        py2 = prefix_sq(y);
    }

    static void remove_mean(std::vector<double>& v) {
        double m = 0.0;
        for (double a : v) m += a;
        m /= static_cast<double>(v.size());
        for (double& a : v) a -= m;
    }

    static std::vector<double> prefix_sq(const std::vector<double>& v) {
        std::vector<double> p(v.size() + 1, 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) p[i + 1] = p[i] + v[i] * v[i];
        return p;
    }

    double variance(const std::vector<double>& v) const {
        double s = 0.0;
        for (double a : v) s += a * a;
        return s / static_cast<double>(v.size());
    }

    // |normalized correlation| pairing x[i] with y[i + k]; NaN if the window
    // is too short or flat.
    double score(long k) const {
        const long nx = static_cast<long>(x.size());
        const long ny = static_cast<long>(y.size());
        const long lo = std::max(0L, -k);
        const long hi = std::min(nx - 1, ny - 1 - k);
        if (hi - lo + 1 < min_count) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        double sxy = 0.0;
        for (long i = lo; i <= hi; ++i) {
            sxy += x[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i + k)];
        }
        const double sx2 = px2[static_cast<std::size_t>(hi + 1)] - px2[static_cast<std::size_t>(lo)];
        const double sy2 =
            py2[static_cast<std::size_t>(hi + 1 + k)] - py2[static_cast<std::size_t>(lo + k)];
        if (sx2 < kFlatVariance || sy2 < kFlatVariance) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return std::abs(sxy) / std::sqrt(sx2 * sy2);
    }
};

// Scan [k_lo, k_hi] with step, preferring higher score, then smaller |lag|.
template <typename ScoreFn, typename LagFn>
bool scan_lags(long k_lo, long k_hi, long step, ScoreFn&& score_at, LagFn&& lag_of,
               long& best_k, double& best_score) {
    bool found = false;
    for (long k = k_lo; k <= k_hi; k += step) {
        const double s = score_at(k);
        if (std::isnan(s)) continue;
        if (!found || s > best_score ||
            (s == best_score && std::abs(lag_of(k)) < std::abs(lag_of(best_k)))) {
            best_k = k;
            best_score = s;
            found = true;
        }
    }
    return found;
}

}  // namespace detail

// Shift (seconds, on the dive-computer clock) that best aligns the SLAM z
// series with the depth series, searched over [-max_shift, +max_shift].
inline double estimate_time_shift(const UniformSeries& slam_z, const UniformSeries& dive_depth,
                                  double max_shift) {
    if (slam_z.values.empty() || dive_depth.values.empty()) {
        throw EmptyInput("estimate_time_shift: empty series");
    }
    if (std::abs(slam_z.rate - dive_depth.rate) > 1e-9 * std::max(slam_z.rate, dive_depth.rate)) {
        throw ValidationError("estimate_time_shift: series rates differ");
    }
    if (!(max_shift >= 0.0)) {
        throw ValidationError("estimate_time_shift: max_shift must be >= 0");
    }
    const double rate = slam_z.rate;
    const long min_count = static_cast<long>(std::ceil(kMinOverlapSeconds * rate - 1e-9)) + 1;

    detail::LagScorer scorer(slam_z.values, dive_depth.values, min_count);
    if (scorer.variance(scorer.x) < kFlatVariance) {
        throw FlatSignal("estimate_time_shift: trajectory z series has no variation");
    }
    if (scorer.variance(scorer.y) < kFlatVariance) {
        throw FlatSignal("estimate_time_shift: depth series has no variation");
    }

    // lag(k) in seconds: pairing x[i] ~ y[i+k] compares slam time ts with
    // dive time ts + lag, so lag = k/rate + (dive.start - slam.start).
    const double base = dive_depth.start_time - slam_z.start_time;
    const auto lag_of = [&](long k) { return static_cast<double>(k) / rate + base; };
    const long k_lo = static_cast<long>(std::ceil((-max_shift - base) * rate - 1e-9));
    const long k_hi = static_cast<long>(std::floor((max_shift - base) * rate + 1e-9));
    if (k_hi < k_lo) {
        throw InsufficientOverlap("estimate_time_shift: no admissible lag in range");
    }

    const auto score_at = [&](long k) { return scorer.score(k); };

    // Exact scan when affordable, otherwise a coarse pass over decimated
    // series plus a full-rate window around the coarse peak. Both paths are
    // deterministic; the exact path is mirror-symmetric under swapping the
    // two series.
    const double n_avg = static_cast<double>(std::min(scorer.x.size(), scorer.y.size()));
    const double cost = static_cast<double>(k_hi - k_lo + 1) * n_avg;
    constexpr double kBudget = 2e8;

    long best_k = 0;
    double best_score = 0.0;
    bool found = false;
    if (cost <= kBudget) {
        found = detail::scan_lags(k_lo, k_hi, 1, score_at, lag_of, best_k, best_score);
    } else {
        const long step =
            std::max(2L, static_cast<long>(std::ceil(std::sqrt(4.0 * cost / kBudget))));
        std::vector<double> xd, yd;
        xd.reserve(scorer.x.size() / static_cast<std::size_t>(step) + 1);
        yd.reserve(scorer.y.size() / static_cast<std::size_t>(step) + 1);
        for (std::size_t i = 0; i < scorer.x.size(); i += static_cast<std::size_t>(step)) {
            xd.push_back(scorer.x[i]);
        }
        for (std::size_t i = 0; i < scorer.y.size(); i += static_cast<std::size_t>(step)) {
            yd.push_back(scorer.y[i]);
        }
        // Decimated lag kd corresponds to a full-rate lag of kd * step.
        const detail::LagScorer coarse(xd, yd, std::max(2L, min_count / step));
        const auto coarse_score_at = [&](long kd) { return coarse.score(kd); };
        const auto coarse_lag_of = [&](long kd) { return lag_of(kd * step); };
        const long kd_lo = static_cast<long>(std::ceil(static_cast<double>(k_lo) / static_cast<double>(step)));
        const long kd_hi = static_cast<long>(std::floor(static_cast<double>(k_hi) / static_cast<double>(step)));
        long coarse_kd = 0;
        double coarse_score = 0.0;
        const bool coarse_found = detail::scan_lags(kd_lo, kd_hi, 1, coarse_score_at,
                                                    coarse_lag_of, coarse_kd, coarse_score);
        if (coarse_found) {
            const long w_lo = std::max(k_lo, coarse_kd * step - 2 * step);
            const long w_hi = std::min(k_hi, coarse_kd * step + 2 * step);
            found = detail::scan_lags(w_lo, w_hi, 1, score_at, lag_of, best_k, best_score);
        }
    }
    if (!found) {
        throw InsufficientOverlap("estimate_time_shift: overlap shorter than " +
                                  std::to_string(kMinOverlapSeconds) + " s at every lag");
    }

    // Parabolic sub-sample refinement around the integer peak.
    double delta = 0.0;
    if (best_k > k_lo && best_k < k_hi) {
        const double sm = score_at(best_k - 1);
        const double s0 = best_score;
        const double sp = score_at(best_k + 1);
        if (!std::isnan(sm) && !std::isnan(sp)) {
            const double denom = sm - 2.0 * s0 + sp;
            if (denom < -1e-15) {
                delta = std::clamp(0.5 * (sm - sp) / denom, -0.5, 0.5);
            }
        }
    }
    return lag_of(best_k) + delta / rate;
}

// OLS fit depth = scale * z + offset over the overlapping span of two
// time-aligned series. A z-up SLAM frame yields scale < 0.
inline RegressionFit estimate_depth_regression(const UniformSeries& slam_z_shifted,
                                               const UniformSeries& dive_depth) {
    if (slam_z_shifted.values.size() < 2 || dive_depth.values.size() < 2) {
        throw TooFewSamples("estimate_depth_regression: series too short");
    }
    if (std::abs(slam_z_shifted.rate - dive_depth.rate) >
        1e-9 * std::max(slam_z_shifted.rate, dive_depth.rate)) {
        throw ValidationError("estimate_depth_regression: series rates differ");
    }
    const double rate = slam_z_shifted.rate;
    const double t0 = std::max(slam_z_shifted.start_time, dive_depth.start_time);
    const double t1 = std::min(slam_z_shifted.end_time(), dive_depth.end_time());
    if (t1 - t0 < kMinOverlapSeconds) {
        throw InsufficientOverlap("estimate_depth_regression: overlap " +
                                  std::to_string(t1 - t0) + " s < " +
                                  std::to_string(kMinOverlapSeconds) + " s");
    }

    const long i0 = static_cast<long>(std::ceil((t0 - slam_z_shifted.start_time) * rate - 1e-9));
    const long i1 = static_cast<long>(std::floor((t1 - slam_z_shifted.start_time) * rate + 1e-9));
    std::vector<double> zs, ds;
    zs.reserve(static_cast<std::size_t>(i1 - i0 + 1));
    ds.reserve(static_cast<std::size_t>(i1 - i0 + 1));
    const long nd = static_cast<long>(dive_depth.values.size());
    for (long i = std::max(0L, i0); i <= i1 && i < static_cast<long>(slam_z_shifted.values.size());
         ++i) {
        const double t = slam_z_shifted.time_at(static_cast<std::size_t>(i));
        const double u = (t - dive_depth.start_time) * rate;
        long j = static_cast<long>(std::floor(u));
        j = std::clamp(j, 0L, nd - 2);
        const double frac = std::clamp(u - static_cast<double>(j), 0.0, 1.0);
        const double d = dive_depth.values[static_cast<std::size_t>(j)] +
                         frac * (dive_depth.values[static_cast<std::size_t>(j + 1)] -
                                 dive_depth.values[static_cast<std::size_t>(j)]);
        zs.push_back(slam_z_shifted.values[static_cast<std::size_t>(i)]);
        ds.push_back(d);
    }
    const double n = static_cast<double>(zs.size());
    double mz = 0.0, md = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        mz += zs[i];
        md += ds[i];
    }
    mz /= n;
    md /= n;
    double var_z = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        var_z += (zs[i] - mz) * (zs[i] - mz);
        cov += (zs[i] - mz) * (ds[i] - md);
    }
    var_z /= n;
    cov /= n;
    if (var_z < kFlatVariance) {
        throw DegenerateRegression("estimate_depth_regression: z variance below threshold");
    }
    RegressionFit fit;
    fit.scale = cov / var_z;
    fit.offset = md - fit.scale * mz;
    double ss = 0.0;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const double r = ds[i] - (fit.scale * zs[i] + fit.offset);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / n);
    return fit;
}

// Shift timestamps, rewrite z as scale*z + offset. x, y and rotations pass
// through untouched; the frame id gains a ":depth-corrected" suffix.
inline Trajectory apply_correction(const Trajectory& traj, const DepthCorrection& corr) {
    if (!std::isfinite(corr.scale) || corr.scale == 0.0) {
        throw ValidationError("apply_correction: scale must be finite and non-zero");
    }
    Trajectory out;
    out.frame_id = traj.frame_id + ":depth-corrected";
    out.samples.reserve(traj.samples.size());
    for (const TrajectorySample& s : traj.samples) {
        TrajectorySample c = s;
        c.timestamp = s.timestamp + corr.time_shift;
        c.pose.t.z() = corr.scale * s.pose.t.z() + corr.offset;
        out.samples.push_back(std::move(c));
    }
    return out;
}

// Full pipeline: resample -> time shift -> regression -> corrected trajectory.
inline std::pair<Trajectory, DepthCorrection> fuse(const Trajectory& traj, const DepthLog& log,
                                                   double rate = 100.0,
                                                   double max_shift = 1200.0) {
    traj.validate();
    log.validate();
    std::vector<TimedSample> z_track;
    z_track.reserve(traj.samples.size());
    for (const TrajectorySample& s : traj.samples) {
        z_track.push_back({s.timestamp, s.pose.t.z()});
    }
    const UniformSeries slam_z = resample(z_track, rate);
    const UniformSeries dive = resample(log.samples, rate);

    DepthCorrection corr;
    corr.time_shift = estimate_time_shift(slam_z, dive, max_shift);

    UniformSeries shifted = slam_z;
    shifted.start_time += corr.time_shift;
    const RegressionFit fit = estimate_depth_regression(shifted, dive);
    corr.scale = fit.scale;
    corr.offset = fit.offset;
    corr.residual_rms = fit.residual_rms;
    return {apply_correction(traj, corr), corr};
}

}  // namespace spelaeo::depth
