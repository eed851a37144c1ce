#pragma once

// Seedable, portable randomness for fixture generation: MT19937-64 for bits,
// 53-bit uniforms, Box-Muller normals. Distributions are hand-rolled because
// std::*_distribution output is implementation-defined, and fixtures must be
// byte-stable across platforms for a given seed.

#include <cmath>
#include <cstdint>
#include <random>

#include <spelaeo/geometry.hpp>

namespace spelaeo {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t bits() { return gen_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    std::size_t index(std::size_t n) {
        return n == 0 ? 0 : static_cast<std::size_t>(gen_() % n);
    }

    double normal(double sigma = 1.0) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    Vec3 normal_vec3(double sigma) {
        const double x = normal(sigma);
        const double y = normal(sigma);
        const double z = normal(sigma);
        return {x, y, z};
    }

    Vec3 unit_vec3() {
        while (true) {
            Vec3 v = normal_vec3(1.0);
            const double n = v.norm();
            if (n > 1e-9) return v / n;
        }
    }

    // Rotation by |angle| ~ N(0, sigma_rad) about a uniformly random axis.
    Quat small_rotation(double sigma_rad) {
        const Vec3 axis = unit_vec3();
        const double angle = normal(sigma_rad);
        return canonical(Quat(Eigen::AngleAxisd(angle, axis)));
    }

    Quat rotation(const Vec3& axis, double angle) {
        return canonical(Quat(Eigen::AngleAxisd(angle, axis.normalized())));
    }

    // Uniform random unit quaternion.
    Quat uniform_rotation() {
        const double a = normal(1.0), b = normal(1.0), c = normal(1.0), d = normal(1.0);
        return canonical(Quat(a, b, c, d));
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace spelaeo
