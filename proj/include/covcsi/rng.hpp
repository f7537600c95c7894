// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "covcsi/common.hpp"

namespace covcsi {

// Splittable random stream. Every stream is identified by a 64-bit key;
// substreams are derived by mixing the parent key with an index, so the
// assignment (seed, point, trial, role) -> stream is fixed and does not
// depend on execution order or thread schedule.
//
// Variates are produced from raw mt19937_64 output with hand-rolled
// conversions (Box-Muller for normals), so sequences are identical
// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key), eng_(mix(key, 0x1234abcd)) {}

    std::uint64_t key() const { return key_; }

    Rng substream(std::uint64_t a) const { return Rng(mix(key_, a)); }
    Rng substream(std::uint64_t a, std::uint64_t b) const { return Rng(mix(mix(key_, a), b)); }
    Rng substream(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
        return Rng(mix(mix(mix(key_, a), b), c));
    }

    // Uniform on (0, 1].
    double uniform01() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform phase in [0, 2 pi).
    double phase() {
        return 6.283185307179586476925286766559 * (static_cast<double>(eng_() >> 11) * 0x1p-53);
    }

    // Standard real normal N(0, 1).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    // Circularly symmetric complex normal CN(0, 1): E|z|^2 = 1.
    cplx cnormal() {
        const double s = 0.70710678118654752440;
        return cplx(s * normal(), s * normal());
    }

    // Unit-modulus entry with uniform random phase.
    cplx unit_phase() {
        const double t = phase();
        return cplx(std::cos(t), std::sin(t));
    }

    std::uint64_t bits() { return eng_(); }

    static std::uint64_t mix(std::uint64_t key, std::uint64_t index) {
        // boost-style combine followed by the splitmix64 finalizer
        std::uint64_t z = key ^ (index + 0x9e3779b97f4a7c15ULL + (key << 6) + (key >> 2));
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stream roles used by the experiment harness to key substreams.
enum class StreamRole : std::uint64_t {
    covariance = 1,
    pilot = 2,
    channel = 3,
    noise = 4,
};

} // namespace covcsi
