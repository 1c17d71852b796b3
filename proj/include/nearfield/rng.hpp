// SPDX-License-Identifier: Apache-2.0
//
// nearfield-mc: near-field source localization under direction-dependent mutual coupling
// Copyright (C) 2026 nearfield-mc contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace nearfield {

/// Philox4x32-10 counter-based generator. Output block j is a pure
/// function of (key, j), so substreams never overlap, draws are
/// platform-independent, and streams keyed by seed ^ trial_index can be
/// consumed concurrently without shared state.
class Philox4x32 {
  public:
    using Block = std::array<std::uint32_t, 4>;

    explicit Philox4x32(std::uint64_t key) noexcept
        : key0_(static_cast<std::uint32_t>(key)),
          key1_(static_cast<std::uint32_t>(key >> 32)) {}

    /// Raw 10-round bijection of a 4-word counter under a 2-word key.
    static Block apply(Block ctr, std::uint32_t k0, std::uint32_t k1) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                k0 += 0x9E3779B9u;
                k1 += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * ctr[0];
            const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * ctr[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        }
        return ctr;
    }

    Block block(std::uint64_t counter) const noexcept {
        return apply({static_cast<std::uint32_t>(counter),
                      static_cast<std::uint32_t>(counter >> 32), 0u, 0u},
                     key0_, key1_);
    }

  private:
    std::uint32_t key0_, key1_;
};

/// Sequential view over a Philox stream: uniforms in (0, 1), standard
/// normals via Box-Muller, and circular complex Gaussians.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) noexcept : gen_(key) {}

    /// Uniform double in (0, 1) with 53 significant bits.
    double uniform() {
        const std::uint64_t w = next_word64();
        return static_cast<double>(w >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    /// Standard normal draw (Box-Muller, both branches consumed in order).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * std::numbers::pi * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

    /// Circular complex Gaussian with E|z|^2 = variance.
    std::complex<double> complex_normal(double variance) {
        const double s = std::sqrt(variance * 0.5);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

  private:
    std::uint64_t next_word64() {
        if (word_index_ == 0) {
            block_ = gen_.block(counter_++);
        }
        const int i = word_index_;
        word_index_ = (word_index_ + 2) % 4;
        return (std::uint64_t(block_[i]) << 32) | block_[i + 1];
    }

    Philox4x32 gen_;
    Philox4x32::Block block_{};
    std::uint64_t counter_ = 0;
    int word_index_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// One-shot uniform in (0, 1) from (key, counter); used for reproducible
/// order-independent draws such as synthesized coupling phases.
inline double hashed_uniform(std::uint64_t key, std::uint64_t counter) {
    const auto b = Philox4x32(key).block(counter);
    const std::uint64_t w = (std::uint64_t(b[0]) << 32) | b[1];
    return static_cast<double>(w >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

}  // namespace nearfield
