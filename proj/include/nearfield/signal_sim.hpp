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
//
// Snapshot synthesis: uncorrelated circular complex Gaussian sources,
// white complex Gaussian noise, direction-dependent coupling produced by
// a documented seed-deterministic rule, plus theoretical and sample
// covariance computation.

#pragma once

#include "nearfield/array_model.hpp"
#include "nearfield/rng.hpp"
#include "nearfield/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace nearfield {

/// Rule for synthesizing direction-dependent coupling coefficients.
///
/// Magnitudes:  |c_k(theta)| = base_magnitudes[k-1] * (1 + kappa*cos(theta)/(1+kappa)),
/// clipped from above to 0.99 * |c_{k-1}(theta)| so the decay stays strict.
/// At theta = 90 degrees the magnitudes equal base_magnitudes for any kappa,
/// and kappa = 0 removes the direction dependence entirely.
///
/// Phases: phase_k(theta) = 2*pi * u(phase_seed; k, floor(theta_deg / 1.0)),
/// a hashed uniform over 1-degree cells, so the phase pattern is reproducible
/// and piecewise constant in theta.
struct McSynthesisSpec {
    int q = 1;                        // Q, coupling length including the self term
    VectorXd base_magnitudes;         // length Q-1, strictly decreasing, in (0, 1)
    double direction_gain = 0.0;      // kappa >= 0
    std::uint64_t phase_seed = 0;

    void validate(int num_elements) const {
        if (q < 1) throw std::invalid_argument("coupling length Q must be >= 1");
        if (q >= num_elements)
            throw std::invalid_argument("coupling length Q must be smaller than array size M");
        if (base_magnitudes.size() != q - 1)
            throw std::invalid_argument("need exactly Q-1 base magnitudes");
        double prev = 1.0;
        for (int k = 0; k < base_magnitudes.size(); ++k) {
            const double v = base_magnitudes(k);
            if (!(v > 0.0 && v < 1.0))
                throw std::invalid_argument("base magnitudes must lie in (0, 1)");
            if (v >= prev)
                throw std::invalid_argument("base magnitudes must be strictly decreasing");
            prev = v;
        }
        if (direction_gain < 0.0)
            throw std::invalid_argument("direction gain must be non-negative");
    }
};

namespace detail {

inline double mc_direction_factor(const McSynthesisSpec &spec, double doa) {
    return 1.0 + spec.direction_gain * std::cos(doa) / (1.0 + spec.direction_gain);
}

inline std::uint64_t mc_phase_cell(double doa) {
    return static_cast<std::uint64_t>(std::floor(rad_to_deg(doa)));
}

}  // namespace detail

/// Deterministic direction-dependent coupling vector: same (spec, doa)
/// always yields the same coefficients.
inline CouplingVector synthesize_mc(const McSynthesisSpec &spec, double doa) {
    VectorXcd c(spec.q);
    c(0) = cxd(1.0, 0.0);
    const double factor = detail::mc_direction_factor(spec, doa);
    const std::uint64_t cell = detail::mc_phase_cell(doa);
    double prev_mag = 1.0;
    for (int k = 1; k < spec.q; ++k) {
        double mag = spec.base_magnitudes(k - 1) * factor;
        mag = std::min(mag, 0.99 * prev_mag);
        const double u = hashed_uniform(spec.phase_seed ^ (0x9E3779B97F4A7C15ull * k), cell);
        c(k) = std::polar(mag, 2.0 * pi * u);
        prev_mag = mag;
    }
    return CouplingVector(std::move(c));
}

/// Analytic derivative of the synthesized coupling with respect to the
/// direction. The hashed phase is piecewise constant and treated as
/// locally constant; a coefficient clipped by the strict-decrease rule
/// inherits the clip target's derivative.
inline VectorXcd synthesize_mc_derivative(const McSynthesisSpec &spec, double doa) {
    VectorXcd dc = VectorXcd::Zero(spec.q);
    const double factor = detail::mc_direction_factor(spec, doa);
    const double dfactor =
        -spec.direction_gain * std::sin(doa) / (1.0 + spec.direction_gain);
    const std::uint64_t cell = detail::mc_phase_cell(doa);
    double prev_mag = 1.0, prev_dmag = 0.0;
    for (int k = 1; k < spec.q; ++k) {
        const double raw = spec.base_magnitudes(k - 1) * factor;
        const double draw = spec.base_magnitudes(k - 1) * dfactor;
        double mag, dmag;
        if (raw <= 0.99 * prev_mag) {
            mag = raw;
            dmag = draw;
        } else {
            mag = 0.99 * prev_mag;
            dmag = 0.99 * prev_dmag;
        }
        const double u = hashed_uniform(spec.phase_seed ^ (0x9E3779B97F4A7C15ull * k), cell);
        dc(k) = std::polar(dmag, 2.0 * pi * u);
        prev_mag = mag;
        prev_dmag = dmag;
    }
    return dc;
}

/// Full synthetic scenario: geometry, sources, noise level, snapshot
/// count, and the coupling synthesis rule. Coupling vectors stored in
/// the sources are expected to come from synthesize_mc(mc_model, doa).
struct ScenarioConfig {
    UlaGeometry geometry;
    std::vector<SourceState> sources;
    double snr_db = 10.0;
    int num_snapshots = 200;   // L
    std::uint64_t rng_seed = 1;
    McSynthesisSpec mc_model;
    bool force_unit_signals = false;   // debug aid: s_n(l) = 1 for all n, l

    int num_sources() const { return static_cast<int>(sources.size()); }

    void validate() const {
        geometry.validate();
        mc_model.validate(geometry.num_elements);
        if (num_sources() >= geometry.num_elements)
            throw std::invalid_argument(
                "source count N must be smaller than array size M");
        if (num_snapshots < 1)
            throw std::invalid_argument("snapshot count L must be >= 1");
        for (std::size_t i = 0; i < sources.size(); ++i) {
            sources[i].validate();
            for (std::size_t j = i + 1; j < sources.size(); ++j) {
                if (sources[i].doa == sources[j].doa)
                    throw std::invalid_argument("source DOAs must be pairwise distinct");
                if (sources[i].range == sources[j].range)
                    throw std::invalid_argument("source ranges must be pairwise distinct");
            }
        }
    }

    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < sources.size(); ++i) {
            auto w = fresnel_warnings(geometry, sources[i], static_cast<int>(i));
            out.insert(out.end(), w.begin(), w.end());
        }
        return out;
    }
};

/// Applies the coupling synthesis rule to every source of the scenario.
inline void apply_mc_model(ScenarioConfig &config) {
    for (auto &src : config.sources) src.coupling = synthesize_mc(config.mc_model, src.doa);
}

/// Convenience builder: scenario with sources at the given
/// (doa_deg, range_wavelengths) positions, unit powers, synthesized MC.
inline ScenarioConfig make_scenario(const UlaGeometry &geom,
                                    const std::vector<std::pair<double, double>> &positions,
                                    double snr_db, int num_snapshots, std::uint64_t seed,
                                    const McSynthesisSpec &mc) {
    ScenarioConfig config;
    config.geometry = geom;
    config.snr_db = snr_db;
    config.num_snapshots = num_snapshots;
    config.rng_seed = seed;
    config.mc_model = mc;
    for (auto [doa_deg, range] : positions) {
        SourceState s;
        s.doa = deg_to_rad(doa_deg);
        s.range = range;
        s.power = 1.0;
        config.sources.push_back(s);
    }
    apply_mc_model(config);
    config.validate();
    return config;
}

/// Coupled steering matrix with one column per source.
inline MatrixXcd coupled_steering_matrix(const ScenarioConfig &config) {
    MatrixXcd a(config.geometry.num_elements, config.num_sources());
    for (int n = 0; n < config.num_sources(); ++n)
        a.col(n) = coupled_steering(config.geometry, config.sources[n]);
    return a;
}

/// Noise variance implied by the configured SNR: the SNR is the mean
/// source signal power divided by the per-element noise variance, so
/// equal unit powers give sigma^2 = 10^(-snr_db/10) regardless of the
/// source count. With no sources the noise variance defaults to 1.
inline double noise_variance(const ScenarioConfig &config) {
    if (config.sources.empty()) return 1.0;
    double mean_power = 0.0;
    for (const auto &src : config.sources) mean_power += src.power;
    mean_power /= config.num_sources();
    return mean_power / std::pow(10.0, config.snr_db / 10.0);
}

enum class Provenance { simulated, imported };

/// M x L block of received snapshots.
struct SnapshotMatrix {
    MatrixXcd data;
    UlaGeometry geometry;
    Provenance provenance = Provenance::simulated;

    int num_elements() const { return static_cast<int>(data.rows()); }
    int num_snapshots() const { return static_cast<int>(data.cols()); }
};

/// Draws one snapshot block. Source signals first (snapshot-major), then
/// noise, from a single counter stream keyed by rng_seed, so identical
/// configs give bit-identical data.
inline SnapshotMatrix generate_snapshots(const ScenarioConfig &config) {
    config.validate();
    const int m = config.geometry.num_elements;
    const int n = config.num_sources();
    const int l = config.num_snapshots;

    const MatrixXcd a = coupled_steering_matrix(config);
    const double sigma2 = noise_variance(config);

    CounterRng rng(config.rng_seed);
    MatrixXcd s(n, l);
    for (int col = 0; col < l; ++col)
        for (int row = 0; row < n; ++row)
            s(row, col) = config.force_unit_signals
                              ? cxd(1.0, 0.0)
                              : rng.complex_normal(config.sources[row].power);
    MatrixXcd y = a * s;
    for (int col = 0; col < l; ++col)
        for (int row = 0; row < m; ++row)
            y(row, col) += rng.complex_normal(sigma2);

    return {std::move(y), config.geometry, Provenance::simulated};
}

/// Covariance estimate (or exact model covariance) with the snapshot
/// count that produced it.
struct CovarianceEstimate {
    MatrixXcd matrix;
    int num_snapshots = 0;
};

/// Exact covariance A Rs A^H + sigma^2 I of the configured scenario.
inline CovarianceEstimate theoretical_covariance(const ScenarioConfig &config) {
    config.validate();
    const int m = config.geometry.num_elements;
    const MatrixXcd a = coupled_steering_matrix(config);
    VectorXd powers(config.num_sources());
    for (int n = 0; n < config.num_sources(); ++n) powers(n) = config.sources[n].power;
    MatrixXcd r = a * powers.asDiagonal() * a.adjoint();
    r += noise_variance(config) * MatrixXcd::Identity(m, m);
    r = 0.5 * (r + r.adjoint()).eval();
    return {std::move(r), config.num_snapshots};
}

/// Sample covariance (1/L) Y Y^H, symmetrized to be exactly Hermitian.
inline CovarianceEstimate sample_covariance(const SnapshotMatrix &y) {
    const int l = y.num_snapshots();
    if (l < 1) throw std::invalid_argument("need at least one snapshot");
    MatrixXcd r = (y.data * y.data.adjoint()) / double(l);
    r = 0.5 * (r + r.adjoint()).eval();
    return {std::move(r), l};
}

}  // namespace nearfield
