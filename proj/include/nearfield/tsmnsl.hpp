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
// 2D-search estimator: evaluates the coupling-eliminated spectrum over a
// (theta, range) grid, extracts one peak per source, and recovers the
// coupling vector at each peak in closed form. A known-MC mode replaces
// the objective with the classic MUSIC spectrum for a supplied coupling,
// reusing the same surface and peak machinery.

#pragma once

#include "nearfield/estimate.hpp"
#include "nearfield/fileio.hpp"
#include "nearfield/grid.hpp"

#include <optional>
#include <sstream>

namespace nearfield {

struct TsmnslConfig {
    SearchGrid grid;
    int q = 1;
    bool refine_peaks = false;                 // optional one-step quadratic refinement
    std::optional<CouplingProvider> known_mc;  // classic 2D-MUSIC mode when set
};

/// Coupling-eliminated spectrum over the full grid.
inline Surface2D spectrum_surface(const UlaGeometry &geom, const SubspaceDecomposition &decomp,
                                  const SearchGrid &grid, int q,
                                  ObjectiveScanner *scanner_out = nullptr) {
    Surface2D s;
    s.theta = grid.theta_axis();
    s.range = grid.range_axis();
    s.values.resize(static_cast<std::size_t>(s.theta.count) * s.range.count);
    ObjectiveScanner scanner(geom, decomp.noise_basis, q);
    for (int i = 0; i < s.theta.count; ++i) {
        const double theta = s.theta.value(i);
        for (int j = 0; j < s.range.count; ++j)
            s.at(i, j) = scanner.exact_objective(theta, s.range.value(j));
    }
    if (scanner_out) *scanner_out = std::move(scanner);
    return s;
}

/// Classic MUSIC spectrum for a supplied (possibly direction-dependent)
/// coupling.
inline Surface2D music_surface(const UlaGeometry &geom, const SubspaceDecomposition &decomp,
                               const SearchGrid &grid, int q, const CouplingProvider &coupling,
                               ObjectiveScanner *scanner_out = nullptr) {
    Surface2D s;
    s.theta = grid.theta_axis();
    s.range = grid.range_axis();
    s.values.resize(static_cast<std::size_t>(s.theta.count) * s.range.count);
    ObjectiveScanner scanner(geom, decomp.noise_basis, q);
    for (int i = 0; i < s.theta.count; ++i) {
        const double theta = s.theta.value(i);
        const CouplingVector c = coupling(theta);
        for (int j = 0; j < s.range.count; ++j)
            s.at(i, j) = scanner.known_mc_objective(theta, s.range.value(j), c);
    }
    if (scanner_out) *scanner_out = std::move(scanner);
    return s;
}

inline EstimationResult tsmnsl_estimate(const CovarianceEstimate &r, const UlaGeometry &geom,
                                        int num_sources, const TsmnslConfig &config,
                                        Surface2D *surface_out = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    const SubspaceDecomposition decomp = eigendecompose(r, num_sources);

    ObjectiveScanner scanner(geom, decomp.noise_basis, config.q);
    Surface2D surface =
        config.known_mc
            ? music_surface(geom, decomp, config.grid, config.q, *config.known_mc, &scanner)
            : spectrum_surface(geom, decomp, config.grid, config.q, &scanner);

    const PeakSet peaks = find_n_peaks(surface, num_sources);

    EstimationResult result;
    for (const GridPeak &p : peaks.peaks) {
        SourceEstimate est;
        est.doa = p.theta;
        est.range = p.range;
        est.objective_value = p.value;
        est.coupling =
            config.known_mc ? (*config.known_mc)(p.theta) : scanner.mc_at(p.theta, p.range);
        if (config.refine_peaks) {
            const auto [theta_r, range_r] = refine_peak(surface, p);
            est.doa = theta_r;
            est.range = range_r;
        }
        result.records.push_back(std::move(est));
        result.diagnostics.boundary_peak |= p.on_boundary;
    }
    result.diagnostics.peak_deficient = peaks.deficient;
    result.diagnostics.grid_evaluations = scanner.evaluations();
    result.diagnostics.regularized_count = scanner.regularized();
    result.diagnostics.capped_count = scanner.capped();
    result.diagnostics.tm_seconds = scanner.tm_seconds();
    result.diagnostics.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (surface_out) *surface_out = std::move(surface);
    return result;
}

/// CSV export of a 2D surface: `theta_deg,range_lambda,objective`.
inline std::string serialize_surface(const Surface2D &s) {
    std::ostringstream os;
    os << "theta_deg,range_lambda,objective\n";
    for (int i = 0; i < s.theta.count; ++i)
        for (int j = 0; j < s.range.count; ++j)
            os << format_double(rad_to_deg(s.theta.value(i))) << ','
               << format_double(s.range.value(j)) << ',' << format_double(s.at(i, j)) << "\n";
    return os.str();
}

/// CSV export of a 1D spectrum slice.
inline std::string serialize_slice(const std::vector<double> &values, const GridAxis &axis,
                                   bool axis_is_theta) {
    std::ostringstream os;
    os << (axis_is_theta ? "theta_deg" : "range_lambda") << ",objective\n";
    for (int i = 0; i < axis.count; ++i) {
        const double v = axis_is_theta ? rad_to_deg(axis.value(i)) : axis.value(i);
        os << format_double(v) << ',' << format_double(values[i]) << "\n";
    }
    return os.str();
}

}  // namespace nearfield
