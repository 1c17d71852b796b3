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
// Iterative 1D estimator with oblique-projection source isolation.
// Initial DOAs and coupling come from a 1D search under the far-field
// phase factor, initial ranges from a 1D search under the spherical
// model. Each iteration then isolates one source by projecting the data
// along the other sources' current steering estimates, re-estimates its
// DOA and range with two 1D searches on the isolated covariance, and
// re-solves its coupling in closed form. A source stops updating once
// its DOA moves by less than the convergence threshold.

#pragma once

#include "nearfield/estimate.hpp"
#include "nearfield/fileio.hpp"
#include "nearfield/grid.hpp"
#include "nearfield/tsmnsl.hpp"

#include <Eigen/SVD>

#include <sstream>

namespace nearfield {

enum class UpdateStyle {
    jacobi,        // peers frozen at the previous iteration's estimates
    gauss_seidel   // peers use already-updated estimates within the iteration
};

struct ImopConfig {
    double epsilon = deg_to_rad(0.01);   // DOA convergence threshold, radians
    int max_iterations = 50;
    SearchGrid grid;
    int q = 1;
    UpdateStyle update_style = UpdateStyle::jacobi;
    bool validate_projectors = false;    // assert the projector identities in-loop
    // Closing pass once the DOAs have converged: re-isolate each source
    // against the final peer estimates and redo its range search and
    // coupling solve. The last in-loop range estimates were computed
    // against peers that still carried one iteration of lag.
    bool final_range_polish = true;

    void validate() const {
        if (epsilon <= 0.0) throw std::invalid_argument("convergence threshold must be positive");
        if (max_iterations < 1) throw std::invalid_argument("need at least one iteration");
    }
};

struct ImopIterationRecord {
    int source = 0;       // processing index, ascending initial DOA
    int iteration = 0;    // 0 = initial estimate
    double doa = 0.0;
    double range = 0.0;
    CouplingVector coupling;
    double delta_theta = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
};

enum class Termination { converged, max_iter };

struct ImopTrace {
    std::vector<ImopIterationRecord> records;
    Termination termination = Termination::converged;
};

/// P = I - a (a^H a)^{-1} a^H; Hermitian, idempotent, annihilates a.
inline MatrixXcd orthogonal_complement_projector(const VectorXcd &a) {
    const double nn = a.squaredNorm();
    if (!(nn > 0.0)) throw std::invalid_argument("cannot project along a zero vector");
    const int m = static_cast<int>(a.size());
    return MatrixXcd::Identity(m, m) - (a * a.adjoint()) / nn;
}

/// Oblique projector onto the span of `a_other` along the direction of
/// `a_self`: E = A (A^H P A)^{-1} A^H P with P the orthogonal complement
/// of a_self. Satisfies E A = A and E a_self = 0. Fails when the stacked
/// matrix [a_self | A] is rank deficient (condition number above 1e10).
inline MatrixXcd oblique_projector(const MatrixXcd &a_other, const VectorXcd &a_self,
                                   double *cond_out = nullptr) {
    const int m = static_cast<int>(a_self.size());
    const int k = static_cast<int>(a_other.cols());
    if (k == 0) return MatrixXcd::Zero(m, m);

    MatrixXcd stacked(m, k + 1);
    stacked.col(0) = a_self;
    stacked.rightCols(k) = a_other;
    Eigen::JacobiSVD<MatrixXcd> svd(stacked);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (cond_out) *cond_out = cond;
    if (!(cond < 1e10))
        throw std::runtime_error("steering directions are numerically dependent "
                                 "(condition " + std::to_string(cond) + ")");

    const MatrixXcd p = orthogonal_complement_projector(a_self);
    const MatrixXcd pa = p * a_other;
    // A^H P A = (P A)^H (P A) because P is Hermitian idempotent.
    const MatrixXcd gram = pa.adjoint() * pa;
    return a_other * gram.ldlt().solve(pa.adjoint());
}

/// Applies (I - E) to every snapshot.
inline SnapshotMatrix isolate_source(const SnapshotMatrix &y, const MatrixXcd &e) {
    SnapshotMatrix out;
    out.geometry = y.geometry;
    out.provenance = y.provenance;
    out.data = y.data - e * y.data;
    return out;
}

struct InitialDoaMc {
    std::vector<std::pair<double, CouplingVector>> estimates;   // (theta, coupling)
    bool deficient = false;
    std::vector<double> surface;   // 1D objective over the theta axis
};

/// Initial DOA and coupling estimates from the far-field-factor model:
/// 1D peak search over theta, closed-form coupling at each peak.
inline InitialDoaMc initial_doa_mc(const UlaGeometry &geom, const SubspaceDecomposition &decomp,
                                   int num_sources, int q, const SearchGrid &grid,
                                   ObjectiveScanner *scanner_out = nullptr) {
    const GridAxis axis = grid.theta_axis();
    ObjectiveScanner scanner(geom, decomp.noise_basis, q);
    std::vector<double> values(axis.count);
    for (int i = 0; i < axis.count; ++i) values[i] = scanner.approx_objective(axis.value(i));

    const PeakSet peaks = find_n_peaks_1d(values, axis, num_sources);
    InitialDoaMc out;
    out.deficient = peaks.deficient;
    for (const GridPeak &p : peaks.peaks)
        out.estimates.emplace_back(p.theta, scanner.mc_at_approx(p.theta));
    out.surface = std::move(values);
    if (scanner_out) *scanner_out = std::move(scanner);
    return out;
}

/// Initial range estimate: 1D search over the range axis with the DOA
/// pinned, under the spherical-wavefront model.
inline double initial_range(const UlaGeometry &geom, const SubspaceDecomposition &decomp,
                            double doa, int q, const SearchGrid &grid,
                            std::vector<double> *values_out = nullptr,
                            ObjectiveScanner *scanner_out = nullptr) {
    const GridAxis axis = grid.range_axis();
    ObjectiveScanner scanner(geom, decomp.noise_basis, q);
    int best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<double> values(axis.count);
    for (int i = 0; i < axis.count; ++i) {
        values[i] = scanner.exact_objective(doa, axis.value(i));
        if (values[i] > best_value) {
            best_value = values[i];
            best = i;
        }
    }
    if (values_out) *values_out = std::move(values);
    if (scanner_out) *scanner_out = std::move(scanner);
    return axis.value(best);
}

namespace detail {

struct SourceIterate {
    double doa = 0.0;
    double range = 0.0;
    CouplingVector coupling;
    bool converged = false;
};

inline VectorXcd iterate_steering(const UlaGeometry &geom, const SourceIterate &s, int q) {
    return transformation_matrix(geom, s.doa, s.range, q) * s.coupling.coeffs;
}

}  // namespace detail

/// Full iterative estimation. Returns the per-source estimates together
/// with the per-iteration trace. Identical inputs produce identical
/// results and traces.
inline std::pair<EstimationResult, ImopTrace> imop_estimate(const SnapshotMatrix &y,
                                                            int num_sources,
                                                            const ImopConfig &config) {
    config.validate();
    if (num_sources < 1) throw std::invalid_argument("need at least one source");
    if (num_sources >= y.num_elements())
        throw std::invalid_argument("source count N must be smaller than array size M");

    const auto t0 = std::chrono::steady_clock::now();
    const UlaGeometry &geom = y.geometry;
    EstimationResult result;
    ImopTrace trace;

    const CovarianceEstimate r_full = sample_covariance(y);
    const SubspaceDecomposition decomp = eigendecompose(r_full, num_sources);

    // Initial estimates: DOA and coupling from the far-field factor,
    // range from the spherical model, sources ordered by ascending DOA.
    ObjectiveScanner init_scanner(geom, decomp.noise_basis, config.q);
    InitialDoaMc init =
        initial_doa_mc(geom, decomp, num_sources, config.q, config.grid, &init_scanner);
    result.diagnostics.peak_deficient = init.deficient;
    std::sort(init.estimates.begin(), init.estimates.end(),
              [](const auto &a, const auto &b) { return a.first < b.first; });

    double tm_seconds = init_scanner.tm_seconds();
    long evaluations = init_scanner.evaluations();
    long regularized = init_scanner.regularized();

    const int n_found = static_cast<int>(init.estimates.size());
    std::vector<detail::SourceIterate> current(n_found);
    std::vector<double> final_objective(n_found, 0.0);
    for (int n = 0; n < n_found; ++n) {
        current[n].doa = init.estimates[n].first;
        current[n].coupling = init.estimates[n].second;
        ObjectiveScanner range_scanner(geom, decomp.noise_basis, config.q);
        current[n].range = initial_range(geom, decomp, current[n].doa, config.q, config.grid,
                                         nullptr, &range_scanner);
        tm_seconds += range_scanner.tm_seconds();
        evaluations += range_scanner.evaluations();
        regularized += range_scanner.regularized();

        ImopIterationRecord rec;
        rec.source = n;
        rec.iteration = 0;
        rec.doa = current[n].doa;
        rec.range = current[n].range;
        rec.coupling = current[n].coupling;
        trace.records.push_back(std::move(rec));
    }

    const GridAxis theta_axis = config.grid.theta_axis();
    const GridAxis range_axis = config.grid.range_axis();

    // Isolation of source n against the given peer estimates, followed by
    // the single-source eigendecomposition of the isolated covariance.
    auto isolated_subspace = [&](int n, const std::vector<detail::SourceIterate> &peers,
                                 const detail::SourceIterate &self) {
        if (n_found <= 1) return eigendecompose(sample_covariance(y), 1);
        const VectorXcd a_self = detail::iterate_steering(geom, self, config.q);
        MatrixXcd a_other(geom.num_elements, n_found - 1);
        int col = 0;
        for (int k = 0; k < n_found; ++k) {
            if (k == n) continue;
            a_other.col(col++) = detail::iterate_steering(geom, peers[k], config.q);
        }
        MatrixXcd e;
        try {
            e = oblique_projector(a_other, a_self);
        } catch (const std::exception &ex) {
            throw IsolationError(n, "source isolation failed for source " +
                                        std::to_string(n) + ": " + ex.what());
        }
        if (config.validate_projectors) {
            const double rel_a = (e * a_other - a_other).norm() / a_other.norm();
            const double rel_s = (e * a_self).norm() / a_self.norm();
            if (rel_a > 1e-8 || rel_s > 1e-8)
                throw std::logic_error("oblique projector identities violated");
        }
        return eigendecompose(sample_covariance(isolate_source(y, e)), 1);
    };

    auto best_range = [&](ObjectiveScanner &scanner, double theta) {
        int best_r = 0;
        double best_rv = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < range_axis.count; ++j) {
            const double v = scanner.exact_objective(theta, range_axis.value(j));
            if (v > best_rv) {
                best_rv = v;
                best_r = j;
            }
        }
        return std::pair<double, double>(range_axis.value(best_r), best_rv);
    };

    int iterations_run = 0;
    bool all_converged = n_found == 0;
    for (int iter = 1; iter <= config.max_iterations && !all_converged; ++iter) {
        iterations_run = iter;
        const std::vector<detail::SourceIterate> snapshot = current;
        const auto &peers =
            (config.update_style == UpdateStyle::jacobi) ? snapshot : current;

        // Every source is re-estimated each iteration; a source counts as
        // converged while its DOA cell keeps repeating, and the loop ends
        // once all sources are simultaneously converged.
        for (int n = 0; n < n_found; ++n) {
            const detail::SourceIterate prev = snapshot[n];
            const SubspaceDecomposition iso_decomp = isolated_subspace(n, peers, prev);
            ObjectiveScanner scanner(geom, iso_decomp.noise_basis, config.q);

            int best_t = 0;
            double best_tv = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < theta_axis.count; ++i) {
                const double v = scanner.exact_objective(theta_axis.value(i), prev.range);
                if (v > best_tv) {
                    best_tv = v;
                    best_t = i;
                }
            }
            const double theta_new = theta_axis.value(best_t);

            const auto [range_new, best_rv] = best_range(scanner, theta_new);
            const CouplingVector c_new = scanner.mc_at(theta_new, range_new);

            tm_seconds += scanner.tm_seconds();
            evaluations += scanner.evaluations();
            regularized += scanner.regularized();

            const double delta = std::abs(theta_new - prev.doa);
            current[n].doa = theta_new;
            current[n].range = range_new;
            current[n].coupling = c_new;
            current[n].converged = delta < config.epsilon;
            final_objective[n] = best_rv;

            ImopIterationRecord rec;
            rec.source = n;
            rec.iteration = iter;
            rec.doa = theta_new;
            rec.range = range_new;
            rec.coupling = c_new;
            rec.delta_theta = delta;
            rec.converged = current[n].converged;
            trace.records.push_back(std::move(rec));
        }

        all_converged = true;
        for (const auto &s : current) all_converged &= s.converged;
    }

    // Closing passes: with the DOAs settled, the in-loop range estimates
    // were computed against peers lagging one iteration. Re-isolate
    // against the latest estimates and redo each range search and
    // coupling solve at the fixed final DOA, repeating until the range
    // cells stop moving (bounded, since each pass only tightens the
    // peer geometry).
    if (config.final_range_polish && n_found > 1) {
        for (int pass = 0; pass < 3; ++pass) {
            const std::vector<detail::SourceIterate> finals = current;
            bool moved = false;
            for (int n = 0; n < n_found; ++n) {
                const SubspaceDecomposition iso_decomp =
                    isolated_subspace(n, finals, finals[n]);
                ObjectiveScanner scanner(geom, iso_decomp.noise_basis, config.q);
                const auto [range_new, best_rv] = best_range(scanner, finals[n].doa);
                moved |= range_new != current[n].range;
                current[n].range = range_new;
                current[n].coupling = scanner.mc_at(finals[n].doa, range_new);
                final_objective[n] = best_rv;
                tm_seconds += scanner.tm_seconds();
                evaluations += scanner.evaluations();
                regularized += scanner.regularized();
            }
            if (!moved) break;
        }
    }

    trace.termination = all_converged ? Termination::converged : Termination::max_iter;
    for (int n = 0; n < n_found; ++n) {
        SourceEstimate est;
        est.doa = current[n].doa;
        est.range = current[n].range;
        est.coupling = current[n].coupling;
        est.objective_value = final_objective[n];
        result.records.push_back(std::move(est));
    }
    result.diagnostics.tm_seconds = tm_seconds;
    result.diagnostics.grid_evaluations = evaluations;
    result.diagnostics.regularized_count = regularized;
    result.diagnostics.iterations = iterations_run;
    result.diagnostics.converged = all_converged;
    result.diagnostics.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(result), std::move(trace)};
}

/// CSV export of the iteration trace:
/// `source,iteration,theta_deg,range_lambda,delta_theta_deg` (the delta
/// column is empty for the initial estimates).
inline std::string serialize_imop_trace(const ImopTrace &trace) {
    std::ostringstream os;
    os << "source,iteration,theta_deg,range_lambda,delta_theta_deg\n";
    for (const auto &r : trace.records) {
        os << r.source << ',' << r.iteration << ',' << format_double(rad_to_deg(r.doa)) << ','
           << format_double(r.range) << ',';
        if (!std::isnan(r.delta_theta)) os << format_double(rad_to_deg(r.delta_theta));
        os << "\n";
    }
    return os.str();
}

}  // namespace nearfield
