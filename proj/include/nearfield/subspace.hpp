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
// Subspace machinery: Hermitian eigendecomposition with a deterministic
// ordering, the Q x Q quadratic-form matrix Omega = X^H Uw Uw^H X, the
// MUSIC objective, and the closed-form minimizer of c^H Omega c under a
// unit self-term constraint.

#pragma once

#include "nearfield/signal_sim.hpp"
#include "nearfield/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <limits>
#include <numeric>

namespace nearfield {

/// Eigenpairs of a covariance estimate split into signal and noise
/// subspaces. Eigenvalues are sorted descending; each eigenvector is
/// phase-normalized so its largest-magnitude entry is real positive,
/// making the decomposition reproducible bit for bit.
struct SubspaceDecomposition {
    MatrixXcd signal_basis;   // M x N
    MatrixXcd noise_basis;    // M x (M - N)
    VectorXd eigenvalues;     // length M, descending
};

namespace detail {

inline void phase_normalize(VectorXcd &v) {
    int imax = 0;
    double best = -1.0;
    for (int i = 0; i < v.size(); ++i) {
        const double a = std::norm(v(i));
        if (a > best) {
            best = a;
            imax = i;
        }
    }
    const cxd z = v(imax);
    const double mag = std::abs(z);
    if (mag > 0.0) v *= std::conj(z) / mag;
}

inline bool lex_less(const VectorXcd &a, const VectorXcd &b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a(i).real() != b(i).real()) return a(i).real() < b(i).real();
        if (a(i).imag() != b(i).imag()) return a(i).imag() < b(i).imag();
    }
    return false;
}

}  // namespace detail

inline SubspaceDecomposition eigendecompose(const CovarianceEstimate &r, int num_sources) {
    const int m = static_cast<int>(r.matrix.rows());
    if (num_sources < 0 || num_sources >= m)
        throw std::invalid_argument("source count must satisfy 0 <= N < M");
    const double herm_err = (r.matrix - r.matrix.adjoint()).norm();
    if (herm_err > 1e-8 * std::max(1.0, r.matrix.norm()))
        throw std::invalid_argument("covariance matrix is not Hermitian within tolerance");

    Eigen::SelfAdjointEigenSolver<MatrixXcd> solver(r.matrix);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigendecomposition failed to converge");

    std::vector<VectorXcd> vecs(m);
    for (int i = 0; i < m; ++i) {
        vecs[i] = solver.eigenvectors().col(i);
        detail::phase_normalize(vecs[i]);
    }
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    const VectorXd &vals = solver.eigenvalues();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (vals(a) != vals(b)) return vals(a) > vals(b);
        return detail::lex_less(vecs[a], vecs[b]);
    });

    SubspaceDecomposition d;
    d.eigenvalues.resize(m);
    d.signal_basis.resize(m, num_sources);
    d.noise_basis.resize(m, m - num_sources);
    for (int i = 0; i < m; ++i) {
        d.eigenvalues(i) = vals(order[i]);
        if (i < num_sources)
            d.signal_basis.col(i) = vecs[order[i]];
        else
            d.noise_basis.col(i - num_sources) = vecs[order[i]];
    }
    return d;
}

enum class OmegaKind { exact, approx, oblique };

/// Q x Q Hermitian PSD matrix X^H Uw Uw^H X, tagged with the model that
/// produced X.
struct OmegaMatrix {
    MatrixXcd matrix;
    OmegaKind built_from = OmegaKind::exact;
};

inline OmegaMatrix omega(const MatrixXcd &x, const MatrixXcd &noise_basis,
                         OmegaKind kind = OmegaKind::exact) {
    const MatrixXcd w = noise_basis.adjoint() * x;
    MatrixXcd om = w.adjoint() * w;
    om = 0.5 * (om + om.adjoint()).eval();
    return {std::move(om), kind};
}

/// MUSIC objective 1 / ||Uw^H a||^2. Values above 1e10 (the spectrum is
/// effectively singular there) are reported with the capped flag set.
struct MusicValue {
    double value = 0.0;
    bool capped = false;
};

inline MusicValue music_value(const VectorXcd &a_tilde, const MatrixXcd &noise_basis) {
    const double denom = (noise_basis.adjoint() * a_tilde).squaredNorm();
    MusicValue out;
    out.value = denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
    out.capped = !(out.value <= 1e10);
    return out;
}

/// Objective evaluation and constrained MC recovery share one solve
/// policy: LDLT of Omega, with a trace-scaled ridge (eps = 1e-12) when
/// the condition number exceeds 1e12 or the solve degenerates. Data that
/// is exactly noise free makes Omega singular at the true location; the
/// ridge turns that into a large finite peak instead of a failure.
struct ObjectiveValue {
    double value = 0.0;
    bool regularized = false;
};

namespace detail {

inline constexpr double kRidgeEps = 1e-12;
inline constexpr double kRcondFloor = 1e-12;

/// Workspace variant used by grid scans: the factorization object and
/// the solution vector are reused across calls and the solve happens in
/// place, so a grid cell costs no allocations. The condition number is
/// estimated from the spread of the factor diagonal (Omega is positive
/// semidefinite by construction); any degenerate solve still falls
/// through to the ridge.
inline void solve_omega_e1(const MatrixXcd &om, Eigen::LDLT<MatrixXcd> &ldlt,
                           VectorXcd &solution, bool &regularized) {
    const int q = static_cast<int>(om.rows());
    solution.setZero(q);
    solution(0) = cxd(1.0, 0.0);

    ldlt.compute(om);
    regularized = false;
    double d_min = std::numeric_limits<double>::infinity(), d_max = 0.0;
    for (int i = 0; i < q; ++i) {
        const double d = ldlt.vectorD()(i).real();
        d_min = std::min(d_min, d);
        d_max = std::max(d_max, std::abs(d));
    }
    const bool well_conditioned = d_min > kRcondFloor * d_max;
    if (ldlt.info() == Eigen::Success && well_conditioned) {
        ldlt.solveInPlace(solution);
        if (solution.allFinite() && solution(0).real() > 0.0) return;
        solution.setZero(q);
        solution(0) = cxd(1.0, 0.0);
    }
    regularized = true;
    const double tr = om.real().trace();
    const double ridge = kRidgeEps * (tr > 0.0 ? tr / q : 1.0);
    MatrixXcd om2 = om;
    om2.diagonal().array() += ridge;
    ldlt.compute(om2);
    solution.setZero(q);
    solution(0) = cxd(1.0, 0.0);
    ldlt.solveInPlace(solution);
    if (!solution.allFinite() || !(solution(0).real() > 0.0)) {
        // Omega is numerically void of information; report a flat huge value.
        solution.setZero(q);
        solution(0) = cxd(1.0 / ridge, 0.0);
    }
}

inline VectorXcd solve_omega_e1(const MatrixXcd &om, bool &regularized) {
    Eigen::LDLT<MatrixXcd> ldlt;
    VectorXcd x;
    solve_omega_e1(om, ldlt, x, regularized);
    return x;
}

}  // namespace detail

/// First diagonal entry of Omega^{-1}; the height of the search spectrum
/// after the optimal coupling vector has been eliminated in closed form.
inline ObjectiveValue spectrum_objective(const OmegaMatrix &om) {
    ObjectiveValue out;
    const VectorXcd x = detail::solve_omega_e1(om.matrix, out.regularized);
    out.value = x(0).real();
    return out;
}

/// Minimizer of c^H Omega c subject to a unit first entry:
/// c = Omega^{-1} e1 / (e1^H Omega^{-1} e1). The first coefficient of
/// the result is exactly 1.
inline CouplingVector mc_from_omega(const OmegaMatrix &om, bool *regularized = nullptr) {
    bool reg = false;
    VectorXcd x = detail::solve_omega_e1(om.matrix, reg);
    if (regularized) *regularized = reg;
    x /= x(0);
    x(0) = cxd(1.0, 0.0);
    return CouplingVector(std::move(x));
}

}  // namespace nearfield
