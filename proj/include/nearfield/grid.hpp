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
// Search grids, spectrum surfaces, peak extraction, and the shared
// objective scanner used by both the 2D and 1D estimators.

#pragma once

#include "nearfield/array_model.hpp"
#include "nearfield/subspace.hpp"

#include <chrono>
#include <cmath>
#include <vector>

namespace nearfield {

struct GridAxis {
    double start = 0.0;
    double step = 1.0;
    int count = 0;

    double value(int i) const { return start + i * step; }
    int nearest_index(double v) const {
        int i = static_cast<int>(std::lround((v - start) / step));
        return std::clamp(i, 0, count - 1);
    }
};

inline GridAxis make_axis(double min, double max, double step) {
    if (step <= 0.0) throw std::invalid_argument("grid step must be positive");
    if (max <= min) throw std::invalid_argument("grid max must exceed min");
    GridAxis a;
    a.start = min;
    a.step = step;
    a.count = static_cast<int>(std::floor((max - min) / step + 1.0 + 1e-9));
    return a;
}

/// Rectangular (theta, range) search grid. Angles in radians, ranges in
/// wavelengths. Defaults: theta over [0, 180] degrees at 0.1-degree
/// steps, range over the Fresnel interval at 0.1-wavelength steps.
struct SearchGrid {
    double theta_min = 0.0;
    double theta_max = pi;
    double theta_step = deg_to_rad(0.1);
    double range_min = 0.0;
    double range_max = 1.0;
    double range_step = 0.1;

    static SearchGrid defaults(const UlaGeometry &geom) {
        SearchGrid g;
        g.range_min = geom.fresnel_lower();
        g.range_max = geom.fresnel_upper();
        return g;
    }

    GridAxis theta_axis() const { return make_axis(theta_min, theta_max, theta_step); }
    GridAxis range_axis() const { return make_axis(range_min, range_max, range_step); }

    SearchGrid halved() const {
        SearchGrid g = *this;
        g.theta_step *= 0.5;
        g.range_step *= 0.5;
        return g;
    }
};

/// Dense objective field over a (theta, range) grid, stored row-major
/// with theta as the slow index.
struct Surface2D {
    GridAxis theta;
    GridAxis range;
    std::vector<double> values;

    double &at(int i, int j) { return values[static_cast<std::size_t>(i) * range.count + j]; }
    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * range.count + j];
    }
};

struct GridPeak {
    double theta = 0.0;
    double range = 0.0;
    double value = 0.0;
    int theta_index = 0;
    int range_index = 0;
    bool on_boundary = false;
};

struct PeakSet {
    std::vector<GridPeak> peaks;   // descending value; ties by smaller theta, then range
    bool deficient = false;        // fewer local maxima than requested
};

namespace detail {

// Peak test under the plateau rule: a cell wins against an equal-valued
// neighbor only if it precedes it lexicographically, so a flat plateau
// contributes exactly one peak (its lexicographically smallest cell).
inline bool beats(double v, int i, int j, double vn, int in, int jn) {
    if (v != vn) return v > vn;
    return (i < in) || (i == in && j < jn);
}

}  // namespace detail

/// Strict local maxima over the 8-neighborhood (2-neighborhood for 1D
/// surfaces); boundary cells compare against existing neighbors only and
/// are flagged. Returns the top `n` by value with deterministic ties.
inline PeakSet find_n_peaks(const Surface2D &surface, int n) {
    const int ni = surface.theta.count;
    const int nj = surface.range.count;
    std::vector<GridPeak> found;
    for (int i = 0; i < ni; ++i) {
        for (int j = 0; j < nj; ++j) {
            const double v = surface.at(i, j);
            bool is_peak = true;
            for (int di = -1; di <= 1 && is_peak; ++di) {
                for (int dj = -1; dj <= 1 && is_peak; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= ni || jj < 0 || jj >= nj) continue;
                    if (!detail::beats(v, i, j, surface.at(ii, jj), ii, jj)) is_peak = false;
                }
            }
            if (is_peak) {
                GridPeak p;
                p.theta_index = i;
                p.range_index = j;
                p.theta = surface.theta.value(i);
                p.range = surface.range.value(j);
                p.value = v;
                p.on_boundary = (i == 0 || i == ni - 1 || j == 0 || j == nj - 1);
                found.push_back(p);
            }
        }
    }
    std::sort(found.begin(), found.end(), [](const GridPeak &a, const GridPeak &b) {
        if (a.value != b.value) return a.value > b.value;
        if (a.theta_index != b.theta_index) return a.theta_index < b.theta_index;
        return a.range_index < b.range_index;
    });
    PeakSet out;
    out.deficient = static_cast<int>(found.size()) < n;
    if (static_cast<int>(found.size()) > n) found.resize(n);
    out.peaks = std::move(found);
    return out;
}

/// 1D variant over a value vector laid out along `axis`.
inline PeakSet find_n_peaks_1d(const std::vector<double> &values, const GridAxis &axis, int n) {
    Surface2D s;
    s.theta = axis;
    s.range = GridAxis{0.0, 1.0, 1};
    s.values = values;
    PeakSet out = find_n_peaks(s, n);
    for (auto &p : out.peaks) {
        p.range = 0.0;
        p.on_boundary = (p.theta_index == 0 || p.theta_index == axis.count - 1);
    }
    return out;
}

/// One-step quadratic interpolation of a peak location along both axes,
/// clamped to half a cell. Used only when refinement is switched on.
inline std::pair<double, double> refine_peak(const Surface2D &s, const GridPeak &p) {
    auto vertex = [](double vm, double v0, double vp, double step) {
        const double denom = vm - 2.0 * v0 + vp;
        if (denom >= 0.0) return 0.0;   // not concave, keep the grid point
        double delta = 0.5 * (vm - vp) / denom;
        return std::clamp(delta, -0.5, 0.5) * step;
    };
    double dt = 0.0, dr = 0.0;
    if (p.theta_index > 0 && p.theta_index < s.theta.count - 1)
        dt = vertex(s.at(p.theta_index - 1, p.range_index), p.value,
                    s.at(p.theta_index + 1, p.range_index), s.theta.step);
    if (p.range_index > 0 && p.range_index < s.range.count - 1)
        dr = vertex(s.at(p.theta_index, p.range_index - 1), p.value,
                    s.at(p.theta_index, p.range_index + 1), s.range.step);
    return {p.theta + dt, p.range + dr};
}

/// Evaluates the search objective at grid candidates against a fixed
/// noise subspace. Keeps all workspaces preallocated; counts
/// evaluations, ridge-regularized cells, capped spectrum cells, and the
/// time spent constructing transformation matrices (steering synthesis
/// plus banded assembly), which dominates the per-cell cost alongside
/// the quadratic-form solve.
class ObjectiveScanner {
  public:
    ObjectiveScanner(const UlaGeometry &geom, const MatrixXcd &noise_basis, int q)
        : geom_(geom), q_(q), uw_adj_(noise_basis.adjoint()) {
        if (q_ < 1 || q_ >= geom.num_elements)
            throw std::invalid_argument("coupling length Q must satisfy 1 <= Q < M");
        const int m = geom.num_elements;
        a_.resize(m);
        a_tilde_.resize(m);
        x_.resize(m, q_);
        w_.resize(uw_adj_.rows(), q_);
        om_.resize(q_, q_);
    }

    /// Spherical-wavefront objective at (theta, range).
    double exact_objective(double theta, double range) {
        const auto t0 = clock_now();
        build_exact_tm(theta, range);
        const auto t1 = clock_now();
        tm_seconds_ += seconds(t0, t1);
        return objective_from_tm();
    }

    /// Far-field-factor objective at theta (curvature ignored).
    double approx_objective(double theta) {
        const auto t0 = clock_now();
        build_approx_tm(theta);
        const auto t1 = clock_now();
        tm_seconds_ += seconds(t0, t1);
        return objective_from_tm();
    }

    /// Classic MUSIC objective with a supplied coupling vector.
    double known_mc_objective(double theta, double range, const CouplingVector &c) {
        const auto t0 = clock_now();
        build_exact_tm(theta, range);
        a_tilde_.noalias() = x_ * c.coeffs;
        const auto t1 = clock_now();
        tm_seconds_ += seconds(t0, t1);
        ++evaluations_;
        const double denom = (uw_adj_ * a_tilde_).squaredNorm();
        const double value =
            denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
        if (!(value <= 1e10)) ++capped_;
        return value;
    }

    /// Constrained coupling estimate at (theta, range), exact model.
    CouplingVector mc_at(double theta, double range) {
        build_exact_tm(theta, range);
        form_omega();
        bool reg = false;
        return mc_from_omega(OmegaMatrix{om_, OmegaKind::exact}, &reg);
    }

    /// Constrained coupling estimate at theta, far-field factor model.
    CouplingVector mc_at_approx(double theta) {
        build_approx_tm(theta);
        form_omega();
        bool reg = false;
        return mc_from_omega(OmegaMatrix{om_, OmegaKind::approx}, &reg);
    }

    long evaluations() const { return evaluations_; }
    long regularized() const { return regularized_; }
    long capped() const { return capped_; }
    double tm_seconds() const { return tm_seconds_; }

  private:
    static std::chrono::steady_clock::time_point clock_now() {
        return std::chrono::steady_clock::now();
    }
    static double seconds(std::chrono::steady_clock::time_point a,
                          std::chrono::steady_clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    }

    void build_exact_tm(double theta, double range) {
        const int m = geom_.num_elements;
        const int half = geom_.half_span();
        const double cos_t = std::cos(theta);
        for (int i = 0; i < m; ++i) {
            const int mm = i - half;
            if (mm == 0) {
                a_(i) = cxd(1.0, 0.0);
                continue;
            }
            const double md = mm * geom_.spacing;
            const double rm =
                std::sqrt(range * range + md * md - 2.0 * md * range * cos_t);
            a_(i) = (range / rm) * std::polar(1.0, 2.0 * pi * (rm - range));
        }
        detail::fill_transformation(a_, q_, x_);
    }

    void build_approx_tm(double theta) {
        const int m = geom_.num_elements;
        const int half = geom_.half_span();
        const double gamma = -2.0 * pi * geom_.spacing * std::cos(theta);
        for (int i = 0; i < m; ++i) a_(i) = std::polar(1.0, gamma * (i - half));
        detail::fill_transformation(a_, q_, x_);
    }

    void form_omega() {
        w_.noalias() = uw_adj_ * x_;
        om_.noalias() = w_.adjoint() * w_;
    }

    double objective_from_tm() {
        ++evaluations_;
        form_omega();
        bool reg = false;
        detail::solve_omega_e1(om_, ldlt_, solution_, reg);
        if (reg) ++regularized_;
        return solution_(0).real();
    }

    UlaGeometry geom_;
    int q_;
    MatrixXcd uw_adj_;
    VectorXcd a_;
    VectorXcd a_tilde_;
    MatrixXcd x_, w_, om_;
    Eigen::LDLT<MatrixXcd> ldlt_;
    VectorXcd solution_;
    long evaluations_ = 0;
    long regularized_ = 0;
    long capped_ = 0;
    double tm_seconds_ = 0.0;
};

}  // namespace nearfield
