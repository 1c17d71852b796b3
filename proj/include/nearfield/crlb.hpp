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
// Fisher information and Cramer-Rao lower bounds for DOA, range, and
// coupling parameters under the spherical-wavefront model with
// direction-dependent coupling.
//
// Steering derivatives for a_m = (r0/r_m) exp(j*2*pi*(r_m - r0)):
//   d r_m / d theta = m d r0 sin(theta) / r_m
//   d r_m / d r0    = (r0 - m d cos(theta)) / r_m
//   d a_m / d theta = a_m (j*2*pi - 1/r_m) * m d r0 sin(theta) / r_m
//   d a_m / d r0    = a_m [ (1/r0 - j*2*pi) + (j*2*pi - 1/r_m) (r0 - m d cos(theta)) / r_m ]
// (both brackets vanish at the reference element m = 0).
//
// The coupling FIM treats the coefficients as one shared parameter set
// perturbing every source's Toeplitz matrix identically, each complex
// coefficient split into real and imaginary real parameters. Per-source
// coupling estimation carries no more information than the shared
// problem, so the shared bound remains a valid lower bound for the
// per-source RMSE.

#pragma once

#include "nearfield/array_model.hpp"
#include "nearfield/signal_sim.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <string>
#include <vector>

namespace nearfield {

/// Elementwise derivative of the exact steering vector with respect to
/// the DOA.
inline VectorXcd d_steering_d_theta(const UlaGeometry &geom, const SourceState &src) {
    const int half = geom.half_span();
    const VectorXcd a = exact_steering_vector(geom, src);
    VectorXcd out(geom.num_elements);
    const double sin_t = std::sin(src.doa);
    for (int i = 0; i < geom.num_elements; ++i) {
        const int m = i - half;
        if (m == 0) {
            out(i) = cxd(0.0, 0.0);
            continue;
        }
        const double rm = element_source_distance(geom, src, m);
        const double drm_dtheta = m * geom.spacing * src.range * sin_t / rm;
        out(i) = a(i) * (cxd(-1.0 / rm, 2.0 * pi)) * drm_dtheta;
    }
    return out;
}

/// Elementwise derivative of the exact steering vector with respect to
/// the range.
inline VectorXcd d_steering_d_range(const UlaGeometry &geom, const SourceState &src) {
    const int half = geom.half_span();
    const VectorXcd a = exact_steering_vector(geom, src);
    VectorXcd out(geom.num_elements);
    const double cos_t = std::cos(src.doa);
    for (int i = 0; i < geom.num_elements; ++i) {
        const int m = i - half;
        if (m == 0) {
            out(i) = cxd(0.0, 0.0);
            continue;
        }
        const double rm = element_source_distance(geom, src, m);
        const double drm_dr = (src.range - m * geom.spacing * cos_t) / rm;
        const cxd bracket =
            cxd(1.0 / src.range, -2.0 * pi) + cxd(-1.0 / rm, 2.0 * pi) * drm_dr;
        out(i) = a(i) * bracket;
    }
    return out;
}

/// 0/1 symmetric Toeplitz selector marking where coupling slot k sits in
/// the coupling matrix (ones exactly at |i - j| = k).
inline MatrixXd d_coupling_d_coeff(int num_elements, int slot) {
    if (slot < 1 || slot >= num_elements)
        throw std::invalid_argument("coupling slot must satisfy 1 <= k < M");
    MatrixXd t = MatrixXd::Zero(num_elements, num_elements);
    for (int i = 0; i < num_elements; ++i) {
        if (i + slot < num_elements) {
            t(i, i + slot) = 1.0;
            t(i + slot, i) = 1.0;
        }
    }
    return t;
}

/// Parameter of the covariance model for FIM purposes.
struct FimParameter {
    enum class Kind { doa, range, mc_re, mc_im } kind = Kind::doa;
    int index = 0;   // source index for doa/range; coupling slot (>= 1) for mc

    std::string label() const {
        switch (kind) {
            case Kind::doa: return "doa[" + std::to_string(index) + "]";
            case Kind::range: return "range[" + std::to_string(index) + "]";
            case Kind::mc_re: return "mc_re[" + std::to_string(index) + "]";
            default: return "mc_im[" + std::to_string(index) + "]";
        }
    }
};

/// Derivative of the model covariance A Rs A^H + sigma^2 I with respect
/// to one parameter. The DOA derivative of the coupling matrix comes
/// from the synthesis rule's analytic direction dependence.
inline MatrixXcd covariance_derivative(const ScenarioConfig &config, const FimParameter &param) {
    const UlaGeometry &geom = config.geometry;
    const int m = geom.num_elements;
    MatrixXcd d = MatrixXcd::Zero(m, m);

    switch (param.kind) {
        case FimParameter::Kind::doa: {
            if (param.index < 0 || param.index >= config.num_sources())
                throw std::invalid_argument("unknown DOA parameter index");
            const SourceState &src = config.sources[param.index];
            const MatrixXcd c = coupling_matrix(src.coupling, m).matrix;
            const VectorXcd a = exact_steering_vector(geom, src);
            const VectorXcd da = d_steering_d_theta(geom, src);
            const VectorXcd dc_coeffs = synthesize_mc_derivative(config.mc_model, src.doa);
            const MatrixXcd dc = banded_toeplitz(dc_coeffs, m);
            const VectorXcd a_tilde = c * a;
            const VectorXcd da_tilde = dc * a + c * da;
            d = src.power * (da_tilde * a_tilde.adjoint() + a_tilde * da_tilde.adjoint());
            break;
        }
        case FimParameter::Kind::range: {
            if (param.index < 0 || param.index >= config.num_sources())
                throw std::invalid_argument("unknown range parameter index");
            const SourceState &src = config.sources[param.index];
            const MatrixXcd c = coupling_matrix(src.coupling, m).matrix;
            const VectorXcd a_tilde = c * exact_steering_vector(geom, src);
            const VectorXcd da_tilde = c * d_steering_d_range(geom, src);
            d = src.power * (da_tilde * a_tilde.adjoint() + a_tilde * da_tilde.adjoint());
            break;
        }
        case FimParameter::Kind::mc_re:
        case FimParameter::Kind::mc_im: {
            if (param.index < 1 || param.index >= config.mc_model.q)
                throw std::invalid_argument("unknown coupling slot index");
            const MatrixXd t = d_coupling_d_coeff(m, param.index);
            const cxd scale =
                param.kind == FimParameter::Kind::mc_re ? cxd(1.0, 0.0) : cxd(0.0, 1.0);
            for (int n = 0; n < config.num_sources(); ++n) {
                const SourceState &src = config.sources[n];
                const MatrixXcd c = coupling_matrix(src.coupling, m).matrix;
                const VectorXcd a = exact_steering_vector(geom, src);
                const VectorXcd a_tilde = c * a;
                const VectorXcd da_tilde = scale * (t * a);
                d += src.power *
                     (da_tilde * a_tilde.adjoint() + a_tilde * da_tilde.adjoint());
            }
            break;
        }
    }
    return 0.5 * (d + d.adjoint()).eval();
}

enum class FimGroup { doa, range, mc, joint };

struct FimBlock {
    MatrixXd matrix;
    std::vector<FimParameter> parameters;
};

inline std::vector<FimParameter> fim_parameters(const ScenarioConfig &config, FimGroup group) {
    std::vector<FimParameter> params;
    const int n = config.num_sources();
    if (group == FimGroup::doa || group == FimGroup::joint)
        for (int i = 0; i < n; ++i) params.push_back({FimParameter::Kind::doa, i});
    if (group == FimGroup::range || group == FimGroup::joint)
        for (int i = 0; i < n; ++i) params.push_back({FimParameter::Kind::range, i});
    if (group == FimGroup::mc || group == FimGroup::joint) {
        for (int k = 1; k < config.mc_model.q; ++k) {
            params.push_back({FimParameter::Kind::mc_re, k});
            params.push_back({FimParameter::Kind::mc_im, k});
        }
    }
    return params;
}

/// Fisher information block over the chosen parameter group:
/// [FIM]_{pq} = L * Tr{ dR_p R^{-1} dR_q R^{-1} }.
inline FimBlock fim_block(const ScenarioConfig &config, FimGroup group) {
    config.validate();
    FimBlock block;
    block.parameters = fim_parameters(config, group);
    const int np = static_cast<int>(block.parameters.size());
    block.matrix.resize(np, np);
    if (np == 0) return block;

    const CovarianceEstimate r = theoretical_covariance(config);
    const int m = config.geometry.num_elements;
    const MatrixXcd r_inv =
        r.matrix.llt().solve(MatrixXcd::Identity(m, m));

    std::vector<MatrixXcd> g(np);
    for (int p = 0; p < np; ++p)
        g[p] = r_inv * covariance_derivative(config, block.parameters[p]);

    const double l = config.num_snapshots;
    for (int p = 0; p < np; ++p) {
        for (int q = p; q < np; ++q) {
            const double v = l * (g[p].transpose().cwiseProduct(g[q])).sum().real();
            block.matrix(p, q) = v;
            block.matrix(q, p) = v;
        }
    }
    return block;
}

/// Per-parameter variance bounds from one FIM block. A block whose
/// condition number exceeds 1e12 (or that is not positive definite) is
/// flagged unbounded, as is any parameter whose bound exceeds the scale
/// of its domain (no information beyond the search interval itself).
struct GroupBounds {
    VectorXd bounds;                 // variance lower bounds, inf when unbounded
    std::vector<bool> unbounded;
    double condition = 0.0;
};

namespace detail {

inline GroupBounds invert_fim(const FimBlock &block, double domain_scale) {
    GroupBounds out;
    const int np = static_cast<int>(block.matrix.rows());
    out.bounds.resize(np);
    out.unbounded.assign(np, false);
    if (np == 0) return out;

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(block.matrix);
    const double lmax = es.eigenvalues().maxCoeff();
    const double lmin = es.eigenvalues().minCoeff();
    out.condition = (lmin > 0.0) ? lmax / lmin : std::numeric_limits<double>::infinity();
    const bool singular = !(lmin > 0.0) || out.condition > 1e12;
    if (singular) {
        out.bounds.setConstant(std::numeric_limits<double>::infinity());
        out.unbounded.assign(np, true);
        return out;
    }
    const MatrixXd inv = es.eigenvectors() *
                         es.eigenvalues().cwiseInverse().asDiagonal() *
                         es.eigenvectors().transpose();
    for (int i = 0; i < np; ++i) {
        out.bounds(i) = inv(i, i);
        if (out.bounds(i) > domain_scale) {
            out.bounds(i) = std::numeric_limits<double>::infinity();
            out.unbounded[i] = true;
        }
    }
    return out;
}

}  // namespace detail

/// Bounds for all three parameter groups plus RMSE-comparable
/// aggregates. The coupling bound per slot is the sum of its real and
/// imaginary bounds, matching a squared-modulus error metric.
struct CrlbReport {
    GroupBounds doa;      // rad^2 per source
    GroupBounds range;    // wavelengths^2 per source
    GroupBounds mc;       // per complex slot (re+im), slots 1..Q-1
    int num_sources = 0;
    int q = 1;

    /// Lower bound on the DOA RMSE (degrees over sources).
    double rmse_doa_deg() const {
        return rad_to_deg(std::sqrt(doa.bounds.size() ? doa.bounds.mean() : 0.0));
    }
    double rmse_range_lambda() const {
        return std::sqrt(range.bounds.size() ? range.bounds.mean() : 0.0);
    }
    /// Lower bound on the coupling RMSE: slot 0 is known exactly, so the
    /// per-slot bounds are averaged over all Q slots.
    double rmse_mc() const {
        return std::sqrt(mc_variance());
    }

    double doa_variance_deg2() const {
        const double deg = 180.0 / pi;
        return (doa.bounds.size() ? doa.bounds.mean() : 0.0) * deg * deg;
    }
    double range_variance_lambda2() const {
        return range.bounds.size() ? range.bounds.mean() : 0.0;
    }
    double mc_variance() const {
        return mc.bounds.size() ? mc.bounds.sum() / q : 0.0;
    }
};

inline CrlbReport crlb_report(const ScenarioConfig &config) {
    CrlbReport rep;
    rep.num_sources = config.num_sources();
    rep.q = config.mc_model.q;

    const double theta_scale = pi * pi;
    const double range_scale =
        config.geometry.fresnel_upper() * config.geometry.fresnel_upper();
    const double mc_scale = 4.0;

    rep.doa = detail::invert_fim(fim_block(config, FimGroup::doa), theta_scale);
    rep.range = detail::invert_fim(fim_block(config, FimGroup::range), range_scale);

    const FimBlock mc_block = fim_block(config, FimGroup::mc);
    const GroupBounds raw = detail::invert_fim(mc_block, mc_scale);
    const int slots = config.mc_model.q - 1;
    rep.mc.bounds.resize(slots);
    rep.mc.unbounded.assign(slots, false);
    rep.mc.condition = raw.condition;
    for (int k = 0; k < slots; ++k) {
        rep.mc.bounds(k) = raw.bounds(2 * k) + raw.bounds(2 * k + 1);
        rep.mc.unbounded[k] = raw.unbounded[2 * k] || raw.unbounded[2 * k + 1];
    }
    return rep;
}

/// Joint all-parameter FIM; bounds for callers that want the coupled
/// version rather than the per-group blocks.
inline FimBlock joint_fim(const ScenarioConfig &config) {
    return fim_block(config, FimGroup::joint);
}

}  // namespace nearfield
