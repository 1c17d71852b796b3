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
// Geometric and algebraic primitives of the array: element-to-source
// distances, spherical-wavefront steering vectors and their quadratic
// phase approximation, banded Toeplitz coupling matrices, and the
// transformation-matrix factorizations that make the coupled steering
// vector linear in the coupling coefficients.
//
// Phase convention: the steering element for array index m is
//   a_m(theta, r) = (r / r_m) * exp(+j * 2*pi * (r_m - r))      [lengths in wavelengths]
// so that the far-field limit is exp(j*gamma*m) with
// gamma = -2*pi*d*cos(theta), matching the quadratic approximation
//   abar_m = exp(j*(gamma*m + eta*m^2)).
// A global conjugation of all steering vectors (and hence of simulated
// data) leaves every spectrum, bound, and estimate unchanged; this sign
// is chosen so the exact and approximate models agree in the far field.

#pragma once

#include "nearfield/types.hpp"

namespace nearfield {

/// Distance from a source to array element m (symmetric index), in
/// wavelengths: sqrt(r^2 + m^2 d^2 - 2 m d r cos(theta)).
inline double element_source_distance(const UlaGeometry &geom, double doa, double range, int m) {
    const double md = m * geom.spacing;
    return std::sqrt(range * range + md * md - 2.0 * md * range * std::cos(doa));
}

inline double element_source_distance(const UlaGeometry &geom, const SourceState &src, int m) {
    return element_source_distance(geom, src.doa, src.range, m);
}

/// Exact spherical-wavefront steering vector. The reference element
/// (m = 0) is exactly 1 + 0j.
inline VectorXcd exact_steering_vector(const UlaGeometry &geom, double doa, double range) {
    const int m_half = geom.half_span();
    VectorXcd a(geom.num_elements);
    for (int i = 0; i < geom.num_elements; ++i) {
        const int m = i - m_half;
        if (m == 0) {
            a(i) = cxd(1.0, 0.0);
            continue;
        }
        const double rm = element_source_distance(geom, doa, range, m);
        a(i) = (range / rm) * std::polar(1.0, 2.0 * pi * (rm - range));
    }
    return a;
}

inline VectorXcd exact_steering_vector(const UlaGeometry &geom, const SourceState &src) {
    return exact_steering_vector(geom, src.doa, src.range);
}

/// Quadratic-phase (Fresnel) approximation of the steering vector:
/// unit-modulus entries exp(j*(gamma*m + eta*m^2)).
inline VectorXcd approx_steering_vector(const UlaGeometry &geom, double doa, double range) {
    const PhaseParams p = phase_params(geom, doa, range);
    const int m_half = geom.half_span();
    VectorXcd a(geom.num_elements);
    for (int i = 0; i < geom.num_elements; ++i) {
        const int m = i - m_half;
        a(i) = std::polar(1.0, p.gamma * m + p.eta * double(m) * double(m));
    }
    return a;
}

inline VectorXcd approx_steering_vector(const UlaGeometry &geom, const SourceState &src) {
    return approx_steering_vector(geom, src.doa, src.range);
}

/// Far-field phase factor g(theta) with g_m = exp(j*gamma*m).
inline VectorXcd farfield_phase_vector(const UlaGeometry &geom, double doa) {
    const double gamma = -2.0 * pi * geom.spacing * std::cos(doa);
    const int m_half = geom.half_span();
    VectorXcd g(geom.num_elements);
    for (int i = 0; i < geom.num_elements; ++i)
        g(i) = std::polar(1.0, gamma * (i - m_half));
    return g;
}

/// Curvature phase factor v(theta, r) with v_m = exp(j*eta*m^2);
/// elementwise g .* v equals the approximate steering vector.
inline VectorXcd curvature_phase_vector(const UlaGeometry &geom, double doa, double range) {
    const PhaseParams p = phase_params(geom, doa, range);
    const int m_half = geom.half_span();
    VectorXcd v(geom.num_elements);
    for (int i = 0; i < geom.num_elements; ++i) {
        const double m = double(i - m_half);
        v(i) = std::polar(1.0, p.eta * m * m);
    }
    return v;
}

/// Symmetric banded Toeplitz matrix with first row [z^T, 0, ..., 0].
inline MatrixXcd banded_toeplitz(const VectorXcd &z, int num_elements) {
    const int q = static_cast<int>(z.size());
    if (q > num_elements)
        throw std::invalid_argument("band length must not exceed the matrix size");
    MatrixXcd mat = MatrixXcd::Zero(num_elements, num_elements);
    for (int i = 0; i < num_elements; ++i)
        for (int j = std::max(0, i - q + 1); j <= std::min(num_elements - 1, i + q - 1); ++j)
            mat(i, j) = z(std::abs(i - j));
    return mat;
}

/// Symmetric banded Toeplitz coupling matrix: entry (i, j) equals
/// c[|i-j|] for |i-j| < Q and 0 beyond the band.
struct CouplingMatrix {
    MatrixXcd matrix;
};

inline CouplingMatrix coupling_matrix(const CouplingVector &c, int num_elements) {
    if (c.q() >= num_elements)
        throw std::invalid_argument("coupling length Q must be smaller than array size M");
    return {banded_toeplitz(c.coeffs, num_elements)};
}

/// Coupled steering vector C(theta) a(theta, r).
inline VectorXcd coupled_steering(const UlaGeometry &geom, const SourceState &src) {
    return coupling_matrix(src.coupling, geom.num_elements).matrix *
           exact_steering_vector(geom, src);
}

namespace detail {

// Fills column k of the transformation matrix with the selector action
// (E_k x)_i = x_{i-k} + x_{i+k} (terms present only inside the array),
// the pattern of the k-th coupling slot in the banded Toeplitz matrix.
// E_0 is the identity. The selectors are never materialized.
inline void fill_transformation(const VectorXcd &x, int q, MatrixXcd &out) {
    const int m = static_cast<int>(x.size());
    out.resize(m, q);
    out.col(0) = x;
    for (int k = 1; k < q; ++k) {
        for (int i = 0; i < m; ++i) {
            cxd acc(0.0, 0.0);
            if (i - k >= 0) acc += x(i - k);
            if (i + k < m) acc += x(i + k);
            out(i, k) = acc;
        }
    }
}

}  // namespace detail

/// Transformation matrix X(theta, r) of size M x Q satisfying
/// C(theta) a(theta, r) = X(theta, r) c for every coupling vector c.
inline MatrixXcd transformation_matrix(const UlaGeometry &geom, double doa, double range, int q) {
    if (q >= geom.num_elements)
        throw std::invalid_argument("coupling length Q must be smaller than array size M");
    MatrixXcd x;
    detail::fill_transformation(exact_steering_vector(geom, doa, range), q, x);
    return x;
}

/// Approximate-model transformation matrix Xbar(theta), built from the
/// far-field phase factor g(theta) only.
inline MatrixXcd approx_transformation_matrix(const UlaGeometry &geom, double doa, int q) {
    if (q >= geom.num_elements)
        throw std::invalid_argument("coupling length Q must be smaller than array size M");
    MatrixXcd x;
    detail::fill_transformation(farfield_phase_vector(geom, doa), q, x);
    return x;
}

/// Factorization of the coupled approximate steering vector into a
/// direction-only matrix and a curvature-only vector:
/// B(theta, c) v(theta, r) = C(theta) abar(theta, r), with
/// B = C(theta) diag(g(theta)) and v_m = exp(j*eta*m^2).
struct CoupledApproxFactors {
    MatrixXcd b;   // M x M
    VectorXcd v;   // length M
};

inline CoupledApproxFactors factorize_coupled_approx(const UlaGeometry &geom,
                                                     const SourceState &src) {
    CoupledApproxFactors f;
    const VectorXcd g = farfield_phase_vector(geom, src.doa);
    f.b = coupling_matrix(src.coupling, geom.num_elements).matrix * g.asDiagonal();
    f.v = curvature_phase_vector(geom, src.doa, src.range);
    return f;
}

}  // namespace nearfield
