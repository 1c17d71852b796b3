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

#include <Eigen/Dense>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace nearfield {

using cxd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * pi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / pi; }

/// Thrown when oblique-projection source isolation cannot proceed
/// (rank-deficient or badly conditioned steering matrix). Carries the
/// index of the source being isolated.
class IsolationError : public std::runtime_error {
  public:
    IsolationError(int source_index, const std::string &what)
        : std::runtime_error(what), source_index_(source_index) {}
    int source_index() const { return source_index_; }

  private:
    int source_index_;
};

/// Uniform linear array with an odd number of elements and the centered
/// element as phase reference. All internal lengths are in wavelength
/// units; the physical wavelength is carried only for file/CLI labeling.
struct UlaGeometry {
    int num_elements = 11;           // M, odd, >= 3
    double spacing = 0.5;            // d, in wavelengths
    double wavelength_m = 0.06;      // physical lambda in meters (I/O label only)

    UlaGeometry() = default;
    UlaGeometry(int m, double d, double lambda_m = 0.06)
        : num_elements(m), spacing(d), wavelength_m(lambda_m) {
        validate();
    }

    void validate() const {
        if (num_elements < 3 || num_elements % 2 == 0)
            throw std::invalid_argument("array size must be odd and >= 3");
        if (spacing <= 0.0)
            throw std::invalid_argument("element spacing must be positive");
        if (wavelength_m <= 0.0)
            throw std::invalid_argument("wavelength must be positive");
    }

    /// Half-open symmetric index set {-(M-1)/2, ..., (M-1)/2}; storage
    /// order is ascending m, so storage row i holds element m = i - (M-1)/2.
    int half_span() const { return (num_elements - 1) / 2; }
    int element_index(int storage_row) const { return storage_row - half_span(); }

    /// Aperture D = (M-1) d, in wavelengths.
    double aperture() const { return (num_elements - 1) * spacing; }

    /// Fresnel (radiative near-field) interval [0.62 sqrt(D^3), 2 D^2],
    /// in wavelengths.
    double fresnel_lower() const { return 0.62 * std::sqrt(aperture() * aperture() * aperture()); }
    double fresnel_upper() const { return 2.0 * aperture() * aperture(); }
};

/// Mutual-coupling coefficient vector c of length Q. Slot k holds the
/// coefficient for inter-element separation k; slot 0 is the self term
/// and is identically 1. Synthesized/model coupling additionally has
/// non-increasing magnitudes |c[k]|; estimator outputs guarantee only
/// the unit self term.
struct CouplingVector {
    VectorXcd coeffs;

    CouplingVector() : coeffs(VectorXcd::Ones(1)) {}
    explicit CouplingVector(VectorXcd c) : coeffs(std::move(c)) {
        if (coeffs.size() < 1)
            throw std::invalid_argument("coupling vector must have at least the self term");
        if (coeffs(0) != cxd(1.0, 0.0))
            throw std::invalid_argument("coupling self term must be exactly 1");
    }

    int q() const { return static_cast<int>(coeffs.size()); }

    /// Model-side invariant: magnitudes non-increasing with separation.
    bool has_decaying_magnitudes() const {
        for (int k = 1; k < q(); ++k)
            if (std::abs(coeffs(k)) > std::abs(coeffs(k - 1)) + 1e-15) return false;
        return true;
    }
};

/// One near-field source: direction of arrival (radians, in (0, pi)),
/// range to the reference element (wavelengths), signal power, and the
/// coupling coefficients it induces on the array.
struct SourceState {
    double doa = pi / 2;       // theta, radians
    double range = 10.0;       // r, wavelengths
    double power = 1.0;        // diagonal entry of the signal covariance
    CouplingVector coupling;

    void validate() const {
        if (!(doa > 0.0 && doa < pi))
            throw std::invalid_argument("source DOA must lie in (0, pi)");
        if (range <= 0.0)
            throw std::invalid_argument("source range must be positive");
        if (power <= 0.0)
            throw std::invalid_argument("source power must be positive");
    }
};

/// Sensitivity studies intentionally place sources outside the Fresnel
/// interval, so out-of-interval ranges warn instead of failing.
inline std::vector<std::string> fresnel_warnings(const UlaGeometry &geom,
                                                 const SourceState &src,
                                                 int source_index = -1) {
    std::vector<std::string> out;
    if (src.range < geom.fresnel_lower() || src.range > geom.fresnel_upper()) {
        std::string label = source_index >= 0 ? "source " + std::to_string(source_index)
                                              : std::string("source");
        out.push_back(label + " range " + std::to_string(src.range) +
                      " lies outside the Fresnel interval [" +
                      std::to_string(geom.fresnel_lower()) + ", " +
                      std::to_string(geom.fresnel_upper()) + "] wavelengths");
    }
    return out;
}

/// Quadratic phase parameters of the curvature-approximated wavefront:
/// gamma = -2 pi d cos(theta), eta = pi d^2 sin^2(theta) / r (lengths in
/// wavelengths).
struct PhaseParams {
    double gamma = 0.0;
    double eta = 0.0;
};

inline PhaseParams phase_params(const UlaGeometry &geom, double doa, double range) {
    PhaseParams p;
    const double s = std::sin(doa);
    p.gamma = -2.0 * pi * geom.spacing * std::cos(doa);
    p.eta = pi * geom.spacing * geom.spacing * s * s / range;
    return p;
}

inline PhaseParams phase_params(const UlaGeometry &geom, const SourceState &src) {
    return phase_params(geom, src.doa, src.range);
}

}  // namespace nearfield
