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

#include "nearfield/types.hpp"

#include <functional>
#include <vector>

namespace nearfield {

/// One located source: direction, range, recovered coupling, and the
/// objective height at the located cell. The three quantities always
/// come from the same search cell, so they are paired by construction.
struct SourceEstimate {
    double doa = 0.0;        // radians
    double range = 0.0;      // wavelengths
    CouplingVector coupling;
    double objective_value = 0.0;
};

struct EstimatorDiagnostics {
    double runtime_s = 0.0;
    double tm_seconds = 0.0;          // time spent building transformation matrices
    long grid_evaluations = 0;
    long regularized_count = 0;       // ridge-stabilized objective cells
    long capped_count = 0;            // capped classic-MUSIC cells (known-MC mode)
    bool peak_deficient = false;      // fewer local maxima than sources
    bool boundary_peak = false;       // some peak sits on the grid boundary
    int iterations = 0;               // refinement iterations (iterative estimator)
    bool converged = true;
};

struct EstimationResult {
    std::vector<SourceEstimate> records;
    EstimatorDiagnostics diagnostics;
};

/// Direction-dependent coupling oracle used by the known-MC estimator
/// mode; a direction-independent coupling is the constant special case.
using CouplingProvider = std::function<CouplingVector(double doa)>;

}  // namespace nearfield
