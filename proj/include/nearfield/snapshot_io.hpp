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
// Snapshot file format (UTF-8 CSV):
//   # M=<int> L=<int> lambda_m=<float>
//   <M rows of L comma-separated complex tokens `re+imj`>
// Values are printed with 17 significant digits so an export/import
// round trip is bit-exact. Additional `#` comment lines after the header
// are ignored on import.

#pragma once

#include "nearfield/fileio.hpp"
#include "nearfield/signal_sim.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace nearfield {

inline std::string snapshot_header(const SnapshotMatrix &y) {
    std::ostringstream os;
    os << "# M=" << y.num_elements() << " L=" << y.num_snapshots()
       << " lambda_m=" << format_double(y.geometry.wavelength_m);
    return os.str();
}

inline std::string serialize_snapshots(const SnapshotMatrix &y) {
    std::ostringstream os;
    os << snapshot_header(y) << "\n";
    for (int i = 0; i < y.num_elements(); ++i) {
        for (int j = 0; j < y.num_snapshots(); ++j) {
            if (j) os << ',';
            os << format_complex(y.data(i, j));
        }
        os << "\n";
    }
    return os.str();
}

inline void export_snapshots(const std::string &path, const SnapshotMatrix &y) {
    atomic_write_file(path, serialize_snapshots(y));
}

inline SnapshotMatrix parse_snapshots(const std::string &content, const UlaGeometry &geometry) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# M=", 0) != 0)
        throw ParseError("missing snapshot header line '# M=... L=... lambda_m=...'");

    int m = 0, l = 0;
    double lambda_m = 0.0;
    if (std::sscanf(line.c_str(), "# M=%d L=%d lambda_m=%lf", &m, &l, &lambda_m) != 3)
        throw ParseError("malformed snapshot header: '" + line + "'");
    if (m != geometry.num_elements)
        throw ParseError("snapshot file has M=" + std::to_string(m) +
                         " rows but the declared geometry has M=" +
                         std::to_string(geometry.num_elements));
    if (l < 1) throw ParseError("snapshot header declares L < 1");

    SnapshotMatrix y;
    y.geometry = geometry;
    y.geometry.wavelength_m = lambda_m > 0.0 ? lambda_m : geometry.wavelength_m;
    y.provenance = Provenance::imported;
    y.data.resize(m, l);

    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (row >= m)
            throw ParseError("snapshot file has more than the declared M=" +
                             std::to_string(m) + " data rows");
        std::istringstream ls(line);
        std::string token;
        int col = 0;
        while (std::getline(ls, token, ',')) {
            if (col >= l)
                throw ParseError("row " + std::to_string(row + 1) + " has more than L=" +
                                 std::to_string(l) + " columns");
            try {
                y.data(row, col) = parse_complex(token);
            } catch (const ParseError &e) {
                throw ParseError("parse error at (" + std::to_string(row + 1) + "," +
                                 std::to_string(col + 1) + "): " + e.what());
            }
            ++col;
        }
        if (col != l)
            throw ParseError("row " + std::to_string(row + 1) + " has " + std::to_string(col) +
                             " columns, expected L=" + std::to_string(l));
        ++row;
    }
    if (row != m)
        throw ParseError("snapshot file has " + std::to_string(row) +
                         " data rows, expected M=" + std::to_string(m));
    return y;
}

inline SnapshotMatrix import_snapshots(const std::string &path, const UlaGeometry &geometry) {
    return parse_snapshots(read_file(path), geometry);
}

}  // namespace nearfield
