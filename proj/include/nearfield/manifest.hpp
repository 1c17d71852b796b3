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
// Run provenance: every command writes a small JSON manifest before its
// outputs, and every output CSV references the manifest by file name.

#pragma once

#include "nearfield/fileio.hpp"
#include "nearfield/version.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <string>
#include <vector>

namespace nearfield {

struct RunManifest {
    std::string command;
    std::string config_path;
    std::string config_hash;   // fnv1a-64 of the configuration bytes, hex
    std::uint64_t seed = 0;
    std::string timestamp;     // ISO-8601 UTC
    std::vector<std::string> outputs;
};

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

inline std::string serialize_manifest(const RunManifest &m) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["software"] = "nearfield-mc";
    j["software_version"] = version_string();
    j["command"] = m.command;
    j["config_path"] = m.config_path;
    j["config_hash"] = m.config_hash;
    j["seed"] = m.seed;
    j["timestamp"] = m.timestamp;
    j["outputs"] = m.outputs;
    return j.dump(2) + "\n";
}

/// Writes the manifest next to the primary output (<out>.manifest.json)
/// and returns the manifest file name for referencing.
inline std::string write_manifest(const std::string &primary_output, const RunManifest &m) {
    const std::string path = primary_output + ".manifest.json";
    atomic_write_file(path, serialize_manifest(m));
    return path;
}

}  // namespace nearfield
