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
// Flat sectioned key = value configuration format (versioned via a
// mandatory top-level `schema_version = 1`). Angles are written in
// degrees and lengths in wavelengths; `#` starts a comment. The
// `[source]` section repeats once per source.
//
//   schema_version = 1
//   [geometry]
//   num_elements = 11
//   spacing_wavelengths = 0.5
//   wavelength_m = 0.06
//   [signal]
//   snr_db = 10
//   num_snapshots = 200
//   rng_seed = 12345
//   [mc]
//   q = 3
//   base_magnitudes = 0.4, 0.15
//   direction_gain = 0.5
//   phase_seed = 7777
//   [source]
//   doa_deg = 30
//   range_wavelengths = 13.3
//   power = 1
//   [grid]        # optional, defaults: full bearing sweep over the Fresnel interval
//   theta_step_deg = 0.1
//   range_step_wavelengths = 0.1
//   [imop]        # optional
//   epsilon_deg = 0.01
//   max_iterations = 50

#pragma once

#include "nearfield/grid.hpp"
#include "nearfield/imop.hpp"
#include "nearfield/signal_sim.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nearfield {

class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliConfig {
    ScenarioConfig scenario;
    SearchGrid grid;
    ImopConfig imop;
};

namespace detail {

inline std::string trim(const std::string &s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct ConfigSection {
    std::string name;
    std::map<std::string, std::string> values;
    int line = 0;
};

inline std::vector<ConfigSection> tokenize_config(const std::string &content) {
    std::vector<ConfigSection> sections;
    sections.push_back({"", {}, 0});   // top-level scope
    std::istringstream in(content);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) +
                                  ": unterminated section header");
            sections.push_back({trim(line.substr(1, line.size() - 2)), {}, line_no});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (!sections.back().values.emplace(key, value).second)
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                              key + "'");
    }
    return sections;
}

inline double to_double(const std::string &v, const std::string &key) {
    char *end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty())
        throw ConfigError("value of '" + key + "' is not a number: '" + v + "'");
    return d;
}

inline long long to_int(const std::string &v, const std::string &key) {
    char *end = nullptr;
    const long long i = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty())
        throw ConfigError("value of '" + key + "' is not an integer: '" + v + "'");
    return i;
}

inline std::uint64_t to_uint64(const std::string &v, const std::string &key) {
    char *end = nullptr;
    const unsigned long long i = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty())
        throw ConfigError("value of '" + key + "' is not an unsigned integer: '" + v + "'");
    return i;
}

inline VectorXd to_double_list(const std::string &v, const std::string &key) {
    std::vector<double> vals;
    std::istringstream in(v);
    std::string tok;
    while (std::getline(in, tok, ',')) vals.push_back(to_double(trim(tok), key));
    VectorXd out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) out(i) = vals[i];
    return out;
}

/// Looks a key up and erases it, so leftovers can be reported as unknown.
class SectionReader {
  public:
    SectionReader(ConfigSection &section) : section_(section) {}

    std::optional<std::string> take(const std::string &key) {
        auto it = section_.values.find(key);
        if (it == section_.values.end()) return std::nullopt;
        std::string v = it->second;
        section_.values.erase(it);
        return v;
    }

    std::string require(const std::string &key) {
        auto v = take(key);
        if (!v)
            throw ConfigError("section [" + section_.name + "] is missing key '" + key + "'");
        return *v;
    }

    void finish() const {
        if (!section_.values.empty())
            throw ConfigError("unknown key '" + section_.values.begin()->first +
                              "' in section [" + section_.name + "]");
    }

  private:
    ConfigSection &section_;
};

}  // namespace detail

inline CliConfig parse_config(const std::string &content) {
    auto sections = detail::tokenize_config(content);

    {
        detail::SectionReader top(sections[0]);
        const std::string version = top.require("schema_version");
        if (detail::to_int(version, "schema_version") != 1)
            throw ConfigError("unsupported schema_version '" + version + "' (expected 1)");
        top.finish();
    }

    CliConfig out;
    bool have_geometry = false, have_mc = false, have_grid = false;
    SearchGrid grid_overrides;
    std::optional<double> grid_range_min, grid_range_max;

    for (std::size_t i = 1; i < sections.size(); ++i) {
        detail::SectionReader reader(sections[i]);
        const std::string &name = sections[i].name;
        if (name == "geometry") {
            out.scenario.geometry.num_elements =
                static_cast<int>(detail::to_int(reader.require("num_elements"), "num_elements"));
            out.scenario.geometry.spacing =
                detail::to_double(reader.require("spacing_wavelengths"), "spacing_wavelengths");
            if (auto v = reader.take("wavelength_m"))
                out.scenario.geometry.wavelength_m = detail::to_double(*v, "wavelength_m");
            have_geometry = true;
        } else if (name == "signal") {
            if (auto v = reader.take("snr_db"))
                out.scenario.snr_db = detail::to_double(*v, "snr_db");
            if (auto v = reader.take("num_snapshots"))
                out.scenario.num_snapshots =
                    static_cast<int>(detail::to_int(*v, "num_snapshots"));
            if (auto v = reader.take("rng_seed"))
                out.scenario.rng_seed = detail::to_uint64(*v, "rng_seed");
        } else if (name == "mc") {
            out.scenario.mc_model.q = static_cast<int>(detail::to_int(reader.require("q"), "q"));
            if (auto v = reader.take("base_magnitudes"))
                out.scenario.mc_model.base_magnitudes =
                    detail::to_double_list(*v, "base_magnitudes");
            if (auto v = reader.take("direction_gain"))
                out.scenario.mc_model.direction_gain = detail::to_double(*v, "direction_gain");
            if (auto v = reader.take("phase_seed"))
                out.scenario.mc_model.phase_seed = detail::to_uint64(*v, "phase_seed");
            have_mc = true;
        } else if (name == "source") {
            SourceState s;
            s.doa = deg_to_rad(detail::to_double(reader.require("doa_deg"), "doa_deg"));
            s.range =
                detail::to_double(reader.require("range_wavelengths"), "range_wavelengths");
            if (auto v = reader.take("power")) s.power = detail::to_double(*v, "power");
            out.scenario.sources.push_back(s);
        } else if (name == "grid") {
            if (auto v = reader.take("theta_min_deg"))
                grid_overrides.theta_min = deg_to_rad(detail::to_double(*v, "theta_min_deg"));
            if (auto v = reader.take("theta_max_deg"))
                grid_overrides.theta_max = deg_to_rad(detail::to_double(*v, "theta_max_deg"));
            if (auto v = reader.take("theta_step_deg"))
                grid_overrides.theta_step = deg_to_rad(detail::to_double(*v, "theta_step_deg"));
            if (auto v = reader.take("range_min_wavelengths"))
                grid_range_min = detail::to_double(*v, "range_min_wavelengths");
            if (auto v = reader.take("range_max_wavelengths"))
                grid_range_max = detail::to_double(*v, "range_max_wavelengths");
            if (auto v = reader.take("range_step_wavelengths"))
                grid_overrides.range_step = detail::to_double(*v, "range_step_wavelengths");
            have_grid = true;
        } else if (name == "imop") {
            if (auto v = reader.take("epsilon_deg"))
                out.imop.epsilon = deg_to_rad(detail::to_double(*v, "epsilon_deg"));
            if (auto v = reader.take("max_iterations"))
                out.imop.max_iterations = static_cast<int>(detail::to_int(*v, "max_iterations"));
        } else {
            throw ConfigError("unknown section [" + name + "] at line " +
                              std::to_string(sections[i].line));
        }
        reader.finish();
    }

    if (!have_geometry) throw ConfigError("missing [geometry] section");
    if (!have_mc) throw ConfigError("missing [mc] section");

    try {
        out.scenario.geometry.validate();
        apply_mc_model(out.scenario);
        out.scenario.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }

    out.grid = SearchGrid::defaults(out.scenario.geometry);
    if (have_grid) {
        out.grid.theta_min = grid_overrides.theta_min;
        out.grid.theta_max = grid_overrides.theta_max;
        out.grid.theta_step = grid_overrides.theta_step;
        out.grid.range_step = grid_overrides.range_step;
        if (grid_range_min) out.grid.range_min = *grid_range_min;
        if (grid_range_max) out.grid.range_max = *grid_range_max;
    }
    out.imop.grid = out.grid;
    out.imop.q = out.scenario.mc_model.q;
    try {
        out.grid.theta_axis();
        out.grid.range_axis();
        out.imop.validate();
    } catch (const std::invalid_argument &e) {
        throw ConfigError(e.what());
    }
    return out;
}

inline CliConfig load_config(const std::string &path) {
    return parse_config(read_file(path));
}

/// One-line serialization of a scenario for reproducibility notes.
inline std::string describe_scenario(const ScenarioConfig &s) {
    std::ostringstream os;
    os << "M=" << s.geometry.num_elements << " d=" << s.geometry.spacing
       << " N=" << s.num_sources() << " L=" << s.num_snapshots << " snr_db=" << s.snr_db
       << " seed=" << s.rng_seed;
    return os.str();
}

}  // namespace nearfield
