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
// Batch front end: simulate snapshot blocks, run the estimators, export
// spectra, run Monte Carlo sweeps, and compute estimation bounds. All
// outputs are CSV plus a JSON manifest; angles are reported in degrees
// and lengths in wavelengths. Exit codes: 0 success, 2 configuration or
// usage error, 3 I/O error, 4 numerical failure.

#include "nearfield/bench.hpp"
#include "nearfield/config_file.hpp"
#include "nearfield/crlb.hpp"
#include "nearfield/imop.hpp"
#include "nearfield/manifest.hpp"
#include "nearfield/snapshot_io.hpp"
#include "nearfield/tsmnsl.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using namespace nearfield;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

std::string manifest_comment(const std::string &manifest_path) {
    const auto slash = manifest_path.find_last_of('/');
    const std::string name =
        slash == std::string::npos ? manifest_path : manifest_path.substr(slash + 1);
    return "# manifest=" + name + "\n";
}

RunManifest make_manifest(const std::string &command, const std::string &config_path,
                          const std::string &config_bytes, std::uint64_t seed,
                          const std::vector<std::string> &outputs) {
    RunManifest m;
    m.command = command;
    m.config_path = config_path;
    m.config_hash = hex64(fnv1a_hash(config_bytes));
    m.seed = seed;
    m.timestamp = utc_timestamp();
    m.outputs = outputs;
    return m;
}

void print_warnings(const ScenarioConfig &scenario) {
    for (const auto &w : scenario.warnings()) std::cerr << "warning: " << w << "\n";
}

CouplingVector load_coupling_file(const std::string &path, int expected_q) {
    const std::string content = read_file(path);
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string tok;
        std::vector<cxd> coeffs;
        while (std::getline(ls, tok, ',')) coeffs.push_back(parse_complex(detail::trim(tok)));
        VectorXcd c(coeffs.size());
        for (std::size_t i = 0; i < coeffs.size(); ++i) c(i) = coeffs[i];
        if (static_cast<int>(c.size()) != expected_q)
            throw ConfigError("coupling file has " + std::to_string(c.size()) +
                              " coefficients but the configuration declares Q=" +
                              std::to_string(expected_q));
        if (c(0) != cxd(1.0, 0.0))
            throw ConfigError("coupling file must start with the unit self term 1+0j");
        return CouplingVector(std::move(c));
    }
    throw ConfigError("coupling file '" + path + "' holds no coefficients");
}

std::string estimate_csv(const EstimationResult &result, int q,
                         const std::vector<SourceState> *truth) {
    std::ostringstream os;
    os << "source,theta_deg,range_lambda";
    for (int k = 1; k <= q; ++k) os << ",c_re_" << k;
    for (int k = 1; k <= q; ++k) os << ",c_im_" << k;
    if (truth) os << ",theta_err_deg,range_err_lambda,mc_err";
    os << "\n";

    std::vector<int> truth_of(result.records.size(), -1);
    if (truth) {
        const std::vector<int> assignment = associate(result, *truth);
        for (std::size_t t = 0; t < assignment.size(); ++t)
            truth_of[assignment[t]] = static_cast<int>(t);
    }

    for (std::size_t i = 0; i < result.records.size(); ++i) {
        const SourceEstimate &rec = result.records[i];
        os << i << ',' << format_double(rad_to_deg(rec.doa)) << ','
           << format_double(rec.range);
        for (int k = 0; k < q; ++k)
            os << ',' << format_double(k < rec.coupling.q() ? rec.coupling.coeffs(k).real()
                                                            : 0.0);
        for (int k = 0; k < q; ++k)
            os << ',' << format_double(k < rec.coupling.q() ? rec.coupling.coeffs(k).imag()
                                                            : 0.0);
        if (truth) {
            const SourceState &t = (*truth)[truth_of[i]];
            double mc_sq = 0.0;
            for (int k = 0; k < t.coupling.q(); ++k) {
                const cxd est = k < rec.coupling.q() ? rec.coupling.coeffs(k) : cxd(0, 0);
                mc_sq += std::norm(est - t.coupling.coeffs(k));
            }
            os << ',' << format_double(rad_to_deg(rec.doa - t.doa)) << ','
               << format_double(rec.range - t.range) << ','
               << format_double(std::sqrt(mc_sq / t.coupling.q()));
        }
        os << "\n";
    }
    return os.str();
}

int cmd_simulate(const std::string &config_path, const std::string &out) {
    const std::string config_bytes = read_file(config_path);
    const CliConfig cfg = parse_config(config_bytes);
    print_warnings(cfg.scenario);

    const RunManifest manifest = make_manifest("simulate", config_path, config_bytes,
                                               cfg.scenario.rng_seed, {out});
    const std::string manifest_path = write_manifest(out, manifest);

    const SnapshotMatrix y = generate_snapshots(cfg.scenario);
    std::string serialized = serialize_snapshots(y);
    const auto first_newline = serialized.find('\n');
    serialized.insert(first_newline + 1, manifest_comment(manifest_path));
    atomic_write_file(out, serialized);
    return kExitOk;
}

int cmd_estimate(const std::string &method, const std::string &config_path,
                 const std::string &in, const std::string &out, bool with_truth,
                 const std::string &trace_out, const std::string &known_mc_path) {
    const std::string config_bytes = read_file(config_path);
    const CliConfig cfg = parse_config(config_bytes);
    const int n = cfg.scenario.num_sources();
    const int q = cfg.scenario.mc_model.q;
    if (n < 1) throw ConfigError("estimation requires at least one [source] section");

    const SnapshotMatrix y = import_snapshots(in, cfg.scenario.geometry);

    std::vector<std::string> outputs = {out};
    EstimationResult result;
    ImopTrace trace;
    bool have_trace = false;

    if (method == "tsmnsl") {
        TsmnslConfig tc;
        tc.grid = cfg.grid;
        tc.q = q;
        result = tsmnsl_estimate(sample_covariance(y), cfg.scenario.geometry, n, tc);
    } else if (method == "imop") {
        std::tie(result, trace) = imop_estimate(y, n, cfg.imop);
        have_trace = true;
        outputs.push_back(trace_out);
    } else if (method == "music2d") {
        if (known_mc_path.empty())
            throw ConfigError("--method music2d requires --known-mc with the coupling file");
        const CouplingVector c = load_coupling_file(known_mc_path, q);
        TsmnslConfig tc;
        tc.grid = cfg.grid;
        tc.q = q;
        tc.known_mc = [c](double) { return c; };
        result = tsmnsl_estimate(sample_covariance(y), cfg.scenario.geometry, n, tc);
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }

    if (result.diagnostics.peak_deficient)
        std::cerr << "warning: fewer spectral peaks than sources; reporting "
                  << result.records.size() << " of " << n << "\n";

    const RunManifest manifest = make_manifest("estimate/" + method, config_path,
                                               config_bytes, cfg.scenario.rng_seed, outputs);
    const std::string manifest_path = write_manifest(out, manifest);

    const std::vector<SourceState> *truth = with_truth ? &cfg.scenario.sources : nullptr;
    if (truth && static_cast<int>(result.records.size()) != n) truth = nullptr;
    atomic_write_file(out, manifest_comment(manifest_path) + estimate_csv(result, q, truth));
    if (have_trace)
        atomic_write_file(trace_out,
                          manifest_comment(manifest_path) + serialize_imop_trace(trace));
    return kExitOk;
}

int cmd_spectrum(const std::string &method, const std::string &slice,
                 const std::string &config_path, const std::string &in,
                 const std::string &out, const std::string &known_mc_path) {
    const std::string config_bytes = read_file(config_path);
    const CliConfig cfg = parse_config(config_bytes);
    const int n = cfg.scenario.num_sources();
    const int q = cfg.scenario.mc_model.q;
    const UlaGeometry &geom = cfg.scenario.geometry;

    const SnapshotMatrix y = import_snapshots(in, geom);
    const SubspaceDecomposition decomp = eigendecompose(sample_covariance(y), n);

    std::string csv;
    if (method == "imop") {
        if (slice == "doa") {
            const InitialDoaMc init = initial_doa_mc(geom, decomp, n, q, cfg.grid);
            csv = serialize_slice(init.surface, cfg.grid.theta_axis(), true);
        } else if (slice == "range") {
            const InitialDoaMc init = initial_doa_mc(geom, decomp, n, q, cfg.grid);
            if (init.estimates.empty()) throw std::runtime_error("no spectral peak found");
            const double best_theta = init.estimates.front().first;
            std::vector<double> values;
            initial_range(geom, decomp, best_theta, q, cfg.grid, &values);
            csv = serialize_slice(values, cfg.grid.range_axis(), false);
        } else {
            throw ConfigError("the iterative estimator exports 1D slices only "
                              "(--slice doa or --slice range)");
        }
    } else if (method == "tsmnsl" || method == "music2d") {
        std::optional<CouplingProvider> provider;
        if (method == "music2d") {
            if (known_mc_path.empty())
                throw ConfigError("--method music2d requires --known-mc");
            const CouplingVector c = load_coupling_file(known_mc_path, q);
            provider = [c](double) { return c; };
        }
        const Surface2D surface =
            provider ? music_surface(geom, decomp, cfg.grid, q, *provider)
                     : spectrum_surface(geom, decomp, cfg.grid, q);
        if (slice == "2d") {
            csv = serialize_surface(surface);
        } else {
            const PeakSet peaks = find_n_peaks(surface, 1);
            if (peaks.peaks.empty()) throw std::runtime_error("the spectrum has no peak");
            const GridPeak &p = peaks.peaks.front();
            if (slice == "doa") {
                std::vector<double> values(surface.theta.count);
                for (int i = 0; i < surface.theta.count; ++i)
                    values[i] = surface.at(i, p.range_index);
                csv = serialize_slice(values, surface.theta, true);
            } else if (slice == "range") {
                std::vector<double> values(surface.range.count);
                for (int j = 0; j < surface.range.count; ++j)
                    values[j] = surface.at(p.theta_index, j);
                csv = serialize_slice(values, surface.range, false);
            } else {
                throw ConfigError("unknown slice '" + slice + "'");
            }
        }
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }

    const RunManifest manifest = make_manifest("spectrum/" + method + "/" + slice,
                                               config_path, config_bytes,
                                               cfg.scenario.rng_seed, {out});
    const std::string manifest_path = write_manifest(out, manifest);
    atomic_write_file(out, manifest_comment(manifest_path) + csv);
    return kExitOk;
}

int cmd_bench(const std::string &sweep, int trials, bool full, std::uint64_t seed,
              const std::string &estimators_arg, const std::string &external_arg,
              const std::string &out) {
    ExperimentSpec spec;
    const int k = full ? 500 : trials;
    if (sweep == "snr") {
        spec = snr_sweep_spec(k, seed);
    } else if (sweep == "snapshots") {
        spec = snapshot_sweep_spec(k, seed);
    } else if (sweep == "separation") {
        spec = separation_sweep_spec(k, seed);
    } else {
        throw ConfigError("unknown sweep '" + sweep + "'");
    }

    spec.estimators.clear();
    std::istringstream es(estimators_arg);
    std::string name;
    while (std::getline(es, name, ',')) {
        const std::string trimmed = detail::trim(name);
        if (!trimmed.empty()) spec.estimators.push_back(trimmed);
    }

    ExternalResults external;
    bool have_external = false;
    if (!external_arg.empty()) {
        const auto eq = external_arg.find('=');
        if (eq == std::string::npos) throw ConfigError("--external expects name=path");
        external = ExternalResults::parse(read_file(external_arg.substr(eq + 1)),
                                          external_arg.substr(0, eq));
        have_external = true;
    }

    const RunManifest manifest =
        make_manifest("bench/" + sweep, "", describe_scenario(spec.base), seed, {out});
    const std::string manifest_path = write_manifest(out, manifest);

    const SweepResult result = run_experiment(spec);
    atomic_write_file(out, manifest_comment(manifest_path) +
                               serialize_sweep(result, have_external ? &external : nullptr));
    return kExitOk;
}

int cmd_crlb(const std::string &config_path, const std::string &sweep,
             const std::string &out) {
    const std::string config_bytes = read_file(config_path);
    const CliConfig cfg = parse_config(config_bytes);
    print_warnings(cfg.scenario);

    std::vector<double> values;
    if (sweep == "snr")
        values = {-5.0, 0.0, 5.0, 10.0, 15.0};
    else if (sweep == "snapshots")
        values = {50, 150, 250, 350, 450, 550, 650, 750};
    else
        throw ConfigError("unknown sweep '" + sweep + "'");

    std::ostringstream os;
    os << "sweep_value,crlb_doa_deg,crlb_range_lambda,crlb_mc\n";
    for (double v : values) {
        ScenarioConfig s = cfg.scenario;
        if (sweep == "snr")
            s.snr_db = v;
        else
            s.num_snapshots = static_cast<int>(v);
        const CrlbReport rep = crlb_report(s);
        os << format_double(v) << ',' << format_double(rep.rmse_doa_deg()) << ','
           << format_double(rep.rmse_range_lambda()) << ',' << format_double(rep.rmse_mc())
           << "\n";
    }

    const RunManifest manifest = make_manifest("crlb/" + sweep, config_path, config_bytes,
                                               cfg.scenario.rng_seed, {out});
    const std::string manifest_path = write_manifest(out, manifest);
    atomic_write_file(out, manifest_comment(manifest_path) + os.str());
    return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"near-field source localization under direction-dependent mutual coupling"};
    app.require_subcommand(1);

    std::string config_path, in_path, out_path, method = "imop", slice = "2d";
    std::string known_mc_path, trace_out, estimators = "imop,tsmnsl", external, sweep;
    bool with_truth = false, full = false;
    int trials = 50;
    std::uint64_t seed = 1;

    auto *sim = app.add_subcommand("simulate", "generate a snapshot block");
    sim->add_option("--config", config_path, "scenario configuration file")->required();
    sim->add_option("--out", out_path, "snapshot CSV to write")->required();

    auto *est = app.add_subcommand("estimate", "locate sources in a snapshot block");
    est->add_option("--method", method, "imop | tsmnsl | music2d")->required();
    est->add_option("--config", config_path, "scenario configuration file")->required();
    est->add_option("--in", in_path, "snapshot CSV to read")->required();
    est->add_option("--out", out_path, "results CSV to write")->required();
    est->add_flag("--truth", with_truth, "append per-source errors from the config sources");
    est->add_option("--trace-out", trace_out, "iteration trace CSV (imop)");
    est->add_option("--known-mc", known_mc_path, "coupling coefficients file (music2d)");

    auto *spc = app.add_subcommand("spectrum", "export a search spectrum");
    spc->add_option("--method", method, "imop | tsmnsl | music2d")->required();
    spc->add_option("--slice", slice, "2d | doa | range")->required();
    spc->add_option("--config", config_path, "scenario configuration file")->required();
    spc->add_option("--in", in_path, "snapshot CSV to read")->required();
    spc->add_option("--out", out_path, "spectrum CSV to write")->required();
    spc->add_option("--known-mc", known_mc_path, "coupling coefficients file (music2d)");

    auto *ben = app.add_subcommand("bench", "run a Monte Carlo sweep");
    ben->add_option("--sweep", sweep, "snr | snapshots | separation")->required();
    ben->add_option("--trials", trials, "Monte Carlo trials per sweep point");
    ben->add_flag("--full", full, "use the full 500-trial protocol");
    ben->add_option("--seed", seed, "base seed for the trial substreams");
    ben->add_option("--estimators", estimators, "comma list: imop,tsmnsl,music2d");
    ben->add_option("--external", external, "merge baseline columns: name=path");
    ben->add_option("--out", out_path, "sweep CSV to write")->required();

    auto *crl = app.add_subcommand("crlb", "estimation bound sweep");
    crl->add_option("--config", config_path, "scenario configuration file")->required();
    crl->add_option("--sweep", sweep, "snr | snapshots")->required();
    crl->add_option("--out", out_path, "bound CSV to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(config_path, out_path);
        if (est->parsed()) {
            if (trace_out.empty()) trace_out = out_path + ".trace.csv";
            return cmd_estimate(method, config_path, in_path, out_path, with_truth,
                                trace_out, known_mc_path);
        }
        if (spc->parsed())
            return cmd_spectrum(method, slice, config_path, in_path, out_path, known_mc_path);
        if (ben->parsed())
            return cmd_bench(sweep, trials, full, seed, estimators, external, out_path);
        if (crl->parsed()) return cmd_crlb(config_path, sweep, out_path);
    } catch (const ConfigError &e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument &e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError &e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError &e) {
        std::cerr << "input parse error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IsolationError &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception &e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
