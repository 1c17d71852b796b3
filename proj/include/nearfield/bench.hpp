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
// Monte Carlo benchmark harness: seeded trials, estimate-to-truth
// association, RMSE metrics (trimmed and untrimmed), sweeps over SNR /
// snapshot count / angular separation, bound overlays, and runtime
// comparison. Trials may run concurrently; every trial draws from its
// own counter substream (seed xor trial index) and results are reduced
// in a fixed order, so the numbers do not depend on scheduling.

#pragma once

#include "nearfield/crlb.hpp"
#include "nearfield/estimate.hpp"
#include "nearfield/fileio.hpp"
#include "nearfield/imop.hpp"
#include "nearfield/parallel.hpp"
#include "nearfield/signal_sim.hpp"
#include "nearfield/tsmnsl.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

namespace nearfield {

// ---------------------------------------------------------------------
// Association and RMSE metrics
// ---------------------------------------------------------------------

/// Optimal assignment of estimates to true sources: minimizes the total
/// absolute DOA error, with total range error breaking ties. Returns p
/// with p[t] = index of the estimate assigned to truth t. Exhaustive
/// over permutations (source counts here are small).
inline std::vector<int> associate(const EstimationResult &estimates,
                                  const std::vector<SourceState> &truth) {
    const int n = static_cast<int>(truth.size());
    if (static_cast<int>(estimates.records.size()) != n)
        throw std::invalid_argument("estimate count does not match source count");
    if (n > 9) throw std::invalid_argument("association supports at most 9 sources");

    std::vector<int> perm(n), best(n);
    std::iota(perm.begin(), perm.end(), 0);
    best = perm;
    double best_doa = std::numeric_limits<double>::infinity();
    double best_range = std::numeric_limits<double>::infinity();
    do {
        double cost_doa = 0.0, cost_range = 0.0;
        for (int t = 0; t < n; ++t) {
            cost_doa += std::abs(estimates.records[perm[t]].doa - truth[t].doa);
            cost_range += std::abs(estimates.records[perm[t]].range - truth[t].range);
        }
        if (cost_doa < best_doa ||
            (cost_doa == best_doa && cost_range < best_range)) {
            best_doa = cost_doa;
            best_range = cost_range;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Per-trial association errors for one estimator.
struct TrialErrors {
    std::vector<double> doa_err;      // per source, radians (signed)
    std::vector<double> range_err;    // per source, wavelengths (signed)
    std::vector<double> mc_sqerr;     // per source, sum over slots of |dc|^2
};

inline TrialErrors trial_errors(const EstimationResult &estimates,
                                const std::vector<SourceState> &truth) {
    const std::vector<int> p = associate(estimates, truth);
    TrialErrors e;
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const SourceEstimate &est = estimates.records[p[t]];
        e.doa_err.push_back(est.doa - truth[t].doa);
        e.range_err.push_back(est.range - truth[t].range);
        const int q = truth[t].coupling.q();
        double sq = 0.0;
        for (int k = 0; k < q; ++k) {
            const cxd est_c = k < est.coupling.q() ? est.coupling.coeffs(k) : cxd(0.0, 0.0);
            sq += std::norm(est_c - truth[t].coupling.coeffs(k));
        }
        e.mc_sqerr.push_back(sq);
    }
    return e;
}

struct RmseTriple {
    double doa_deg = 0.0;
    double range_lambda = 0.0;
    double mc = 0.0;
};

namespace detail {

inline double rmse_from_trial_sums(const std::vector<double> &per_trial_sums, double divisor) {
    if (per_trial_sums.empty() || divisor <= 0.0) return 0.0;
    return std::sqrt(pairwise_sum(per_trial_sums) / divisor);
}

/// Drops the ceil(5%) largest per-trial sums before averaging.
inline double trimmed_rmse(std::vector<double> per_trial_sums, double per_trial_divisor) {
    if (per_trial_sums.empty()) return 0.0;
    const int k = static_cast<int>(per_trial_sums.size());
    const int drop = (k * 5 + 99) / 100;   // ceil(0.05 K), at least 1 for K >= 1
    std::sort(per_trial_sums.begin(), per_trial_sums.end());
    per_trial_sums.resize(std::max(1, k - drop));
    return rmse_from_trial_sums(per_trial_sums,
                                per_trial_divisor * per_trial_sums.size());
}

}  // namespace detail

/// RMSE over trials and sources; coupling errors additionally average
/// over the Q slots.
inline RmseTriple rmse_metrics(const std::vector<TrialErrors> &trials, int q) {
    RmseTriple out;
    if (trials.empty()) return out;
    const int n = static_cast<int>(trials.front().doa_err.size());
    std::vector<double> doa_sums, range_sums, mc_sums;
    for (const auto &t : trials) {
        double d = 0.0, r = 0.0, c = 0.0;
        for (int i = 0; i < n; ++i) {
            d += t.doa_err[i] * t.doa_err[i];
            r += t.range_err[i] * t.range_err[i];
            c += t.mc_sqerr[i];
        }
        doa_sums.push_back(d);
        range_sums.push_back(r);
        mc_sums.push_back(c);
    }
    const double k = static_cast<double>(trials.size());
    out.doa_deg = rad_to_deg(detail::rmse_from_trial_sums(doa_sums, k * n));
    out.range_lambda = detail::rmse_from_trial_sums(range_sums, k * n);
    out.mc = detail::rmse_from_trial_sums(mc_sums, k * n * q);
    return out;
}

inline RmseTriple rmse_metrics_trimmed(const std::vector<TrialErrors> &trials, int q) {
    RmseTriple out;
    if (trials.empty()) return out;
    const int n = static_cast<int>(trials.front().doa_err.size());
    std::vector<double> doa_sums, range_sums, mc_sums;
    for (const auto &t : trials) {
        double d = 0.0, r = 0.0, c = 0.0;
        for (int i = 0; i < n; ++i) {
            d += t.doa_err[i] * t.doa_err[i];
            r += t.range_err[i] * t.range_err[i];
            c += t.mc_sqerr[i];
        }
        doa_sums.push_back(d);
        range_sums.push_back(r);
        mc_sums.push_back(c);
    }
    out.doa_deg = rad_to_deg(detail::trimmed_rmse(doa_sums, n));
    out.range_lambda = detail::trimmed_rmse(range_sums, n);
    out.mc = detail::trimmed_rmse(mc_sums, double(n) * q);
    return out;
}

/// Bootstrap standard error of the mean of per-trial values.
inline double bootstrap_se_mean(const std::vector<double> &values, int resamples = 200,
                                std::uint64_t seed = 0x5EEDB001ull) {
    const int k = static_cast<int>(values.size());
    if (k < 2) return 0.0;
    CounterRng rng(seed);
    std::vector<double> means;
    means.reserve(resamples);
    for (int b = 0; b < resamples; ++b) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i)
            acc += values[static_cast<int>(rng.uniform() * k) % k];
        means.push_back(acc / k);
    }
    const double mean = std::accumulate(means.begin(), means.end(), 0.0) / resamples;
    double var = 0.0;
    for (double m : means) var += (m - mean) * (m - mean);
    return std::sqrt(var / (resamples - 1));
}

// ---------------------------------------------------------------------
// Experiment specification and execution
// ---------------------------------------------------------------------

enum class SweepKind { none, snr_db, num_snapshots, delta_theta_deg };

inline std::string sweep_kind_name(SweepKind k) {
    switch (k) {
        case SweepKind::snr_db: return "snr";
        case SweepKind::num_snapshots: return "snapshots";
        case SweepKind::delta_theta_deg: return "separation";
        default: return "none";
    }
}

struct ExperimentSpec {
    ScenarioConfig base;
    SweepKind sweep = SweepKind::none;
    std::vector<double> sweep_values;   // empty only for SweepKind::none
    int trials = 50;
    std::vector<std::string> estimators = {"imop", "tsmnsl"};
    SearchGrid grid;
    int q = 1;
    double imop_epsilon = deg_to_rad(0.01);
    int imop_max_iterations = 50;
    std::optional<std::string> external_results_path;
    std::string external_results_name = "external";

    void validate() const {
        base.validate();
        if (trials < 1) throw std::invalid_argument("need at least one trial");
        if (sweep != SweepKind::none && sweep_values.empty())
            throw std::invalid_argument("sweep requires at least one sweep value");
        if (estimators.empty()) throw std::invalid_argument("need at least one estimator");
    }
};

/// Scenario at one sweep point. Separation sweeps move the second source
/// to (first DOA + delta) and re-synthesize its coupling.
inline ScenarioConfig sweep_scenario(const ExperimentSpec &spec, double value) {
    ScenarioConfig s = spec.base;
    switch (spec.sweep) {
        case SweepKind::none: break;
        case SweepKind::snr_db: s.snr_db = value; break;
        case SweepKind::num_snapshots: s.num_snapshots = static_cast<int>(value); break;
        case SweepKind::delta_theta_deg: {
            if (s.num_sources() < 2)
                throw std::invalid_argument("separation sweep needs two sources");
            s.sources[1].doa = s.sources[0].doa + deg_to_rad(value);
            apply_mc_model(s);
            break;
        }
    }
    return s;
}

/// Everything an estimator callback may need. `truth` points at the
/// trial's scenario and exists for test doubles and genie estimators.
struct EstimatorContext {
    UlaGeometry geometry;
    int num_sources = 1;
    SearchGrid grid;
    int q = 1;
    ImopConfig imop;
    CouplingProvider true_coupling;
    const ScenarioConfig *truth = nullptr;
};

using EstimatorFn = std::function<EstimationResult(const SnapshotMatrix &, const EstimatorContext &)>;

struct NamedEstimator {
    std::string name;
    EstimatorFn fn;
};

inline NamedEstimator make_standard_estimator(const std::string &name) {
    if (name == "tsmnsl") {
        return {name, [](const SnapshotMatrix &y, const EstimatorContext &ctx) {
                    TsmnslConfig cfg;
                    cfg.grid = ctx.grid;
                    cfg.q = ctx.q;
                    return tsmnsl_estimate(sample_covariance(y), ctx.geometry,
                                           ctx.num_sources, cfg);
                }};
    }
    if (name == "imop") {
        return {name, [](const SnapshotMatrix &y, const EstimatorContext &ctx) {
                    return imop_estimate(y, ctx.num_sources, ctx.imop).first;
                }};
    }
    if (name == "music2d") {
        return {name, [](const SnapshotMatrix &y, const EstimatorContext &ctx) {
                    if (!ctx.true_coupling)
                        throw std::invalid_argument(
                            "the known-MC estimator requires the true coupling");
                    TsmnslConfig cfg;
                    cfg.grid = ctx.grid;
                    cfg.q = ctx.q;
                    cfg.known_mc = ctx.true_coupling;
                    return tsmnsl_estimate(sample_covariance(y), ctx.geometry,
                                           ctx.num_sources, cfg);
                }};
    }
    throw std::invalid_argument("unknown estimator '" + name + "'");
}

inline std::vector<NamedEstimator> standard_estimators(const std::vector<std::string> &names) {
    std::vector<NamedEstimator> out;
    for (const auto &n : names) out.push_back(make_standard_estimator(n));
    return out;
}

struct EstimatorSummary {
    std::string name;
    RmseTriple rmse;
    RmseTriple rmse_trimmed;
    double mean_runtime_s = 0.0;
    double mean_tm_s = 0.0;
    double failure_rate = 0.0;
    double converged_rate = 1.0;
    double mean_iterations = 0.0;
    int successes = 0;
    std::vector<TrialErrors> trials;   // successful trials, in trial order
};

struct SweepPointResult {
    double sweep_value = 0.0;
    std::vector<EstimatorSummary> estimators;
    double crlb_rmse_doa_deg = 0.0;
    double crlb_rmse_range_lambda = 0.0;
    double crlb_rmse_mc = 0.0;
    double crlb_var_doa_deg2 = 0.0;
    double crlb_var_range_lambda2 = 0.0;
    double crlb_var_mc = 0.0;

    const EstimatorSummary &summary(const std::string &name) const {
        for (const auto &e : estimators)
            if (e.name == name) return e;
        throw std::out_of_range("no summary for estimator '" + name + "'");
    }
};

struct SweepResult {
    SweepKind sweep = SweepKind::none;
    std::vector<SweepPointResult> points;
};

inline SweepResult run_experiment_with(const ExperimentSpec &spec,
                                       const std::vector<NamedEstimator> &estimators) {
    spec.validate();
    SweepResult result;
    result.sweep = spec.sweep;
    std::vector<double> values = spec.sweep_values;
    if (spec.sweep == SweepKind::none) values = {0.0};

    for (double value : values) {
        const ScenarioConfig scenario = sweep_scenario(spec, value);
        const int n = scenario.num_sources();

        EstimatorContext ctx;
        ctx.geometry = scenario.geometry;
        ctx.num_sources = n;
        ctx.grid = spec.grid;
        ctx.q = spec.q;
        ctx.imop.grid = spec.grid;
        ctx.imop.q = spec.q;
        ctx.imop.epsilon = spec.imop_epsilon;
        ctx.imop.max_iterations = spec.imop_max_iterations;
        const McSynthesisSpec mc_model = scenario.mc_model;
        ctx.true_coupling = [mc_model](double doa) { return synthesize_mc(mc_model, doa); };

        struct TrialOutcome {
            bool ok = false;
            TrialErrors errors;
            double runtime_s = 0.0;
            double tm_s = 0.0;
            bool converged = true;
            int iterations = 0;
        };
        std::vector<std::vector<TrialOutcome>> outcomes(
            estimators.size(), std::vector<TrialOutcome>(spec.trials));

        parallel_for(spec.trials, [&](int trial) {
            ScenarioConfig trial_scenario = scenario;
            trial_scenario.rng_seed =
                scenario.rng_seed ^ static_cast<std::uint64_t>(trial);
            const SnapshotMatrix y = generate_snapshots(trial_scenario);
            EstimatorContext trial_ctx = ctx;
            trial_ctx.truth = &trial_scenario;
            for (std::size_t e = 0; e < estimators.size(); ++e) {
                TrialOutcome &out = outcomes[e][trial];
                try {
                    const EstimationResult est = estimators[e].fn(y, trial_ctx);
                    out.runtime_s = est.diagnostics.runtime_s;
                    out.tm_s = est.diagnostics.tm_seconds;
                    out.converged = est.diagnostics.converged;
                    out.iterations = est.diagnostics.iterations;
                    if (static_cast<int>(est.records.size()) == n &&
                        !est.diagnostics.peak_deficient) {
                        out.errors = trial_errors(est, trial_scenario.sources);
                        out.ok = true;
                    }
                } catch (const std::exception &) {
                    out.ok = false;
                }
            }
        });

        SweepPointResult point;
        point.sweep_value = value;
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            EstimatorSummary s;
            s.name = estimators[e].name;
            double runtime = 0.0, tm = 0.0, iters = 0.0;
            int converged = 0;
            for (int t = 0; t < spec.trials; ++t) {
                const TrialOutcome &out = outcomes[e][t];
                runtime += out.runtime_s;
                tm += out.tm_s;
                iters += out.iterations;
                converged += out.converged ? 1 : 0;
                if (out.ok) s.trials.push_back(out.errors);
            }
            s.successes = static_cast<int>(s.trials.size());
            s.failure_rate = 1.0 - double(s.successes) / spec.trials;
            s.mean_runtime_s = runtime / spec.trials;
            s.mean_tm_s = tm / spec.trials;
            s.converged_rate = double(converged) / spec.trials;
            s.mean_iterations = iters / spec.trials;
            s.rmse = rmse_metrics(s.trials, spec.q);
            s.rmse_trimmed = rmse_metrics_trimmed(s.trials, spec.q);
            point.estimators.push_back(std::move(s));
        }

        const CrlbReport crlb = crlb_report(scenario);
        point.crlb_rmse_doa_deg = crlb.rmse_doa_deg();
        point.crlb_rmse_range_lambda = crlb.rmse_range_lambda();
        point.crlb_rmse_mc = crlb.rmse_mc();
        point.crlb_var_doa_deg2 = crlb.doa_variance_deg2();
        point.crlb_var_range_lambda2 = crlb.range_variance_lambda2();
        point.crlb_var_mc = crlb.mc_variance();
        result.points.push_back(std::move(point));
    }
    return result;
}

inline SweepResult run_experiment(const ExperimentSpec &spec) {
    return run_experiment_with(spec, standard_estimators(spec.estimators));
}

// ---------------------------------------------------------------------
// Runtime comparison
// ---------------------------------------------------------------------

struct RuntimeRow {
    std::string name;
    double mean_total_s = 0.0;
    double mean_tm_s = 0.0;
    double tm_share = 0.0;   // fraction of total time spent building TMs
};

/// Mean wall clock per estimator over identical data blocks, run
/// sequentially for stable timing, with the transformation-matrix
/// construction share.
inline std::vector<RuntimeRow> runtime_comparison(const ScenarioConfig &scenario,
                                                  const std::vector<std::string> &names,
                                                  const SearchGrid &grid, int q,
                                                  int repeats = 3) {
    const std::vector<NamedEstimator> estimators = standard_estimators(names);
    EstimatorContext ctx;
    ctx.geometry = scenario.geometry;
    ctx.num_sources = scenario.num_sources();
    ctx.grid = grid;
    ctx.q = q;
    ctx.imop.grid = grid;
    ctx.imop.q = q;
    const McSynthesisSpec mc_model = scenario.mc_model;
    ctx.true_coupling = [mc_model](double doa) { return synthesize_mc(mc_model, doa); };

    std::vector<RuntimeRow> rows;
    for (const auto &est : estimators) rows.push_back({est.name, 0.0, 0.0, 0.0});
    for (int rep = 0; rep < repeats; ++rep) {
        ScenarioConfig trial = scenario;
        trial.rng_seed = scenario.rng_seed ^ static_cast<std::uint64_t>(rep);
        const SnapshotMatrix y = generate_snapshots(trial);
        EstimatorContext trial_ctx = ctx;
        trial_ctx.truth = &trial;
        for (std::size_t e = 0; e < estimators.size(); ++e) {
            const EstimationResult r = estimators[e].fn(y, trial_ctx);
            rows[e].mean_total_s += r.diagnostics.runtime_s;
            rows[e].mean_tm_s += r.diagnostics.tm_seconds;
        }
    }
    for (auto &row : rows) {
        row.mean_total_s /= repeats;
        row.mean_tm_s /= repeats;
        row.tm_share = row.mean_total_s > 0.0 ? row.mean_tm_s / row.mean_total_s : 0.0;
    }
    return rows;
}

// ---------------------------------------------------------------------
// Bundled benchmark scenarios
// ---------------------------------------------------------------------

/// Coupling model of the bundled benchmarks: nearest-neighbor coupling
/// (the dominant term at half-wavelength spacing) with a moderate
/// direction dependence.
inline McSynthesisSpec default_mc_spec() {
    McSynthesisSpec mc;
    mc.q = 2;
    mc.base_magnitudes = (VectorXd(1) << 0.35).finished();
    mc.direction_gain = 0.5;
    mc.phase_seed = 7777;
    return mc;
}

/// Three co-planar sources observed by an 11-element half-wavelength
/// array at 5 GHz; the standard multi-source benchmark.
inline ScenarioConfig three_source_benchmark(std::uint64_t seed = 1, double snr_db = 10.0,
                                             int num_snapshots = 200) {
    return make_scenario(UlaGeometry(11, 0.5, 0.06),
                         {{30.0, 13.3}, {55.0, 30.0}, {90.0, 43.3}}, snr_db, num_snapshots,
                         seed, default_mc_spec());
}

/// Two sources separated by delta degrees; the resolution benchmark.
inline ScenarioConfig separation_benchmark(double delta_deg, std::uint64_t seed = 1) {
    return make_scenario(UlaGeometry(11, 0.5, 0.06),
                         {{30.0, 13.3}, {30.0 + delta_deg, 30.0}}, 15.0, 200, seed,
                         default_mc_spec());
}

inline ExperimentSpec snr_sweep_spec(int trials = 50, std::uint64_t seed = 1) {
    ExperimentSpec spec;
    spec.base = three_source_benchmark(seed);
    spec.sweep = SweepKind::snr_db;
    spec.sweep_values = {-5.0, 0.0, 5.0, 10.0, 15.0};
    spec.trials = trials;
    spec.grid = SearchGrid::defaults(spec.base.geometry);
    spec.q = spec.base.mc_model.q;
    return spec;
}

inline ExperimentSpec snapshot_sweep_spec(int trials = 50, std::uint64_t seed = 1) {
    ExperimentSpec spec;
    spec.base = three_source_benchmark(seed);
    spec.sweep = SweepKind::num_snapshots;
    spec.sweep_values = {50, 150, 250, 350, 450, 550, 650, 750};
    spec.trials = trials;
    spec.grid = SearchGrid::defaults(spec.base.geometry);
    spec.q = spec.base.mc_model.q;
    return spec;
}

inline ExperimentSpec separation_sweep_spec(int trials = 50, std::uint64_t seed = 1) {
    ExperimentSpec spec;
    spec.base = separation_benchmark(0.5, seed);
    spec.sweep = SweepKind::delta_theta_deg;
    spec.sweep_values = {0.5, 2.5, 4.5, 6.5, 8.5, 10.5, 12.5, 14.5, 16.5, 18.5, 20.5};
    spec.trials = trials;
    spec.grid = SearchGrid::defaults(spec.base.geometry);
    spec.q = spec.base.mc_model.q;
    return spec;
}

// ---------------------------------------------------------------------
// Sweep CSV export
// ---------------------------------------------------------------------

/// External baseline columns: CSV `sweep_value,rmse_doa_deg,...` merged
/// by sweep value.
struct ExternalResults {
    std::string name;
    std::vector<std::string> columns;                       // column names after sweep_value
    std::map<double, std::vector<double>> rows;

    static ExternalResults parse(const std::string &content, const std::string &name) {
        ExternalResults ext;
        ext.name = name;
        std::istringstream in(content);
        std::string line;
        bool have_header = false;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ls(line);
            std::string tok;
            if (!have_header) {
                bool first = true;
                while (std::getline(ls, tok, ',')) {
                    if (!first) ext.columns.push_back(tok);
                    first = false;
                }
                have_header = true;
                continue;
            }
            std::vector<double> vals;
            while (std::getline(ls, tok, ',')) vals.push_back(std::strtod(tok.c_str(), nullptr));
            if (vals.empty()) continue;
            const double key = vals.front();
            vals.erase(vals.begin());
            ext.rows[key] = vals;
        }
        return ext;
    }
};

/// Wide-format sweep CSV: one row per sweep point, fixed column order
/// per estimator, bound columns last. Runtime columns vary run to run;
/// all other columns are reproducible from the seed.
inline std::string serialize_sweep(const SweepResult &result,
                                   const ExternalResults *external = nullptr) {
    std::ostringstream os;
    os << "sweep,sweep_value";
    if (!result.points.empty()) {
        for (const auto &e : result.points.front().estimators) {
            const std::string &n = e.name;
            os << ',' << n << "_rmse_doa_deg" << ',' << n << "_rmse_doa_deg_trimmed" << ','
               << n << "_rmse_range_lambda" << ',' << n << "_rmse_range_lambda_trimmed" << ','
               << n << "_rmse_mc" << ',' << n << "_rmse_mc_trimmed" << ',' << n
               << "_mean_runtime_s" << ',' << n << "_failure_rate" << ',' << n
               << "_converged_rate" << ',' << n << "_mean_iterations";
        }
    }
    os << ",crlb_doa_deg,crlb_range_lambda,crlb_mc";
    if (external)
        for (const auto &c : external->columns) os << ',' << external->name << '_' << c;
    os << "\n";

    for (const auto &p : result.points) {
        os << sweep_kind_name(result.sweep) << ',' << format_double(p.sweep_value);
        for (const auto &e : p.estimators) {
            os << ',' << format_double(e.rmse.doa_deg) << ','
               << format_double(e.rmse_trimmed.doa_deg) << ','
               << format_double(e.rmse.range_lambda) << ','
               << format_double(e.rmse_trimmed.range_lambda) << ','
               << format_double(e.rmse.mc) << ',' << format_double(e.rmse_trimmed.mc) << ','
               << format_double(e.mean_runtime_s) << ',' << format_double(e.failure_rate)
               << ',' << format_double(e.converged_rate) << ','
               << format_double(e.mean_iterations);
        }
        os << ',' << format_double(p.crlb_rmse_doa_deg) << ','
           << format_double(p.crlb_rmse_range_lambda) << ','
           << format_double(p.crlb_rmse_mc);
        if (external) {
            auto it = external->rows.find(p.sweep_value);
            for (std::size_t c = 0; c < external->columns.size(); ++c) {
                os << ',';
                if (it != external->rows.end() && c < it->second.size())
                    os << format_double(it->second[c]);
            }
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace nearfield
