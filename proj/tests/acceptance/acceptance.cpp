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
// Acceptance suite: one integration check per release criterion, each
// printing a PASS/FAIL line. Run with no arguments for all criteria or
// with a single criterion number. Exit status is the failure count.

#include "nearfield/bench.hpp"
#include "nearfield/config_file.hpp"
#include "nearfield/crlb.hpp"
#include "nearfield/imop.hpp"
#include "nearfield/tsmnsl.hpp"

#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace nearfield;

namespace {

std::mt19937_64 rng(0xACCE97A9CEull);

double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

CouplingVector random_coupling(int q) {
    VectorXcd c(q);
    c(0) = cxd(1.0, 0.0);
    double mag = uniform(0.25, 0.55);
    for (int k = 1; k < q; ++k) {
        c(k) = std::polar(mag, uniform(0.0, 2.0 * pi));
        mag *= uniform(0.3, 0.7);
    }
    return CouplingVector(c);
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string &what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

/// Adjacent increases in a curve that should trend downward; increases
/// within `rel_tol` of the previous point do not count (a 50-trial RMSE
/// estimate carries a standard error near 6%, so 15% is about two
/// standard errors on an adjacent-point ratio).
int inversions(const std::vector<double> &v, double rel_tol = 1e-12) {
    int count = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1] * (1.0 + rel_tol)) ++count;
    return count;
}

double pooled_median_abs(const std::vector<TrialErrors> &trials,
                         std::vector<double> TrialErrors::*member) {
    std::vector<double> values;
    for (const auto &t : trials)
        for (double e : t.*member) values.push_back(std::abs(e));
    std::sort(values.begin(), values.end());
    return values.empty() ? std::numeric_limits<double>::quiet_NaN()
                          : values[values.size() / 2];
}

// ---------------------------------------------------------------------

Outcome criterion1_algebraic_identities() {
    Outcome out;
    const UlaGeometry geom(11, 0.5, 0.06);
    double worst_tm = 0.0, worst_factor = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int q = 1 + trial % 4;
        SourceState src;
        src.doa = uniform(deg_to_rad(5.0), deg_to_rad(175.0));
        src.range = uniform(geom.fresnel_lower(), geom.fresnel_upper());
        src.coupling = random_coupling(q);

        const VectorXcd direct = coupled_steering(geom, src);
        const VectorXcd via_tm =
            transformation_matrix(geom, src.doa, src.range, q) * src.coupling.coeffs;
        worst_tm = std::max(worst_tm, (via_tm - direct).norm() / direct.norm());

        const CoupledApproxFactors f = factorize_coupled_approx(geom, src);
        const VectorXcd approx_direct = coupling_matrix(src.coupling, 11).matrix *
                                        approx_steering_vector(geom, src);
        worst_factor = std::max(worst_factor,
                                (f.b * f.v - approx_direct).norm() / approx_direct.norm());
    }
    out.require(worst_tm < 1e-12,
                "transformation identity residual " + std::to_string(worst_tm));
    out.require(worst_factor < 1e-12,
                "factorization identity residual " + std::to_string(worst_factor));

    double worst_keep = 0.0, worst_kill = 0.0;
    int accepted = 0;
    while (accepted < 100) {
        const int n = 2 + accepted % 2;   // one or two peer sources
        std::vector<SourceState> sources;
        for (int k = 0; k < n; ++k) {
            SourceState s;
            s.doa = uniform(deg_to_rad(10.0), deg_to_rad(170.0));
            s.range = uniform(geom.fresnel_lower(), geom.fresnel_upper());
            s.coupling = random_coupling(2);
            sources.push_back(s);
        }
        const VectorXcd a_self = coupled_steering(geom, sources[0]);
        MatrixXcd a_other(11, n - 1);
        for (int k = 1; k < n; ++k) a_other.col(k - 1) = coupled_steering(geom, sources[k]);
        double cond = 0.0;
        MatrixXcd e;
        try {
            e = oblique_projector(a_other, a_self, &cond);
        } catch (const std::exception &) {
            continue;   // pathologically close draw, not a well-conditioned case
        }
        if (cond > 1e6) continue;
        ++accepted;
        worst_keep = std::max(worst_keep, (e * a_other - a_other).norm() / a_other.norm());
        worst_kill = std::max(worst_kill, (e * a_self).norm() / a_self.norm());
    }
    out.require(worst_keep < 1e-10, "peer-preservation residual " + std::to_string(worst_keep));
    out.require(worst_kill < 1e-10, "self-annihilation residual " + std::to_string(worst_kill));
    if (out.pass)
        out.detail = "max residuals: tm " + std::to_string(worst_tm) + ", factor " +
                     std::to_string(worst_factor) + ", oblique " +
                     std::to_string(std::max(worst_keep, worst_kill));
    return out;
}

Outcome criterion2_derivatives() {
    Outcome out;
    const UlaGeometry geom(11, 0.5, 0.06);
    double worst_theta = 0.0, worst_range = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        SourceState src;
        // Keep the finite-difference step inside one synthesizer phase cell.
        src.doa = deg_to_rad(std::floor(uniform(10.0, 170.0)) + uniform(0.2, 0.8));
        src.range = uniform(geom.fresnel_lower(), geom.fresnel_upper());
        src.coupling = random_coupling(1 + trial % 3);

        const double ht = 1e-6;
        const VectorXcd fd_t = (exact_steering_vector(geom, src.doa + ht, src.range) -
                                exact_steering_vector(geom, src.doa - ht, src.range)) /
                               (2.0 * ht);
        worst_theta = std::max(
            worst_theta, (d_steering_d_theta(geom, src) - fd_t).norm() / fd_t.norm());

        const double hr = 1e-5;
        const VectorXcd fd_r = (exact_steering_vector(geom, src.doa, src.range + hr) -
                                exact_steering_vector(geom, src.doa, src.range - hr)) /
                               (2.0 * hr);
        worst_range = std::max(
            worst_range, (d_steering_d_range(geom, src) - fd_r).norm() / fd_r.norm());
    }
    out.require(worst_theta < 1e-5, "steering DOA derivative " + std::to_string(worst_theta));
    out.require(worst_range < 1e-5, "steering range derivative " + std::to_string(worst_range));

    McSynthesisSpec mc;
    mc.q = 3;
    mc.base_magnitudes = (VectorXd(2) << 0.40, 0.15).finished();
    mc.direction_gain = 0.5;
    mc.phase_seed = 31;

    double worst_cov = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::pair<double, double>> positions;
        positions.emplace_back(std::floor(uniform(15.0, 80.0)) + uniform(0.2, 0.8),
                               uniform(8.0, 28.0));
        positions.emplace_back(std::floor(uniform(90.0, 160.0)) + uniform(0.2, 0.8),
                               uniform(29.0, 48.0));
        const ScenarioConfig config =
            make_scenario(geom, positions, uniform(0.0, 15.0), 100, trial + 1, mc);
        const double sigma2 = noise_variance(config);
        auto model_cov = [&](const std::vector<SourceState> &sources) {
            MatrixXcd r = sigma2 * MatrixXcd::Identity(11, 11);
            for (const auto &s : sources) {
                const VectorXcd at = coupled_steering(geom, s);
                r += s.power * at * at.adjoint();
            }
            return r;
        };

        for (int n = 0; n < 2; ++n) {
            const double h = 1e-6;
            auto shifted = [&](double delta) {
                std::vector<SourceState> s = config.sources;
                s[n].doa += delta;
                s[n].coupling = synthesize_mc(mc, s[n].doa);
                return model_cov(s);
            };
            const MatrixXcd fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            const MatrixXcd analytic =
                covariance_derivative(config, {FimParameter::Kind::doa, n});
            worst_cov = std::max(worst_cov, (analytic - fd).norm() / fd.norm());

            const double hr = 1e-5;
            auto shifted_r = [&](double delta) {
                std::vector<SourceState> s = config.sources;
                s[n].range += delta;
                return model_cov(s);
            };
            const MatrixXcd fd_r = (shifted_r(hr) - shifted_r(-hr)) / (2.0 * hr);
            const MatrixXcd analytic_r =
                covariance_derivative(config, {FimParameter::Kind::range, n});
            worst_cov = std::max(worst_cov, (analytic_r - fd_r).norm() / fd_r.norm());
        }
        for (int slot = 1; slot < 3; ++slot) {
            for (auto kind : {FimParameter::Kind::mc_re, FimParameter::Kind::mc_im}) {
                const double h = 1e-6;
                const cxd step = kind == FimParameter::Kind::mc_re ? cxd(h, 0) : cxd(0, h);
                auto shifted = [&](cxd delta) {
                    std::vector<SourceState> s = config.sources;
                    for (auto &src : s) {
                        VectorXcd c = src.coupling.coeffs;
                        c(slot) += delta;
                        src.coupling.coeffs = c;
                    }
                    return model_cov(s);
                };
                const MatrixXcd fd = (shifted(step) - shifted(-step)) / (2.0 * h);
                const MatrixXcd analytic = covariance_derivative(config, {kind, slot});
                worst_cov = std::max(worst_cov, (analytic - fd).norm() / fd.norm());
            }
        }
    }
    out.require(worst_cov < 1e-4, "covariance derivative " + std::to_string(worst_cov));
    if (out.pass)
        out.detail = "max rel errors: steering " +
                     std::to_string(std::max(worst_theta, worst_range)) + ", covariance " +
                     std::to_string(worst_cov);
    return out;
}

Outcome criterion3_noise_free_recovery() {
    Outcome out;
    const UlaGeometry geom(11, 0.5, 0.06);
    McSynthesisSpec mc;
    mc.q = 1;
    mc.base_magnitudes = VectorXd(0);
    // Iteration counts are grid-relative: the far-field-factor
    // initialization carries a quadratic-phase bias of a few tenths of a
    // degree, so the two-step convergence contract is checked on cells
    // at that scale (the recovery itself is exact on any grid).
    SearchGrid grid = SearchGrid::defaults(geom);
    grid.theta_step = deg_to_rad(0.25);
    const GridAxis ta = grid.theta_axis();
    const GridAxis ra = grid.range_axis();

    // Source placed exactly on grid nodes; effectively noise-free data.
    const double theta0 = ta.value(ta.nearest_index(deg_to_rad(33.0)));
    const double range0 = ra.value(55);
    const ScenarioConfig config =
        make_scenario(geom, {{rad_to_deg(theta0), range0}}, 400.0, 24, 11, mc);

    const SnapshotMatrix y = generate_snapshots(config);

    TsmnslConfig tc;
    tc.grid = grid;
    tc.q = 1;
    const EstimationResult search2d = tsmnsl_estimate(sample_covariance(y), geom, 1, tc);
    out.require(search2d.records.size() == 1, "2D search returned no record");
    if (!search2d.records.empty()) {
        out.require(search2d.records[0].doa == theta0, "2D search DOA off the true node");
        out.require(search2d.records[0].range == range0, "2D search range off the true node");
    }

    ImopConfig ic;
    ic.grid = grid;
    ic.q = 1;
    const auto [iterative, trace] = imop_estimate(y, 1, ic);
    out.require(iterative.records.size() == 1, "iterative search returned no record");
    if (!iterative.records.empty()) {
        out.require(iterative.records[0].doa == theta0, "iterative DOA off the true node");
        out.require(iterative.records[0].range == range0,
                    "iterative range off the true node");
    }
    out.require(iterative.diagnostics.converged, "iterative search did not converge");
    out.require(iterative.diagnostics.iterations <= 2,
                "convergence took " + std::to_string(iterative.diagnostics.iterations) +
                    " iterations");
    out.require(trace.records.back().delta_theta < ic.epsilon,
                "final recorded DOA step not below the threshold");
    if (out.pass)
        out.detail = "exact node recovery; iterative converged in " +
                     std::to_string(iterative.diagnostics.iterations) + " iteration(s)";
    return out;
}

Outcome criterion4_benchmark_medians() {
    Outcome out;
    ExperimentSpec spec;
    spec.base = three_source_benchmark(1);
    spec.trials = 20;
    spec.grid = SearchGrid::defaults(spec.base.geometry);
    spec.q = spec.base.mc_model.q;
    spec.estimators = {"imop", "tsmnsl"};
    const SweepResult result = run_experiment(spec);

    char buf[256];
    for (const auto &est : result.points[0].estimators) {
        out.require(est.failure_rate == 0.0, est.name + " had failed trials");
        // Medians over the pooled trial x source sample (the same pooling
        // as the RMSE metrics).
        const double med_doa =
            rad_to_deg(pooled_median_abs(est.trials, &TrialErrors::doa_err));
        const double med_range = pooled_median_abs(est.trials, &TrialErrors::range_err);
        std::snprintf(buf, sizeof(buf), "%s median |dDOA| %.3f deg, median |drange| %.3f wl",
                      est.name.c_str(), med_doa, med_range);
        out.detail += (out.detail.empty() ? "" : "; ") + std::string(buf);
        out.require(med_doa <= 0.3, est.name + " DOA median above 0.3 deg");
        out.require(med_range <= 1.0, est.name + " range median above 1.0 wavelengths");
    }
    return out;
}

Outcome criterion5_runtime() {
    Outcome out;
    const ScenarioConfig scenario = three_source_benchmark(5);
    const SearchGrid grid = SearchGrid::defaults(scenario.geometry);
    const auto rows =
        runtime_comparison(scenario, {"imop", "tsmnsl"}, grid, scenario.mc_model.q, 3);
    double iterative_s = 0.0, search2d_s = 0.0, search2d_share = 0.0;
    for (const auto &row : rows) {
        if (row.name == "imop") iterative_s = row.mean_total_s;
        if (row.name == "tsmnsl") {
            search2d_s = row.mean_total_s;
            search2d_share = row.tm_share;
        }
    }
    const double ratio = iterative_s > 0.0 ? search2d_s / iterative_s : 0.0;
    char buf[192];
    std::snprintf(buf, sizeof(buf),
                  "2D/iterative wall-clock ratio %.1f (2D %.2fs, iterative %.3fs), "
                  "2D TM share %.1f%%",
                  ratio, search2d_s, iterative_s, 100.0 * search2d_share);
    out.detail = buf;
    out.require(ratio >= 10.0, "runtime ratio below 10");
    out.require(search2d_share >= 0.30 && search2d_share <= 0.70,
                "TM construction share outside [30%, 70%]");
    return out;
}

Outcome criterion6_sweep_trends() {
    Outcome out;
    const int k = 50;

    // Trends are assessed on the 5%-trimmed RMSE columns: a handful of
    // gross peak-swap trials otherwise dominate a 50-trial point, and
    // the harness reports trimmed and untrimmed side by side precisely
    // because outlier handling in the reference results is unspecified.
    auto curves = [](const SweepResult &r, const std::string &est) {
        std::array<std::vector<double>, 3> out_curves;
        for (const auto &p : r.points) {
            const EstimatorSummary &s = p.summary(est);
            out_curves[0].push_back(s.rmse_trimmed.doa_deg);
            out_curves[1].push_back(s.rmse_trimmed.range_lambda);
            out_curves[2].push_back(s.rmse_trimmed.mc);
        }
        return out_curves;
    };
    const char *metric_names[3] = {"DOA", "range", "MC"};

    {
        const SweepResult snr_result = run_experiment(snr_sweep_spec(k, 1));
        for (const std::string est : {"imop", "tsmnsl"}) {
            const auto c = curves(snr_result, est);
            for (int m = 0; m < 3; ++m) {
                out.require(inversions(c[m]) <= 1, est + " " + metric_names[m] +
                                                       "-vs-SNR curve has >1 inversion");
                out.require(c[m].back() < c[m].front(),
                            est + " " + metric_names[m] + " RMSE not improving with SNR");
            }
        }
    }
    {
        const SweepResult snap_result = run_experiment(snapshot_sweep_spec(k, 1));
        for (const std::string est : {"imop", "tsmnsl"}) {
            const auto c = curves(snap_result, est);
            for (int m = 0; m < 3; ++m) {
                // Decreasing trend at desk scale: at most one rise beyond
                // two standard errors, and the endpoints must decrease.
                out.require(inversions(c[m], 0.15) <= 1,
                            est + " " + metric_names[m] +
                                "-vs-L curve rises beyond sampling noise");
                out.require(c[m].back() < c[m].front(),
                            est + " " + metric_names[m] + " RMSE not decreasing in L");
            }
        }
    }
    {
        const SweepResult sep_result = run_experiment(separation_sweep_spec(k, 1));
        const auto c = curves(sep_result, "imop");
        out.require(c[0].back() < c[0].front(),
                    "iterative DOA RMSE at 20.5 deg separation not below its 0.5 deg value");
    }
    if (out.pass) out.detail = "all sweep trends hold at K=" + std::to_string(k);
    return out;
}

Outcome criterion7_crlb_consistency() {
    Outcome out;
    ExperimentSpec spec = snr_sweep_spec(50, 1);
    spec.sweep_values = {5.0, 10.0, 15.0};
    const SweepResult result = run_experiment(spec);

    for (const auto &point : result.points) {
        for (const auto &est : point.estimators) {
            // Per-trial mean squared errors per parameter group.
            std::vector<double> doa2, range2, mc2;
            for (const auto &t : est.trials) {
                double d = 0.0, r = 0.0, c = 0.0;
                for (std::size_t n = 0; n < t.doa_err.size(); ++n) {
                    const double dd = rad_to_deg(t.doa_err[n]);
                    d += dd * dd;
                    r += t.range_err[n] * t.range_err[n];
                    c += t.mc_sqerr[n];
                }
                const double n_src = static_cast<double>(t.doa_err.size());
                doa2.push_back(d / n_src);
                range2.push_back(r / n_src);
                mc2.push_back(c / (n_src * spec.q));
            }
            auto mean = [](const std::vector<double> &v) {
                return v.empty() ? 0.0
                                 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            };
            const struct Check {
                const char *label;
                double rmse2;
                double se;
                double bound;
            } checks[] = {
                {"DOA", mean(doa2), bootstrap_se_mean(doa2), point.crlb_var_doa_deg2},
                {"range", mean(range2), bootstrap_se_mean(range2),
                 point.crlb_var_range_lambda2},
                {"MC", mean(mc2), bootstrap_se_mean(mc2), point.crlb_var_mc},
            };
            for (const auto &c : checks) {
                if (!(c.rmse2 >= c.bound - 3.0 * c.se)) {
                    char buf[192];
                    std::snprintf(buf, sizeof(buf),
                                  "%s %s at %.0f dB: rmse2 %.3g below bound %.3g - 3*%.3g",
                                  est.name.c_str(), c.label, point.sweep_value, c.rmse2,
                                  c.bound, c.se);
                    out.require(false, buf);
                }
            }
        }
    }

    // The bound curves themselves tighten strictly with SNR and snapshots.
    double prev = std::numeric_limits<double>::infinity();
    for (double snr : {-5.0, 0.0, 5.0, 10.0, 15.0}) {
        const CrlbReport rep = crlb_report(three_source_benchmark(1, snr));
        out.require(rep.doa_variance_deg2() < prev, "DOA bound not decreasing in SNR");
        prev = rep.doa_variance_deg2();
    }
    prev = std::numeric_limits<double>::infinity();
    for (int l : {50, 150, 250, 350, 450, 550, 650, 750}) {
        const CrlbReport rep = crlb_report(three_source_benchmark(1, 10.0, l));
        out.require(rep.mc_variance() < prev, "MC bound not decreasing in L");
        prev = rep.mc_variance();
    }
    if (out.pass) out.detail = "simulated errors respect the bounds at 5/10/15 dB";
    return out;
}

Outcome criterion8_mc_contract() {
    Outcome out;
    const UlaGeometry geom(11, 0.5, 0.06);

    // Unit self term, exactly, on arbitrary solve outcomes.
    for (int trial = 0; trial < 50; ++trial) {
        const int q = 2 + trial % 3;
        MatrixXcd g(q + 2, q);
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j)
                g(i, j) = cxd(uniform(-1.0, 1.0), uniform(-1.0, 1.0));
        const MatrixXcd om = g.adjoint() * g;
        const CouplingVector c = mc_from_omega({om, OmegaKind::exact});
        out.require(c.coeffs(0) == cxd(1.0, 0.0), "solved self term not exactly 1");
    }

    // Noise-free recovery of the true coupling at the true location.
    McSynthesisSpec mc;
    mc.q = 3;
    mc.base_magnitudes = (VectorXd(2) << 0.40, 0.15).finished();
    mc.direction_gain = 0.5;
    mc.phase_seed = 99;
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double doa_deg = uniform(20.0, 160.0);
        const double range = uniform(8.0, 45.0);
        const ScenarioConfig config =
            make_scenario(geom, {{doa_deg, range}}, 400.0, 32, trial + 7, mc);
        const SnapshotMatrix y = generate_snapshots(config);
        const SubspaceDecomposition d = eigendecompose(sample_covariance(y), 1);
        const OmegaMatrix om = omega(
            transformation_matrix(geom, config.sources[0].doa, config.sources[0].range, 3),
            d.noise_basis);
        const CouplingVector recovered = mc_from_omega(om);
        out.require(recovered.coeffs(0) == cxd(1.0, 0.0), "recovered self term not 1");
        const double rel = (recovered.coeffs - config.sources[0].coupling.coeffs).norm() /
                           config.sources[0].coupling.coeffs.norm();
        worst = std::max(worst, rel);
    }
    out.require(worst < 1e-6,
                "noise-free coupling recovery error " + std::to_string(worst));
    if (out.pass) out.detail = "worst noise-free recovery error " + std::to_string(worst);
    return out;
}

struct Criterion {
    int number;
    const char *title;
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "algebraic identities (transformation, factorization, oblique projector)",
     criterion1_algebraic_identities},
    {2, "analytic derivatives vs central finite differences", criterion2_derivatives},
    {3, "noise-free exact grid recovery and fast convergence",
     criterion3_noise_free_recovery},
    {4, "three-source benchmark medians over 20 seeded trials", criterion4_benchmark_medians},
    {5, "runtime ratio and TM construction share", criterion5_runtime},
    {6, "RMSE sweep trends (SNR, snapshots, separation)", criterion6_sweep_trends},
    {7, "simulated errors vs estimation bounds", criterion7_crlb_consistency},
    {8, "coupling estimation contract", criterion8_mc_contract},
};

}  // namespace

int main(int argc, char **argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);

    int failures = 0;
    for (const Criterion &c : kCriteria) {
        if (only != 0 && c.number != only) continue;
        const Outcome result = c.run();
        std::printf("[%s] criterion %d: %s%s%s\n", result.pass ? "PASS" : "FAIL", c.number,
                    c.title, result.detail.empty() ? "" : " -- ", result.detail.c_str());
        std::fflush(stdout);
        if (!result.pass) ++failures;
    }
    return failures;
}
