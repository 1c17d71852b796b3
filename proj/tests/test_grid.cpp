#include "nearfield/grid.hpp"

#include "test_util.hpp"

#include <catch2/catch.hpp>

using namespace nearfield;
using namespace testutil;

namespace {
const UlaGeometry kGeom(11, 0.5, 0.06);

Surface2D make_surface(int ni, int nj, double fill = 0.0) {
    Surface2D s;
    s.theta = GridAxis{0.0, 1.0, ni};
    s.range = GridAxis{0.0, 1.0, nj};
    s.values.assign(static_cast<std::size_t>(ni) * nj, fill);
    return s;
}
}  // namespace

TEST_CASE("axis construction covers closed intervals inclusively", "[grid]") {
    const GridAxis theta = make_axis(0.0, pi, deg_to_rad(0.1));
    CHECK(theta.count == 1801);
    CHECK(theta.value(0) == 0.0);
    CHECK(theta.value(1800) == Approx(pi).epsilon(1e-12));

    const GridAxis r = make_axis(6.9318, 50.0, 0.1);
    CHECK(r.count == 431);
    CHECK(r.value(r.count - 1) <= 50.0 + 1e-12);

    CHECK_THROWS_AS(make_axis(1.0, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_axis(0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("default grid spans the full bearing range and Fresnel interval", "[grid]") {
    const SearchGrid g = SearchGrid::defaults(kGeom);
    CHECK(g.theta_min == 0.0);
    CHECK(g.theta_max == Approx(pi));
    CHECK(g.theta_step == Approx(deg_to_rad(0.1)));
    CHECK(g.range_min == Approx(kGeom.fresnel_lower()));
    CHECK(g.range_max == Approx(50.0));
    CHECK(g.range_step == Approx(0.1));
}

TEST_CASE("single interior maximum is found", "[grid]") {
    Surface2D s = make_surface(9, 7);
    s.at(4, 3) = 5.0;
    s.at(4, 4) = 2.0;
    const PeakSet peaks = find_n_peaks(s, 1);
    REQUIRE(peaks.peaks.size() == 1);
    CHECK_FALSE(peaks.deficient);
    CHECK(peaks.peaks[0].theta_index == 4);
    CHECK(peaks.peaks[0].range_index == 3);
    CHECK_FALSE(peaks.peaks[0].on_boundary);
}

TEST_CASE("monotone surface yields a flagged boundary maximum", "[grid]") {
    Surface2D s = make_surface(6, 5);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 5; ++j) s.at(i, j) = i + 0.1 * j;
    const PeakSet peaks = find_n_peaks(s, 1);
    REQUIRE(peaks.peaks.size() == 1);
    CHECK(peaks.peaks[0].theta_index == 5);
    CHECK(peaks.peaks[0].range_index == 4);
    CHECK(peaks.peaks[0].on_boundary);
}

TEST_CASE("plateaus contribute their lexicographically smallest cell", "[grid]") {
    Surface2D s = make_surface(7, 7, 1.0);
    for (int i = 2; i <= 4; ++i)
        for (int j = 2; j <= 4; ++j) s.at(i, j) = 3.0;
    const PeakSet peaks = find_n_peaks(s, 2);
    REQUIRE_FALSE(peaks.peaks.empty());
    CHECK(peaks.peaks[0].theta_index == 2);
    CHECK(peaks.peaks[0].range_index == 2);
    // The flat background contributes exactly one more peak at the origin.
    REQUIRE(peaks.peaks.size() == 2);
    CHECK(peaks.peaks[1].theta_index == 0);
    CHECK(peaks.peaks[1].range_index == 0);
}

TEST_CASE("requesting more peaks than exist sets the deficiency flag", "[grid]") {
    Surface2D s = make_surface(6, 6);
    s.at(2, 2) = 1.0;
    const PeakSet peaks = find_n_peaks(s, 3);
    CHECK(peaks.deficient);
    CHECK(peaks.peaks.size() < 3);
}

TEST_CASE("peaks are ordered by value with deterministic ties", "[grid]") {
    Surface2D s = make_surface(9, 9);
    s.at(2, 2) = 5.0;
    s.at(6, 6) = 7.0;
    s.at(2, 6) = 5.0;
    const PeakSet peaks = find_n_peaks(s, 3);
    REQUIRE(peaks.peaks.size() == 3);
    CHECK(peaks.peaks[0].value == 7.0);
    CHECK(peaks.peaks[1].theta_index == 2);
    CHECK(peaks.peaks[1].range_index == 2);   // tie broken by smaller range index
    CHECK(peaks.peaks[2].range_index == 6);
}

TEST_CASE("1d peak extraction works over a value vector", "[grid]") {
    const GridAxis axis{0.0, 0.5, 9};
    std::vector<double> values = {0, 1, 4, 1, 0, 2, 6, 2, 0};
    const PeakSet peaks = find_n_peaks_1d(values, axis, 2);
    REQUIRE(peaks.peaks.size() == 2);
    CHECK(peaks.peaks[0].theta == Approx(3.0));
    CHECK(peaks.peaks[1].theta == Approx(1.0));
}

TEST_CASE("quadratic refinement recovers an off-grid parabola vertex", "[grid]") {
    Surface2D s = make_surface(11, 11);
    const double t0 = 5.3, r0 = 4.8;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j)
            s.at(i, j) = 100.0 - (i - t0) * (i - t0) - 2.0 * (j - r0) * (j - r0);
    const PeakSet peaks = find_n_peaks(s, 1);
    REQUIRE(peaks.peaks.size() == 1);
    const auto [theta, range] = refine_peak(s, peaks.peaks[0]);
    CHECK(theta == Approx(t0).margin(1e-9));
    CHECK(range == Approx(r0).margin(1e-9));
}

TEST_CASE("objective scanner agrees with the composed public operations", "[grid]") {
    const ScenarioConfig config = make_scenario(kGeom, {{40.0, 12.0}, {75.0, 25.0}}, 10.0,
                                                64, 11, small_mc_spec());
    const SubspaceDecomposition d =
        eigendecompose(sample_covariance(generate_snapshots(config)), 2);
    ObjectiveScanner scanner(kGeom, d.noise_basis, 3);

    for (int trial = 0; trial < 20; ++trial) {
        const double theta = uniform(deg_to_rad(10.0), deg_to_rad(170.0));
        const double range = uniform(7.0, 49.0);

        const double fast = scanner.exact_objective(theta, range);
        const OmegaMatrix om =
            omega(transformation_matrix(kGeom, theta, range, 3), d.noise_basis);
        CHECK(fast == Approx(spectrum_objective(om).value).epsilon(1e-12));

        const double fast_approx = scanner.approx_objective(theta);
        const OmegaMatrix om_approx =
            omega(approx_transformation_matrix(kGeom, theta, 3), d.noise_basis,
                  OmegaKind::approx);
        CHECK(fast_approx == Approx(spectrum_objective(om_approx).value).epsilon(1e-12));

        const CouplingVector c = synthesize_mc(config.mc_model, theta);
        const double fast_music = scanner.known_mc_objective(theta, range, c);
        const VectorXcd at =
            transformation_matrix(kGeom, theta, range, 3) * c.coeffs;
        CHECK(fast_music == Approx(music_value(at, d.noise_basis).value).epsilon(1e-12));
    }
    CHECK(scanner.evaluations() == 60);
    CHECK(scanner.tm_seconds() > 0.0);
}
