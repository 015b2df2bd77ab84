// ODMR tests: hyperfine spacing against an independent eigensolver freeze,
// closed-form spectrum synthesis and contrast, round-trip fits (noiseless and
// under seeded 1% noise), FWHM and translation semantics of the fitted model,
// and peak-profile fits over field sweeps.
#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "nvp1/odmr.hpp"

using namespace nvp1;
using Catch::Approx;

namespace {

std::vector<double> grid(double a, double b, std::size_t n) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
}

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

TripleLorentzianParams demo_params() {
    TripleLorentzianParams p;
    p.center_mhz = 1435.131847478755;  // middle nuclear-conserving line at 51.2 mT
    p.spacing_mhz = hyperfine_spacing(51.2, NvBranch::to_minus_one);
    p.width_mhz = 0.8;
    p.amplitudes = {0.040, 0.050, 0.045};
    p.baseline = 1.0;
    return p;
}

}  // namespace

TEST_CASE("hyperfine spacing matches the eigensolver freeze") {
    // Mean adjacent spacing of the three nuclear-conserving lines; reference
    // values from an independent dense eigensolver.
    CHECK(hyperfine_spacing(51.2, NvBranch::to_minus_one) == Approx(2.14085945470219).margin(1e-9));
    CHECK(hyperfine_spacing(51.2, NvBranch::to_plus_one) == Approx(2.14253290726356).margin(1e-9));
    CHECK(hyperfine_spacing(30.0, NvBranch::to_minus_one) == Approx(2.14098782122983).margin(1e-9));
    CHECK(hyperfine_spacing(30.0, NvBranch::to_plus_one) == Approx(2.14179398787792).margin(1e-9));
    CHECK(hyperfine_spacing(70.0, NvBranch::to_minus_one) == Approx(2.14078788137238).margin(1e-9));
    CHECK(hyperfine_spacing(70.0, NvBranch::to_plus_one) == Approx(2.14399353596400).margin(1e-9));
    // Close to the axial hyperfine constant magnitude, 2.14.
    CHECK(hyperfine_spacing(51.2, NvBranch::to_minus_one) == Approx(2.14).margin(0.01));
    // At zero field the operation still returns the computed mean.
    CHECK(hyperfine_spacing(0.0, NvBranch::to_minus_one) == Approx(2.14254256344952).margin(1e-6));
    CHECK(hyperfine_spacing(0.0, NvBranch::to_plus_one) == Approx(2.13999999999987).margin(1e-6));
    CHECK_THROWS_AS(hyperfine_spacing(-0.1, NvBranch::to_minus_one), std::invalid_argument);
    CHECK_THROWS_AS(hyperfine_spacing(110.5, NvBranch::to_minus_one), std::invalid_argument);
}

TEST_CASE("hyperfine spacing varies smoothly with field") {
    for (const NvBranch branch : {NvBranch::to_minus_one, NvBranch::to_plus_one}) {
        double prev = hyperfine_spacing(5.0, branch);
        double worst = 0.0;
        for (double b = 5.1; b < 95.05; b += 0.1) {
            const double cur = hyperfine_spacing(b, branch);
            worst = std::max(worst, std::abs(cur - prev));
            prev = cur;
        }
        // Independent freeze saw at most 2.3e-4 per 0.1 mT; 0.01 leaves slack
        // while still catching any labeling glitch.
        CHECK(worst <= 0.01);
    }
}

TEST_CASE("synthesized spectra follow the closed-form dip model") {
    SECTION("zero amplitudes give a flat baseline with zero contrast") {
        TripleLorentzianParams p = demo_params();
        p.amplitudes = {0.0, 0.0, 0.0};
        const OdmrSpectrum s = synthesize_spectrum(p, grid(1425.0, 1445.0, 501));
        for (const double v : s.signal) CHECK(v == Approx(1.0).margin(1e-15));
        CHECK(contrast(s) == Approx(0.0).margin(1e-15));
    }
    SECTION("single middle component dips to baseline minus amplitude") {
        TripleLorentzianParams p = demo_params();
        p.amplitudes = {0.0, 0.05, 0.0};
        // Grid hits the center exactly; far-spaced ends recover the baseline.
        std::vector<double> g = grid(p.center_mhz - 500.0, p.center_mhz + 500.0, 2001);
        const OdmrSpectrum s = synthesize_spectrum(p, g);
        const double lo = *std::min_element(s.signal.begin(), s.signal.end());
        CHECK(lo == Approx(p.baseline - 0.05).margin(1e-12));
        CHECK(contrast(s) == Approx(0.05 / p.baseline).epsilon(1e-6));
    }
    SECTION("well-separated components give three resolved equal dips") {
        TripleLorentzianParams p;
        p.center_mhz = 1000.0;
        p.spacing_mhz = 50.0;  // spacing >> width
        p.width_mhz = 1.0;
        p.amplitudes = {0.1, 0.1, 0.1};
        p.baseline = 1.0;
        const std::vector<double> g = grid(900.0, 1100.0, 8001);
        const OdmrSpectrum s = synthesize_spectrum(p, g);
        for (const double c : {950.0, 1000.0, 1050.0}) {
            // Depth at each center: own amplitude plus tiny cross-talk tails.
            const std::size_t i = static_cast<std::size_t>(
                std::min_element(g.begin(), g.end(),
                                 [&](double a, double b) { return std::abs(a - c) < std::abs(b - c); }) -
                g.begin());
            CHECK(s.signal[i] == Approx(0.9).margin(1e-4));
        }
    }
    SECTION("guards") {
        TripleLorentzianParams p = demo_params();
        p.width_mhz = 0.0;
        CHECK_THROWS_AS(synthesize_spectrum(p, grid(1.0, 2.0, 5)), std::invalid_argument);
        CHECK_THROWS_AS(synthesize_spectrum(demo_params(), {}), std::invalid_argument);
    }
}

TEST_CASE("contrast is one minus min over max") {
    OdmrSpectrum s;
    s.frequencies_mhz = {1.0, 2.0, 3.0};
    s.signal = {1.0, 0.8, 1.0};
    CHECK(contrast(s) == Approx(0.2).margin(1e-15));
    SECTION("scale invariance") {
        OdmrSpectrum scaled = s;
        for (double& v : scaled.signal) v *= 3.7;
        CHECK(contrast(scaled) == Approx(contrast(s)).margin(1e-14));
    }
    SECTION("empty rejected") {
        OdmrSpectrum empty;
        CHECK_THROWS_AS(contrast(empty), std::invalid_argument);
    }
}

TEST_CASE("spectrum validation rejects malformed inputs") {
    OdmrSpectrum s;
    s.frequencies_mhz = {1.0, 2.0};
    s.signal = {1.0, 1.0};
    s.validate();

    OdmrSpectrum mismatched = s;
    mismatched.signal.push_back(1.0);
    CHECK_THROWS_AS(mismatched.validate(), std::invalid_argument);

    OdmrSpectrum unsorted = s;
    unsorted.frequencies_mhz = {2.0, 1.0};
    CHECK_THROWS_AS(unsorted.validate(), std::invalid_argument);

    OdmrSpectrum negative = s;
    negative.signal[0] = -0.1;
    CHECK_THROWS_AS(negative.validate(), std::invalid_argument);

    OdmrSpectrum nan = s;
    nan.signal[0] = std::nan("");
    CHECK_THROWS_AS(nan.validate(), std::invalid_argument);
}

TEST_CASE("noiseless triple-Lorentzian fit recovers the parameters") {
    const TripleLorentzianParams truth = demo_params();
    const OdmrSpectrum s = synthesize_spectrum(truth, grid(1425.0, 1445.0, 1001));
    TripleFitOptions opt;
    opt.b_mt = 51.2;

    const TripleLorentzianFit fit = fit_triple_lorentzian(s, opt);
    REQUIRE(fit.converged);
    CHECK(fit.diagnostic.empty());
    CHECK(fit.warning.empty());
    CHECK(fit.params.center_mhz == Approx(truth.center_mhz).epsilon(1e-9));
    CHECK(fit.params.width_mhz == Approx(truth.width_mhz).epsilon(1e-6));
    CHECK(fit.params.baseline == Approx(truth.baseline).epsilon(1e-6));
    CHECK(fit.params.spacing_mhz == Approx(truth.spacing_mhz).margin(1e-12));  // pinned
    for (std::size_t k = 0; k < 3; ++k)
        CHECK(fit.params.amplitudes[k] == Approx(truth.amplitudes[k]).epsilon(1e-6));
    // Fitted model reproduces the input signal.
    CHECK(fit.residual_norm <= 1e-8 * l2(s.signal));
    // Contrast of the fitted model equals the contrast of the input.
    CHECK(fit.contrast == Approx(contrast(s)).margin(1e-9));
}

TEST_CASE("free-spacing fit recovers a non-hyperfine spacing") {
    TripleLorentzianParams truth = demo_params();
    truth.spacing_mhz = 2.5;
    const OdmrSpectrum s = synthesize_spectrum(truth, grid(1425.0, 1445.0, 1001));
    TripleFitOptions opt;
    opt.fix_spacing = false;
    opt.b_mt = 51.2;  // spacing initializer only
    const TripleLorentzianFit fit = fit_triple_lorentzian(s, opt);
    REQUIRE(fit.converged);
    CHECK(fit.params.spacing_mhz == Approx(2.5).epsilon(1e-6));
    CHECK(fit.params.width_mhz == Approx(truth.width_mhz).epsilon(1e-6));
    CHECK(fit.residual_norm <= 1e-8 * l2(s.signal));
}

TEST_CASE("an exact initial guess converges immediately") {
    const TripleLorentzianParams truth = demo_params();
    const OdmrSpectrum s = synthesize_spectrum(truth, grid(1425.0, 1445.0, 1001));
    TripleFitOptions opt;
    opt.b_mt = 51.2;
    opt.init = truth;
    const TripleLorentzianFit fit = fit_triple_lorentzian(s, opt);
    REQUIRE(fit.converged);
    CHECK(fit.iterations <= 5);
    CHECK(fit.params.center_mhz == Approx(truth.center_mhz).margin(1e-9));
}

TEST_CASE("fit under seeded one-percent noise stays within five percent") {
    TripleLorentzianParams truth = demo_params();
    truth.width_mhz = 1.0;
    truth.amplitudes = {0.050, 0.060, 0.055};
    const std::vector<double> g = grid(1425.0, 1445.0, 1001);
    const OdmrSpectrum clean = synthesize_spectrum(truth, g);
    const double width0 = truth.width_mhz;
    const double contrast0 = contrast(clean);
    TripleFitOptions opt;
    opt.b_mt = 51.2;

    std::vector<double> width_err, contrast_err;
    for (unsigned seed = 0; seed < 20; ++seed) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> noise(-0.01, 0.01);
        OdmrSpectrum noisy = clean;
        for (double& v : noisy.signal) v += noise(rng);
        const TripleLorentzianFit fit = fit_triple_lorentzian(noisy, opt);
        REQUIRE(fit.converged);
        width_err.push_back(std::abs(fit.params.width_mhz - width0) / width0);
        contrast_err.push_back(std::abs(fit.contrast - contrast0) / contrast0);
    }
    std::sort(width_err.begin(), width_err.end());
    std::sort(contrast_err.begin(), contrast_err.end());
    CHECK(width_err[width_err.size() / 2] <= 0.05);
    CHECK(contrast_err[contrast_err.size() / 2] <= 0.05);
}

TEST_CASE("flat spectrum yields a zero-amplitude fit or a diagnostic") {
    OdmrSpectrum flat;
    flat.frequencies_mhz = grid(1425.0, 1445.0, 101);
    flat.signal.assign(101, 1.0);
    const TripleLorentzianFit fit = fit_triple_lorentzian(flat, TripleFitOptions{});
    if (fit.diagnostic.empty()) {
        CHECK(fit.contrast == Approx(0.0).margin(1e-9));
        for (const double a : fit.params.amplitudes) CHECK(std::abs(a) <= 1e-9);
    } else {
        CHECK_FALSE(fit.converged);
    }
}

TEST_CASE("upward-excursion input is reflected with a warning") {
    const TripleLorentzianParams truth = demo_params();
    const OdmrSpectrum dips = synthesize_spectrum(truth, grid(1425.0, 1445.0, 1001));
    OdmrSpectrum peaks = dips;
    for (double& v : peaks.signal) v = 2.0 - v;  // excursion now upward
    TripleFitOptions opt;
    opt.b_mt = 51.2;
    const TripleLorentzianFit fit = fit_triple_lorentzian(peaks, opt);
    REQUIRE(fit.converged);
    CHECK_FALSE(fit.warning.empty());
    // Reflection preserves center and width; only the baseline shifts.
    CHECK(fit.params.center_mhz == Approx(truth.center_mhz).epsilon(1e-9));
    CHECK(fit.params.width_mhz == Approx(truth.width_mhz).epsilon(1e-6));
}

TEST_CASE("reported width is the FWHM of each fitted component") {
    TripleLorentzianParams truth = demo_params();
    truth.amplitudes = {0.0, 0.05, 0.0};  // isolate the middle component
    const OdmrSpectrum s = synthesize_spectrum(truth, grid(1425.0, 1445.0, 1001));
    TripleFitOptions opt;
    opt.b_mt = 51.2;
    const TripleLorentzianFit fit = fit_triple_lorentzian(s, opt);
    REQUIRE(fit.converged);
    const TripleLorentzianParams& p = fit.params;
    const double depth = p.baseline - triple_lorentzian_model(p, p.center_mhz);
    const double at_half_left = triple_lorentzian_model(p, p.center_mhz - 0.5 * p.width_mhz);
    const double at_half_right = triple_lorentzian_model(p, p.center_mhz + 0.5 * p.width_mhz);
    CHECK(p.baseline - at_half_left == Approx(0.5 * depth).epsilon(1e-6));
    CHECK(p.baseline - at_half_right == Approx(0.5 * depth).epsilon(1e-6));
}

TEST_CASE("fit is equivariant under frequency translation") {
    const TripleLorentzianParams truth = demo_params();
    const double shift = 7.3;
    const OdmrSpectrum s1 = synthesize_spectrum(truth, grid(1425.0, 1445.0, 1001));
    TripleLorentzianParams moved = truth;
    moved.center_mhz += shift;
    const OdmrSpectrum s2 = synthesize_spectrum(moved, grid(1425.0 + shift, 1445.0 + shift, 1001));
    TripleFitOptions opt;
    opt.b_mt = 51.2;
    const TripleLorentzianFit f1 = fit_triple_lorentzian(s1, opt);
    const TripleLorentzianFit f2 = fit_triple_lorentzian(s2, opt);
    REQUIRE(f1.converged);
    REQUIRE(f2.converged);
    CHECK(f2.params.center_mhz - f1.params.center_mhz == Approx(shift).margin(1e-6));
}

TEST_CASE("single-peak profile fit recovers a synthetic peak exactly") {
    const double c0 = 51.17, w0 = 0.35, a0 = 0.08, b0 = 0.01;
    std::vector<std::pair<double, double>> sweep;
    for (double b = 49.0; b <= 53.5 + 1e-9; b += 0.005) {
        const double q = 0.25 * w0 * w0;
        const double d = b - c0;
        sweep.emplace_back(b, b0 + a0 * q / (d * d + q));
    }
    const PeakProfileFit fit = fit_peak_profile(sweep, 1, {51.0});
    REQUIRE(fit.converged);
    REQUIRE(fit.peaks.size() == 1);
    CHECK(fit.peaks[0].center_b_mt == Approx(c0).epsilon(1e-8));
    CHECK(fit.peaks[0].fwhm_mt == Approx(w0).epsilon(1e-6));
    CHECK(fit.peaks[0].amplitude == Approx(a0).epsilon(1e-6));
    CHECK(fit.baseline == Approx(b0).margin(1e-8));
    CHECK(fit.residual_norm <= 1e-8);
}

TEST_CASE("frozen-center profile fit competes with the free fit") {
    // Peaks planted at the calculated resonance-cluster means.
    const std::vector<double> centers{49.162071038, 49.647567745, 50.270980405, 51.170063641,
                                      52.053188707, 52.705985701, 53.229155135};
    const std::vector<double> amps{0.05, 0.07, 0.09, 0.11, 0.09, 0.07, 0.05};
    const double w0 = 0.3, b0 = 0.02;
    std::vector<std::pair<double, double>> sweep;
    for (double b = 48.5; b <= 54.0 + 1e-9; b += 0.005) {
        double y = b0;
        for (std::size_t p = 0; p < centers.size(); ++p) {
            const double q = 0.25 * w0 * w0;
            const double d = b - centers[p];
            y += amps[p] * q / (d * d + q);
        }
        sweep.emplace_back(b, y);
    }
    const PeakProfileFit frozen = fit_peak_profile(sweep, centers.size(), centers, true);
    const PeakProfileFit free_fit = fit_peak_profile(sweep, centers.size(), centers, false);
    REQUIRE(frozen.converged);
    REQUIRE(free_fit.converged);
    // Centers sit exactly at the truth, so freezing them cannot cost more
    // than a sliver of residual.
    CHECK(frozen.residual_norm <= 1.1 * free_fit.residual_norm + 1e-9);
    for (std::size_t p = 0; p < centers.size(); ++p) {
        CHECK(frozen.peaks[p].center_b_mt == centers[p]);  // pinned verbatim
        CHECK(frozen.peaks[p].fwhm_mt == Approx(w0).epsilon(1e-5));
        CHECK(frozen.peaks[p].amplitude == Approx(amps[p]).epsilon(1e-5));
    }
}

TEST_CASE("peak-profile fit rejects malformed requests") {
    std::vector<std::pair<double, double>> sweep;
    for (double b = 49.0; b <= 53.0 + 1e-9; b += 0.1) sweep.emplace_back(b, 0.01);
    CHECK_THROWS_AS(fit_peak_profile(sweep, 0, {}), std::invalid_argument);
    CHECK_THROWS_AS(fit_peak_profile(sweep, 2, {50.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_peak_profile({{50.0, 0.1}}, 1, {50.0}), std::invalid_argument);
    std::vector<std::pair<double, double>> bad = sweep;
    bad[3].second = std::nan("");
    CHECK_THROWS_AS(fit_peak_profile(bad, 1, {50.0}), std::invalid_argument);
}
