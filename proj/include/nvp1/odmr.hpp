// ODMR lineshape synthesis and fitting: triple-Lorentzian dip spectra with
// the hyperfine spacing fixed by the Hamiltonian, contrast extraction, and
// Lorentzian peak-profile fits of contrast/width-versus-field sweeps.
//
// The fitting engine is a damped normal-equations least-squares loop with an
// analytic Jacobian: the parameter counts are tiny (six to a few dozen), the
// models are smooth, and determinism matters more than generality here.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nvp1/levels.hpp"

namespace nvp1 {

// A sampled fluorescence spectrum: strictly increasing frequency grid and a
// finite, positive, baseline-normalized signal.
struct OdmrSpectrum {
    std::vector<double> frequencies_mhz;
    std::vector<double> signal;

    void validate() const {
        if (frequencies_mhz.empty() || frequencies_mhz.size() != signal.size())
            throw std::invalid_argument("OdmrSpectrum: grid and signal must be nonempty and equal-sized");
        for (std::size_t i = 0; i < frequencies_mhz.size(); ++i) {
            if (!std::isfinite(frequencies_mhz[i]) || !std::isfinite(signal[i]) || signal[i] <= 0.0)
                throw std::invalid_argument("OdmrSpectrum: entries must be finite with positive signal");
            if (i > 0 && frequencies_mhz[i] <= frequencies_mhz[i - 1])
                throw std::invalid_argument("OdmrSpectrum: frequencies must be strictly increasing");
        }
    }
};

// Which electron branch of the NV the spectrum sits on.
enum class NvBranch { to_minus_one, to_plus_one };

// Mean adjacent spacing (MHz) of the three nuclear-conserving hyperfine
// components of the chosen NV branch at field B: the quantity that pins the
// inter-Lorentzian distance in a fixed-spacing fit.
inline double hyperfine_spacing(double b_mt, NvBranch branch) {
    if (!(b_mt >= 0.0) || b_mt > 110.0)
        throw std::invalid_argument("hyperfine_spacing: field must lie in [0, 110] mT");
    const double target_ms = branch == NvBranch::to_minus_one ? -1.0 : 1.0;
    std::vector<double> freqs;
    for (const TransitionLine& line : transition_table(System::NV, b_mt, Orientation::on_axis()))
        if (line.to_label.m_s == target_ms) freqs.push_back(line.frequency_mhz);
    if (freqs.size() != 3) throw std::logic_error("hyperfine_spacing: expected three branch lines");
    std::sort(freqs.begin(), freqs.end());
    return 0.5 * (freqs[2] - freqs[0]);
}

// Triple-Lorentzian dip model parameters. amplitudes[0], [1], [2] belong to
// the components at center - spacing, center, center + spacing.
struct TripleLorentzianParams {
    double center_mhz = 0.0;
    double spacing_mhz = 0.0;
    double width_mhz = 0.0;  // common FWHM
    std::array<double, 3> amplitudes{0.0, 0.0, 0.0};
    double baseline = 1.0;
};

inline double triple_lorentzian_model(const TripleLorentzianParams& p, double f_mhz) {
    const double q = 0.25 * p.width_mhz * p.width_mhz;  // (w/2)^2
    double s = p.baseline;
    for (int k = -1; k <= 1; ++k) {
        const double d = f_mhz - (p.center_mhz + k * p.spacing_mhz);
        s -= p.amplitudes[static_cast<std::size_t>(k + 1)] * q / (d * d + q);
    }
    return s;
}

// Evaluate the dip model on a grid. The signal dips below the baseline
// (resonant microwaves reduce fluorescence).
inline OdmrSpectrum synthesize_spectrum(const TripleLorentzianParams& p,
                                        const std::vector<double>& grid_mhz) {
    if (!(p.width_mhz > 0.0)) throw std::invalid_argument("synthesize_spectrum: width must be positive");
    if (grid_mhz.empty()) throw std::invalid_argument("synthesize_spectrum: empty grid");
    OdmrSpectrum s;
    s.frequencies_mhz = grid_mhz;
    s.signal.reserve(grid_mhz.size());
    for (const double f : grid_mhz) s.signal.push_back(triple_lorentzian_model(p, f));
    return s;
}

// 1 - min/max of the signal.
inline double contrast(const OdmrSpectrum& s) {
    if (s.signal.empty()) throw std::invalid_argument("contrast: empty spectrum");
    const auto [lo, hi] = std::minmax_element(s.signal.begin(), s.signal.end());
    if (!(*hi > 0.0)) throw std::invalid_argument("contrast: signal maximum must be positive");
    return 1.0 - *lo / *hi;
}

namespace detail {

// Damped normal-equations least squares: iterate solving
// (J'J + lambda I) delta = -J'r, multiplying the damping by ten whenever a
// step fails to reduce the squared residual and dividing by ten on success.
// Stops when the relative parameter step drops below rel_tol or after
// max_iters passes; divergence of the damping or a singular system is a
// diagnostic failure that still carries the last iterate.
struct LeastSquaresResult {
    std::vector<double> x;
    double sse = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string diagnostic;  // nonempty only on failure
};

// Gaussian elimination with partial pivoting; returns false when singular.
inline bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                        std::vector<double>& out) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) return false;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double m = a[r][col] / a[col][col];
            if (m == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= m * a[col][c];
            b[r] -= m * b[col];
        }
    }
    out.assign(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * out[c];
        out[i] = s / a[i][i];
    }
    return true;
}

inline LeastSquaresResult damped_least_squares(
    std::vector<double> x, const std::function<std::vector<double>(const std::vector<double>&)>& residual,
    const std::function<std::vector<std::vector<double>>(const std::vector<double>&)>& jacobian,
    int max_iters = 500, double rel_tol = 1e-8) {
    const std::size_t p = x.size();
    auto sum_sq = [](const std::vector<double>& r) {
        double s = 0.0;
        for (const double v : r) s += v * v;
        return s;
    };
    std::vector<double> r = residual(x);
    double sse = sum_sq(r);
    double lambda = 1e-3;

    LeastSquaresResult out;
    for (int iter = 1; iter <= max_iters; ++iter) {
        out.iterations = iter;
        const std::vector<std::vector<double>> jac = jacobian(x);
        std::vector<std::vector<double>> a(p, std::vector<double>(p, 0.0));
        std::vector<double> g(p, 0.0);
        for (std::size_t row = 0; row < jac.size(); ++row)
            for (std::size_t i = 0; i < p; ++i) {
                g[i] -= jac[row][i] * r[row];
                for (std::size_t j = i; j < p; ++j) a[i][j] += jac[row][i] * jac[row][j];
            }
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < i; ++j) a[i][j] = a[j][i];

        std::vector<std::vector<double>> damped = a;
        for (std::size_t i = 0; i < p; ++i) damped[i][i] += lambda;
        std::vector<double> delta;
        if (!solve_dense(std::move(damped), g, delta)) {
            out.x = std::move(x);
            out.sse = sse;
            out.diagnostic = "singular normal equations";
            return out;
        }
        std::vector<double> x_try = x;
        for (std::size_t i = 0; i < p; ++i) x_try[i] += delta[i];
        const std::vector<double> r_try = residual(x_try);
        const double sse_try = sum_sq(r_try);
        if (sse_try <= sse) {
            double rel = 0.0;
            for (std::size_t i = 0; i < p; ++i)
                rel = std::max(rel, std::abs(delta[i]) / (std::abs(x[i]) + 1e-12));
            x = std::move(x_try);
            r = r_try;
            sse = sse_try;
            lambda = std::max(lambda * 0.1, 1e-12);
            if (rel < rel_tol) {
                out.converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e15) {
                out.x = std::move(x);
                out.sse = sse;
                out.diagnostic = "damping diverged without a downhill step";
                return out;
            }
        }
    }
    // Exhausting the iteration budget is a defined stopping condition, not a
    // diagnostic failure.
    out.converged = true;
    out.x = std::move(x);
    out.sse = sse;
    return out;
}

}  // namespace detail

// Completed triple-Lorentzian fit: the model parameters plus the derived
// contrast of the fitted curve and fit diagnostics.
struct TripleLorentzianFit {
    TripleLorentzianParams params;
    double contrast = 0.0;       // 1 - min/max of the fitted model on the grid
    double residual_norm = 0.0;  // ||model - signal||_2
    int iterations = 0;
    bool converged = false;
    std::string warning;     // e.g. upward-excursion input was reflected
    std::string diagnostic;  // nonempty only on failure (carries last iterate)
};

struct TripleFitOptions {
    bool fix_spacing = true;              // spacing pinned to hyperfine_spacing(b_mt, branch)
    double b_mt = 51.2;                   // field used to pin (or initialize) the spacing
    NvBranch branch = NvBranch::to_minus_one;
    std::optional<TripleLorentzianParams> init;
};

// Fit the sum of three equal-width Lorentzian dips over a shared baseline.
// With fixed spacing, the inter-component distance comes from the NV
// Hamiltonian at the stated field and only {center, width, amplitudes,
// baseline} vary; otherwise spacing joins the parameter vector. Spectra with
// a dominantly upward excursion are reflected about their mean first (with a
// warning) so the dip convention holds.
inline TripleLorentzianFit fit_triple_lorentzian(const OdmrSpectrum& spectrum,
                                                 const TripleFitOptions& options = {}) {
    spectrum.validate();
    const std::size_t n = spectrum.signal.size();
    if (n < 7) throw std::invalid_argument("fit_triple_lorentzian: need at least 7 samples");

    TripleLorentzianFit fit;
    std::vector<double> y = spectrum.signal;
    const double y_max = *std::max_element(y.begin(), y.end());
    const double y_min = *std::min_element(y.begin(), y.end());
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(n);
    if (y_max - mean > mean - y_min) {
        for (double& v : y) v = 2.0 * mean - v;
        fit.warning = "dominant excursion was upward; signal reflected about its mean before fitting";
    }

    const double span = spectrum.frequencies_mhz.back() - spectrum.frequencies_mhz.front();
    TripleLorentzianParams p0;
    if (options.init) {
        p0 = *options.init;
    } else {
        p0.baseline = *std::max_element(y.begin(), y.end());
        const std::size_t dip =
            static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
        p0.center_mhz = spectrum.frequencies_mhz[dip];
        p0.width_mhz = span / 20.0;
        const double depth = 0.5 * (p0.baseline - *std::min_element(y.begin(), y.end()));
        p0.amplitudes = {depth, depth, depth};
        p0.spacing_mhz = hyperfine_spacing(options.b_mt, options.branch);
    }
    if (options.fix_spacing) p0.spacing_mhz = hyperfine_spacing(options.b_mt, options.branch);

    // Parameter vector: [center, width, a-, a0, a+, baseline (, spacing)].
    std::vector<double> x{p0.center_mhz, p0.width_mhz, p0.amplitudes[0],
                          p0.amplitudes[1], p0.amplitudes[2], p0.baseline};
    if (!options.fix_spacing) x.push_back(p0.spacing_mhz);
    const double fixed_spacing = p0.spacing_mhz;
    const std::size_t n_params = x.size();

    auto unpack = [&](const std::vector<double>& v) {
        TripleLorentzianParams p;
        p.center_mhz = v[0];
        p.width_mhz = v[1];
        p.amplitudes = {v[2], v[3], v[4]};
        p.baseline = v[5];
        p.spacing_mhz = options.fix_spacing ? fixed_spacing : v[6];
        return p;
    };
    auto residual = [&](const std::vector<double>& v) {
        const TripleLorentzianParams p = unpack(v);
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i)
            r[i] = triple_lorentzian_model(p, spectrum.frequencies_mhz[i]) - y[i];
        return r;
    };
    auto jacobian = [&](const std::vector<double>& v) {
        const TripleLorentzianParams p = unpack(v);
        const double w = p.width_mhz;
        const double q = 0.25 * w * w;
        std::vector<std::vector<double>> jac(n, std::vector<double>(n_params, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            const double f = spectrum.frequencies_mhz[i];
            double d_center = 0.0, d_width = 0.0, d_spacing = 0.0;
            for (int k = -1; k <= 1; ++k) {
                const double a = p.amplitudes[static_cast<std::size_t>(k + 1)];
                const double d = f - (p.center_mhz + k * p.spacing_mhz);
                const double denom = d * d + q;
                const double lor = q / denom;
                jac[i][static_cast<std::size_t>(k + 3)] = -lor;  // d/d a_k
                const double dl_dc = 2.0 * d * q / (denom * denom);   // dL/d center_k
                const double dl_dw = d * d * (0.5 * w) / (denom * denom);
                d_center -= a * dl_dc;
                d_spacing -= a * dl_dc * k;
                d_width -= a * dl_dw;
            }
            jac[i][0] = d_center;
            jac[i][1] = d_width;
            jac[i][5] = 1.0;  // baseline
            if (!options.fix_spacing) jac[i][6] = d_spacing;
        }
        return jac;
    };

    detail::LeastSquaresResult res = detail::damped_least_squares(std::move(x), residual, jacobian);
    fit.params = unpack(res.x);
    // A fitted width is only defined up to sign in the model; report it positive.
    fit.params.width_mhz = std::abs(fit.params.width_mhz);
    fit.residual_norm = std::sqrt(res.sse);
    fit.iterations = res.iterations;
    fit.converged = res.converged;
    fit.diagnostic = res.diagnostic;

    OdmrSpectrum model;
    model.frequencies_mhz = spectrum.frequencies_mhz;
    model.signal.reserve(n);
    for (const double f : spectrum.frequencies_mhz)
        model.signal.push_back(triple_lorentzian_model(fit.params, f));
    const auto [lo, hi] = std::minmax_element(model.signal.begin(), model.signal.end());
    fit.contrast = *hi > 0.0 ? 1.0 - *lo / *hi : 0.0;
    return fit;
}

// Sum-of-Lorentzian-peaks fit over field: per-peak center, FWHM, and
// amplitude above a shared baseline. Centers are initialized at the supplied
// values — typically calculated resonance-cluster means — and can be frozen
// there, mirroring the practice of pinning fitted maxima to computed fields.
struct PeakProfileFit {
    struct Peak {
        double center_b_mt = 0.0;
        double fwhm_mt = 0.0;
        double amplitude = 0.0;
    };
    std::vector<Peak> peaks;
    double baseline = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string diagnostic;
};

inline PeakProfileFit fit_peak_profile(const std::vector<std::pair<double, double>>& sweep,
                                       std::size_t n_peaks, const std::vector<double>& init_centers,
                                       bool freeze_centers = false) {
    if (n_peaks == 0) throw std::invalid_argument("fit_peak_profile: need at least one peak");
    if (init_centers.size() != n_peaks)
        throw std::invalid_argument("fit_peak_profile: one initial center per peak required");
    const std::size_t n = sweep.size();
    const std::size_t n_params = 1 + n_peaks * (freeze_centers ? 2 : 3);
    if (n < n_params) throw std::invalid_argument("fit_peak_profile: fewer samples than parameters");
    for (const auto& [b, v] : sweep)
        if (!std::isfinite(b) || !std::isfinite(v))
            throw std::invalid_argument("fit_peak_profile: samples must be finite");

    double b_lo = sweep.front().first, b_hi = sweep.front().first;
    double y_lo = sweep.front().second, y_hi = sweep.front().second;
    for (const auto& [b, v] : sweep) {
        b_lo = std::min(b_lo, b);
        b_hi = std::max(b_hi, b);
        y_lo = std::min(y_lo, v);
        y_hi = std::max(y_hi, v);
    }
    const double init_width =
        std::max((b_hi - b_lo) / (10.0 * static_cast<double>(n_peaks)), 1e-6);

    // Parameter vector: [baseline, (amplitude, fwhm (, center)) per peak].
    std::vector<double> x{y_lo};
    for (std::size_t p = 0; p < n_peaks; ++p) {
        x.push_back(y_hi - y_lo);
        x.push_back(init_width);
        if (!freeze_centers) x.push_back(init_centers[p]);
    }
    const std::size_t stride = freeze_centers ? 2 : 3;
    const std::size_t n_params_total = x.size();
    auto peak_of = [&](const std::vector<double>& v, std::size_t p) {
        PeakProfileFit::Peak pk;
        pk.amplitude = v[1 + p * stride];
        pk.fwhm_mt = v[2 + p * stride];
        pk.center_b_mt = freeze_centers ? init_centers[p] : v[3 + p * stride];
        return pk;
    };
    auto model_at = [&](const std::vector<double>& v, double b) {
        double s = v[0];
        for (std::size_t p = 0; p < n_peaks; ++p) {
            const PeakProfileFit::Peak pk = peak_of(v, p);
            const double q = 0.25 * pk.fwhm_mt * pk.fwhm_mt;
            const double d = b - pk.center_b_mt;
            s += pk.amplitude * q / (d * d + q);
        }
        return s;
    };
    auto residual = [&](const std::vector<double>& v) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = model_at(v, sweep[i].first) - sweep[i].second;
        return r;
    };
    auto jacobian = [&](const std::vector<double>& v) {
        std::vector<std::vector<double>> jac(n, std::vector<double>(n_params_total, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            jac[i][0] = 1.0;
            for (std::size_t p = 0; p < n_peaks; ++p) {
                const PeakProfileFit::Peak pk = peak_of(v, p);
                const double q = 0.25 * pk.fwhm_mt * pk.fwhm_mt;
                const double d = sweep[i].first - pk.center_b_mt;
                const double denom = d * d + q;
                jac[i][1 + p * stride] = q / denom;
                jac[i][2 + p * stride] = pk.amplitude * d * d * (0.5 * pk.fwhm_mt) / (denom * denom);
                if (!freeze_centers)
                    jac[i][3 + p * stride] = pk.amplitude * 2.0 * d * q / (denom * denom);
            }
        }
        return jac;
    };

    detail::LeastSquaresResult res = detail::damped_least_squares(std::move(x), residual, jacobian);
    PeakProfileFit fit;
    for (std::size_t p = 0; p < n_peaks; ++p) {
        PeakProfileFit::Peak pk = peak_of(res.x, p);
        pk.fwhm_mt = std::abs(pk.fwhm_mt);
        fit.peaks.push_back(pk);
    }
    fit.baseline = res.x[0];
    fit.residual_norm = std::sqrt(res.sse);
    fit.iterations = res.iterations;
    fit.converged = res.converged;
    fit.diagnostic = res.diagnostic;
    return fit;
}

}  // namespace nvp1
