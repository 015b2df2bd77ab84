// Command-line front end for the NV–P1 cross-relaxation toolkit.
//
// Subcommands:
//   levels      eigenvalue sweep of one spin system over a field range
//   resonances  NV/P1 (or NV/NV) transition-frequency crossings and clusters
//   dynamics    coupled two-spin evolution of the P1 polarization in time
//   spectrum    synthesize a triple-Lorentzian ODMR trace
//   fit         fit a triple-Lorentzian model to one measured trace
//   sweep-fit   fit many traces taken at different fields, one row per field
//   thermal     equilibrium electron polarization at a field and temperature
//
// Every file produced or consumed is the CSV dialect of io.hpp: '#'-prefixed
// "key = value" parameter lines, a header row, then numeric rows printed with
// enough digits to round-trip exactly. Repeated runs with the same arguments
// produce byte-identical files. Options may come from an INI file via
// --config; explicit command-line flags win, and unknown keys are rejected.
//
// Exit status is 0 on success and 1 on any failure, including a fit that ran
// out of iterations without converging.

#include <clocale>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nvp1/dynamics.hpp"
#include "nvp1/io.hpp"
#include "nvp1/levels.hpp"
#include "nvp1/odmr.hpp"
#include "nvp1/resonance.hpp"

namespace {

using nvp1::CsvTable;
using nvp1::format_g17;

// ---------------------------------------------------------------------------
// small shared helpers
// ---------------------------------------------------------------------------

// Write to the named file, or to stdout when the name is "-".
void emit_table(const CsvTable& table, const std::string& path) {
    if (path == "-") {
        nvp1::write_csv(std::cout, table);
        return;
    }
    nvp1::write_csv_file(path, table);
}

// Column name for one labeled eigenvalue, e.g. "E_ms+1_mi-1". Electron-only
// sweeps have no nuclear quantum number, so the suffix is dropped.
std::string level_column(const nvp1::StateLabel& label, bool electron_only) {
    char buf[48];
    if (electron_only)
        std::snprintf(buf, sizeof buf, "E_ms%+g", label.m_s);
    else
        std::snprintf(buf, sizeof buf, "E_ms%+g_mi%+g", label.m_s, label.m_i);
    return buf;
}

nvp1::System parse_system(const std::string& name) {
    if (name == "nv") return nvp1::System::NV;
    if (name == "p1") return nvp1::System::P1;
    throw std::invalid_argument("unknown system '" + name + "' (expected nv or p1)");
}

nvp1::Orientation parse_orientation(const std::string& name) {
    if (name == "on") return nvp1::Orientation::on_axis();
    if (name == "off") return nvp1::Orientation::off_axis();
    throw std::invalid_argument("unknown orientation '" + name + "' (expected on or off)");
}

nvp1::NvBranch parse_branch(const std::string& name) {
    if (name == "lower") return nvp1::NvBranch::to_minus_one;
    if (name == "upper") return nvp1::NvBranch::to_plus_one;
    throw std::invalid_argument("unknown branch '" + name + "' (expected lower or upper)");
}

// Frequencies of the three nuclear-conserving NV lines of one branch at one
// field, sorted ascending; the middle one is the natural default line center
// for synthetic spectra.
std::vector<double> branch_line_frequencies(double b_mt, nvp1::NvBranch branch) {
    const double target_ms = branch == nvp1::NvBranch::to_minus_one ? -1.0 : 1.0;
    std::vector<double> freqs;
    for (const auto& line : nvp1::transition_table(nvp1::System::NV, b_mt, nvp1::Orientation::on_axis()))
        if (line.to_label.m_s == target_ms) freqs.push_back(line.frequency_mhz);
    if (freqs.size() != 3)
        throw std::runtime_error("expected three nuclear-conserving NV lines at this field");
    std::sort(freqs.begin(), freqs.end());
    return freqs;
}

// Non-throwing parameter lookup in a CSV header; bare comment lines have an
// empty key and never match.
std::optional<std::string> lookup_parameter(const CsvTable& table, const std::string& key) {
    for (const auto& [k, v] : table.parameters)
        if (k == key && !k.empty()) return v;
    return std::nullopt;
}

// Pull a named column (by header name if present, by position otherwise)
// out of a row-major table.
std::vector<double> extract_column(const CsvTable& table, const std::string& name, std::size_t fallback) {
    std::size_t index = fallback;
    for (std::size_t j = 0; j < table.columns.size(); ++j)
        if (table.columns[j] == name) index = j;
    if (index >= table.columns.size())
        throw std::runtime_error("input table has no column '" + name + "' and too few columns");
    std::vector<double> column;
    column.reserve(table.rows.size());
    for (const auto& row : table.rows) column.push_back(row[index]);
    return column;
}

// ---------------------------------------------------------------------------
// levels
// ---------------------------------------------------------------------------

struct LevelsArgs {
    std::string system = "nv";
    std::string orientation = "on";
    double b_min = 0.0;
    double b_max = 110.0;
    std::size_t points = 1101;
    bool electron_only = false;
    std::string output = "levels.csv";
};

int run_levels(const LevelsArgs& a) {
    const auto sweep = nvp1::level_sweep(parse_system(a.system), a.b_min, a.b_max, a.points,
                                         parse_orientation(a.orientation), a.electron_only);
    CsvTable table;
    table.parameters = {{"system", a.system},
                        {"orientation", a.orientation},
                        {"b_min_mt", format_g17(a.b_min)},
                        {"b_max_mt", format_g17(a.b_max)},
                        {"points", std::to_string(a.points)},
                        {"electron_only", a.electron_only ? "true" : "false"}};
    table.columns.push_back("B_mT");
    for (const auto& label : sweep.labels)
        table.columns.push_back(level_column(label, a.electron_only));
    for (std::size_t i = 0; i < sweep.b_mt.size(); ++i) {
        std::vector<double> row;
        row.reserve(1 + sweep.energies[i].size());
        row.push_back(sweep.b_mt[i]);
        for (double e : sweep.energies[i]) row.push_back(e);
        table.rows.push_back(std::move(row));
    }
    emit_table(table, a.output);
    return 0;
}

// ---------------------------------------------------------------------------
// resonances
// ---------------------------------------------------------------------------

struct ResonancesArgs {
    double b_min = 45.0;
    double b_max = 57.0;
    double grid_step = 0.005;
    bool grid_step_set = false;
    double cluster_tol = 0.15;
    bool on_axis_only = false;
    bool off_axis_only = false;
    bool no_nuclear_changing = false;
    bool electron_only = false;
    bool nv_vs_nv = false;
    std::vector<double> window = {55.0, 65.0};
    std::string output = "resonances.csv";
};

CsvTable match_table(const std::vector<nvp1::ResonanceMatch>& matches,
                     const std::map<std::string, int>& peak_index) {
    CsvTable table;
    table.columns = {"B_star_mT",      "peak",           "off_axis",     "nv_from_ms", "nv_from_mi",
                     "nv_to_ms",       "nv_to_mi",       "partner_from_ms", "partner_from_mi",
                     "partner_to_ms",  "partner_to_mi",  "delta_m",      "flagged"};
    for (const auto& m : matches) {
        const auto it = peak_index.find(m.peak_id);
        table.rows.push_back({m.b_star_mt,
                              it == peak_index.end() ? 0.0 : static_cast<double>(it->second),
                              m.orientation.is_off_axis() ? 1.0 : 0.0,
                              m.nv_line.from_label.m_s, m.nv_line.from_label.m_i,
                              m.nv_line.to_label.m_s, m.nv_line.to_label.m_i,
                              m.p1_line.from_label.m_s, m.p1_line.from_label.m_i,
                              m.p1_line.to_label.m_s, m.p1_line.to_label.m_i,
                              static_cast<double>(m.delta_m), m.flagged ? 1.0 : 0.0});
    }
    return table;
}

int run_resonances(const ResonancesArgs& a) {
    if (a.electron_only) {
        // Single crossing of the bare electron transitions; nuclear structure off.
        nvp1::MatchOptions opt;
        opt.nv_electron_only = true;
        opt.p1_electron_only = true;
        const auto m = nvp1::match_resonance({{0.0, 0.0}, {-1.0, 0.0}}, {{-0.5, 0.0}, {0.5, 0.0}},
                                             a.b_min, a.b_max, nvp1::Orientation::on_axis(), opt);
        if (!m) throw std::runtime_error("no electron-only crossing inside the requested field range");
        std::printf("electron-only crossing at B = %.6f mT (transition frequency %.6f MHz)\n",
                    m->b_star_mt, m->nv_line.frequency_mhz);
        CsvTable table = match_table({*m}, {});
        table.parameters = {{"mode", "electron_only"},
                            {"b_min_mt", format_g17(a.b_min)},
                            {"b_max_mt", format_g17(a.b_max)}};
        emit_table(table, a.output);
        return 0;
    }

    if (a.nv_vs_nv) {
        if (a.window.size() != 2 || !(a.window[0] < a.window[1]))
            throw std::invalid_argument("--window needs two fields LO HI with LO < HI");
        const double step = a.grid_step_set ? a.grid_step : 0.05;
        const auto matches = nvp1::nv_nv_matches(a.window[0], a.window[1], step);
        for (const auto& m : matches)
            std::printf("NV(on-axis) / NV(off-axis) crossing at B = %.6f mT\n", m.b_star_mt);
        if (matches.empty()) std::printf("no NV/NV crossing inside [%g, %g] mT\n", a.window[0], a.window[1]);
        CsvTable table = match_table(matches, {});
        table.parameters = {{"mode", "nv_vs_nv"},
                            {"b_min_mt", format_g17(a.window[0])},
                            {"b_max_mt", format_g17(a.window[1])},
                            {"grid_step_mt", format_g17(step)}};
        emit_table(table, a.output);
        return 0;
    }

    if (a.on_axis_only && a.off_axis_only)
        throw std::invalid_argument("--on-axis-only and --off-axis-only exclude each other");

    nvp1::ResonanceTableConfig cfg;
    cfg.b_min_mt = a.b_min;
    cfg.b_max_mt = a.b_max;
    if (a.grid_step_set) cfg.grid_step_mt = a.grid_step;
    cfg.include_on_axis = !a.off_axis_only;
    cfg.include_off_axis = !a.on_axis_only;
    cfg.include_p1_nuclear_changing = !a.no_nuclear_changing;
    auto matches = nvp1::resonance_table(cfg);
    const auto clusters = nvp1::cluster_peaks(matches, a.cluster_tol);
    if (!clusters.warning.empty()) std::fprintf(stderr, "warning: %s\n", clusters.warning.c_str());

    // Matches come back unlabeled; take the labeled copies from the clusters,
    // which cover every match exactly once.
    std::vector<nvp1::ResonanceMatch> labeled;
    std::map<std::string, int> peak_index;
    for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
        peak_index[clusters.clusters[c].peak_id] = static_cast<int>(c) + 1;
        for (const auto& m : clusters.clusters[c].members) labeled.push_back(m);
    }
    std::sort(labeled.begin(), labeled.end(),
              [](const auto& x, const auto& y) { return x.b_star_mt < y.b_star_mt; });

    std::printf("%zu matches in %zu clusters between %g and %g mT\n", labeled.size(),
                clusters.clusters.size(), a.b_min, a.b_max);
    for (const auto& cluster : clusters.clusters) {
        int flagged = 0;
        for (const auto& m : cluster.members) flagged += m.flagged ? 1 : 0;
        std::printf("peak %-8s mean %9.6f mT   members %2zu   multiplicity %2d   flagged %2d\n",
                    cluster.peak_id.c_str(), cluster.mean_b_mt, cluster.members.size(),
                    cluster.multiplicity, flagged);
    }

    CsvTable table = match_table(labeled, peak_index);
    table.parameters = {{"mode", "table"},
                        {"b_min_mt", format_g17(a.b_min)},
                        {"b_max_mt", format_g17(a.b_max)},
                        {"grid_step_mt", format_g17(cfg.grid_step_mt)},
                        {"cluster_tol_mt", format_g17(a.cluster_tol)},
                        {"clusters", std::to_string(clusters.clusters.size())}};
    emit_table(table, a.output);
    return 0;
}

// ---------------------------------------------------------------------------
// dynamics
// ---------------------------------------------------------------------------

struct DynamicsArgs {
    // Default field: the crossing of the strongest on-axis NV and P1 lines,
    // where the flip-flop transfer is fastest.
    double b = 51.204281891168606;
    double coupling = 0.1;
    double rabi = 0.0;
    double cutoff = 1.0;
    double t_max = 200.0;
    std::size_t points = 2000;
    std::string direction = "x";
    std::string output = "dynamics.csv";
    std::string matrix_dump;
};

int run_dynamics(const DynamicsArgs& a) {
    double dx = 0, dy = 0, dz = 0;
    if (a.direction == "x")
        dx = 1;
    else if (a.direction == "y")
        dy = 1;
    else
        dz = 1;
    const auto geometry = nvp1::DipoleGeometry::along(dx, dy, dz, a.coupling);

    nvp1::DriveParams drive;
    if (a.rabi > 0.0) {
        drive.omega_mhz = nvp1::nv_drive_frequency_mhz(a.b);
        drive.rabi1_mhz = a.rabi;
        drive.rabi2_mhz = a.rabi;
    }

    const nvp1::Matrix h_eff = nvp1::rotating_frame(a.b, geometry, drive, a.cutoff);

    if (!a.matrix_dump.empty()) {
        CsvTable grid;
        grid.parameters = {{"b_mt", format_g17(a.b)},
                           {"coupling_mhz", format_g17(a.coupling)},
                           {"rabi_mhz", format_g17(a.rabi)},
                           {"cutoff_mhz", format_g17(a.cutoff)},
                           {"", "entries are |H_eff| magnitudes in MHz"}};
        grid.columns = {"row", "col0", "col1", "col2", "col3", "col4", "col5"};
        for (std::size_t i = 0; i < 6; ++i) {
            std::vector<double> row{static_cast<double>(i)};
            for (std::size_t j = 0; j < 6; ++j) row.push_back(std::abs(h_eff(i, j)));
            grid.rows.push_back(std::move(row));
        }
        emit_table(grid, a.matrix_dump);
    }

    if (a.points < 2) throw std::invalid_argument("dynamics: need at least two sample points");
    if (!(a.t_max > 0.0)) throw std::invalid_argument("dynamics: t-max must be positive");
    std::vector<double> times(a.points);
    for (std::size_t i = 0; i < a.points; ++i)
        times[i] = a.t_max * static_cast<double>(i) / static_cast<double>(a.points - 1);

    const auto result = nvp1::evolve(nvp1::initial_state(), h_eff, times);

    CsvTable table;
    table.parameters = {{"b_mt", format_g17(a.b)},
                        {"coupling_mhz", format_g17(a.coupling)},
                        {"direction", a.direction},
                        {"rabi_mhz", format_g17(a.rabi)},
                        {"cutoff_mhz", format_g17(a.cutoff)},
                        {"t_max_us", format_g17(a.t_max)},
                        {"points", std::to_string(a.points)}};
    if (drive.drive_on())
        table.parameters.insert(table.parameters.begin() + 4,
                                {"drive_mhz", format_g17(drive.omega_mhz)});
    table.columns = {"time_us", "p1_polarization"};
    for (std::size_t i = 0; i < times.size(); ++i)
        table.rows.push_back({result.times_us[i], result.p1_polarization[i]});
    emit_table(table, a.output);
    return 0;
}

// ---------------------------------------------------------------------------
// spectrum
// ---------------------------------------------------------------------------

struct SpectrumArgs {
    double b = 51.2;
    std::string branch = "lower";
    double center = 0.0;
    bool center_set = false;
    double width = 0.8;
    std::vector<double> amplitudes = {0.040, 0.050, 0.045};
    double baseline = 1.0;
    double f_min = 0.0;
    bool f_min_set = false;
    double f_max = 0.0;
    bool f_max_set = false;
    std::size_t points = 1001;
    double noise = 0.0;
    unsigned seed = 1;
    std::string output = "spectrum.csv";
};

int run_spectrum(const SpectrumArgs& a) {
    const auto branch = parse_branch(a.branch);
    if (a.amplitudes.size() != 3)
        throw std::invalid_argument("--amplitudes needs exactly three dip depths");

    nvp1::TripleLorentzianParams p;
    p.center_mhz = a.center_set ? a.center : branch_line_frequencies(a.b, branch)[1];
    p.spacing_mhz = nvp1::hyperfine_spacing(a.b, branch);
    p.width_mhz = a.width;
    p.amplitudes = {a.amplitudes[0], a.amplitudes[1], a.amplitudes[2]};
    p.baseline = a.baseline;

    const double f_lo = a.f_min_set ? a.f_min : p.center_mhz - 10.0;
    const double f_hi = a.f_max_set ? a.f_max : p.center_mhz + 10.0;
    if (!(f_lo < f_hi)) throw std::invalid_argument("spectrum: need f-min < f-max");
    if (a.points < 2) throw std::invalid_argument("spectrum: need at least two sample points");
    std::vector<double> grid(a.points);
    for (std::size_t i = 0; i < a.points; ++i)
        grid[i] = f_lo + (f_hi - f_lo) * static_cast<double>(i) / static_cast<double>(a.points - 1);

    auto spectrum = nvp1::synthesize_spectrum(p, grid);
    if (a.noise > 0.0) {
        std::mt19937 rng(a.seed);
        std::uniform_real_distribution<double> jitter(-a.noise, a.noise);
        for (double& s : spectrum.signal) s += jitter(rng);
    }

    CsvTable table;
    table.parameters = {{"b_mt", format_g17(a.b)},
                        {"branch", a.branch},
                        {"center_mhz", format_g17(p.center_mhz)},
                        {"spacing_mhz", format_g17(p.spacing_mhz)},
                        {"width_mhz", format_g17(p.width_mhz)},
                        {"amplitude_low", format_g17(p.amplitudes[0])},
                        {"amplitude_mid", format_g17(p.amplitudes[1])},
                        {"amplitude_high", format_g17(p.amplitudes[2])},
                        {"baseline", format_g17(p.baseline)},
                        {"noise", format_g17(a.noise)}};
    if (a.noise > 0.0) table.parameters.push_back({"seed", std::to_string(a.seed)});
    table.columns = {"frequency_MHz", "signal"};
    for (std::size_t i = 0; i < grid.size(); ++i)
        table.rows.push_back({spectrum.frequencies_mhz[i], spectrum.signal[i]});
    emit_table(table, a.output);
    return 0;
}

// ---------------------------------------------------------------------------
// fit / sweep-fit
// ---------------------------------------------------------------------------

struct FitArgs {
    std::string input;
    double b = 0.0;
    bool b_set = false;
    std::string branch = "lower";
    bool free_spacing = false;
    std::string output;
};

// Fit one trace file. The field used for the hyperfine-spacing constraint
// comes from --b when given, else from a "# b_mt = ..." parameter line in the
// file itself, else defaults to 51.2 mT.
nvp1::TripleLorentzianFit fit_one(const std::string& path, const FitArgs& a, double* b_used) {
    const CsvTable table = nvp1::read_csv_file(path);
    nvp1::OdmrSpectrum spectrum;
    spectrum.frequencies_mhz = extract_column(table, "frequency_MHz", 0);
    spectrum.signal = extract_column(table, "signal", 1);

    nvp1::TripleFitOptions options;
    options.branch = parse_branch(a.branch);
    options.fix_spacing = !a.free_spacing;
    if (a.b_set) {
        options.b_mt = a.b;
    } else if (const auto b_param = lookup_parameter(table, "b_mt")) {
        options.b_mt = nvp1::parse_double(*b_param, path + ": parameter b_mt");
    }
    if (b_used) *b_used = options.b_mt;
    return nvp1::fit_triple_lorentzian(spectrum, options);
}

CsvTable fit_row_table() {
    CsvTable table;
    table.columns = {"B_mT",     "center_MHz",    "spacing_MHz", "width_MHz",
                     "contrast", "residual_norm", "iterations",  "converged"};
    return table;
}

std::vector<double> fit_row(double b, const nvp1::TripleLorentzianFit& fit) {
    return {b,
            fit.params.center_mhz,
            fit.params.spacing_mhz,
            fit.params.width_mhz,
            fit.contrast,
            fit.residual_norm,
            static_cast<double>(fit.iterations),
            fit.converged ? 1.0 : 0.0};
}

int run_fit(const FitArgs& a) {
    double b_used = 51.2;
    const auto fit = fit_one(a.input, a, &b_used);
    if (!fit.warning.empty()) std::fprintf(stderr, "warning: %s\n", fit.warning.c_str());

    std::printf("field      = %.4f mT\n", b_used);
    std::printf("center     = %.9g MHz\n", fit.params.center_mhz);
    std::printf("spacing    = %.9g MHz\n", fit.params.spacing_mhz);
    std::printf("width      = %.9g MHz\n", fit.params.width_mhz);
    std::printf("amplitudes = %.9g %.9g %.9g\n", fit.params.amplitudes[0], fit.params.amplitudes[1],
                fit.params.amplitudes[2]);
    std::printf("baseline   = %.9g\n", fit.params.baseline);
    std::printf("contrast   = %.9g\n", fit.contrast);
    std::printf("residual   = %.9g after %d iterations\n", fit.residual_norm, fit.iterations);
    std::printf("converged  = %s\n", fit.converged ? "yes" : "no");

    if (!a.output.empty()) {
        CsvTable table = fit_row_table();
        table.parameters = {{"input", a.input}, {"branch", a.branch}};
        table.rows.push_back(fit_row(b_used, fit));
        emit_table(table, a.output);
    }
    if (!fit.converged) {
        std::fprintf(stderr, "error: fit did not converge: %s\n",
                     fit.diagnostic.empty() ? "iteration limit reached" : fit.diagnostic.c_str());
        return 1;
    }
    return 0;
}

struct SweepFitArgs {
    std::vector<std::string> inputs;
    std::string branch = "lower";
    bool free_spacing = false;
    std::string output = "sweep_fit.csv";
};

int run_sweep_fit(const SweepFitArgs& a) {
    FitArgs shared;
    shared.branch = a.branch;
    shared.free_spacing = a.free_spacing;

    CsvTable table = fit_row_table();
    table.parameters = {{"branch", a.branch}, {"traces", std::to_string(a.inputs.size())}};
    int failures = 0;
    for (const auto& path : a.inputs) {
        try {
            const CsvTable probe = nvp1::read_csv_file(path);
            if (!lookup_parameter(probe, "b_mt"))
                throw std::runtime_error(path + ": no '# b_mt = ...' parameter line; "
                                                "cannot place this trace on the field axis");
            double b_used = 0.0;
            const auto fit = fit_one(path, shared, &b_used);
            if (!fit.converged)
                throw std::runtime_error(path + ": fit did not converge" +
                                         (fit.diagnostic.empty() ? "" : " (" + fit.diagnostic + ")"));
            table.rows.push_back(fit_row(b_used, fit));
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            ++failures;
        }
    }
    std::sort(table.rows.begin(), table.rows.end(),
              [](const auto& x, const auto& y) { return x[0] < y[0]; });
    emit_table(table, a.output);
    std::printf("fitted %zu of %zu traces\n", table.rows.size(), a.inputs.size());
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// thermal
// ---------------------------------------------------------------------------

struct ThermalArgs {
    double b = 51.2;
    double temperature = 295.0;
    std::string output;
};

int run_thermal(const ThermalArgs& a) {
    const double polarization = nvp1::thermal_polarization(a.b, a.temperature);
    std::printf("%s\n", format_g17(polarization).c_str());
    if (!a.output.empty()) {
        CsvTable table;
        table.columns = {"B_mT", "temperature_K", "polarization"};
        table.rows.push_back({a.b, a.temperature, polarization});
        emit_table(table, a.output);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");  // keep numeric formatting independent of the host

    CLI::App app{"NV-P1 cross-relaxation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI file (explicit flags win)");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_version_flag("--version", "nvp1 1.0.0");

    int rc = 0;

    LevelsArgs levels;
    auto* cmd_levels = app.add_subcommand("levels", "sweep eigenvalues of one spin system over a field range");
    cmd_levels->add_option("--system", levels.system, "spin system: nv or p1")
        ->check(CLI::IsMember({"nv", "p1"}))
        ->capture_default_str();
    cmd_levels->add_option("--orientation", levels.orientation, "defect axis relative to the field: on or off")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    cmd_levels->add_option("--b-min", levels.b_min, "first field in mT")->capture_default_str();
    cmd_levels->add_option("--b-max", levels.b_max, "last field in mT")->capture_default_str();
    cmd_levels->add_option("--points", levels.points, "number of field samples")->capture_default_str();
    cmd_levels->add_flag("--electron-only", levels.electron_only, "drop the nuclear spin (3x3 NV, 2x2 P1)");
    cmd_levels->add_option("-o,--output", levels.output, "output CSV ('-' for stdout)")->capture_default_str();
    cmd_levels->callback([&] { rc = run_levels(levels); });

    ResonancesArgs res;
    auto* cmd_res = app.add_subcommand("resonances", "find fields where NV and partner transitions coincide");
    cmd_res->add_option("--b-min", res.b_min, "scan start in mT")->capture_default_str();
    cmd_res->add_option("--b-max", res.b_max, "scan end in mT")->capture_default_str();
    auto* step_opt =
        cmd_res->add_option("--grid-step", res.grid_step, "bracketing grid step in mT")->capture_default_str();
    cmd_res->add_option("--cluster-tol", res.cluster_tol, "single-linkage clustering tolerance in mT")
        ->capture_default_str();
    cmd_res->add_flag("--on-axis-only", res.on_axis_only, "only P1 centers aligned with the NV axis");
    cmd_res->add_flag("--off-axis-only", res.off_axis_only, "only P1 centers along the other bond directions");
    cmd_res->add_flag("--no-nuclear-changing", res.no_nuclear_changing,
                      "drop P1 lines that change the nitrogen projection");
    cmd_res->add_flag("--electron-only", res.electron_only,
                      "single crossing of the bare electron transitions, no hyperfine structure");
    cmd_res->add_flag("--nv-vs-nv", res.nv_vs_nv, "match the on-axis NV against off-axis NV centers instead of P1");
    cmd_res->add_option("--window", res.window, "field window LO HI in mT for --nv-vs-nv")->expected(2);
    cmd_res->add_option("-o,--output", res.output, "output CSV ('-' for stdout)")->capture_default_str();
    cmd_res->callback([&] {
        res.grid_step_set = step_opt->count() > 0;
        rc = run_resonances(res);
    });

    DynamicsArgs dyn;
    auto* cmd_dyn = app.add_subcommand("dynamics", "evolve the coupled NV-P1 pair and record the P1 polarization");
    cmd_dyn->add_option("--b", dyn.b, "static field in mT")->capture_default_str();
    cmd_dyn->add_option("--coupling", dyn.coupling, "dipolar coupling scale in MHz")->capture_default_str();
    cmd_dyn->add_option("--rabi", dyn.rabi, "drive amplitude in MHz on both spins; 0 disables the drive")
        ->capture_default_str();
    cmd_dyn->add_option("--cutoff", dyn.cutoff, "energy-conservation cutoff in MHz for kept couplings")
        ->capture_default_str();
    cmd_dyn->add_option("--t-max", dyn.t_max, "final time in microseconds")->capture_default_str();
    cmd_dyn->add_option("--points", dyn.points, "number of time samples")->capture_default_str();
    cmd_dyn->add_option("--direction", dyn.direction, "inter-spin axis: x, y or z")
        ->check(CLI::IsMember({"x", "y", "z"}))
        ->capture_default_str();
    cmd_dyn->add_option("--matrix-dump", dyn.matrix_dump, "also write the 6x6 |H_eff| magnitude grid to this CSV");
    cmd_dyn->add_option("-o,--output", dyn.output, "output CSV ('-' for stdout)")->capture_default_str();
    cmd_dyn->callback([&] { rc = run_dynamics(dyn); });

    SpectrumArgs spec;
    auto* cmd_spec = app.add_subcommand("spectrum", "synthesize a triple-Lorentzian dip spectrum");
    cmd_spec->add_option("--b", spec.b, "field in mT; sets the hyperfine spacing and default center")
        ->capture_default_str();
    cmd_spec->add_option("--branch", spec.branch, "NV transition family: lower or upper")
        ->check(CLI::IsMember({"lower", "upper"}))
        ->capture_default_str();
    auto* center_opt = cmd_spec->add_option("--center", spec.center,
                                            "middle dip position in MHz (default: middle line at --b)");
    cmd_spec->add_option("--width", spec.width, "common FWHM in MHz")->capture_default_str();
    cmd_spec->add_option("--amplitudes", spec.amplitudes, "three dip depths, low to high frequency")->expected(3);
    cmd_spec->add_option("--baseline", spec.baseline, "off-resonance signal level")->capture_default_str();
    auto* fmin_opt = cmd_spec->add_option("--f-min", spec.f_min, "grid start in MHz (default: center - 10)");
    auto* fmax_opt = cmd_spec->add_option("--f-max", spec.f_max, "grid end in MHz (default: center + 10)");
    cmd_spec->add_option("--points", spec.points, "number of frequency samples")->capture_default_str();
    cmd_spec->add_option("--noise", spec.noise, "uniform noise half-width added to the signal")
        ->capture_default_str();
    cmd_spec->add_option("--seed", spec.seed, "noise generator seed")->capture_default_str();
    cmd_spec->add_option("-o,--output", spec.output, "output CSV ('-' for stdout)")->capture_default_str();
    cmd_spec->callback([&] {
        spec.center_set = center_opt->count() > 0;
        spec.f_min_set = fmin_opt->count() > 0;
        spec.f_max_set = fmax_opt->count() > 0;
        rc = run_spectrum(spec);
    });

    FitArgs fit;
    auto* cmd_fit = app.add_subcommand("fit", "fit a triple-Lorentzian model to one spectrum CSV");
    cmd_fit->add_option("-i,--input", fit.input, "spectrum CSV with frequency_MHz and signal columns")
        ->required();
    auto* fit_b = cmd_fit->add_option("--b", fit.b, "field in mT for the spacing constraint "
                                                    "(default: '# b_mt' from the input, else 51.2)");
    cmd_fit->add_option("--branch", fit.branch, "NV transition family: lower or upper")
        ->check(CLI::IsMember({"lower", "upper"}))
        ->capture_default_str();
    cmd_fit->add_flag("--free-spacing", fit.free_spacing, "fit the dip spacing instead of fixing it from --b");
    cmd_fit->add_option("-o,--output", fit.output, "also write a one-row result CSV");
    cmd_fit->callback([&] {
        fit.b_set = fit_b->count() > 0;
        rc = run_fit(fit);
    });

    SweepFitArgs sweep;
    auto* cmd_sweep = app.add_subcommand("sweep-fit", "fit many spectra and tabulate results by field");
    cmd_sweep->add_option("inputs", sweep.inputs, "spectrum CSVs, each carrying a '# b_mt = ...' line")
        ->required()
        ->expected(-1);
    cmd_sweep->add_option("--branch", sweep.branch, "NV transition family: lower or upper")
        ->check(CLI::IsMember({"lower", "upper"}))
        ->capture_default_str();
    cmd_sweep->add_flag("--free-spacing", sweep.free_spacing, "fit the dip spacing instead of fixing it per field");
    cmd_sweep->add_option("-o,--output", sweep.output, "output CSV ('-' for stdout)")->capture_default_str();
    cmd_sweep->callback([&] { rc = run_sweep_fit(sweep); });

    ThermalArgs thermal;
    auto* cmd_thermal = app.add_subcommand("thermal", "equilibrium electron polarization difference");
    cmd_thermal->add_option("--b", thermal.b, "field in mT")->capture_default_str();
    cmd_thermal->add_option("--temperature", thermal.temperature, "temperature in kelvin")->capture_default_str();
    cmd_thermal->add_option("-o,--output", thermal.output, "also write a one-row result CSV");
    cmd_thermal->callback([&] { rc = run_thermal(thermal); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
