// Cross-relaxation resonance search.
//
// Two spin ensembles exchange energy efficiently when one system's transition
// frequency equals another's, so the observable of interest is the set of
// magnetic fields where an NV splitting crosses a P1 splitting (or a second,
// differently oriented NV splitting). This header provides the splitting
// evaluator, the bracketed root refinement, the full line-by-line field scan,
// the total-projection-change classification of each match, and the
// single-linkage clustering that groups matches into the experimentally
// resolved peak families.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "nvp1/eigen.hpp"
#include "nvp1/hamiltonian.hpp"
#include "nvp1/levels.hpp"
#include "nvp1/matrix.hpp"
#include "nvp1/spin_system.hpp"

namespace nvp1 {

// Transition endpoints named by state label.
struct LabelPair {
    StateLabel from;
    StateLabel to;
};

// One field value where an NV line and a partner line coincide.
//   b_star_mt   root of f(B) = ΔE_NV(B) − ΔE_partner(B)
//   delta_m     |Δm_S,NV + Δm_I,NV + Δm_S,partner + Δm_I,partner|
//   flagged     delta_m ≤ 2 (the near-conserving matches that dominate the
//               observed relaxation)
//   peak_id     empty until clustering assigns one
// The partner is usually a P1 center; for the NV–NV cross-relaxation search it
// is an off-axis NV, recorded in p1_line.system/orientation.
struct ResonanceMatch {
    TransitionLine nv_line;
    TransitionLine p1_line;
    double b_star_mt = 0.0;
    int delta_m = 0;
    bool flagged = false;
    Orientation orientation = Orientation::on_axis();  // partner orientation
    std::string peak_id;
};

// A group of matches closer than the clustering tolerance, reported with the
// arithmetic mean field and a degeneracy-weighted multiplicity (off-axis
// members count three times: three equivalent off-axis bond directions per
// on-axis one).
struct PeakCluster {
    std::string peak_id;
    std::vector<ResonanceMatch> members;
    double mean_b_mt = 0.0;
    int multiplicity = 0;
};

// Options shared by splitting() and match_resonance(). Electron-only variants
// drop the nuclear spin entirely (3×3 NV, 2×2 P1); their labels carry
// m_i = 0. Parameter overrides feed limit checks (e.g. zeroed hyperfine).
struct MatchOptions {
    bool nv_electron_only = false;
    bool p1_electron_only = false;
    std::optional<SpinSystemParams> nv_params;
    std::optional<SpinSystemParams> p1_params;
};

// Frequency λ_to(B) − λ_from(B) of one labeled transition at one field.
// Throws if either label is absent from the labeled spectrum.
inline double splitting(System system, const StateLabel& from, const StateLabel& to, double b_mt,
                        const Orientation& o, bool electron_only = false,
                        const std::optional<SpinSystemParams>& params = std::nullopt) {
    if (!(b_mt >= 0.0) || !std::isfinite(b_mt))
        throw std::invalid_argument("splitting: field must be finite and non-negative");
    const FieldVector local = rotate_field(b_mt, o);
    EigenSystem es;
    if (electron_only) {
        es = eigensolve(electronic_hamiltonian(system, local));
        label_states(es, es.size(), 1);
    } else if (system == System::NV) {
        es = eigensolve_labeled(nv_hamiltonian(local, params.value_or(SpinSystemParams::nv_defaults())), 3, 3);
    } else {
        es = eigensolve(p1_hamiltonian(local, params.value_or(SpinSystemParams::p1_defaults())));
        p1_manifold_labels(es);
    }
    std::optional<double> e_from, e_to;
    for (std::size_t k = 0; k < es.size(); ++k) {
        if (es.labels[k] == from) e_from = es.values[k];
        if (es.labels[k] == to) e_to = es.values[k];
    }
    if (!e_from || !e_to)
        throw std::invalid_argument("splitting: no state labeled " +
                                    label_to_string(e_from ? to : from) + " at this field");
    return *e_to - *e_from;
}

namespace detail {

// Bracketed root refinement: secant proposals accelerated inside a maintained
// sign-change bracket, falling back to bisection whenever the proposal leaves
// the bracket or the secant slope degenerates. Terminates when the residual
// and the bracket width are both below the requested resolution.
inline double refine_root(const std::function<double(double)>& f, double lo, double hi,
                          double f_tol = 1e-3, double b_tol = 1e-4) {
    double a = lo, b = hi;
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw std::logic_error("refine_root: bracket endpoints have the same sign");
    double x_prev = a, f_prev = fa, x_cur = b, f_cur = fb;
    for (int iter = 0; iter < 200; ++iter) {
        double x_next;
        const double df = f_cur - f_prev;
        if (df != 0.0) {
            x_next = x_cur - f_cur * (x_cur - x_prev) / df;
            if (!(x_next > a && x_next < b)) x_next = 0.5 * (a + b);
        } else {
            x_next = 0.5 * (a + b);
        }
        const double f_next = f(x_next);
        if (f_next == 0.0) return x_next;
        if (fa * f_next < 0.0) {
            b = x_next;
            fb = f_next;
        } else {
            a = x_next;
            fa = f_next;
        }
        x_prev = x_cur;
        f_prev = f_cur;
        x_cur = x_next;
        f_cur = f_next;
        if (std::abs(f_next) <= f_tol && (b - a) <= b_tol) return x_next;
    }
    throw std::runtime_error("refine_root: no convergence within 200 iterations");
}

// Total projection change |Δm_S + Δm_I (NV) + Δm_S + Δm_I (partner)|, rounded
// to the nearest integer (all label sums are half-integer differences).
inline int projection_change(const TransitionLine& nv, const TransitionLine& partner) {
    const double s = (nv.to_label.m_s - nv.from_label.m_s) + (nv.to_label.m_i - nv.from_label.m_i) +
                     (partner.to_label.m_s - partner.from_label.m_s) +
                     (partner.to_label.m_i - partner.from_label.m_i);
    return static_cast<int>(std::lround(std::abs(s)));
}

}  // namespace detail

// |Δm_S,NV + Δm_I,NV + Δm_S,partner + Δm_I,partner| for a recorded match.
inline int classify_delta_m(const ResonanceMatch& m) {
    return detail::projection_change(m.nv_line, m.p1_line);
}

// Matches whose total projection change is at most two are the ones the
// dipolar interaction can drive at appreciable rate.
inline bool delta_m_flag(int delta_m) { return delta_m <= 2; }

// Find the field in [bracket_lo, bracket_hi] where the (on-axis) NV transition
// nv_pair has the same frequency as the partner P1 transition p1_pair. Returns
// nothing when the bracket does not straddle a crossing; throws only if the
// refinement itself fails to converge.
inline std::optional<ResonanceMatch> match_resonance(const LabelPair& nv_pair, const LabelPair& p1_pair,
                                                     double bracket_lo_mt, double bracket_hi_mt,
                                                     const Orientation& p1_orientation,
                                                     const MatchOptions& opt = {}) {
    if (!(bracket_lo_mt < bracket_hi_mt))
        throw std::invalid_argument("match_resonance: bracket must satisfy lo < hi");
    const Orientation nv_axis = Orientation::on_axis();
    auto f = [&](double b) {
        return splitting(System::NV, nv_pair.from, nv_pair.to, b, nv_axis, opt.nv_electron_only, opt.nv_params) -
               splitting(System::P1, p1_pair.from, p1_pair.to, b, p1_orientation, opt.p1_electron_only,
                         opt.p1_params);
    };
    if (f(bracket_lo_mt) * f(bracket_hi_mt) > 0.0) return std::nullopt;
    const double b_star = detail::refine_root(f, bracket_lo_mt, bracket_hi_mt);

    ResonanceMatch m;
    m.b_star_mt = b_star;
    m.orientation = p1_orientation;
    m.nv_line.from_label = nv_pair.from;
    m.nv_line.to_label = nv_pair.to;
    m.nv_line.frequency_mhz =
        splitting(System::NV, nv_pair.from, nv_pair.to, b_star, nv_axis, opt.nv_electron_only, opt.nv_params);
    m.nv_line.b_mt = b_star;
    m.nv_line.system = System::NV;
    m.nv_line.orientation = nv_axis;
    m.p1_line.from_label = p1_pair.from;
    m.p1_line.to_label = p1_pair.to;
    m.p1_line.frequency_mhz = splitting(System::P1, p1_pair.from, p1_pair.to, b_star, p1_orientation,
                                        opt.p1_electron_only, opt.p1_params);
    m.p1_line.b_mt = b_star;
    m.p1_line.system = System::P1;
    m.p1_line.orientation = p1_orientation;
    m.delta_m = classify_delta_m(m);
    m.flagged = delta_m_flag(m.delta_m);
    return m;
}

// Configuration of the full field scan. The NV side is always the on-axis
// 0 → −1 family starting from one nuclear sublevel (optical pumping
// concentrates the population in (m_S = 0, m_I = +1), so that is the
// default); the P1 side covers all lower→upper-manifold lines, optionally
// restricted to the nuclear-projection-preserving ones.
struct ResonanceTableConfig {
    StateLabel nv_initial{0.0, 1.0};
    bool include_on_axis = true;
    bool include_off_axis = true;
    bool include_p1_nuclear_changing = true;
    double b_min_mt = 45.0;
    double b_max_mt = 57.0;
    double grid_step_mt = 0.005;
    std::optional<SpinSystemParams> nv_params;
    std::optional<SpinSystemParams> p1_params;

    void validate() const {
        if (!(b_min_mt >= 0.0) || !(b_max_mt > b_min_mt))
            throw std::invalid_argument("resonance_table: need 0 <= b_min < b_max");
        if (!(grid_step_mt > 0.0) || grid_step_mt > (b_max_mt - b_min_mt))
            throw std::invalid_argument("resonance_table: grid step must be in (0, b_max - b_min]");
        if (nv_initial.m_s != 0.0 || std::abs(nv_initial.m_i) > 1.0)
            throw std::invalid_argument("resonance_table: NV initial sublevel must be (0, m_I)");
    }
};

// Scan every configured NV line against every configured P1 line over the
// field window, bracket each sign change of the frequency difference on the
// grid, and refine each bracket. The step is chosen much finer than the
// narrowest line spacing, so no crossing can slip between grid points.
// Returns matches sorted by field.
inline std::vector<ResonanceMatch> resonance_table(const ResonanceTableConfig& cfg = {}) {
    cfg.validate();
    const auto n_steps = static_cast<std::size_t>(std::lround((cfg.b_max_mt - cfg.b_min_mt) / cfg.grid_step_mt));
    std::vector<double> grid(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i)
        grid[i] = cfg.b_min_mt + cfg.grid_step_mt * static_cast<double>(i);
    grid.back() = cfg.b_max_mt;

    struct Pair {
        LabelPair nv;
        LabelPair p1;
        Orientation orient;
        double d_prev = 0.0;  // frequency difference at the previous grid point
    };
    std::vector<Pair> pairs;
    std::vector<Orientation> orients;
    if (cfg.include_on_axis) orients.push_back(Orientation::on_axis());
    if (cfg.include_off_axis) orients.push_back(Orientation::off_axis());

    // Enumerate line identities once, at the window's low edge.
    const auto nv_lines0 =
        transition_table(System::NV, cfg.b_min_mt, Orientation::on_axis(), true, cfg.nv_params);
    for (const auto& o : orients) {
        const auto p1_lines0 = transition_table(System::P1, cfg.b_min_mt, o, false, cfg.p1_params);
        for (const auto& nv : nv_lines0) {
            if (!(nv.from_label == cfg.nv_initial) || nv.to_label.m_s != -1.0) continue;
            for (const auto& p1 : p1_lines0) {
                if (!cfg.include_p1_nuclear_changing && p1.from_label.m_i != p1.to_label.m_i) continue;
                pairs.push_back(Pair{{nv.from_label, nv.to_label}, {p1.from_label, p1.to_label}, o, 0.0});
            }
        }
    }

    MatchOptions opt;
    opt.nv_params = cfg.nv_params;
    opt.p1_params = cfg.p1_params;

    std::vector<ResonanceMatch> out;
    // One labeled eigensolve per system and grid point serves every pair; the
    // per-pair work is a sign check.
    auto line_freqs = [&](double b, const Orientation& o, System sys) {
        std::map<std::pair<std::pair<double, double>, std::pair<double, double>>, double> freq;
        const auto lines = transition_table(sys, b, o, sys == System::NV,
                                            sys == System::NV ? cfg.nv_params : cfg.p1_params);
        for (const auto& l : lines)
            freq[{{l.from_label.m_s, l.from_label.m_i}, {l.to_label.m_s, l.to_label.m_i}}] = l.frequency_mhz;
        return freq;
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double b = grid[i];
        const auto nv_freq = line_freqs(b, Orientation::on_axis(), System::NV);
        std::map<int, std::decay_t<decltype(nv_freq)>> p1_freq;
        for (const auto& o : orients) p1_freq[o.axis_index] = line_freqs(b, o, System::P1);
        for (auto& p : pairs) {
            const auto key_nv = std::make_pair(std::make_pair(p.nv.from.m_s, p.nv.from.m_i),
                                               std::make_pair(p.nv.to.m_s, p.nv.to.m_i));
            const auto key_p1 = std::make_pair(std::make_pair(p.p1.from.m_s, p.p1.from.m_i),
                                               std::make_pair(p.p1.to.m_s, p.p1.to.m_i));
            const double d = nv_freq.at(key_nv) - p1_freq.at(p.orient.axis_index).at(key_p1);
            if (i > 0 && p.d_prev != 0.0 && p.d_prev * d <= 0.0) {
                auto m = match_resonance(p.nv, p.p1, grid[i - 1], b, p.orient, opt);
                if (m) out.push_back(*m);
            }
            p.d_prev = d;
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ResonanceMatch& a, const ResonanceMatch& b) { return a.b_star_mt < b.b_star_mt; });
    return out;
}

// Cross-relaxation between differently oriented NV ensembles: the on-axis
// electron-only 0 → −1 frequency against each energy-ordered level gap of an
// off-axis electron-only NV. The off-axis states mix strongly, so the root
// search runs on energy-ordered gaps (stable in B); labels are attached only
// afterwards, at the root. One crossing exists near 59 mT.
inline std::vector<ResonanceMatch> nv_nv_matches(double b_lo_mt, double b_hi_mt, double scan_step_mt = 0.05) {
    if (!(b_lo_mt >= 0.0) || !(b_hi_mt > b_lo_mt) || !(scan_step_mt > 0.0))
        throw std::invalid_argument("nv_nv_matches: need 0 <= lo < hi and a positive step");
    const Orientation off = Orientation::off_axis();
    auto off_levels = [&](double b) {
        return eigensolve(electronic_hamiltonian(System::NV, rotate_field(b, off))).values;
    };
    auto on_gap = [&](double b) {
        const auto es = eigensolve(electronic_hamiltonian(System::NV, FieldVector{0.0, 0.0, b}));
        EigenSystem labeled = es;
        label_states(labeled, 3, 1);
        double e0 = 0.0, e1 = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            if (labeled.labels[k] == StateLabel{0.0, 0.0}) e0 = labeled.values[k];
            if (labeled.labels[k] == StateLabel{-1.0, 0.0}) e1 = labeled.values[k];
        }
        return e1 - e0;
    };
    std::vector<ResonanceMatch> out;
    for (const auto& gap : std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 2}, {0, 2}}) {
        auto f = [&](double b) {
            const auto w = off_levels(b);
            return on_gap(b) - (w[gap.second] - w[gap.first]);
        };
        double prev_b = b_lo_mt, prev_f = f(b_lo_mt);
        for (double b = b_lo_mt + scan_step_mt; b <= b_hi_mt + 1e-12; b += scan_step_mt) {
            const double cur_b = std::min(b, b_hi_mt);
            const double cur_f = f(cur_b);
            if (prev_f != 0.0 && prev_f * cur_f <= 0.0) {
                const double b_star = detail::refine_root(f, prev_b, cur_b);
                EigenSystem es = eigensolve(electronic_hamiltonian(System::NV, rotate_field(b_star, off)));
                label_states(es, 3, 1);
                ResonanceMatch m;
                m.b_star_mt = b_star;
                m.orientation = off;
                m.nv_line.from_label = StateLabel{0.0, 0.0};
                m.nv_line.to_label = StateLabel{-1.0, 0.0};
                m.nv_line.frequency_mhz = on_gap(b_star);
                m.nv_line.b_mt = b_star;
                m.nv_line.system = System::NV;
                m.nv_line.orientation = Orientation::on_axis();
                m.p1_line.from_label = es.labels[gap.first];
                m.p1_line.to_label = es.labels[gap.second];
                m.p1_line.frequency_mhz = es.values[gap.second] - es.values[gap.first];
                m.p1_line.b_mt = b_star;
                m.p1_line.system = System::NV;
                m.p1_line.orientation = off;
                m.delta_m = classify_delta_m(m);
                m.flagged = delta_m_flag(m.delta_m);
                out.push_back(m);
            }
            prev_b = cur_b;
            prev_f = cur_f;
        }
    }
    std::sort(out.begin(), out.end(),
              [](const ResonanceMatch& a, const ResonanceMatch& b) { return a.b_star_mt < b.b_star_mt; });
    return out;
}

// Result of clustering: peak letters A… are assigned only when the canonical
// nine families emerge; any other count keeps neutral identifiers plus a
// warning, so a changed physics input cannot masquerade as the standard
// peak set.
struct ClusterSet {
    std::vector<PeakCluster> clusters;
    bool lettered = false;
    std::string warning;
};

// Single-linkage clustering of matches along the field axis: sorted matches
// chain into one cluster while consecutive gaps stay within tol.
inline ClusterSet cluster_peaks(std::vector<ResonanceMatch> matches, double tol_mt = 0.15) {
    if (!(tol_mt >= 0.0)) throw std::invalid_argument("cluster_peaks: tolerance must be non-negative");
    ClusterSet cs;
    if (matches.empty()) {
        cs.warning = "no matches to cluster";
        return cs;
    }
    std::sort(matches.begin(), matches.end(),
              [](const ResonanceMatch& a, const ResonanceMatch& b) { return a.b_star_mt < b.b_star_mt; });
    cs.clusters.emplace_back();
    cs.clusters.back().members.push_back(matches.front());
    for (std::size_t i = 1; i < matches.size(); ++i) {
        if (matches[i].b_star_mt - cs.clusters.back().members.back().b_star_mt > tol_mt)
            cs.clusters.emplace_back();
        cs.clusters.back().members.push_back(matches[i]);
    }
    cs.lettered = cs.clusters.size() == 9;
    if (!cs.lettered) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "expected 9 peak families, found %zu; using generic identifiers",
                      cs.clusters.size());
        cs.warning = buf;
    }
    for (std::size_t c = 0; c < cs.clusters.size(); ++c) {
        auto& cl = cs.clusters[c];
        double sum = 0.0;
        cl.multiplicity = 0;
        if (cs.lettered) {
            cl.peak_id = std::string(1, static_cast<char>('A' + c));
        } else {
            char buf[32];
            std::snprintf(buf, sizeof buf, "peak-%02zu", c + 1);
            cl.peak_id = buf;
        }
        for (auto& m : cl.members) {
            sum += m.b_star_mt;
            cl.multiplicity += m.orientation.is_off_axis() ? 3 : 1;
            m.peak_id = cl.peak_id;
        }
        cl.mean_b_mt = sum / static_cast<double>(cl.members.size());
    }
    return cs;
}

}  // namespace nvp1
