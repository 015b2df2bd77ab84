// Transition tables and level-diagram sweeps.
//
// A TransitionLine is one labeled |from⟩ → |to⟩ splitting at a given field.
// NV lines connect m_S = 0 to m_S = ±1 sublevels (hyperfine-resolved); P1
// lines connect the two electron manifolds. Level sweeps track state identity
// across the field range by eigenvector-overlap continuity, which keeps labels
// stable through (anti-)crossings such as the GSLAC.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nvp1/eigen.hpp"
#include "nvp1/hamiltonian.hpp"
#include "nvp1/matrix.hpp"
#include "nvp1/spin_system.hpp"

namespace nvp1 {

struct TransitionLine {
    StateLabel from_label;
    StateLabel to_label;
    double frequency_mhz = 0.0;  // λ_to − λ_from, > 0 for reported lines
    double b_mt = 0.0;
    System system = System::NV;
    Orientation orientation = Orientation::on_axis();
};

// P1 eigenstate labeling used for line enumeration. Off-axis, the transverse
// field mixes the electron projections strongly enough that joint
// dominant-component labels flip the electron tag between states of the same
// trio; the projections are labels rather than good quantum numbers there. The
// convention: the lower three states by energy form the m_S = −1/2 manifold,
// the upper three the +1/2 manifold, and within each manifold nuclear tags are
// assigned by marginal weight (largest first, each tag used once). On axis
// this reproduces the plain dominant-component labels exactly.
inline void p1_manifold_labels(EigenSystem& es) {
    if (es.size() != 6) throw std::invalid_argument("p1_manifold_labels: expected a 6-state system");
    es.labels.assign(6, StateLabel{});
    es.dominant_weight.assign(6, 0.0);
    for (int manifold = 0; manifold < 2; ++manifold) {
        const std::size_t base = static_cast<std::size_t>(manifold) * 3;  // states base..base+2
        const double m_s = (manifold == 0) ? -0.5 : 0.5;
        // marginal[k][j]: weight of nuclear projection m_I = 1 - j in state base+k,
        // summed over both electron components.
        double marginal[3][3];
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t j = 0; j < 3; ++j)
                marginal[k][j] = std::norm(es.vectors(j, base + k)) + std::norm(es.vectors(3 + j, base + k));
        bool state_done[3] = {false, false, false};
        bool tag_done[3] = {false, false, false};
        for (int pick = 0; pick < 3; ++pick) {  // greedy: heaviest unclaimed pairing first
            double best = -1.0;
            std::size_t bk = 0, bj = 0;
            for (std::size_t k = 0; k < 3; ++k)
                for (std::size_t j = 0; j < 3; ++j)
                    if (!state_done[k] && !tag_done[j] && marginal[k][j] > best) {
                        best = marginal[k][j];
                        bk = k;
                        bj = j;
                    }
            state_done[bk] = tag_done[bj] = true;
            es.labels[base + bk] = StateLabel{m_s, 1.0 - static_cast<double>(bj)};
            es.dominant_weight[base + bk] = best;
        }
    }
}

// All MW-addressable lines of one system at one field.
//   NV: m_S = 0 → ±1 lines, restricted to Δm_I = 0 unless nv_full_set is true
//       (then all nine m_I pairings per electron branch).
//   P1: all nine m_S = −1/2 → +1/2 lines.
// The field is the lab magnitude; the orientation maps it into the defect
// frame.
inline std::vector<TransitionLine> transition_table(System system, double b_mt, const Orientation& o,
                                                    bool nv_full_set = false,
                                                    std::optional<SpinSystemParams> params = std::nullopt) {
    if (b_mt < 0.0) throw std::invalid_argument("transition_table: field must be non-negative");
    std::vector<TransitionLine> out;
    const FieldVector local = rotate_field(b_mt, o);
    if (system == System::NV) {
        const SpinSystemParams p = params.value_or(SpinSystemParams::nv_defaults());
        EigenSystem es = eigensolve_labeled(nv_hamiltonian(local, p), 3, 3);
        auto energy = [&](double ms, double mi) -> double {
            for (std::size_t k = 0; k < es.size(); ++k)
                if (es.labels[k] == StateLabel{ms, mi}) return es.values[k];
            throw std::logic_error("transition_table: NV label missing");
        };
        for (double ms_to : {-1.0, 1.0})
            for (double mi_from : {1.0, 0.0, -1.0})
                for (double mi_to : {1.0, 0.0, -1.0}) {
                    if (!nv_full_set && mi_from != mi_to) continue;
                    TransitionLine l;
                    l.from_label = StateLabel{0.0, mi_from};
                    l.to_label = StateLabel{ms_to, mi_to};
                    l.frequency_mhz = energy(ms_to, mi_to) - energy(0.0, mi_from);
                    l.b_mt = b_mt;
                    l.system = System::NV;
                    l.orientation = o;
                    out.push_back(l);
                }
    } else {
        const SpinSystemParams p = params.value_or(SpinSystemParams::p1_defaults());
        EigenSystem es = eigensolve(p1_hamiltonian(local, p));
        p1_manifold_labels(es);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 3; j < 6; ++j) {
                TransitionLine l;
                l.from_label = es.labels[i];
                l.to_label = es.labels[j];
                l.frequency_mhz = es.values[j] - es.values[i];
                l.b_mt = b_mt;
                l.system = System::P1;
                l.orientation = o;
                out.push_back(l);
            }
    }
    return out;
}

// One row of a level sweep: eigenvalues at this field, in the fixed state
// order established at the first field point (continuity-threaded).
struct LevelSweep {
    std::vector<double> b_mt;                      // field grid
    std::vector<std::vector<double>> energies;     // [field][state], MHz
    std::vector<StateLabel> labels;                // per tracked state (from the first point)
    System system = System::NV;
    bool electron_only = false;
};

// Sweep the spectrum over a field range with adiabatic label tracking: at each
// step, states are matched to the previous step's states by largest
// eigenvector overlap (greedy over descending overlap, each state claimed
// once), so a column of the output follows one physical level through
// crossings instead of staying in energy order.
inline LevelSweep level_sweep(System system, double b_min_mt, double b_max_mt, std::size_t steps,
                              const Orientation& o, bool electron_only = false,
                              std::optional<SpinSystemParams> params = std::nullopt) {
    if (steps < 2) throw std::invalid_argument("level_sweep: need at least 2 steps");
    if (b_max_mt < b_min_mt) throw std::invalid_argument("level_sweep: empty field range");

    auto hamiltonian_at = [&](double b) -> Matrix {
        const FieldVector local = rotate_field(b, o);
        if (electron_only) return electronic_hamiltonian(system, local);
        if (system == System::NV) return nv_hamiltonian(local, params.value_or(SpinSystemParams::nv_defaults()));
        return p1_hamiltonian(local, params.value_or(SpinSystemParams::p1_defaults()));
    };

    LevelSweep sweep;
    sweep.system = system;
    sweep.electron_only = electron_only;

    Matrix prev_vectors;
    std::vector<std::size_t> column_of_state;  // tracked state -> eigen index at current B

    for (std::size_t i = 0; i < steps; ++i) {
        const double b = b_min_mt + (b_max_mt - b_min_mt) * static_cast<double>(i) / static_cast<double>(steps - 1);
        EigenSystem es = eigensolve(hamiltonian_at(b));
        const std::size_t n = es.size();

        if (i == 0) {
            if (electron_only) {
                label_states(es, n, 1);
            } else if (system == System::NV) {
                label_states(es, 3, 3);
            } else {
                p1_manifold_labels(es);
            }
            sweep.labels = es.labels;
            column_of_state.resize(n);
            for (std::size_t k = 0; k < n; ++k) column_of_state[k] = k;
        } else {
            // Overlap |⟨v_prev | v_new⟩| between consecutive steps; assign each
            // tracked state to its best-overlap new eigenvector, largest
            // overlaps first so crossings resolve deterministically.
            std::vector<std::size_t> new_column(n, n);
            std::vector<bool> prev_used(n, false), new_used(n, false);
            struct Pair {
                double ov;
                std::size_t prev, next;
            };
            std::vector<Pair> pairs;
            pairs.reserve(n * n);
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t c = 0; c < n; ++c) {
                    cplx dot{0.0, 0.0};
                    for (std::size_t r = 0; r < n; ++r)
                        dot += std::conj(prev_vectors(r, column_of_state[a])) * es.vectors(r, c);
                    pairs.push_back({std::abs(dot), a, c});
                }
            std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.ov > y.ov; });
            for (const Pair& pr : pairs) {
                if (prev_used[pr.prev] || new_used[pr.next]) continue;
                prev_used[pr.prev] = true;
                new_used[pr.next] = true;
                new_column[pr.prev] = pr.next;
            }
            column_of_state = new_column;
        }

        std::vector<double> row(n);
        for (std::size_t k = 0; k < n; ++k) row[k] = es.values[column_of_state[k]];
        sweep.energies.push_back(std::move(row));
        sweep.b_mt.push_back(b);
        prev_vectors = es.vectors;
    }
    return sweep;
}

// Smallest |E_a − E_b| between two tracked states over a sweep; returns the
// grid field where the minimum occurs and the gap there.
struct GapMinimum {
    double b_mt = 0.0;
    double gap_mhz = 0.0;
};

inline GapMinimum minimum_gap(const LevelSweep& sweep, const StateLabel& a, const StateLabel& b) {
    std::size_t ia = sweep.labels.size(), ib = sweep.labels.size();
    for (std::size_t k = 0; k < sweep.labels.size(); ++k) {
        if (sweep.labels[k] == a) ia = k;
        if (sweep.labels[k] == b) ib = k;
    }
    if (ia >= sweep.labels.size() || ib >= sweep.labels.size())
        throw std::invalid_argument("minimum_gap: label not present in sweep");
    GapMinimum best{sweep.b_mt.front(), std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < sweep.b_mt.size(); ++i) {
        const double gap = std::abs(sweep.energies[i][ia] - sweep.energies[i][ib]);
        if (gap < best.gap_mhz) best = GapMinimum{sweep.b_mt[i], gap};
    }
    return best;
}

// Minimal gap between any state of electron manifold a and any of manifold b
// (labels compared on m_S only) — the full-Hamiltonian anti-crossing locator.
inline GapMinimum minimum_manifold_gap(const LevelSweep& sweep, double ms_a, double ms_b) {
    GapMinimum best{sweep.b_mt.front(), std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i < sweep.b_mt.size(); ++i)
        for (std::size_t ka = 0; ka < sweep.labels.size(); ++ka) {
            if (sweep.labels[ka].m_s != ms_a) continue;
            for (std::size_t kb = 0; kb < sweep.labels.size(); ++kb) {
                if (sweep.labels[kb].m_s != ms_b) continue;
                const double gap = std::abs(sweep.energies[i][ka] - sweep.energies[i][kb]);
                if (gap < best.gap_mhz) best = GapMinimum{sweep.b_mt[i], gap};
            }
        }
    return best;
}

}  // namespace nvp1
