// Coupled NV–P1 electron-spin pair dynamics.
//
// The model is the six-level product of an NV electron spin (S = 1) and a P1
// electron spin (S = 1/2) on the same on-axis magnetic field, coupled by the
// magnetic dipole–dipole interaction and optionally driven by one CW
// microwave tone. Nuclear spins stay out of this module: polarization
// transfer at the cross-relaxation condition is an electron-spin effect.
//
// Product basis, NV factor outermost, both factors by descending projection:
//   0:|+1,+1/2⟩  1:|+1,−1/2⟩  2:|0,+1/2⟩  3:|0,−1/2⟩  4:|−1,+1/2⟩  5:|−1,−1/2⟩
//
// Two propagation routes are provided: spectral evolution under the secular
// rotating-frame Hamiltonian (the production path) and a brute-force
// fixed-step lab-frame integrator that keeps every fast term (the
// verification path). They must agree on ⟨S_P1z⟩(t) wherever the secular
// approximation is valid.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nvp1/eigen.hpp"
#include "nvp1/hamiltonian.hpp"
#include "nvp1/matrix.hpp"
#include "nvp1/spin_system.hpp"

namespace nvp1 {

namespace constants {
// Exact SI values (2019 redefinition), used only to convert the Zeeman
// splitting into a thermal population ratio.
inline constexpr double planck_j_s = 6.62607015e-34;
inline constexpr double boltzmann_j_per_k = 1.380649e-23;
}  // namespace constants

// Spin operators of both partners embedded in the 6-dimensional product
// space: nv_* act as S ⊗ 1, p1_* as 1 ⊗ S.
struct PairOperators {
    Matrix nv_x, nv_y, nv_z, p1_x, p1_y, p1_z;
};

inline const PairOperators& pair_operators() {
    static const PairOperators ops = [] {
        const SpinOperators nv = spin_operators(1.0);
        const SpinOperators p1 = spin_operators(0.5);
        const Matrix id3 = Matrix::identity(3), id2 = Matrix::identity(2);
        PairOperators o;
        o.nv_x = kron(nv.Sx, id2);
        o.nv_y = kron(nv.Sy, id2);
        o.nv_z = kron(nv.Sz, id2);
        o.p1_x = kron(id3, p1.Sx);
        o.p1_y = kron(id3, p1.Sy);
        o.p1_z = kron(id3, p1.Sz);
        return o;
    }();
    return ops;
}

// Dipole–dipole geometry, reduced to what the driven pair actually feels: the
// unit vector from the NV to the P1 and one scalar interaction strength (the
// dipolar prefactor over distance cubed, in MHz). The default direction is
// transverse to the defect axis: an axial pair produces no secular
// double-flip element at the matched field, i.e. no polarization transfer.
struct DipoleGeometry {
    std::array<double, 3> r_hat{1.0, 0.0, 0.0};
    double coupling_mhz = 0.1;

    void validate() const {
        const double n2 = r_hat[0] * r_hat[0] + r_hat[1] * r_hat[1] + r_hat[2] * r_hat[2];
        if (!std::isfinite(n2) || std::abs(n2 - 1.0) > 1e-9)
            throw std::invalid_argument("DipoleGeometry: r_hat must be a unit vector");
        if (!std::isfinite(coupling_mhz)) throw std::invalid_argument("DipoleGeometry: coupling must be finite");
    }

    static DipoleGeometry along(double x, double y, double z, double coupling_mhz_) {
        const double n = std::sqrt(x * x + y * y + z * z);
        if (!(n > 0.0) || !std::isfinite(n))
            throw std::invalid_argument("DipoleGeometry: direction must be a nonzero finite vector");
        DipoleGeometry g;
        g.r_hat = {x / n, y / n, z / n};
        g.coupling_mhz = coupling_mhz_;
        return g;
    }
};

// One CW microwave tone of frequency omega driving both spins transversally
// with individual Rabi frequencies.
struct DriveParams {
    double omega_mhz = 0.0;
    double rabi1_mhz = 0.0;  // NV Rabi frequency
    double rabi2_mhz = 0.0;  // P1 Rabi frequency

    bool drive_on() const { return rabi1_mhz > 0.0 || rabi2_mhz > 0.0; }

    void validate() const {
        if (!(omega_mhz >= 0.0) || !(rabi1_mhz >= 0.0) || !(rabi2_mhz >= 0.0))
            throw std::invalid_argument("DriveParams: frequencies must be finite and non-negative");
    }
};

// Density matrix of the pair plus its defining checks.
struct DensityState {
    Matrix rho{6, 6};

    void validate(double tol = 1e-10) const {
        if (rho.rows() != 6 || rho.cols() != 6)
            throw std::invalid_argument("DensityState: expected a 6x6 matrix");
        if (hermiticity_defect(rho) > tol) throw std::invalid_argument("DensityState: not Hermitian");
        if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol)
            throw std::invalid_argument("DensityState: trace must be 1");
        EigenSystem es = eigensolve((rho + rho.adjoint()) * 0.5);
        if (es.values.front() < -tol)
            throw std::invalid_argument("DensityState: not positive semidefinite");
    }
};

// NV optically pumped into m_S = 0, P1 in the fully mixed state.
inline DensityState initial_state() {
    DensityState s;
    s.rho(2, 2) = 0.5;
    s.rho(3, 3) = 0.5;
    return s;
}

// Time series of the monitored polarization ⟨S_P1z⟩(t), plus integration
// diagnostics and (on request) full density-matrix snapshots.
struct DynamicsResult {
    std::vector<double> times_us;
    std::vector<double> p1_polarization;
    std::vector<Matrix> snapshots;       // filled only when requested
    double max_trace_deviation = 0.0;    // max |tr rho - 1| at sample times
    double trace_drift_per_kstep = 0.0;  // integrator only: 1000 x worst per-step drift
};

// coupling * [ S_NV·S_P1 − 3 (S_NV·r̂)(S_P1·r̂) ].
inline Matrix dipolar_hamiltonian(const DipoleGeometry& g) {
    g.validate();
    const PairOperators& op = pair_operators();
    const Matrix s_dot = op.nv_x * op.p1_x + op.nv_y * op.p1_y + op.nv_z * op.p1_z;
    const Matrix nv_r = op.nv_x * g.r_hat[0] + op.nv_y * g.r_hat[1] + op.nv_z * g.r_hat[2];
    const Matrix p1_r = op.p1_x * g.r_hat[0] + op.p1_y * g.r_hat[1] + op.p1_z * g.r_hat[2];
    return (s_dot - (nv_r * p1_r) * 3.0) * g.coupling_mhz;
}

// Electronic pair Hamiltonian on an on-axis field: NV zero-field splitting
// and Zeeman, P1 Zeeman, dipolar coupling.
inline Matrix total_hamiltonian(double bz_mt, const DipoleGeometry& g) {
    if (!std::isfinite(bz_mt)) throw std::invalid_argument("total_hamiltonian: field must be finite");
    const Matrix h_nv = electronic_hamiltonian(System::NV, bz_mt);
    const Matrix h_p1 = electronic_hamiltonian(System::P1, bz_mt);
    return kron(h_nv, Matrix::identity(2)) + kron(Matrix::identity(3), h_p1) + dipolar_hamiltonian(g);
}

// The electron-only NV 0 → −1 gap: the frequency a drive tuned to the NV
// transition carries, whether or not the P1 happens to be matched there.
inline double nv_drive_frequency_mhz(double bz_mt) {
    if (!std::isfinite(bz_mt)) throw std::invalid_argument("nv_drive_frequency_mhz: field must be finite");
    return constants::nv_zero_field_splitting_mhz - constants::gamma_e_mhz_per_mt * bz_mt;
}

// Lab-frame Hamiltonian with the CW tone at time t.
inline Matrix cw_hamiltonian(const Matrix& h_tot, const DriveParams& d, double t_us) {
    d.validate();
    if (h_tot.rows() != 6 || h_tot.cols() != 6)
        throw std::invalid_argument("cw_hamiltonian: expected the 6x6 pair Hamiltonian");
    if (!d.drive_on()) return h_tot;
    const PairOperators& op = pair_operators();
    const double c = std::cos(2.0 * std::numbers::pi * d.omega_mhz * t_us);
    return h_tot + (op.nv_x * d.rabi1_mhz + op.p1_x * d.rabi2_mhz) * c;
}

// Secular effective Hamiltonian in the frame rotating at the drive frequency,
// returned in the product basis.
//
// The bare (coupling-free, drive-free) Hamiltonian is diagonal here, so every
// interaction or drive matrix element (i,j) carries a definite oscillation
// frequency in the rotating frame: E_i − E_j for the static interaction,
// E_i − E_j ± omega for the two sidebands of the cosine drive. Elements
// oscillating faster than the cutoff average away and are zeroed; the slow
// ones are kept with the drive at half amplitude.
//
// States connected by surviving elements form blocks. Within each block every
// state gets an integer photon index k (surviving drive elements shift k by
// one, interaction elements keep it), and the diagonal becomes the slow
// residual E_i − omega·k_i, gauged to zero at the block's lowest-energy
// state. Relative diagonal values across disconnected blocks are pure gauge:
// no surviving element mixes them.
inline Matrix rotating_frame(double bz_mt, const DipoleGeometry& g, const DriveParams& d,
                             double cutoff_mhz = 1.0) {
    d.validate();
    if (!(cutoff_mhz > 0.0)) throw std::invalid_argument("rotating_frame: cutoff must be positive");
    if (d.drive_on() && d.omega_mhz < 2.0 * cutoff_mhz)
        throw std::invalid_argument("rotating_frame: drive frequency must exceed twice the cutoff");
    const Matrix h_nv = electronic_hamiltonian(System::NV, bz_mt);
    const Matrix h_p1 = electronic_hamiltonian(System::P1, bz_mt);
    const Matrix bare = kron(h_nv, Matrix::identity(2)) + kron(Matrix::identity(3), h_p1);
    std::array<double, 6> e{};
    for (std::size_t i = 0; i < 6; ++i) e[i] = bare(i, i).real();

    const Matrix v_int = dipolar_hamiltonian(g);
    const PairOperators& op = pair_operators();
    const Matrix v_drv = (op.nv_x * d.rabi1_mhz + op.p1_x * d.rabi2_mhz) * 0.5;

    Matrix h(6, 6);
    struct Edge {
        std::size_t i, j;
        int dk;  // k_i - k_j
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < 6; ++i) {
        h(i, i) = v_int(i, i);
        for (std::size_t j = i + 1; j < 6; ++j) {
            const double de = e[i] - e[j];
            cplx elem = 0.0;
            std::optional<int> dk;
            if (std::abs(de) < cutoff_mhz && std::abs(v_int(i, j)) > 0.0) {
                elem += v_int(i, j);
                dk = 0;
            }
            if (d.drive_on()) {
                for (const int s : {+1, -1}) {
                    if (std::abs(de + s * d.omega_mhz) < cutoff_mhz && std::abs(v_drv(i, j)) > 0.0) {
                        elem += v_drv(i, j);
                        dk = -s;  // element static when k_i - k_j = (e_i - e_j)/omega
                    }
                }
            }
            if (dk) {
                h(i, j) = elem;
                h(j, i) = std::conj(elem);
                edges.push_back(Edge{i, j, *dk});
            }
        }
    }

    // Photon-index assignment per connected block (breadth-first).
    std::array<int, 6> k{};
    std::array<bool, 6> seen{};
    std::array<std::size_t, 6> order{};
    for (std::size_t i = 0; i < 6; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return e[a] < e[b]; });
    for (const std::size_t root : order) {
        if (seen[root]) continue;
        seen[root] = true;
        k[root] = 0;
        std::array<std::size_t, 6> queue{};
        std::size_t head = 0, tail = 0;
        queue[tail++] = root;
        std::vector<std::size_t> block{root};
        while (head < tail) {
            const std::size_t u = queue[head++];
            for (const Edge& ed : edges) {
                std::size_t v;
                int kv;
                if (ed.i == u) {
                    v = ed.j;
                    kv = k[u] - ed.dk;
                } else if (ed.j == u) {
                    v = ed.i;
                    kv = k[u] + ed.dk;
                } else {
                    continue;
                }
                if (!seen[v]) {
                    seen[v] = true;
                    k[v] = kv;
                    queue[tail++] = v;
                    block.push_back(v);
                } else if (k[v] != kv) {
                    throw std::logic_error("rotating_frame: inconsistent photon indices in one block");
                }
            }
        }
        const double ref = e[root] - d.omega_mhz * k[root];
        for (const std::size_t q : block) h(q, q) += (e[q] - d.omega_mhz * k[q]) - ref;
    }
    return h;
}

// Unitary evolution under a time-independent Hamiltonian via its
// eigendecomposition; records ⟨S_P1z⟩ at each requested time.
inline DynamicsResult evolve(const DensityState& rho0, const Matrix& h_eff,
                             const std::vector<double>& times_us, bool record_snapshots = false) {
    rho0.validate();
    require_hermitian(h_eff, "evolve");
    if (h_eff.rows() != 6) throw std::invalid_argument("evolve: expected the 6x6 pair Hamiltonian");
    for (const double t : times_us)
        if (!std::isfinite(t)) throw std::invalid_argument("evolve: times must be finite");

    const EigenSystem es = eigensolve(h_eff);
    const std::size_t n = 6;
    // a = V' rho0 V; then rho(t) = V (a .* exp(-2 pi i (l_i - l_j) t)) V'.
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx s = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t q = 0; q < n; ++q)
                    s += std::conj(es.vectors(p, i)) * rho0.rho(p, q) * es.vectors(q, j);
            a(i, j) = s;
        }
    const Matrix& spz = pair_operators().p1_z;

    DynamicsResult out;
    out.times_us = times_us;
    out.p1_polarization.reserve(times_us.size());
    for (const double t : times_us) {
        Matrix b(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double phase = -2.0 * std::numbers::pi * (es.values[i] - es.values[j]) * t;
                b(i, j) = a(i, j) * std::polar(1.0, phase);
            }
        Matrix rho_t(n, n);
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q) {
                cplx s = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        s += es.vectors(p, i) * b(i, j) * std::conj(es.vectors(q, j));
                rho_t(p, q) = s;
            }
        out.p1_polarization.push_back(expectation(rho_t, spz));
        out.max_trace_deviation = std::max(out.max_trace_deviation, std::abs(rho_t.trace().real() - 1.0));
        if (record_snapshots) out.snapshots.push_back(std::move(rho_t));
    }
    return out;
}

namespace detail {

using Arr6 = std::array<cplx, 36>;

inline Arr6 to_arr6(const Matrix& m) {
    Arr6 a{};
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) a[i * 6 + j] = m(i, j);
    return a;
}

// d(rho)/dt = -2 pi i [H, rho] for Hermitian H and rho: with P = H rho the
// commutator is P - P^dagger, so one matrix product per evaluation suffices.
inline void lab_derivative(const Arr6& ham, const Arr6& rho, Arr6& out) {
    Arr6 p{};
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t l = 0; l < 6; ++l) {
            const cplx h_il = ham[i * 6 + l];
            if (h_il == cplx{0.0, 0.0}) continue;
            for (std::size_t j = 0; j < 6; ++j) p[i * 6 + j] += h_il * rho[l * 6 + j];
        }
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            const cplx c = p[i * 6 + j] - std::conj(p[j * 6 + i]);
            out[i * 6 + j] = cplx{0.0, -2.0 * std::numbers::pi} * c;
        }
}

}  // namespace detail

// Brute-force lab-frame propagation: classical fourth-order fixed-step
// integration of the full time-dependent equation of motion, keeping every
// fast-oscillating term. Intentionally independent of the spectral route, so
// the two can check each other. The step must resolve the fastest scale in
// the problem (spectral spread plus, when driven, the carrier frequency);
// coarser steps are rejected rather than silently under-resolved.
inline DynamicsResult evolve_full_oracle(const DensityState& rho0, double bz_mt, const DipoleGeometry& g,
                                         const DriveParams& d, const std::vector<double>& times_us,
                                         double step_us) {
    rho0.validate();
    d.validate();
    if (times_us.empty()) throw std::invalid_argument("evolve_full_oracle: empty time grid");
    for (std::size_t i = 0; i < times_us.size(); ++i) {
        if (!std::isfinite(times_us[i]) || times_us[i] < 0.0)
            throw std::invalid_argument("evolve_full_oracle: times must be finite and non-negative");
        if (i > 0 && times_us[i] < times_us[i - 1])
            throw std::invalid_argument("evolve_full_oracle: times must be non-decreasing");
    }
    const Matrix h_tot = total_hamiltonian(bz_mt, g);
    const EigenSystem es = eigensolve(h_tot);
    const double spread = es.values.back() - es.values.front();
    const double f_max = spread + (d.drive_on() ? d.omega_mhz : 0.0);
    const double step_limit = 1.0 / (20.0 * std::max(f_max, 1e-12));
    if (!(step_us > 0.0) || step_us > step_limit * (1.0 + 1e-12))
        throw std::invalid_argument("evolve_full_oracle: step too coarse for the fastest frequency");

    const detail::Arr6 h0 = detail::to_arr6(h_tot);
    const PairOperators& op = pair_operators();
    const detail::Arr6 hd = detail::to_arr6(op.nv_x * d.rabi1_mhz + op.p1_x * d.rabi2_mhz);
    const bool driven = d.drive_on();

    detail::Arr6 rho = detail::to_arr6(rho0.rho);
    DynamicsResult out;
    out.times_us = times_us;
    out.p1_polarization.reserve(times_us.size());

    detail::Arr6 ham{}, k1{}, k2{}, k3{}, k4{}, tmp{};
    auto fill_ham = [&](double t) {
        if (!driven) {
            ham = h0;
            return;
        }
        const double c = std::cos(2.0 * std::numbers::pi * d.omega_mhz * t);
        for (std::size_t m = 0; m < 36; ++m) ham[m] = h0[m] + c * hd[m];
    };
    double t = 0.0;
    double worst_step_drift = 0.0;
    auto rk4_step = [&](double dt) {
        fill_ham(t);
        detail::lab_derivative(ham, rho, k1);
        for (std::size_t m = 0; m < 36; ++m) tmp[m] = rho[m] + 0.5 * dt * k1[m];
        fill_ham(t + 0.5 * dt);
        detail::lab_derivative(ham, tmp, k2);
        for (std::size_t m = 0; m < 36; ++m) tmp[m] = rho[m] + 0.5 * dt * k2[m];
        detail::lab_derivative(ham, tmp, k3);
        for (std::size_t m = 0; m < 36; ++m) tmp[m] = rho[m] + dt * k3[m];
        fill_ham(t + dt);
        detail::lab_derivative(ham, tmp, k4);
        for (std::size_t m = 0; m < 36; ++m)
            rho[m] += (dt / 6.0) * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
        t += dt;
        double tr = 0.0;
        for (std::size_t i = 0; i < 6; ++i) tr += rho[i * 6 + i].real();
        worst_step_drift = std::max(worst_step_drift, std::abs(tr - 1.0));
        const double inv = 1.0 / tr;
        for (std::size_t m = 0; m < 36; ++m) rho[m] *= inv;
    };
    const Matrix& spz = pair_operators().p1_z;
    for (const double ts : times_us) {
        while (ts - t > step_us * (1.0 + 1e-9)) rk4_step(step_us);
        if (ts - t > 1e-15) rk4_step(ts - t);
        double pol = 0.0, tr = 0.0;
        for (std::size_t i = 0; i < 6; ++i) {
            pol += (rho[i * 6 + i] * spz(i, i)).real();
            tr += rho[i * 6 + i].real();
        }
        out.p1_polarization.push_back(pol);
        out.max_trace_deviation = std::max(out.max_trace_deviation, std::abs(tr - 1.0));
    }
    out.trace_drift_per_kstep = 1000.0 * worst_step_drift;
    return out;
}

// Relative population difference of the P1 electron Zeeman doublet in thermal
// equilibrium: the lower-state excess over the mean population,
// 2·tanh(h·ge·B / 2kT). At ambient conditions this is the tiny baseline
// polarization that cross-relaxation schemes start from.
inline double thermal_polarization(double b_mt, double temperature_k) {
    if (!(temperature_k > 0.0)) throw std::invalid_argument("thermal_polarization: temperature must be positive");
    if (!(b_mt >= 0.0) || !std::isfinite(b_mt))
        throw std::invalid_argument("thermal_polarization: field must be finite and non-negative");
    const double gap_hz = constants::gamma_e_mhz_per_mt * 1e6 * b_mt;
    const double x = constants::planck_j_s * gap_hz / (constants::boltzmann_j_per_k * temperature_k);
    return 2.0 * std::tanh(0.5 * x);
}

}  // namespace nvp1
