// Hamiltonian builders for the NV and P1 centres.
//
// Full hyperfine Hamiltonians in the |m_S, m_I⟩ product basis (electron index
// outermost, both projections descending):
//
//   NV (9x9): D Sz^2 + γe B·S + S·A·I + Q Iz^2 − γn B·I
//   P1 (6x6):          γe B·S + S·A·I + Q Iz^2 − γn B·I
//
// with the axial hyperfine tensor A = diag(A_perp, A_perp, A_par). Fields are
// expressed in each defect's local frame; rotate_field maps the lab field onto
// an off-axis defect. The electron-only 3x3/2x2 variants drop every nuclear
// term and carry the level-matching arithmetic of the cross-relaxation
// condition in closed form.

#pragma once

#include <stdexcept>

#include "nvp1/matrix.hpp"
#include "nvp1/spin_system.hpp"

namespace nvp1 {

enum class System { NV, P1 };

namespace detail {

// Shared electron-spin + 14N-nucleus Hamiltonian; the NV/P1 wrappers pin the
// electron spin quantum number expected of each species.
inline Matrix hyperfine_hamiltonian(const FieldVector& b, const SpinSystemParams& p) {
    if (!b.finite()) throw std::invalid_argument("hamiltonian: non-finite field component");
    p.validate();

    const SpinOperators s = spin_operators(p.S);
    const SpinOperators n = spin_operators(p.I);
    const Matrix ids = Matrix::identity(s.Sz.rows());
    const Matrix idn = Matrix::identity(n.Sz.rows());

    Matrix h = kron(s.Sz * s.Sz, idn) * p.D;
    h += (kron(s.Sx, idn) * b.Bx + kron(s.Sy, idn) * b.By + kron(s.Sz, idn) * b.Bz) * p.gamma_e;
    h += kron(s.Sx, n.Sx) * p.A_perp + kron(s.Sy, n.Sy) * p.A_perp + kron(s.Sz, n.Sz) * p.A_par;
    h += kron(ids, n.Sz * n.Sz) * p.Q;
    if (!p.zero_nuclear_zeeman) {
        h -= (kron(ids, n.Sx) * b.Bx + kron(ids, n.Sy) * b.By + kron(ids, n.Sz) * b.Bz) * p.gamma_n;
    }
    require_hermitian(h, "hyperfine_hamiltonian");
    return h;
}

}  // namespace detail

// 9x9 NV centre Hamiltonian in its local frame.
inline Matrix nv_hamiltonian(const FieldVector& b, const SpinSystemParams& p = SpinSystemParams::nv_defaults()) {
    if (p.S != 1.0) throw std::invalid_argument("nv_hamiltonian: params must have S = 1");
    return detail::hyperfine_hamiltonian(b, p);
}

// 6x6 P1 centre Hamiltonian in its local frame.
// For off-axis P1 centres pass rotate_field(|B|, orientation); the hyperfine
// and quadrupole tensors stay fixed in the local frame (they follow the defect
// axis under reorientation).
inline Matrix p1_hamiltonian(const FieldVector& b, const SpinSystemParams& p = SpinSystemParams::p1_defaults()) {
    if (p.S != 0.5) throw std::invalid_argument("p1_hamiltonian: params must have S = 1/2");
    return detail::hyperfine_hamiltonian(b, p);
}

// Express the lab field (magnitude B along the lab z / NV axis) in the local
// frame of a defect with the given orientation:
//   Bz' = B cosθ,  transverse magnitude B sinθ  (θ = 0 or arccos(-1/3)).
// The azimuth convention is irrelevant to every spectrum computed here (the
// tensors are axial), so the default orientation puts the transverse part
// along x.
inline FieldVector rotate_field(double b_lab_magnitude_mt, const Orientation& o) {
    FieldVector f;
    f.Bx = b_lab_magnitude_mt * std::sin(o.polar_rad) * std::cos(o.azimuth_rad);
    f.By = b_lab_magnitude_mt * std::sin(o.polar_rad) * std::sin(o.azimuth_rad);
    f.Bz = b_lab_magnitude_mt * std::cos(o.polar_rad);
    return f;
}

// Electron-only Hamiltonians (no nuclear terms): NV 3x3 = D Sz^2 + γe B·S,
// P1 2x2 = γe B·S, in the local frame given by the field vector.
inline Matrix electronic_hamiltonian(System system, const FieldVector& b) {
    if (!b.finite()) throw std::invalid_argument("electronic_hamiltonian: non-finite field");
    const double spin = (system == System::NV) ? 1.0 : 0.5;
    const SpinOperators s = spin_operators(spin);
    Matrix h = (s.Sx * b.Bx + s.Sy * b.By + s.Sz * b.Bz) * constants::gamma_e_mhz_per_mt;
    if (system == System::NV) h += (s.Sz * s.Sz) * constants::nv_zero_field_splitting_mhz;
    require_hermitian(h, "electronic_hamiltonian");
    return h;
}

// On-axis convenience overload: field of magnitude Bz along the defect axis.
inline Matrix electronic_hamiltonian(System system, double bz_mt) {
    return electronic_hamiltonian(system, FieldVector{0.0, 0.0, bz_mt});
}

}  // namespace nvp1
