// Physical parameters and elementary spin operators.
//
// Unit system used throughout the library: energies are linear frequencies in
// MHz (h = 1), magnetic fields in mT, gyromagnetic ratios in MHz/mT, times in
// microseconds. The default parameter sets describe the NV- centre electronic
// ground state (S = 1) and the substitutional-nitrogen P1 centre (S = 1/2),
// both hyperfine-coupled to their own 14N nucleus (I = 1).

#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "nvp1/matrix.hpp"

namespace nvp1 {

namespace constants {
// Zero-field splitting of the NV ground state, MHz.
inline constexpr double nv_zero_field_splitting_mhz = 2870.0;
// Electron gyromagnetic ratio, MHz/mT (shared by NV and P1 electrons).
inline constexpr double gamma_e_mhz_per_mt = 28.025;
// 14N nuclear gyromagnetic ratio, MHz/mT.
inline constexpr double gamma_n_mhz_per_mt = 3.077e-3;
// Angle between two <111> axes: arccos(-1/3) ~ 109.47 deg.
inline const double tetrahedral_angle_rad = std::acos(-1.0 / 3.0);
}  // namespace constants

// Static parameters of one defect species: zero-field splitting D (0 for P1),
// gyromagnetic ratios, axial hyperfine tensor (A_perp, A_perp, A_par), nuclear
// quadrupole coefficient Q, and the electron/nuclear spin quantum numbers.
struct SpinSystemParams {
    double D = 0.0;        // MHz, zero-field splitting term D*Sz^2
    double gamma_e = 0.0;  // MHz/mT, > 0
    double gamma_n = 0.0;  // MHz/mT
    double A_par = 0.0;    // MHz, hyperfine along the defect axis
    double A_perp = 0.0;   // MHz, hyperfine transverse to the defect axis
    double Q = 0.0;        // MHz, quadrupole term Q*Iz^2
    double S = 0.0;        // electron spin quantum number (1 or 1/2)
    double I = 1.0;        // nuclear spin quantum number (always 1 here)

    // When true, the -gamma_n B.I term is dropped. The nuclear Zeeman term is
    // ~1e4 times smaller than the electron one; zeroing it reproduces the
    // common electron-plus-hyperfine estimates exactly.
    bool zero_nuclear_zeeman = false;

    static SpinSystemParams nv_defaults() {
        SpinSystemParams p;
        p.D = constants::nv_zero_field_splitting_mhz;
        p.gamma_e = constants::gamma_e_mhz_per_mt;
        p.gamma_n = constants::gamma_n_mhz_per_mt;
        p.A_par = -2.14;
        p.A_perp = -2.70;
        p.Q = -4.96;
        p.S = 1.0;
        p.I = 1.0;
        return p;
    }

    static SpinSystemParams p1_defaults() {
        SpinSystemParams p;
        p.D = 0.0;
        p.gamma_e = constants::gamma_e_mhz_per_mt;
        p.gamma_n = constants::gamma_n_mhz_per_mt;
        p.A_par = 113.98;
        p.A_perp = 81.34;
        p.Q = -3.97;
        p.S = 0.5;
        p.I = 1.0;
        return p;
    }

    void validate() const {
        if (!(S == 0.5 || S == 1.0)) throw std::invalid_argument("SpinSystemParams: S must be 1/2 or 1");
        if (I != 1.0) throw std::invalid_argument("SpinSystemParams: I must be 1");
        if (!(gamma_e > 0.0)) throw std::invalid_argument("SpinSystemParams: gamma_e must be positive");
    }
};

// Magnetic field components in a defect's local frame, mT.
struct FieldVector {
    double Bx = 0.0;
    double By = 0.0;
    double Bz = 0.0;

    double magnitude() const { return std::sqrt(Bx * Bx + By * By + Bz * Bz); }

    bool finite() const {
        return std::isfinite(Bx) && std::isfinite(By) && std::isfinite(Bz);
    }
};

// Which of the four <111> crystal axes a defect occupies, relative to the lab
// z-axis (the NV quantization axis, along which the field is applied).
// axis_index 0 is the on-axis orientation (polar angle 0); indices 1..3 are the
// three equivalent off-axis orientations at arccos(-1/3), distinguished only by
// azimuth, which the axially symmetric Hamiltonians never see.
struct Orientation {
    int axis_index = 0;
    double polar_rad = 0.0;
    double azimuth_rad = 0.0;

    static Orientation on_axis() { return Orientation{0, 0.0, 0.0}; }

    static Orientation off_axis(int axis_index = 1) {
        if (axis_index < 1 || axis_index > 3)
            throw std::invalid_argument("Orientation: off-axis index must be 1, 2 or 3");
        return Orientation{axis_index, constants::tetrahedral_angle_rad, 0.0};
    }

    bool is_off_axis() const { return axis_index != 0; }
};

// Angular momentum matrices (Sx, Sy, Sz) of dimension 2s+1 in the basis of Sz
// eigenstates ordered by descending projection m = s, s-1, ..., -s. They obey
// [Sx, Sy] = i Sz and Sx^2 + Sy^2 + Sz^2 = s(s+1) * Identity.
struct SpinOperators {
    Matrix Sx, Sy, Sz;
};

inline SpinOperators spin_operators(double s) {
    if (!(s == 0.5 || s == 1.0)) throw std::invalid_argument("spin_operators: s must be 1/2 or 1");
    const std::size_t dim = static_cast<std::size_t>(std::lround(2.0 * s + 1.0));
    Matrix sz(dim, dim), sp(dim, dim);  // sp = raising operator S+
    for (std::size_t k = 0; k < dim; ++k) {
        const double m = s - static_cast<double>(k);
        sz(k, k) = m;
        // ⟨m+1|S+|m⟩ = sqrt(s(s+1) - m(m+1)); row k-1 holds projection m+1.
        if (k > 0) sp(k - 1, k) = std::sqrt(s * (s + 1.0) - m * (m + 1.0));
    }
    const Matrix sm = sp.adjoint();
    SpinOperators out;
    out.Sx = (sp + sm) * 0.5;
    out.Sy = (sp - sm) * cplx{0.0, -0.5};
    out.Sz = sz;
    return out;
}

}  // namespace nvp1
