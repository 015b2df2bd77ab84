// Complex Hermitian eigensolver (cyclic Jacobi) and dominant-component state
// labeling.
//
// Every matrix this library diagonalizes is at most 9x9, which keeps the
// classic Jacobi iteration both robust and fast while staying dependency-free
// and bit-deterministic: fixed sweep order, fixed rotation formulas, fixed
// phase convention (largest-magnitude entry of each eigenvector made real and
// positive). Convergence is declared when the off-diagonal Frobenius norm
// drops below 1e-13 * ||H||_F.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvp1/matrix.hpp"

namespace nvp1 {

// (m_S, m_I) tag of a basis ket / labeled eigenstate. For electron-only
// systems the nuclear projection is fixed at 0.
struct StateLabel {
    double m_s = 0.0;
    double m_i = 0.0;

    friend bool operator==(const StateLabel& a, const StateLabel& b) {
        return a.m_s == b.m_s && a.m_i == b.m_i;
    }
};

// Compact text form used in CSV headers and tables, e.g. "ms+0mi+1",
// "ms-0.5mi-1", or "ms+1" for electron-only states.
inline std::string label_to_string(const StateLabel& l, bool with_nuclear = true) {
    auto fmt = [](double m) {
        char buf[16];
        if (m == static_cast<long>(m))
            std::snprintf(buf, sizeof buf, "%+ld", static_cast<long>(m));
        else
            std::snprintf(buf, sizeof buf, "%+.1f", m);
        return std::string(buf);
    };
    std::string s = "ms" + fmt(l.m_s);
    if (with_nuclear) s += "mi" + fmt(l.m_i);
    return s;
}

struct EigenSystem {
    std::vector<double> values;   // ascending, MHz
    Matrix vectors;               // orthonormal columns, vectors.col(k) <-> values[k]
    std::vector<StateLabel> labels;
    std::vector<double> dominant_weight;  // weight of the labeled component, (0, 1]

    std::size_t size() const { return values.size(); }
};

namespace detail {

inline double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

}  // namespace detail

// Diagonalize a Hermitian matrix. Output is deterministic for identical input.
// Non-Hermitian input is rejected.
inline EigenSystem eigensolve(const Matrix& h) {
    require_hermitian(h, "eigensolve");
    const std::size_t n = h.rows();

    Matrix a = h;
    Matrix v = Matrix::identity(n);
    const double norm_h = h.frobenius_norm();
    const double target = 1e-13 * norm_h;

    // Cyclic sweeps: each sweep visits every (p, q) pair once in row-major
    // order and annihilates A(p,q) with a phased Givens rotation. Small
    // matrices converge in well under 20 sweeps; the cap only guards against
    // pathological input.
    const int max_sweeps = 60;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (detail::offdiag_frobenius(a) <= target) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = a(p, q);
                const double r = std::abs(apq);
                if (r <= 1e-300) continue;  // already annihilated
                const double phi = std::arg(apq);
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();

                // Real rotation angle for the dephased 2x2 block [[app, r],
                // [r, aqq]]: cot(2θ) = (aqq - app) / (2r), with the stable
                // smaller-root tangent.
                const double zeta = (aqq - app) / (2.0 * r);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // Combined unitary J = diag(1, e^{-iφ}) * G restricted to
                // columns (p, q); apply A ← J† A J and V ← V J in place.
                const cplx eim = std::polar(1.0, -phi);
                const cplx jpp = c, jpq = s, jqp = -s * eim, jqq = c * eim;

                for (std::size_t i = 0; i < n; ++i) {  // column update: A ← A J
                    const cplx aip = a(i, p), aiq = a(i, q);
                    a(i, p) = aip * jpp + aiq * jqp;
                    a(i, q) = aip * jpq + aiq * jqq;
                }
                for (std::size_t j = 0; j < n; ++j) {  // row update: A ← J† A
                    const cplx apj = a(p, j), aqj = a(q, j);
                    a(p, j) = std::conj(jpp) * apj + std::conj(jqp) * aqj;
                    a(q, j) = std::conj(jpq) * apj + std::conj(jqq) * aqj;
                }
                for (std::size_t i = 0; i < n; ++i) {  // accumulate V ← V J
                    const cplx vip = v(i, p), viq = v(i, q);
                    v(i, p) = vip * jpp + viq * jqp;
                    v(i, q) = vip * jpq + viq * jqq;
                }
                // Numerical hygiene: the rotation zeroes A(p,q) analytically.
                a(p, q) = 0.0;
                a(q, p) = 0.0;
            }
        }
    }

    // Sort eigenpairs ascending; stable so exact degeneracies keep sweep order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

    EigenSystem es;
    es.values.resize(n);
    es.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        es.values[k] = a(src, src).real();
        // Phase convention: rotate the column so its largest-magnitude entry
        // (lowest index on ties) is real and positive.
        std::size_t imax = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double m = std::abs(v(i, src));
            if (m > best + 1e-15) {
                best = m;
                imax = i;
            }
        }
        const cplx phase = (best > 0.0) ? std::polar(1.0, -std::arg(v(imax, src))) : cplx{1.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) es.vectors(i, k) = v(i, src) * phase;
    }
    return es;
}

// Diagnostics used by the test suite and acceptance checks.
inline double eigensystem_residual(const Matrix& h, const EigenSystem& es) {
    double worst = 0.0;
    const std::size_t n = h.rows();
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cplx acc{0.0, 0.0};
            for (std::size_t j = 0; j < n; ++j) acc += h(i, j) * es.vectors(j, k);
            acc -= es.values[k] * es.vectors(i, k);
            s += std::norm(acc);
        }
        worst = std::max(worst, std::sqrt(s));
    }
    return worst;
}

inline double eigensystem_orthonormality_defect(const EigenSystem& es) {
    const std::size_t n = es.size();
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t l = k; l < n; ++l) {
            cplx dot{0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i) dot += std::conj(es.vectors(i, k)) * es.vectors(i, l);
            const cplx expect = (k == l) ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
            worst = std::max(worst, std::abs(dot - expect));
        }
    return worst;
}

// Tag each eigenstate with its dominant |m_S, m_I⟩ basis ket. The basis
// structure is given by the two factor dimensions (nuclear_dim = 1 labels an
// electron-only system). When two states claim the same ket (strong mixing),
// the higher-weight state keeps it and the other falls back to its
// next-largest unclaimed component; ties go to the lower eigenvalue. The loop
// runs to a fixed point, so every state ends up with a distinct ket.
inline void label_states(EigenSystem& es, std::size_t electron_dim, std::size_t nuclear_dim) {
    const std::size_t n = es.size();
    if (electron_dim * nuclear_dim != n)
        throw std::invalid_argument("label_states: factor dimensions do not match matrix size");
    const double s_qn = (static_cast<double>(electron_dim) - 1.0) / 2.0;
    const double i_qn = (static_cast<double>(nuclear_dim) - 1.0) / 2.0;

    // weight[k][b] = |⟨basis b|state k⟩|^2
    std::vector<std::vector<double>> weight(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t b = 0; b < n; ++b) weight[k][b] = std::norm(es.vectors(b, k));

    // Per-state component ranking, heaviest first (stable: lower index wins ties).
    std::vector<std::vector<std::size_t>> ranked(n);
    for (std::size_t k = 0; k < n; ++k) {
        ranked[k].resize(n);
        std::iota(ranked[k].begin(), ranked[k].end(), std::size_t{0});
        std::stable_sort(ranked[k].begin(), ranked[k].end(),
                         [&](std::size_t a, std::size_t b) { return weight[k][a] > weight[k][b]; });
    }

    std::vector<std::size_t> choice(n, 0);  // index into ranked[k]
    auto ket_of = [&](std::size_t k) { return ranked[k][choice[k]]; };

    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t ket = 0; ket < n; ++ket) {
            // Find all states currently claiming this ket.
            std::size_t winner = n;
            for (std::size_t k = 0; k < n; ++k) {
                if (ket_of(k) != ket) continue;
                if (winner == n) {
                    winner = k;
                    continue;
                }
                // Contest: larger weight keeps the ket; exact tie -> lower
                // eigenvalue (lower index, values are sorted ascending).
                std::size_t keep = winner, move = k;
                if (weight[k][ket] > weight[winner][ket]) {
                    keep = k;
                    move = winner;
                }
                choice[move] += 1;  // next-ranked component
                if (choice[move] >= n) throw std::logic_error("label_states: ranking exhausted");
                winner = keep;
                changed = true;
            }
        }
    }

    es.labels.resize(n);
    es.dominant_weight.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t b = ket_of(k);
        es.labels[k] = StateLabel{s_qn - static_cast<double>(b / nuclear_dim),
                                  i_qn - static_cast<double>(b % nuclear_dim)};
        es.dominant_weight[k] = weight[k][b];
    }
}

// Diagonalize and label in one call.
inline EigenSystem eigensolve_labeled(const Matrix& h, std::size_t electron_dim, std::size_t nuclear_dim) {
    EigenSystem es = eigensolve(h);
    label_states(es, electron_dim, nuclear_dim);
    return es;
}

}  // namespace nvp1
