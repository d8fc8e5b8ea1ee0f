// constraints.hpp — Symmetry form of the scattering matrix, the 14 analytical
// constraints (bipartite, unitarity, hierarchy), reconstruction of all
// magnitudes from the two independent unknowns (S33, |S32|), rotated elements,
// and phase recovery up to the sign ambiguity.

#pragma once

#include "model.hpp"
#include "propagator.hpp"

#include <array>
#include <optional>
#include <utility>

namespace lz {

struct InfeasibleInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AdiabaticUnderflowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UndefinedRotationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularRecoveryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------ symmetry form ---------------------------------

// The 9 independent entries of the time-reversal/chiral-constrained S:
// 3 real diagonals and 6 complex entries, plus the max deviation of the input
// from the implied 5x5 pattern.
struct SymmetryForm {
    double s11{0}, s22{0}, s33{0};
    cxd s21, s31, s41, s51, s32, s42;
    double extraction_residual{0};
};

// Rebuild the full 5x5 matrix implied by the symmetry pattern.
inline MatrixXcd assemble_symmetry_form(const SymmetryForm& f) {
    MatrixXcd s(5, 5);
    const cxd s11(f.s11), s22(f.s22), s33(f.s33);
    auto cj = [](const cxd& z) { return std::conj(z); };
    s << s11, -cj(f.s21), -cj(f.s31), -cj(f.s41), cj(f.s51),
        f.s21, s22, cj(f.s32), cj(f.s42), cj(f.s41),
        f.s31, f.s32, s33, cj(f.s32), cj(f.s31),
        f.s41, f.s42, f.s32, s22, cj(f.s21),
        f.s51, -f.s41, -f.s31, -f.s21, s11;
    return s;
}

// Read the independent entries from their canonical positions (column 1 rows
// 1..5 plus s22, s32, s42, s33) and measure the pattern violation.
inline SymmetryForm extract_symmetry_form(const MatrixXcd& s) {
    if (s.rows() != 5 || s.cols() != 5)
        throw ParameterError("extract_symmetry_form: expected a 5x5 matrix");
    SymmetryForm f;
    f.s11 = s(0, 0).real();
    f.s22 = s(1, 1).real();
    f.s33 = s(2, 2).real();
    f.s21 = s(1, 0);
    f.s31 = s(2, 0);
    f.s41 = s(3, 0);
    f.s51 = s(4, 0);
    f.s32 = s(2, 1);
    f.s42 = s(3, 1);
    f.extraction_residual = (s - assemble_symmetry_form(f)).cwiseAbs().maxCoeff();
    return f;
}

// ---------------------------- constraint residuals ----------------------------

// Residuals of all 14 constraints: the bipartite diagonal relation, 3
// magnitude and 6 phase-bearing unitarity rows, and hierarchy constraints
// HC1-HC4 with the determinants expanded directly from the symmetry form.
struct ConstraintReport {
    double bipartite{0};
    std::array<double, 3> unitarity_magnitude{};
    std::array<double, 6> unitarity_phase{};
    std::array<double, 4> hierarchy{};
    double max_residual{0};
};

namespace detail {
inline cxd det3(const std::array<std::array<cxd, 3>, 3>& a) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
           a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}
}  // namespace detail

inline ConstraintReport check_all(const SymmetryForm& f, const LZExponents& ex) {
    ConstraintReport r;
    const cxd s21 = f.s21, s31 = f.s31, s41 = f.s41, s51 = f.s51, s32 = f.s32,
              s42 = f.s42;
    const double s11 = f.s11, s22 = f.s22, s33 = f.s33;
    auto cj = [](const cxd& z) { return std::conj(z); };
    auto n2 = [](const cxd& z) { return std::norm(z); };

    r.bipartite = std::abs(2 * s22 + s33 - 2 * s11 - 1.0);

    r.unitarity_magnitude[0] =
        std::abs(s11 * s11 + n2(s21) + n2(s31) + n2(s41) + n2(s51) - 1.0);
    r.unitarity_magnitude[1] =
        std::abs(n2(s21) + s22 * s22 + n2(s32) + n2(s42) + n2(s41) - 1.0);
    r.unitarity_magnitude[2] = std::abs(2 * n2(s31) + 2 * n2(s32) + s33 * s33 - 1.0);

    r.unitarity_phase[0] = std::abs(2.0 * s11 * s51 + 2.0 * s21 * s41 + s31 * s31);
    r.unitarity_phase[1] = std::abs(2.0 * cj(s21) * s41 + 2.0 * s22 * s42 + s32 * s32);
    r.unitarity_phase[2] = std::abs(-s11 * s21 + s21 * s22 + s31 * cj(s32) +
                                    s41 * cj(s42) - s51 * cj(s41));
    r.unitarity_phase[3] = std::abs(-s11 * s31 + s21 * s32 + s31 * s33 +
                                    s41 * cj(s32) - s51 * cj(s31));
    r.unitarity_phase[4] = std::abs(-s11 * s41 + s21 * s42 + s31 * s32 +
                                    s41 * s22 - s51 * cj(s21));
    r.unitarity_phase[5] = std::abs(cj(s21) * s31 + s22 * s32 + s32 * s33 +
                                    s42 * cj(s32) + s41 * cj(s31));

    // HC1: S22 = X.
    r.hierarchy[0] = std::abs(s22 - ex.x);
    // HC2: det of the leading 2x2 block = Y.
    r.hierarchy[1] = std::abs(s11 * s22 + cj(s21) * s21 - ex.y);
    // HC3: det of the leading 3x3 block = Y.
    r.hierarchy[2] = std::abs(detail::det3({{{cxd(s11), -cj(s21), -cj(s31)},
                                             {s21, cxd(s22), cj(s32)},
                                             {s31, s32, cxd(s33)}}}) -
                              ex.y);
    // HC4: det of the 4x4 submatrix on levels {1,2,3,5} = X.
    {
        const std::array<std::array<cxd, 4>, 4> m{{{cxd(s11), -cj(s21), -cj(s31), cj(s51)},
                                                   {s21, cxd(s22), cj(s32), cj(s41)},
                                                   {s31, s32, cxd(s33), cj(s31)},
                                                   {s51, -s41, -s31, cxd(s11)}}};
        cxd det4(0.0);
        double sign = 1.0;
        for (int c = 0; c < 4; ++c) {
            std::array<std::array<cxd, 3>, 3> minor{};
            for (int i = 1; i < 4; ++i) {
                int cc = 0;
                for (int j = 0; j < 4; ++j) {
                    if (j == c) continue;
                    minor[i - 1][cc++] = m[i][j];
                }
            }
            det4 += sign * m[0][c] * detail::det3(minor);
            sign = -sign;
        }
        r.hierarchy[3] = std::abs(det4 - ex.x);
    }

    r.max_residual = r.bipartite;
    for (double v : r.unitarity_magnitude) r.max_residual = std::max(r.max_residual, v);
    for (double v : r.unitarity_phase) r.max_residual = std::max(r.max_residual, v);
    for (double v : r.hierarchy) r.max_residual = std::max(r.max_residual, v);
    return r;
}

// Observable vector for the propagator's window-doubling test: the 14
// constraint residuals plus the pattern-extraction residual, all invariant
// under the residual phase drift of the off-diagonal entries.
inline ObservableFn convergence_observables(const LZExponents& ex) {
    return [ex](const MatrixXcd& s) {
        const SymmetryForm f = extract_symmetry_form(s);
        const ConstraintReport r = check_all(f, ex);
        std::vector<double> obs{r.bipartite};
        obs.insert(obs.end(), r.unitarity_magnitude.begin(), r.unitarity_magnitude.end());
        obs.insert(obs.end(), r.unitarity_phase.begin(), r.unitarity_phase.end());
        obs.insert(obs.end(), r.hierarchy.begin(), r.hierarchy.end());
        obs.push_back(f.extraction_residual);
        return obs;
    };
}

// ------------------------------ reconstruction --------------------------------

enum class PhaseBranch { Plus, Minus, Both };

// All real elements and magnitudes of S expressed through (S33, |S32|) and the
// exponents, plus (after recover_phases) the rotated elements of one branch.
struct ReconstructedS {
    double s11{0}, s22{0}, s33{0};
    double mag21{0}, mag31{0}, mag41{0}, mag51{0}, mag32{0}, mag42{0};
    double z{0};
    PhaseBranch branch{PhaseBranch::Both};
    // S̃21, S̃41, S̃51, S̃42 of the selected branch.
    std::optional<std::array<cxd, 4>> rotated{};
};

inline ReconstructedS reconstruct_magnitudes(double s33, double mag32,
                                             const LZExponents& ex) {
    if (!(mag32 >= 0)) throw ParameterError("reconstruct_magnitudes: |S32| must be >= 0");
    if (std::abs(s33) > 1.0 + 1e-9)
        throw ParameterError("reconstruct_magnitudes: S33 must lie in [-1, 1]");
    s33 = std::clamp(s33, -1.0, 1.0);
    if (ex.y < 1e-300)
        throw AdiabaticUnderflowError(
            "reconstruct_magnitudes: Y underflows; the adiabatic regime is out of range");

    const double x = ex.x, y = ex.y;
    const double m32sq = mag32 * mag32;
    const double znum = x * (1.0 + s33) - m32sq;
    const double z = znum * znum / (4.0 * y);

    ReconstructedS r;
    r.s33 = s33;
    r.mag32 = mag32;
    r.s11 = 0.5 * (s33 - 1.0) + x;
    r.s22 = x;
    r.z = z;

    constexpr double kClamp = 1e-9;
    auto mag_from_sq = [&](double sq, const char* name) {
        if (sq < -kClamp)
            throw InfeasibleInputError(std::string("reconstruct_magnitudes: ") + name +
                                       "^2 < 0; (S33, |S32|) inconsistent with X, Y");
        return std::sqrt(std::max(sq, 0.0));
    };
    r.mag21 = mag_from_sq(-0.5 * x * (s33 - 1.0) - x * x + y, "|S21|");
    r.mag31 = mag_from_sq(0.5 * (1.0 - s33 * s33) - m32sq, "|S31|");
    r.mag41 = mag_from_sq(-0.5 * x * (s33 - 1.0) - x * x + z, "|S41|");
    r.mag51 = mag_from_sq(0.25 * (1.0 + s33) * (1.0 + s33) + m32sq + x * x - y - z,
                          "|S51|");
    r.mag42 = mag_from_sq(1.0 + x * (s33 - 1.0) - m32sq + x * x - y - z, "|S42|");
    return r;
}

// ------------------------------ rotated elements ------------------------------

// S̃21, S̃41, S̃51, S̃42: the phase combinations from which arg S31 and arg S32
// drop out of every constraint.
inline std::array<cxd, 4> rotate_elements(const SymmetryForm& f) {
    if (std::abs(f.s31) < 1e-300 || std::abs(f.s32) < 1e-300)
        throw UndefinedRotationError("rotate_elements: vanishing S31 or S32");
    const double a31 = std::arg(f.s31), a32 = std::arg(f.s32);
    return {f.s21 * std::polar(1.0, -a31 + a32), f.s41 * std::polar(1.0, -a31 - a32),
            f.s51 * std::polar(1.0, -2.0 * a31), f.s42 * std::polar(1.0, -2.0 * a32)};
}

// Residuals of the rotated-frame constraints (A1)-(A8) for a reconstructed set
// with rotated elements filled.
inline std::array<double, 8> rotated_constraint_residuals(const ReconstructedS& r,
                                                          const LZExponents& ex) {
    if (!r.rotated) throw ParameterError("rotated_constraint_residuals: rotated values missing");
    const auto& [t21, t41, t51, t42] = *r.rotated;
    const double s11 = r.s11, s22 = r.s22, s33 = r.s33;
    const double m31 = r.mag31, m32 = r.mag32;
    auto cj = [](const cxd& z) { return std::conj(z); };
    std::array<double, 8> res{};
    res[0] = std::abs(2.0 * s11 * t51 + 2.0 * t21 * t41 + m31 * m31);
    res[1] = std::abs(2.0 * cj(t21) * t41 + 2.0 * s22 * t42 + m32 * m32);
    res[2] = std::abs((s22 - s11) * t21 + m31 * m32 + t41 * cj(t42) - t51 * cj(t41));
    res[3] = std::abs((s33 - s11) * m31 + t21 * m32 + t41 * m32 - t51 * m31);
    res[4] = std::abs((s22 - s11) * t41 + t21 * t42 + m31 * m32 - t51 * cj(t21));
    res[5] = std::abs((s22 + s33) * m32 + cj(t21) * m31 + t42 * m32 + t41 * m31);
    res[6] = std::abs(ex.y * s33 - s11 * m32 * m32 + s22 * m31 * m31 -
                      m31 * m32 * (t21 + cj(t21)).real() - ex.y);
    res[7] = std::abs(((1.0 + s11) * (1.0 + s11) - r.mag51 * r.mag51) * (s11 - s22) +
                      m31 * m31 * (1.0 + s11 - 0.5 * (t51 + cj(t51)).real()));
    return res;
}

// ------------------------------- phase recovery -------------------------------

// Determine the rotated elements from the real elements and magnitudes, up to
// the overall sign of their phases: Re S̃21 from (A7), Im S̃21 = ±√(...), then
// S̃41 from (A12), S̃51 from (A9), S̃42 from (A10). Returns the (+,-) branch
// pair; the branches are exact complex conjugates. Only a caller holding a
// numerically propagated S can select between them.
inline std::pair<ReconstructedS, ReconstructedS> recover_phases(const ReconstructedS& r,
                                                                const LZExponents& ex) {
    if (!(r.mag31 > 0.0) || !(r.mag32 > 0.0))
        throw SingularRecoveryError("recover_phases: requires |S31| > 0 and |S32| > 0");
    if (std::abs(r.s11) < 1e-12 || std::abs(r.s22) < 1e-12)
        throw SingularRecoveryError("recover_phases: S11 or S22 vanishes");

    const double s11 = r.s11, s22 = r.s22, s33 = r.s33;
    const double m31 = r.mag31, m32 = r.mag32;

    const double re21 = (ex.y * s33 - s11 * m32 * m32 + s22 * m31 * m31 - ex.y) /
                        (2.0 * m31 * m32);
    const double disc = r.mag21 * r.mag21 - re21 * re21;
    if (disc < -1e-9)
        throw InfeasibleInputError("recover_phases: (Re S~21)^2 exceeds |S21|^2");
    const double im21 = std::sqrt(std::max(disc, 0.0));

    auto build = [&](double im, PhaseBranch branch) {
        const cxd t21(re21, im);
        const double ratio = m32 / m31;
        const cxd den = t21 + s11 * ratio;
        if (std::abs(den) < 1e-12)
            throw SingularRecoveryError("recover_phases: singular denominator in (A12)");
        const cxd t41 = -(s11 * (s33 - s11) + 0.5 * m31 * m31 + s11 * t21 * ratio) / den;
        const cxd t51 = -(t21 * t41 + 0.5 * m31 * m31) / s11;
        const cxd t42 = -(std::conj(t21) * t41 + 0.5 * m32 * m32) / s22;
        ReconstructedS out = r;
        out.branch = branch;
        out.rotated = {{t21, t41, t51, t42}};
        return out;
    };
    return {build(im21, PhaseBranch::Plus), build(-im21, PhaseBranch::Minus)};
}

}  // namespace lz
