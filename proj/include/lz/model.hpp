// model.hpp — Linear-in-time Hamiltonians: the generic H(t) = B·t + A form,
// the 5-state single-crossing model, and its Landau-Zener exponents.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lz {

using cxd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ----------------------------- generic model --------------------------------

// H(t) = diag(slopes)·t + couplings. Couplings must be Hermitian with zero
// diagonal (single-crossing-point bipartite models only).
struct LZModelSpec {
    int n_levels{0};
    VectorXd slopes;      // one real slope per level
    MatrixXcd couplings;  // constant Hermitian part, zero diagonal

    void validate() const {
        if (n_levels <= 0) throw ParameterError("LZModelSpec: n_levels must be positive");
        if (slopes.size() != n_levels || couplings.rows() != n_levels ||
            couplings.cols() != n_levels)
            throw ParameterError("LZModelSpec: inconsistent dimensions");
        const double scale = couplings.cwiseAbs().maxCoeff() + 1.0;
        if ((couplings - couplings.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw ParameterError("LZModelSpec: couplings must be Hermitian");
        if (couplings.diagonal().cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw ParameterError("LZModelSpec: couplings must have zero diagonal");
    }
};

inline MatrixXcd build_generic(const LZModelSpec& spec, double t) {
    spec.validate();
    MatrixXcd h = spec.couplings;
    h.diagonal() += (spec.slopes * t).cast<cxd>();
    return h;
}

// ---------------------------- 5-state model ----------------------------------

// The 5 physical parameters plus the sweep scale β. b1, b2 are unit-β slope
// coefficients; effective slopes are β·b1, β·b2 with b2 > b1 > 0.
struct FiveStateParams {
    double b1{1.0};
    double b2{2.0};
    double g12{0.0};
    double g13{0.0};
    double g14{0.0};
    double beta{1.0};

    void validate() const {
        if (!(beta > 0.0)) throw ParameterError("FiveStateParams: beta must be > 0");
        if (!(b1 > 0.0) || !(b2 > b1))
            throw ParameterError("FiveStateParams: slopes must satisfy b2 > b1 > 0");
    }
};

// 5x5 matrix of the model: diag(-βb1·t, -βb2·t, 0, βb2·t, βb1·t) plus the fixed
// antisymmetric-mirrored coupling pattern. Real symmetric.
inline MatrixXcd build_five_state(const FiveStateParams& p, double t) {
    p.validate();
    const double s1 = p.beta * p.b1 * t;
    const double s2 = p.beta * p.b2 * t;
    MatrixXd h(5, 5);
    // clang-format off
    h <<  -s1,    p.g12,  p.g13,  p.g14,  0.0,
          p.g12,  -s2,    0.0,    0.0,   -p.g14,
          p.g13,  0.0,    0.0,    0.0,   -p.g13,
          p.g14,  0.0,    0.0,    s2,    -p.g12,
          0.0,   -p.g14, -p.g13, -p.g12,  s1;
    // clang-format on
    return h.cast<cxd>();
}

// Same model packed as a generic spec (slopes carry the β scaling).
inline LZModelSpec five_state_spec(const FiveStateParams& p) {
    p.validate();
    LZModelSpec spec;
    spec.n_levels = 5;
    spec.slopes.resize(5);
    spec.slopes << -p.beta * p.b1, -p.beta * p.b2, 0.0, p.beta * p.b2, p.beta * p.b1;
    spec.couplings = build_five_state(p, 0.0);
    return spec;
}

// Time-reversal operator Θ = diag(-1,1,1,1,-1) and the anti-diagonal chiral
// operator Γ, as 5x5 matrices.
inline MatrixXd theta_operator() {
    VectorXd d(5);
    d << -1, 1, 1, 1, -1;
    return d.asDiagonal();
}

inline MatrixXd gamma_operator() {
    MatrixXd g = MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) g(i, 4 - i) = 1.0;
    return g;
}

// ------------------------------ LZ exponents ---------------------------------

// Ω_1i at the β-scaled slopes, the pairwise survival probabilities
// p_1i = exp(-2πΩ_1i), the β-independent exponents γ_i = β·π·Ω_1i, and the
// hierarchy-constraint combinations X = √(p12·p14), Y = √p13·p14.
struct LZExponents {
    double omega12{0}, omega13{0}, omega14{0};
    double p12{1}, p13{1}, p14{1};
    double gamma2{0}, gamma3{0}, gamma4{0};
    double x{1}, y{1};
};

inline LZExponents compute_exponents(const FiveStateParams& p) {
    p.validate();
    LZExponents ex;
    ex.omega12 = p.g12 * p.g12 / ((p.b2 - p.b1) * p.beta);
    ex.omega13 = p.g13 * p.g13 / (p.b1 * p.beta);
    ex.omega14 = p.g14 * p.g14 / ((p.b1 + p.b2) * p.beta);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    ex.p12 = std::exp(-two_pi * ex.omega12);
    ex.p13 = std::exp(-two_pi * ex.omega13);
    ex.p14 = std::exp(-two_pi * ex.omega14);
    // γ_i is normalized to β = 1 so that γ_i/β equals πΩ_1i at any sweep rate.
    ex.gamma2 = std::numbers::pi * ex.omega12 * p.beta;
    ex.gamma3 = std::numbers::pi * ex.omega13 * p.beta;
    ex.gamma4 = std::numbers::pi * ex.omega14 * p.beta;
    ex.x = std::sqrt(ex.p12 * ex.p14);
    ex.y = std::sqrt(ex.p13) * ex.p14;
    return ex;
}

}  // namespace lz
