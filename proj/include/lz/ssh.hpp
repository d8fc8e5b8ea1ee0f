// ssh.hpp — Odd-sized SSH chains under the linear quench J1 = 1/2 + βt,
// J2 = 1/2 - βt: closed-form mapping to standard-form LZ models, the N = 3
// identification with the 5-state model, and edge-transfer amplitudes.

#pragma once

#include "model.hpp"
#include "propagator.hpp"

#include <cmath>
#include <numbers>

namespace lz {

struct UnsupportedSizeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Chain with 2N-1 sites; fully dimerized at t = ±1/(2β).
struct SSHChainSpec {
    int n_half{3};  // N
    double beta{1.0};

    void validate() const {
        if (n_half < 2) throw ParameterError("SSHChainSpec: requires N >= 2");
        if (!(beta > 0)) throw ParameterError("SSHChainSpec: beta must be > 0");
    }
    int sites() const { return 2 * n_half - 1; }
};

// Tridiagonal chain Hamiltonian with alternating J1(t), J2(t), zero diagonal.
inline MatrixXd build_ssh_hamiltonian(const SSHChainSpec& spec, double t) {
    spec.validate();
    const int n = spec.sites();
    const double j1 = 0.5 + spec.beta * t;
    const double j2 = 0.5 - spec.beta * t;
    MatrixXd h = MatrixXd::Zero(n, n);
    for (int x = 0; x + 1 < n; ++x) {
        const double j = (x % 2 == 0) ? j1 : j2;
        h(x, x + 1) = j;
        h(x + 1, x) = j;
    }
    return h;
}

// The diabatic-basis data of the mapped LZ model. Rows/columns carry the
// symmetric level index l = -N+1..N-1 stored at array position l+N-1.
struct SSHMapping {
    MatrixXd v_matrix;  // orthogonal; columns are the eigenmodes ψ_j of B/β
    VectorXd b_lz;      // (B_LZ)_{l,l} = 2β sin(k_l/2), strictly increasing
    MatrixXd a_lz;      // closed-form constant couplings (β-independent)
};

namespace detail {

// Static half-sum part A of H_SSH = B t + A (all off-diagonals 1/2).
inline MatrixXd ssh_static_part(int sites) {
    MatrixXd a = MatrixXd::Zero(sites, sites);
    for (int x = 0; x + 1 < sites; ++x) a(x, x + 1) = a(x + 1, x) = 0.5;
    return a;
}

}  // namespace detail

// Eigenvectors ψ_{x,j} = (1/√N)·sin(k_j x/2) for even sites, cos for odd
// (paper sign convention, no re-normalization), k_j = πj/N; the closed-form
// B_LZ and A_LZ. A_LZ is cross-checked against V^T A V on construction.
inline SSHMapping build_mapping(const SSHChainSpec& spec) {
    spec.validate();
    const int n_half = spec.n_half;
    const int n = spec.sites();
    SSHMapping m;
    m.v_matrix.resize(n, n);
    m.b_lz.resize(n);
    m.a_lz = MatrixXd::Zero(n, n);

    const double inv_sqrt_n = 1.0 / std::sqrt(double(n_half));
    auto k_of = [&](int l) { return std::numbers::pi * l / double(n_half); };
    for (int l = -n_half + 1; l <= n_half - 1; ++l) {
        const int col = l + n_half - 1;
        const double k = k_of(l);
        for (int x = 1; x <= n; ++x)
            m.v_matrix(x - 1, col) = inv_sqrt_n * (x % 2 == 0 ? std::sin(0.5 * k * x)
                                                              : std::cos(0.5 * k * x));
        m.b_lz[col] = 2.0 * spec.beta * std::sin(0.5 * k);
    }

    for (int l = -n_half + 1; l <= n_half - 1; ++l)
        for (int mm = -n_half + 1; mm <= n_half - 1; ++mm) {
            if ((l + mm) % 2 == 0) continue;
            const double cl = std::cos(0.5 * k_of(l)), cm = std::cos(0.5 * k_of(mm));
            const double sl = std::sin(0.5 * k_of(l)), sm = std::sin(0.5 * k_of(mm));
            // Opposite-parity indices are never sign-opposite equal, so the
            // denominator cannot vanish within the index range.
            m.a_lz(l + n_half - 1, mm + n_half - 1) = cl * cm / (sl + sm) / double(n_half);
        }

    const MatrixXd direct =
        m.v_matrix.transpose() * detail::ssh_static_part(n) * m.v_matrix;
    if ((m.a_lz - direct).cwiseAbs().maxCoeff() > 1e-10)
        throw std::logic_error("build_mapping: closed-form A_LZ disagrees with V^T A V");
    return m;
}

// Generic LZ spec of the mapped model (slopes b_lz, couplings a_lz).
inline LZModelSpec lz_spec_from_mapping(const SSHMapping& m) {
    LZModelSpec spec;
    spec.n_levels = static_cast<int>(m.b_lz.size());
    spec.slopes = m.b_lz;
    spec.couplings = m.a_lz.cast<cxd>();
    return spec;
}

// N = 3 only: permute the LZ levels (-2,-1,0,1,2) to the 5-state labels
// (2,1,3,5,4) and return the closed-form parameter set.
inline FiveStateParams to_five_state(const SSHChainSpec& spec) {
    spec.validate();
    if (spec.n_half != 3)
        throw UnsupportedSizeError("to_five_state: only N = 3 (5 sites) is supported");

    const double sqrt3 = std::numbers::sqrt3;
    FiveStateParams p;
    p.b1 = 1.0;
    p.b2 = sqrt3;
    p.g12 = -(3.0 - sqrt3) / 12.0;
    p.g13 = -sqrt3 / 3.0;
    p.g14 = (3.0 + sqrt3) / 12.0;
    p.beta = spec.beta;

    // Guard the transcription: the permuted mapping must reproduce it exactly.
    const SSHMapping m = build_mapping(spec);
    const std::array<int, 5> perm{1, 0, 2, 4, 3};  // 5-state level i -> LZ index
    const LZModelSpec five = five_state_spec(p);
    for (int i = 0; i < 5; ++i) {
        if (std::abs(five.slopes[i] - m.b_lz[perm[i]]) > 1e-12 * spec.beta)
            throw std::logic_error("to_five_state: slope mismatch against the mapping");
        for (int j = 0; j < 5; ++j)
            if (std::abs(five.couplings(i, j).real() - m.a_lz(perm[i], perm[j])) > 1e-12)
                throw std::logic_error("to_five_state: coupling mismatch against the mapping");
    }
    return p;
}

// Quench amplitudes over t ∈ [-1/(2β), 1/(2β)] starting from the left edge:
// s_1to1 = <1|U|1>, s_1toN = <2N-1|U|1>.
struct EdgeTransfer {
    cxd s_1to1;
    cxd s_1toN;
};

inline EdgeTransfer edge_transfer(const SSHChainSpec& spec, const SolverSettings& settings) {
    spec.validate();
    const double t_half = 0.5 / spec.beta;
    const MatrixXcd u = quench_window(
        [&spec](double t) { return MatrixXcd(build_ssh_hamiltonian(spec, t).cast<cxd>()); },
        -t_half, t_half, settings);
    return {u(0, 0), u(spec.sites() - 1, 0)};
}

}  // namespace lz
