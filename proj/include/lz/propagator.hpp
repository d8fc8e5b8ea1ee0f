// propagator.hpp — Adaptive Dormand-Prince propagation of U' = -iH(t)U in the
// lab or interaction picture, finite-window quench evolution, and extraction
// of the scattering matrix S = lim U_I(T,-T) by window doubling with
// asymptotic tail (flank) corrections.

#pragma once

#include "model.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace lz {

struct SolverSettings {
    double rel_tol{1e-10};              // local step error, relative
    double abs_tol{1e-12};              // local step error, absolute
    std::optional<double> t_window{};   // half-window T; nullopt = AUTO
    double window_tol{1e-4};            // doubling convergence threshold
    int max_doublings{6};

    void validate() const {
        if (!(rel_tol > 0) || !(abs_tol > 0) || !(window_tol > 0))
            throw ParameterError("SolverSettings: tolerances must be > 0");
        if (max_doublings < 0)
            throw ParameterError("SolverSettings: max_doublings must be >= 0");
        if (t_window && !(*t_window > 0))
            throw ParameterError("SolverSettings: t_window must be > 0");
    }
};

enum class Frame { Lab, Interaction };

struct IntegrationError : std::runtime_error {
    double time_reached;
    IntegrationError(const std::string& msg, double t)
        : std::runtime_error(msg + " (time reached " + std::to_string(t) + ")"),
          time_reached(t) {}
};

// Converged scattering matrix in the interaction-picture convention, with the
// probability matrix P_ij = |S_ij|^2 and window/tolerance metadata.
struct ScatteringResult {
    MatrixXcd s_matrix;
    MatrixXd p_matrix;
    double t_window_used{0};
    bool converged{false};
    double unitarity_residual{0};
    // Diagnostic only: max |arg S_jk| change of significant entries between the
    // two last windows. Off-diagonal phases may drift; no conclusion is drawn.
    double phase_drift{0};
};

// Extra phase-invariant observables (e.g. constraint residuals) folded into
// the window-doubling convergence test alongside the probabilities.
using ObservableFn = std::function<std::vector<double>(const MatrixXcd&)>;

// ------------------------------ integrator core ------------------------------

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
    static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr std::array<std::array<double, 6>, 7> a{{
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
    }};
    // b (5th order solution) equals a[6]; e = b - b* weights the embedded error.
    static constexpr std::array<double, 7> e{71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                                             -17253.0 / 339200, 22.0 / 525, -1.0 / 40};
};

// Integrates dU/dt = -i H(t) U from t_i to t_f (t_i < t_f) for the full matrix
// (all columns share one adaptive step history). `gen` fills G(t) = -i H(t);
// `cap` returns the anti-aliasing step ceiling at time t (or +inf). MatT is
// either MatrixXcd or a fixed-size specialization of the same scalar.
template <class MatT, class GenFn, class CapFn>
MatT integrate_core(int n, GenFn&& gen, double t_i, double t_f, double rel_tol,
                    double abs_tol, CapFn&& cap) {
    if (!(t_i < t_f)) throw ParameterError("integrate_core: requires t_i < t_f");
    const double span = t_f - t_i;
    const double h_min = 1e-14 * span;

    MatT u = MatT::Identity(n, n);
    MatT g_mat(n, n), u_stage(n, n), u_new(n, n), err_mat(n, n);
    std::array<MatT, 7> k;
    for (auto& m : k) m.resize(n, n);

    auto rhs = [&](double t, const MatT& state, MatT& out) {
        gen(t, g_mat);
        out.noalias() = g_mat * state;
    };

    double t = t_i;
    rhs(t, u, k[0]);  // k[0] is kept valid for (t, u) across rejected steps (FSAL)
    double h = std::min({span, 0.1 / (g_mat.cwiseAbs().maxCoeff() + 1e-3),
                         cap(t_i), cap(t_f)});

    while (t < t_f) {
        h = std::min(h, t_f - t);
        h = std::min({h, cap(t), cap(t + h)});
        if (h < h_min)
            throw IntegrationError("integrate_core: step size underflow", t);

        for (int s = 1; s < 7; ++s) {
            u_stage = u;
            for (int j = 0; j < s; ++j)
                if (Dopri5::a[s][j] != 0.0) u_stage.noalias() += (h * Dopri5::a[s][j]) * k[j];
            rhs(t + Dopri5::c[s] * h, u_stage, k[s]);
        }
        u_new = u_stage;  // stage 7 state is the 5th-order solution (FSAL)

        err_mat.setZero();
        for (int s = 0; s < 7; ++s)
            if (Dopri5::e[s] != 0.0) err_mat.noalias() += (h * Dopri5::e[s]) * k[s];
        const double err =
            (err_mat.cwiseAbs().array() /
             (abs_tol + rel_tol * u.cwiseAbs().cwiseMax(u_new.cwiseAbs()).array()))
                .maxCoeff();

        if (err <= 1.0) {
            t += h;
            u.swap(u_new);
            k[0].swap(k[6]);
        }
        const double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h *= std::clamp(factor, 0.2, 5.0);
    }
    return u;
}

// Size-5 matrices (the model of interest) run on fixed-size Eigen types.
template <class GenFn, class CapFn>
MatrixXcd integrate_schrodinger(int n, GenFn&& gen, double t_i, double t_f,
                                double rel_tol, double abs_tol, CapFn&& cap) {
    if (n == 5) {
        using Mat5 = Eigen::Matrix<cxd, 5, 5>;
        return integrate_core<Mat5>(n, std::forward<GenFn>(gen), t_i, t_f, rel_tol,
                                    abs_tol, std::forward<CapFn>(cap));
    }
    return integrate_core<MatrixXcd>(n, std::forward<GenFn>(gen), t_i, t_f, rel_tol,
                                     abs_tol, std::forward<CapFn>(cap));
}

// Largest pairwise slope difference over coupled (nonzero A_jk) pairs, and the
// smallest nonzero one. Used for the chirp step cap and the AUTO window.
inline std::pair<double, double> coupled_slope_gaps(const LZModelSpec& spec) {
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (int j = 0; j < spec.n_levels; ++j)
        for (int kk = j + 1; kk < spec.n_levels; ++kk) {
            if (std::abs(spec.couplings(j, kk)) == 0.0) continue;
            const double d = std::abs(spec.slopes[j] - spec.slopes[kk]);
            mx = std::max(mx, d);
            if (d > 0.0) mn = std::min(mn, d);
        }
    return {mx, mn};
}

// Fills G(t) = -i H_I(t) with H_I(t)_jk = A_jk·exp(i(b_j-b_k)t²/2).
inline auto interaction_ham(const LZModelSpec& spec) {
    const int n = spec.n_levels;
    const MatrixXcd minus_i_a = cxd(0.0, -1.0) * spec.couplings;
    return [slopes = spec.slopes, minus_i_a, phase = Eigen::VectorXcd(n)](
               double t, auto& g) mutable {
        const int nn = static_cast<int>(slopes.size());
        const double t2h = 0.5 * t * t;
        for (int j = 0; j < nn; ++j) phase[j] = std::polar(1.0, slopes[j] * t2h);
        for (int col = 0; col < nn; ++col) {
            const cxd pc = std::conj(phase[col]);
            for (int row = 0; row < nn; ++row)
                g(row, col) = minus_i_a(row, col) * phase[row] * pc;
        }
    };
}

// Fills G(t) = -i (A + diag(b)·t).
inline auto lab_ham(const LZModelSpec& spec) {
    const MatrixXcd minus_i_a = cxd(0.0, -1.0) * spec.couplings;
    return [slopes = spec.slopes, minus_i_a](double t, auto& g) {
        g = minus_i_a;
        for (int j = 0; j < slopes.size(); ++j) g(j, j) -= cxd(0.0, slopes[j] * t);
    };
}

// Anti-aliasing cap 0.2/(rate·|t| + 1) so steps resolve the quadratic phases.
inline auto chirp_cap(double rate) {
    return [rate](double t) { return 0.2 / (rate * std::abs(t) + 1.0); };
}

inline auto no_cap() {
    return [](double) { return std::numeric_limits<double>::infinity(); };
}

}  // namespace detail

// ------------------------------ window evolution -----------------------------

// Time-ordered evolution operator U(t_f, t_i) of the spec in the requested
// frame. In the interaction frame H_I(t)_jk = A_jk·exp(i(b_j-b_k)t²/2).
inline MatrixXcd evolve_window(const LZModelSpec& spec, double t_i, double t_f,
                               const SolverSettings& settings, Frame frame) {
    spec.validate();
    settings.validate();
    const auto [gap_max, gap_min] = detail::coupled_slope_gaps(spec);
    if (frame == Frame::Interaction) {
        return detail::integrate_schrodinger(spec.n_levels, detail::interaction_ham(spec),
                                             t_i, t_f, settings.rel_tol, settings.abs_tol,
                                             detail::chirp_cap(gap_max));
    }
    const double lab_rate = spec.slopes.cwiseAbs().maxCoeff();
    return detail::integrate_schrodinger(spec.n_levels, detail::lab_ham(spec), t_i, t_f,
                                         settings.rel_tol, settings.abs_tol,
                                         detail::chirp_cap(lab_rate));
}

// Lab-frame evolution over a finite window for an arbitrary Hermitian H(t)
// supplied by the caller (used for the SSH quench).
template <class HBuilder>
MatrixXcd quench_window(HBuilder&& h_of_t, double t_i, double t_f,
                        const SolverSettings& settings) {
    settings.validate();
    MatrixXcd probe = h_of_t(t_i);
    const int n = static_cast<int>(probe.rows());
    auto gen = [&h_of_t](double t, auto& g) { g = cxd(0.0, -1.0) * h_of_t(t); };
    return detail::integrate_schrodinger(n, gen, t_i, t_f, settings.rel_tol,
                                         settings.abs_tol, detail::no_cap());
}

// --------------------------- asymptotic tail factors -------------------------

namespace detail {

// ∫_T^∞ e^{iωt²/2} dt by its large-ωT² asymptotic series (ω != 0).
inline cxd fresnel_tail(double omega, double t) {
    if (omega < 0) return std::conj(fresnel_tail(-omega, t));
    const cxd inv_iw(0.0, -1.0 / omega);  // 1/(iω)
    cxd term = -std::polar(1.0, 0.5 * omega * t * t) * inv_iw / t;
    cxd sum = term;
    for (int m = 1; m <= 5; ++m) {
        const cxd next = term * (2.0 * m - 1.0) * inv_iw / (t * t);
        if (std::abs(next) >= std::abs(term)) break;
        sum += next;
        term = next;
    }
    return sum;
}

// E_p(σ,T) = ∫_T^∞ e^{iσt²/2} t^{-p} dt for odd p ≥ 3 (σ may be zero) and for
// p = 1 with σ != 0. The divergent E_1(0) never reaches here.
inline cxd e_tail(int p, double sigma, double t) {
    if (sigma == 0.0) return cxd(1.0 / ((p - 1) * std::pow(t, p - 1)), 0.0);
    if (sigma < 0) return std::conj(e_tail(p, -sigma, t));
    const cxd inv_is(0.0, -1.0 / sigma);  // 1/(iσ)
    cxd term = -std::polar(1.0, 0.5 * sigma * t * t) * inv_is / std::pow(t, p + 1);
    cxd sum = term;
    for (int m = 1; m <= 5; ++m) {
        const cxd next = term * double(p + 2 * m - 1) * inv_is / (t * t);
        if (std::abs(next) >= std::abs(term)) break;
        sum += next;
        term = next;
    }
    return sum;
}

// Ordered double tail G(ω1,ω2,T) = ∫_T^∞ dt1 e^{iω1t1²/2} ∫_T^{t1} dt2 e^{iω2t2²/2},
// with the log-divergent piece at ω1+ω2 = 0 dropped (it is a pure diagonal
// phase that cancels between the two flanks for symmetric windows).
inline cxd ordered_double_tail(double w1, double w2, double t, double sigma_zero_scale) {
    const double sigma_raw = w1 + w2;
    const double sigma = std::abs(sigma_raw) < 1e-12 * sigma_zero_scale ? 0.0 : sigma_raw;
    cxd j(0.0, 0.0);
    // F(ω2,s) = e^{iω2s²/2}·Σ_m d_m s^{-(2m+1)}, d_m = -(2m-1)!!/(iω2)^{m+1}
    const cxd inv_iw2(0.0, -1.0 / w2);
    cxd d = -inv_iw2;
    for (int m = 0; m <= 3; ++m) {
        if (!(sigma == 0.0 && m == 0)) j += d * e_tail(2 * m + 1, sigma, t);
        d *= (2.0 * m + 1.0) * inv_iw2;
    }
    return fresnel_tail(w1, t) * fresnel_tail(w2, t) - j;
}

struct FlankFactors {
    MatrixXcd left, right;
    bool applied{false};
};

// Unitary tail factors L = exp(-iM1 - W), R = exp(-iM1 + W) approximating the
// evolution over (T,∞) and (-∞,-T) to second order in the tail couplings.
inline FlankFactors flank_factors(const LZModelSpec& spec, double t_window) {
    const int n = spec.n_levels;
    FlankFactors f;

    double min_gap_t2 = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m) {
            if (j == m || std::abs(spec.couplings(j, m)) == 0.0) continue;
            min_gap_t2 = std::min(min_gap_t2,
                                  std::abs(spec.slopes[j] - spec.slopes[m]) * t_window * t_window);
        }
    if (!(min_gap_t2 >= 25.0)) return f;  // not in the asymptotic zone

    MatrixXcd m1 = MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j)
        for (int m = 0; m < n; ++m) {
            if (j == m || std::abs(spec.couplings(j, m)) == 0.0) continue;
            m1(j, m) = spec.couplings(j, m) *
                       fresnel_tail(spec.slopes[j] - spec.slopes[m], t_window);
        }
    if (m1.cwiseAbs().maxCoeff() > 0.15) return f;  // tail not perturbative yet

    const double slope_scale = spec.slopes.cwiseAbs().maxCoeff() + 1.0;
    bool second_order_ok = true;
    MatrixXcd d2 = MatrixXcd::Zero(n, n);
    for (int j = 0; j < n && second_order_ok; ++j)
        for (int m = 0; m < n && second_order_ok; ++m)
            for (int kk = 0; kk < n; ++kk) {
                if (std::abs(spec.couplings(j, kk)) == 0.0 ||
                    std::abs(spec.couplings(kk, m)) == 0.0)
                    continue;
                const double w1 = spec.slopes[j] - spec.slopes[kk];
                const double w2 = spec.slopes[kk] - spec.slopes[m];
                const double sigma = std::abs(w1 + w2);
                if (sigma > 1e-12 * slope_scale && sigma * t_window * t_window < 25.0) {
                    second_order_ok = false;  // mixed chirp too slow for the series
                    break;
                }
                d2(j, m) += spec.couplings(j, kk) * spec.couplings(kk, m) *
                            ordered_double_tail(w1, w2, t_window, slope_scale);
            }

    MatrixXcd w = MatrixXcd::Zero(n, n);
    if (second_order_ok) {
        w = d2 - 0.5 * m1 * m1;
        w = 0.5 * (w - w.adjoint()).eval();  // exactly anti-Hermitian by theory
    }

    auto expm_antihermitian = [](const MatrixXcd& omega) {
        const MatrixXcd herm = cxd(0.0, 1.0) * omega;  // iΩ is Hermitian
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm);
        Eigen::VectorXcd phases(herm.rows());
        for (int i = 0; i < herm.rows(); ++i)
            phases[i] = std::polar(1.0, -es.eigenvalues()[i]);
        return MatrixXcd(es.eigenvectors() * phases.asDiagonal() *
                         es.eigenvectors().adjoint());
    };

    const MatrixXcd im1 = cxd(0.0, 1.0) * m1;
    f.left = expm_antihermitian(-im1 - w);
    f.right = expm_antihermitian(-im1 + w);
    f.applied = true;
    return f;
}

}  // namespace detail

// ------------------------------ scattering matrix ----------------------------

// S = lim_{T→∞} U_I(T,-T), estimated at T = t_window (or the AUTO default)
// and refined by doubling T until the probabilities and any supplied
// phase-invariant observables change by less than window_tol.
inline ScatteringResult scattering_matrix(const LZModelSpec& spec,
                                          const SolverSettings& settings,
                                          const ObservableFn& extra_observables = {}) {
    spec.validate();
    settings.validate();
    const auto [gap_max, gap_min] = detail::coupled_slope_gaps(spec);
    for (int j = 0; j < spec.n_levels; ++j)
        for (int kk = j + 1; kk < spec.n_levels; ++kk)
            if (std::abs(spec.couplings(j, kk)) != 0.0 &&
                spec.slopes[j] == spec.slopes[kk])
                throw ParameterError("scattering_matrix: coupled levels must have distinct slopes");

    // LZ transition zone width scales as 1/√slope; the doubling test is the
    // actual convergence guarantee.
    const double t0 = settings.t_window
                          ? *settings.t_window
                          : std::max(10.0, 8.0 / std::sqrt(gap_min));

    auto ham = detail::interaction_ham(spec);
    const auto cap = detail::chirp_cap(gap_max);

    auto estimate = [&](const MatrixXcd& u_window, double t_win) {
        const auto flank = detail::flank_factors(spec, t_win);
        return flank.applied ? MatrixXcd(flank.left * u_window * flank.right) : u_window;
    };
    auto observe = [&](const MatrixXcd& s) {
        std::vector<double> obs;
        obs.reserve(spec.n_levels * spec.n_levels + 8);
        for (int j = 0; j < spec.n_levels; ++j)
            for (int kk = 0; kk < spec.n_levels; ++kk) obs.push_back(std::norm(s(j, kk)));
        if (extra_observables)
            for (double v : extra_observables(s)) obs.push_back(v);
        return obs;
    };

    double t_win = t0;
    MatrixXcd u_window = detail::integrate_schrodinger(
        spec.n_levels, ham, -t_win, t_win, settings.rel_tol, settings.abs_tol, cap);
    MatrixXcd s_est = estimate(u_window, t_win);
    MatrixXcd s_prev;
    std::vector<double> obs = observe(s_est);

    ScatteringResult result;
    result.converged = false;
    for (int k = 0; k < settings.max_doublings; ++k) {
        // Reuse the inner window: U(2T,-2T) = U(2T,T)·U(T,-T)·U(-T,-2T).
        MatrixXcd left = detail::integrate_schrodinger(
            spec.n_levels, ham, -2.0 * t_win, -t_win, settings.rel_tol, settings.abs_tol, cap);
        MatrixXcd right = detail::integrate_schrodinger(
            spec.n_levels, ham, t_win, 2.0 * t_win, settings.rel_tol, settings.abs_tol, cap);
        u_window = (right * u_window * left).eval();
        t_win *= 2.0;

        s_prev = s_est;
        s_est = estimate(u_window, t_win);
        std::vector<double> obs_new = observe(s_est);
        double change = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i)
            change = std::max(change, std::abs(obs_new[i] - obs[i]));
        obs = std::move(obs_new);
        if (change < settings.window_tol) {
            result.converged = true;
            break;
        }
    }

    result.s_matrix = s_est;
    result.p_matrix = s_est.cwiseAbs2();
    result.t_window_used = t_win;
    result.unitarity_residual =
        (s_est.adjoint() * s_est - MatrixXcd::Identity(spec.n_levels, spec.n_levels))
            .cwiseAbs()
            .maxCoeff();
    if (s_prev.size() == s_est.size()) {
        double drift = 0.0;
        for (int j = 0; j < spec.n_levels; ++j)
            for (int kk = 0; kk < spec.n_levels; ++kk) {
                if (std::abs(s_est(j, kk)) < 1e-6 || std::abs(s_prev(j, kk)) < 1e-6) continue;
                double d = std::arg(s_est(j, kk)) - std::arg(s_prev(j, kk));
                d = std::remainder(d, 2.0 * std::numbers::pi);
                drift = std::max(drift, std::abs(d));
            }
        result.phase_drift = drift;
    }
    return result;
}

}  // namespace lz
