#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fdkit/errors.hpp"
#include "fdkit/projection.hpp"
#include "fdkit/random.hpp"
#include "fdkit/signals.hpp"

namespace fdkit {

/// Convex generating function with gradient.
struct GeneratingFunction {
    std::function<double(const VectorXd&)> value;
    std::function<VectorXd(const VectorXd&)> gradient;
    bool convexity_checked = false;

    static GeneratingFunction quadratic() {
        GeneratingFunction g;
        g.value = [](const VectorXd& a) { return 0.5 * a.squaredNorm(); };
        g.gradient = [](const VectorXd& a) -> VectorXd { return a; };
        return g;
    }

    /// sum a_i ln a_i on the positive orthant.
    static GeneratingFunction negative_entropy() {
        GeneratingFunction g;
        g.value = [](const VectorXd& a) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < a.size(); ++i) s += a(i) * std::log(a(i));
            return s;
        };
        g.gradient = [](const VectorXd& a) -> VectorXd {
            VectorXd out(a.size());
            for (Eigen::Index i = 0; i < a.size(); ++i) out(i) = std::log(a(i)) + 1.0;
            return out;
        };
        return g;
    }
};

/// Midpoint convexity probe on random triples from [lo, hi]^dim.
inline bool check_convexity(GeneratingFunction& phi, int dim, CounterRng rng,
                            double lo, double hi, int trials = 1000) {
    for (int t = 0; t < trials; ++t) {
        VectorXd a(dim), b(dim);
        for (int i = 0; i < dim; ++i) {
            a(i) = rng.uniform(lo, hi);
            b(i) = rng.uniform(lo, hi);
        }
        const double th = rng.uniform01();
        const VectorXd mid = th * a + (1.0 - th) * b;
        if (phi.value(mid) > th * phi.value(a) + (1.0 - th) * phi.value(b) + 1e-12)
            return false;
    }
    phi.convexity_checked = true;
    return true;
}

/// D_phi[a : b] = phi(a) - phi(b) - grad phi(b)^T (a - b).
inline double bregman(const GeneratingFunction& phi, const VectorXd& a, const VectorXd& b) {
    if (a.size() != b.size())
        throw DimensionMismatch("bregman");
    return phi.value(a) - phi.value(b) - phi.gradient(b).dot(a - b);
}

/// Dual divergence: dualization swaps the arguments.
inline double dual_bregman(const GeneratingFunction& phi, const VectorXd& a, const VectorXd& b) {
    return bregman(phi, b, a);
}

// ---------------------------------------------------------------------------
// Windowed evaluation. The per-sample divergence is computed along two
// routes: the Hamiltonian deficit H0(z) - H and the squared residual
// ||z - zh||^2 / 2. With a healthy normalized projector the two agree; a
// disagreement flags a broken projector before it can corrupt a verdict.
// ---------------------------------------------------------------------------

struct DivergenceSeries {
    std::vector<double> values;           // 1/2 ||z - zh||^2 per sample
    double max_route_disagreement = 0.0;  // worst |(H0 - H) - value| seen
    int maximality_violations = 0;        // samples with H > H0 + 1e-9
};

/// Two-route per-sample divergence with the H series taken from the
/// projector's state-space Hamiltonian.
inline DivergenceSeries pointwise_divergence(const SignalWindow& data,
                                             const SirProjectionResult& run,
                                             double tol_scale = 1e-9) {
    const int M = data.count();
    if (static_cast<int>(run.zhat.size()) != M)
        throw LengthMismatch("pointwise_divergence");
    DivergenceSeries out;
    out.values.resize(M);
    for (int k = 0; k < M; ++k) {
        const VectorXd zk = data.z(k);
        const double h0 = 0.5 * zk.squaredNorm();
        const double direct = 0.5 * (zk - run.zhat[k]).squaredNorm();
        const double via_h = h0 - run.H_series[k];
        const double tol = tol_scale * (1.0 + zk.squaredNorm());
        const double dis = std::abs(via_h - direct);
        out.max_route_disagreement = std::max(out.max_route_disagreement, dis);
        if (dis > tol)
            throw FormulaDisagreement("sample " + std::to_string(k) + ": |" +
                                      std::to_string(via_h) + " - " + std::to_string(direct) +
                                      "| > " + std::to_string(tol));
        if (run.H_series[k] > h0 + 1e-9)
            ++out.maximality_violations;
        out.values[k] = direct;
    }
    return out;
}

/// Sequence overload: per-sample divergence from aligned samples, using the
/// closed-form Hamiltonian pair.
inline std::vector<double> pointwise_divergence(const std::vector<VectorXd>& z,
                                                const std::vector<VectorXd>& zhat) {
    if (z.size() != zhat.size())
        throw LengthMismatch("pointwise_divergence");
    auto [H, Hd] = hamiltonians_sir(z, zhat);
    std::vector<double> out(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double h0 = 0.5 * z[k].squaredNorm();
        const double direct = 0.5 * (z[k] - zhat[k]).squaredNorm();
        const double via_h = h0 - H[k];
        if (std::abs(via_h - direct) > 1e-9 * (1.0 + z[k].squaredNorm()))
            throw FormulaDisagreement("sample " + std::to_string(k));
        out[k] = direct;
    }
    return out;
}

struct WindowEvaluation {
    double J = 0.0;               // stacked form
    double pointwise_mean = 0.0;  // (1/M) sum of per-sample divergences
    double stack_defect = 0.0;    // |J - pointwise_mean|
    DivergenceSeries series;
};

/// Stacked evaluation 1/2 z_M^T z_M + 1/2 zh_M^T zh_M - zh_M^T z_M, with the
/// pointwise mean recomputed as a mandatory cross-check.
inline WindowEvaluation evaluate_J_sir(const SignalWindow& window,
                                       const SirProjectionResult& result) {
    const int M = window.count();
    if (M < 1)
        throw EmptyWindow("evaluate_J_sir");
    WindowEvaluation ev;
    ev.series = pointwise_divergence(window, result);

    const StackedVector zM = stack(window);
    const StackedVector zhM = stack_sequence(result.zhat);
    ev.J = 0.5 * zM.squared_norm() + 0.5 * zhM.squared_norm() - zhM.entries.dot(zM.entries);
    double acc = 0.0;
    for (double d : ev.series.values) acc += d;
    ev.pointwise_mean = acc / M;
    ev.stack_defect = std::abs(ev.J - ev.pointwise_mean);
    if (ev.stack_defect > 1e-12 * std::max(1.0, std::abs(ev.J)))
        throw FormulaDisagreement("stacked J vs pointwise mean: defect " +
                                  std::to_string(ev.stack_defect));
    return ev;
}

inline double threshold_sir(double gamma, const StackedVector& zM) {
    if (!(gamma >= 0.5 && gamma <= 1.0))
        throw GammaOutOfRange(std::to_string(gamma));
    return std::max(0.5 * (1.0 - gamma) * zM.squared_norm(), 1e-12);
}

/// J for the kernel-side projection: half energy of the stacked estimate.
inline double evaluate_J_skr(const SkrProjectionResult& result) {
    if (result.zdelta.empty())
        throw EmptyWindow("evaluate_J_skr");
    return half_energy(stack_sequence(result.zdelta));
}

inline double threshold_skr(double alpha, const StackedVector& zM) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw AlphaOutOfRange(std::to_string(alpha));
    return std::max(0.5 * alpha * zM.squared_norm(), 1e-12);
}

enum class Verdict { fault_free, faulty };

inline const char* to_string(Verdict v) {
    return v == Verdict::fault_free ? "fault_free" : "faulty";
}

/// faulty iff J > J_th; the boundary is fault-free.
inline Verdict decide(double J, double J_th) {
    return (J > J_th) ? Verdict::faulty : Verdict::fault_free;
}

/// One evaluated window with its decision and diagnostics.
struct DetectionReport {
    double J = 0.0;
    double J_th = 0.0;
    double gamma_or_alpha = 0.0;
    Verdict verdict = Verdict::fault_free;
    std::vector<double> divergence_series;
    int M = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    double window_energy = 0.0;       // 1/2 z_M^T z_M
    double stack_defect = 0.0;
    double route_disagreement = 0.0;
    int maximality_violations = 0;
};

// ---------------------------------------------------------------------------
// Geodesic minimality probe: random image-manifold candidates must not beat
// the projection in stacked divergence.
// ---------------------------------------------------------------------------

struct MinimalityReport {
    int candidates = 0;
    int violations = 0;
    double min_margin = 0.0;   // min over candidates of D[z:z0] - D[z:zh]
    double projection_divergence = 0.0;
};

/// Band-limited random latent: sum of `terms` sinusoids with seeded
/// frequencies and phases, amplitude-matched to `amplitude`.
inline InputSignal random_multisine(int dim, double amplitude, double max_omega,
                                    CounterRng rng, int terms = 5) {
    std::vector<std::vector<double>> amp(dim), omg(dim), phs(dim);
    for (int d = 0; d < dim; ++d) {
        amp[d].resize(terms);
        omg[d].resize(terms);
        phs[d].resize(terms);
        for (int i = 0; i < terms; ++i) {
            amp[d][i] = amplitude * rng.uniform(0.3, 1.0) / terms;
            omg[d][i] = rng.uniform(0.15 * max_omega, max_omega);
            phs[d][i] = rng.uniform(0.0, 2.0 * M_PI);
        }
    }
    return InputSignal::analytic(dim, [=](double t) {
        VectorXd v(dim);
        for (int d = 0; d < dim; ++d) {
            double s = 0.0;
            for (std::size_t i = 0; i < amp[d].size(); ++i)
                s += amp[d][i] * std::sin(omg[d][i] * t + phs[d][i]);
            v(d) = s;
        }
        return v;
    });
}

inline MinimalityReport minimality_check(const SignalWindow& window,
                                         const SirProjectionResult& result,
                                         const SirRealization& sir, const VectorXd& x0,
                                         int n_candidates, CounterRng rng,
                                         double tol = 1e-8) {
    if (!sir.normalized)
        throw NotNormalized("minimality_check");
    const int M = window.count();
    const Grid grid = Grid::make(window.t0, window.dt, M - 1);
    const StackedVector zM = stack(window);
    const StackedVector zhM = stack_sequence(result.zhat);
    const double scale = std::max(1.0, zM.squared_norm());

    MinimalityReport rep;
    rep.candidates = n_candidates;
    rep.projection_divergence = 0.5 * (zM.entries - zhM.entries).squaredNorm();
    rep.min_margin = std::numeric_limits<double>::infinity();

    double data_amp = 0.0;
    for (int k = 0; k < M; ++k) data_amp = std::max(data_amp, window.z(k).norm());
    const AffineSystem image = sir.as_affine();

    for (int cidx = 0; cidx < n_candidates; ++cidx) {
        InputSignal v0 = random_multisine(sir.base.p, std::max(0.2, data_amp), 1.0,
                                          rng.fork(cidx));
        const SimulationResult simr = simulate(image, v0, x0, grid);
        // the image system's output channel is the candidate (u; y) pair
        const StackedVector z0M = stack_sequence(simr.window.y_samples);
        const double div = 0.5 * (zM.entries - z0M.entries).squaredNorm();
        const double margin = div - rep.projection_divergence;
        rep.min_margin = std::min(rep.min_margin, margin);
        if (margin < -tol * scale) ++rep.violations;
    }
    if (rep.violations > 0)
        throw MinimalityViolated(std::to_string(rep.violations) + " of " +
                                 std::to_string(n_candidates) + " candidates, min margin " +
                                 std::to_string(rep.min_margin));
    return rep;
}

} // namespace fdkit
