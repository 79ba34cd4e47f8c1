#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "fdkit/errors.hpp"
#include "fdkit/riccati.hpp"
#include "fdkit/signals.hpp"
#include "fdkit/systems.hpp"

namespace fdkit {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

/// State-space data with a frequency-response evaluator. The conjugate
/// response at jw is the conjugate transpose of the response.
struct TransferEvaluator {
    MatrixXd A, B, C, D;

    int inputs() const { return static_cast<int>(B.cols()); }
    int outputs() const { return static_cast<int>(C.rows()); }

    MatrixXcd response(double omega) const {
        const Eigen::Index n = A.rows();
        MatrixXcd M = std::complex<double>(0.0, omega) * MatrixXcd::Identity(n, n) - A;
        return C * M.fullPivLu().solve(MatrixXcd(B.cast<std::complex<double>>())) + D;
    }
};

inline std::vector<double> log_spaced_frequencies(double lo, double hi, int count) {
    std::vector<double> out(count);
    const double llo = std::log10(lo), lhi = std::log10(hi);
    for (int i = 0; i < count; ++i) {
        const double th = (count == 1) ? 0.0 : static_cast<double>(i) / (count - 1);
        out[i] = std::pow(10.0, llo + th * (lhi - llo));
    }
    return out;
}

inline double spectral_norm(const MatrixXcd& M) {
    Eigen::JacobiSVD<MatrixXcd> svd(M);
    return svd.singularValues().maxCoeff();
}

/// Stacked image factor I0 = (M0; N0) driven by the latent, and kernel factor
/// K0 = (-Nh0, Mh0) as the observer-based residual generator.
struct FactorPair {
    TransferEvaluator I0; // (m+p) x p
    TransferEvaluator K0; // m x (m+p)
};

inline FactorPair assemble_factors(const LtiFactorization& fac, const LtiSystem& sys) {
    const int n = sys.n(), p = sys.p(), m = sys.m();
    FactorPair out;

    out.I0.A = sys.A + sys.B * fac.F;
    out.I0.B = sys.B * fac.V0;
    out.I0.C.resize(p + m, n);
    out.I0.C << fac.F, sys.C + sys.D * fac.F;
    out.I0.D.resize(p + m, p);
    out.I0.D << fac.V0, sys.D * fac.V0;

    out.K0.A = sys.A - fac.L0 * sys.C;
    out.K0.B.resize(n, p + m);
    out.K0.B << sys.B - fac.L0 * sys.D, fac.L0;
    out.K0.C = -fac.W0 * sys.C;
    out.K0.D.resize(m, p + m);
    out.K0.D << -fac.W0 * sys.D, fac.W0;
    return out;
}

/// Largest defect of I0^H I0 = I over the probe frequencies.
inline double verify_inner_freq(const LtiSystem& sys, const LtiFactorization& fac,
                                const std::vector<double>& omegas) {
    const FactorPair f = assemble_factors(fac, sys);
    const MatrixXcd I = MatrixXcd::Identity(sys.p(), sys.p());
    double worst = 0.0;
    for (double w : omegas) {
        const MatrixXcd G = f.I0.response(w);
        worst = std::max(worst, spectral_norm(G.adjoint() * G - I));
    }
    return worst;
}

/// Largest defect of K0 K0^H = I over the probe frequencies.
inline double verify_coinner_freq(const LtiSystem& sys, const LtiFactorization& fac,
                                  const std::vector<double>& omegas) {
    const FactorPair f = assemble_factors(fac, sys);
    const MatrixXcd I = MatrixXcd::Identity(sys.m(), sys.m());
    double worst = 0.0;
    for (double w : omegas) {
        const MatrixXcd G = f.K0.response(w);
        worst = std::max(worst, spectral_norm(G * G.adjoint() - I));
    }
    return worst;
}

/// Largest norm of K0(jw) I0(jw) over the probe frequencies (annihilation).
inline double verify_factor_annihilation_freq(const LtiSystem& sys, const LtiFactorization& fac,
                                              const std::vector<double>& omegas) {
    const FactorPair f = assemble_factors(fac, sys);
    double worst = 0.0;
    for (double w : omegas)
        worst = std::max(worst, spectral_norm(f.K0.response(w) * f.I0.response(w)));
    return worst;
}

/// Full 2x2 block identity of the stacked factors at the probe frequencies:
/// [[I0^~ I0, I0^~ K0^~], [K0 I0, K0 K0^~]] = I.
inline double verify_block_identity_freq(const LtiSystem& sys, const LtiFactorization& fac,
                                         const std::vector<double>& omegas) {
    const FactorPair f = assemble_factors(fac, sys);
    const int p = sys.p(), m = sys.m();
    double worst = 0.0;
    for (double w : omegas) {
        const MatrixXcd I0 = f.I0.response(w);
        const MatrixXcd K0 = f.K0.response(w);
        MatrixXcd block(p + m, p + m);
        block.topLeftCorner(p, p) = I0.adjoint() * I0;
        block.topRightCorner(p, m) = I0.adjoint() * K0.adjoint();
        block.bottomLeftCorner(m, p) = K0 * I0;
        block.bottomRightCorner(m, m) = K0 * K0.adjoint();
        worst = std::max(worst, spectral_norm(block - MatrixXcd::Identity(p + m, p + m)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Time-domain realizations. The conjugate of a stable system is run as an
// anti-causal pass: reverse the input, run (A^T, C^T, B^T, D^T) forward from
// rest, reverse the output. Applied to a window extended by zero this is
// exact up to integration error.
// ---------------------------------------------------------------------------

inline std::vector<VectorXd> lti_forward_pass(const TransferEvaluator& sysm,
                                              const std::vector<VectorXd>& input,
                                              double t0, double dt, const VectorXd& x0) {
    const int M = static_cast<int>(input.size());
    const Grid g = Grid::make(t0, dt, M - 1);
    InputSignal u = InputSignal::sampled(t0, dt, input);
    auto f = [&](double t, const VectorXd& x) -> VectorXd { return sysm.A * x + sysm.B * u(t); };
    const auto xs = rk4_integrate(f, x0, g);
    std::vector<VectorXd> out(M);
    for (int k = 0; k < M; ++k)
        out[k] = sysm.C * xs[k] + sysm.D * input[k];
    return out;
}

inline std::vector<VectorXd> lti_adjoint_pass(const TransferEvaluator& sysm,
                                              const std::vector<VectorXd>& input,
                                              double t0, double dt) {
    std::vector<VectorXd> rev(input.rbegin(), input.rend());
    TransferEvaluator adj;
    adj.A = sysm.A.transpose();
    adj.B = sysm.C.transpose();
    adj.C = sysm.B.transpose();
    adj.D = sysm.D.transpose();
    auto out = lti_forward_pass(adj, rev, t0, dt, VectorXd::Zero(adj.A.rows()));
    std::reverse(out.begin(), out.end());
    return out;
}

/// Orthogonal projection onto the image subspace realized in the time
/// domain: adjoint pass of I0 (terminal co-state zero), then forward pass of
/// I0 from rest.
inline std::vector<VectorXd> orthogonal_project(const FactorPair& f, const SignalWindow& w) {
    std::vector<VectorXd> zs(w.count());
    for (int k = 0; k < w.count(); ++k) zs[k] = w.z(k);
    const auto latent = lti_adjoint_pass(f.I0, zs, w.t0, w.dt);
    return lti_forward_pass(f.I0, latent, w.t0, w.dt, VectorXd::Zero(f.I0.A.rows()));
}

/// Residual pass of the kernel factor from rest.
inline std::vector<VectorXd> kernel_residual_pass(const FactorPair& f, const SignalWindow& w) {
    std::vector<VectorXd> zs(w.count());
    for (int k = 0; k < w.count(); ++k) zs[k] = w.z(k);
    return lti_forward_pass(f.K0, zs, w.t0, w.dt, VectorXd::Zero(f.K0.A.rows()));
}

/// Complement projection K0^~ K0 z (the residual mapped back to data space).
inline std::vector<VectorXd> kernel_complement_project(const FactorPair& f, const SignalWindow& w) {
    const auto r = kernel_residual_pass(f, w);
    return lti_adjoint_pass(f.K0, r, w.t0, w.dt);
}

namespace detail {

inline StackedVector stack_range(const std::vector<VectorXd>& seq, int first, int last) {
    std::vector<VectorXd> part(seq.begin() + first, seq.begin() + last);
    return stack_sequence(part);
}

} // namespace detail

/// | ||z||^2 - ||zh||^2 - ||z - zh||^2 | / max(||z||^2, floor) on the stacked
/// window, samples [first, last).
inline double pythagoras_check(const SignalWindow& w, const std::vector<VectorXd>& projected,
                               int first = 0, int last = -1) {
    if (last < 0) last = w.count();
    std::vector<VectorXd> zs, ds;
    zs.reserve(last - first);
    ds.reserve(last - first);
    for (int k = first; k < last; ++k) {
        zs.push_back(w.z(k));
        ds.push_back(w.z(k) - projected[k]);
    }
    const double z2 = stack_sequence(zs).squared_norm();
    const double zh2 = detail::stack_range(projected, first, last).squared_norm();
    const double d2 = stack_sequence(ds).squared_norm();
    return std::abs(z2 - zh2 - d2) / std::max(z2, 1e-12);
}

/// | ||z - zh|| - ||r_y|| | / max(||z||, floor) with the residual from the
/// normalized kernel factor.
inline double observer_equivalence_check(const FactorPair& f, const SignalWindow& w,
                                         const std::vector<VectorXd>& projected,
                                         int first = 0, int last = -1) {
    if (last < 0) last = w.count();
    const auto r = kernel_residual_pass(f, w);
    std::vector<VectorXd> ds;
    std::vector<VectorXd> zs;
    ds.reserve(last - first);
    for (int k = first; k < last; ++k) {
        ds.push_back(w.z(k) - projected[k]);
        zs.push_back(w.z(k));
    }
    const double dn = std::sqrt(stack_sequence(ds).squared_norm());
    const double rn = std::sqrt(detail::stack_range(r, first, last).squared_norm());
    const double zn = std::sqrt(stack_sequence(zs).squared_norm());
    return std::abs(dn - rn) / std::max(zn, 1e-12);
}

} // namespace fdkit
