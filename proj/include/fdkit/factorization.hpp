#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fdkit/errors.hpp"
#include "fdkit/random.hpp"
#include "fdkit/riccati.hpp"
#include "fdkit/signals.hpp"
#include "fdkit/systems.hpp"

namespace fdkit {

/// Nonnegative scalar field with gradient, vanishing at the origin. Supplies
/// the normalizing feedback (SIR side) or the gain condition (SKR side).
struct StorageFunction {
    std::function<double(const VectorXd&)> value;
    std::function<VectorXd(const VectorXd&)> gradient;

    static StorageFunction quadratic(const MatrixXd& P) {
        StorageFunction s;
        s.value = [P](const VectorXd& x) { return 0.5 * x.dot(P * x); };
        s.gradient = [P](const VectorXd& x) -> VectorXd { return P * x; };
        return s;
    }
};

/// Uniform probe lattice on a box, used by all pointwise residual checks.
struct ProbeBox {
    VectorXd lo, hi;
    int points_per_axis = 21;
    int max_points = 20000;

    static ProbeBox symmetric(int n, double half_width = 2.0, int pts = 21) {
        ProbeBox b;
        b.lo = VectorXd::Constant(n, -half_width);
        b.hi = VectorXd::Constant(n, half_width);
        b.points_per_axis = pts;
        return b;
    }

    std::vector<VectorXd> points() const {
        const int n = static_cast<int>(lo.size());
        long total = 1;
        for (int i = 0; i < n; ++i) {
            total *= points_per_axis;
            if (total > max_points) break;
        }
        std::vector<VectorXd> pts;
        if (total <= max_points) {
            // full lattice
            std::vector<int> idx(n, 0);
            VectorXd x(n);
            while (true) {
                for (int i = 0; i < n; ++i) {
                    const double th = (points_per_axis == 1)
                        ? 0.5
                        : static_cast<double>(idx[i]) / (points_per_axis - 1);
                    x(i) = lo(i) + th * (hi(i) - lo(i));
                }
                pts.push_back(x);
                int i = 0;
                for (; i < n; ++i) {
                    if (++idx[i] < points_per_axis) break;
                    idx[i] = 0;
                }
                if (i == n) break;
            }
        } else {
            // low-discrepancy fallback for higher state dimensions
            VectorXd x(n);
            for (int k = 0; k < max_points; ++k) {
                for (int i = 0; i < n; ++i) {
                    const double u = static_cast<double>(
                        CounterRng::bits_at(0x9e37, i, k) >> 11) * 0x1.0p-53;
                    x(i) = lo(i) + u * (hi(i) - lo(i));
                }
                pts.push_back(x);
            }
        }
        return pts;
    }
};

struct ResidualReport {
    double max_residual = 0.0;
    VectorXd worst_point;
};

// ---------------------------------------------------------------------------
// Stable image representation: latent v drives (u; y) through the base plant
// closed with the feedback u = g(x) + V(x) v.
//   a_I = a + B g,  B_I = B V,  c_I = (g; c + D g),  D_I = (V; D V)
// ---------------------------------------------------------------------------
struct SirRealization {
    AffineSystem base;
    std::function<VectorXd(const VectorXd&)> g;
    std::function<MatrixXd(const VectorXd&)> V;
    bool normalized = false;
    StorageFunction storage; // required when normalized

    VectorXd a_I(const VectorXd& x) const { return base.a(x) + base.B(x) * g(x); }
    MatrixXd B_I(const VectorXd& x) const { return base.B(x) * V(x); }
    VectorXd c_I(const VectorXd& x) const {
        const VectorXd gx = g(x);
        VectorXd out(base.p + base.m);
        out << gx, base.c(x) + base.D(x) * gx;
        return out;
    }
    MatrixXd D_I(const VectorXd& x) const {
        const MatrixXd Vx = V(x);
        MatrixXd out(base.p + base.m, base.p);
        out << Vx, base.D(x) * Vx;
        return out;
    }

    /// View as an affine plant with input v and output (u; y), for simulation.
    AffineSystem as_affine() const {
        AffineSystem s;
        s.n = base.n;
        s.p = base.p;
        s.m = base.p + base.m;
        const SirRealization self = *this;
        s.a = [self](const VectorXd& x) { return self.a_I(x); };
        s.B = [self](const VectorXd& x) { return self.B_I(x); };
        s.c = [self](const VectorXd& x) { return self.c_I(x); };
        s.D = [self](const VectorXd& x) { return self.D_I(x); };
        return s;
    }
};

// ---------------------------------------------------------------------------
// Stable kernel representation: observer driven by z = (u; y) emitting the
// residual r_y = W(xh) (y - yh).
//   a_K = a - L c,  B_K = (B - L D, L),  c_K = -W c,  D_K = (-W D, W)
// ---------------------------------------------------------------------------
struct SkrRealization {
    AffineSystem base;
    std::function<MatrixXd(const VectorXd&)> L;
    std::function<MatrixXd(const VectorXd&)> W;
    bool normalized = false;
    StorageFunction storage;

    VectorXd a_K(const VectorXd& xh) const { return base.a(xh) - L(xh) * base.c(xh); }
    MatrixXd B_K(const VectorXd& xh) const {
        const MatrixXd Lx = L(xh);
        MatrixXd out(base.n, base.p + base.m);
        out << base.B(xh) - Lx * base.D(xh), Lx;
        return out;
    }
    VectorXd c_K(const VectorXd& xh) const { return -W(xh) * base.c(xh); }
    MatrixXd D_K(const VectorXd& xh) const {
        const MatrixXd Wx = W(xh);
        MatrixXd out(base.m, base.p + base.m);
        out << -Wx * base.D(xh), Wx;
        return out;
    }

    // drift and output for a frozen joint input z
    VectorXd f_K(const VectorXd& xh, const VectorXd& z) const { return a_K(xh) + B_K(xh) * z; }
    VectorXd h_K(const VectorXd& xh, const VectorXd& z) const { return c_K(xh) + D_K(xh) * z; }

    /// d/dxh of the drift a_K + B_K z at frozen z (analytic when the base
    /// supplies Jacobians and L is state-independent, else finite differences).
    MatrixXd f_K_jac(const VectorXd& xh, const VectorXd& z) const {
        const SkrRealization* self = this;
        return fd_jacobian([self, &z](const VectorXd& x) { return self->f_K(x, z); }, xh);
    }
    MatrixXd h_K_jac(const VectorXd& xh, const VectorXd& z) const {
        const SkrRealization* self = this;
        return fd_jacobian([self, &z](const VectorXd& x) { return self->h_K(x, z); }, xh);
    }
};

namespace detail {

inline double condition_estimate(const MatrixXd& M) {
    Eigen::JacobiSVD<MatrixXd> svd(M);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return smax / smin;
}

} // namespace detail

inline SirRealization build_sir(const AffineSystem& base,
                                std::function<VectorXd(const VectorXd&)> g,
                                std::function<MatrixXd(const VectorXd&)> V,
                                const ProbeBox* probe = nullptr) {
    SirRealization sir;
    sir.base = base;
    sir.g = std::move(g);
    sir.V = std::move(V);
    const ProbeBox box = probe ? *probe : ProbeBox::symmetric(base.n, 1.0, 3);
    for (const auto& x : box.points()) {
        if (detail::condition_estimate(sir.V(x)) > 1e12)
            throw SingularV("condition number above 1e12 at a probe state");
    }
    return sir;
}

inline SkrRealization build_skr(const AffineSystem& base,
                                std::function<MatrixXd(const VectorXd&)> L,
                                std::function<MatrixXd(const VectorXd&)> W,
                                const ProbeBox* probe = nullptr) {
    SkrRealization skr;
    skr.base = base;
    skr.L = std::move(L);
    skr.W = std::move(W);
    const ProbeBox box = probe ? *probe : ProbeBox::symmetric(base.n, 1.0, 3);
    for (const auto& x : box.points()) {
        if (detail::condition_estimate(skr.W(x)) > 1e12)
            throw SingularW("condition number above 1e12 at a probe state");
    }
    return skr;
}

// ---------------------------------------------------------------------------
// Normalization. The image side requires a storage P >= 0 with
//   P_x^T a + 1/2 c^T c - 1/2 g^T (I + D^T D) g = 0,
//   g = -(I + D^T D)^{-1} (B^T P_x + D^T c),  V = (I + D^T D)^{-1/2}.
// The kernel side requires V(xh) >= 0 with
//   V_x^T a + 1/2 V_x^T B B^T V_x
//     - 1/2 (c^T + V_x^T B D^T) (I + D D^T)^{-1} (c^T + V_x^T B D^T)^T = 0,
//   V_x^T L = (c^T + V_x^T B D^T) (I + D D^T)^{-1},  W = (I + D D^T)^{-1/2}.
// The kernel gain condition fixes only one row functional of L, so L itself
// is caller-supplied and verified, not constructed.
// ---------------------------------------------------------------------------

inline double sir_hje_residual(const AffineSystem& sys, const StorageFunction& storage,
                               const VectorXd& x) {
    const VectorXd Px = storage.gradient(x);
    const MatrixXd Dx = sys.D(x);
    const VectorXd cx = sys.c(x);
    const MatrixXd S = MatrixXd::Identity(sys.p, sys.p) + Dx.transpose() * Dx;
    const VectorXd gx = -S.llt().solve(sys.B(x).transpose() * Px + Dx.transpose() * cx);
    return Px.dot(sys.a(x)) + 0.5 * cx.squaredNorm() - 0.5 * gx.dot(S * gx);
}

/// Magnitude of the terms that cancel in the image-side residual; the
/// admission checks measure residuals relative to this, since at states with
/// a large storage gradient the raw residual is cancellation-limited.
inline double sir_hje_scale(const AffineSystem& sys, const StorageFunction& storage,
                            const VectorXd& x) {
    const VectorXd Px = storage.gradient(x);
    const MatrixXd Dx = sys.D(x);
    const VectorXd cx = sys.c(x);
    const MatrixXd S = MatrixXd::Identity(sys.p, sys.p) + Dx.transpose() * Dx;
    const VectorXd gx = -S.llt().solve(sys.B(x).transpose() * Px + Dx.transpose() * cx);
    return 1.0 + std::abs(Px.dot(sys.a(x))) + 0.5 * cx.squaredNorm() +
           0.5 * std::abs(gx.dot(S * gx));
}

inline double skr_hje_residual(const AffineSystem& sys, const StorageFunction& storage,
                               const VectorXd& xh) {
    const VectorXd Vx = storage.gradient(xh);
    const MatrixXd Dx = sys.D(xh);
    const MatrixXd Bx = sys.B(xh);
    const MatrixXd R = MatrixXd::Identity(sys.m, sys.m) + Dx * Dx.transpose();
    const VectorXd q = sys.c(xh) + Dx * Bx.transpose() * Vx; // (c^T + V_x^T B D^T)^T
    return Vx.dot(sys.a(xh)) + 0.5 * (Bx.transpose() * Vx).squaredNorm()
         - 0.5 * q.dot(R.llt().solve(q));
}

inline double skr_hje_scale(const AffineSystem& sys, const StorageFunction& storage,
                            const VectorXd& xh) {
    const VectorXd Vx = storage.gradient(xh);
    const MatrixXd Dx = sys.D(xh);
    const MatrixXd Bx = sys.B(xh);
    const MatrixXd R = MatrixXd::Identity(sys.m, sys.m) + Dx * Dx.transpose();
    const VectorXd q = sys.c(xh) + Dx * Bx.transpose() * Vx;
    return 1.0 + std::abs(Vx.dot(sys.a(xh))) + 0.5 * (Bx.transpose() * Vx).squaredNorm() +
           0.5 * std::abs(q.dot(R.llt().solve(q)));
}

inline ResidualReport max_residual_on(const std::vector<VectorXd>& pts,
                                      const std::function<double(const VectorXd&)>& f) {
    ResidualReport rep;
    rep.max_residual = -1.0;
    for (const auto& x : pts) {
        const double r = std::abs(f(x));
        if (r > rep.max_residual) {
            rep.max_residual = r;
            rep.worst_point = x;
        }
    }
    return rep;
}

inline SirRealization normalize_sir(const AffineSystem& base, const StorageFunction& storage,
                                    const ProbeBox* probe = nullptr, double tol = 1e-8) {
    const ProbeBox box = probe ? *probe : ProbeBox::symmetric(base.n);
    const auto rep = max_residual_on(box.points(), [&](const VectorXd& x) {
        return sir_hje_residual(base, storage, x) / sir_hje_scale(base, storage, x);
    });
    if (rep.max_residual > tol) {
        std::ostringstream os;
        os << "max " << rep.max_residual << " at [" << rep.worst_point.transpose() << "]";
        throw HjeResidualTooLarge(rep.max_residual, os.str());
    }
    SirRealization sir;
    sir.base = base;
    sir.g = [base, storage](const VectorXd& x) -> VectorXd {
        const MatrixXd Dx = base.D(x);
        const MatrixXd S = MatrixXd::Identity(base.p, base.p) + Dx.transpose() * Dx;
        return -S.llt().solve(base.B(x).transpose() * storage.gradient(x) +
                              Dx.transpose() * base.c(x));
    };
    sir.V = [base](const VectorXd& x) -> MatrixXd {
        const MatrixXd Dx = base.D(x);
        return sym_inv_sqrt(MatrixXd::Identity(base.p, base.p) + Dx.transpose() * Dx);
    };
    sir.normalized = true;
    sir.storage = storage;
    return sir;
}

inline SkrRealization normalize_skr(const AffineSystem& base, const StorageFunction& storage,
                                    std::function<MatrixXd(const VectorXd&)> L,
                                    const ProbeBox* probe = nullptr,
                                    double hje_tol = 1e-8, double gain_tol = 1e-6) {
    const ProbeBox box = probe ? *probe : ProbeBox::symmetric(base.n);
    const auto pts = box.points();
    const auto rep = max_residual_on(pts, [&](const VectorXd& x) {
        return skr_hje_residual(base, storage, x) / skr_hje_scale(base, storage, x);
    });
    if (rep.max_residual > hje_tol) {
        std::ostringstream os;
        os << "max " << rep.max_residual << " at [" << rep.worst_point.transpose() << "]";
        throw HjeResidualTooLarge(rep.max_residual, os.str());
    }
    // gain condition: V_x^T L - (c^T + V_x^T B D^T)(I + D D^T)^{-1} = 0
    const auto gain_rep = max_residual_on(pts, [&](const VectorXd& x) {
        const VectorXd Vx = storage.gradient(x);
        const MatrixXd Dx = base.D(x);
        const MatrixXd R = MatrixXd::Identity(base.m, base.m) + Dx * Dx.transpose();
        const Eigen::RowVectorXd lhs = Vx.transpose() * L(x);
        const Eigen::RowVectorXd rhs =
            (base.c(x).transpose() + Vx.transpose() * base.B(x) * Dx.transpose()) * R.inverse();
        return (lhs - rhs).norm() / (1.0 + lhs.norm() + rhs.norm());
    });
    if (gain_rep.max_residual > gain_tol) {
        std::ostringstream os;
        os << "gain condition residual " << gain_rep.max_residual
           << " at [" << gain_rep.worst_point.transpose() << "]";
        throw GainConditionViolated(os.str());
    }
    SkrRealization skr;
    skr.base = base;
    skr.L = std::move(L);
    skr.W = [base](const VectorXd& x) -> MatrixXd {
        const MatrixXd Dx = base.D(x);
        return sym_inv_sqrt(MatrixXd::Identity(base.m, base.m) + Dx * Dx.transpose());
    };
    skr.normalized = true;
    skr.storage = storage;
    return skr;
}

// ---------------------------------------------------------------------------
// Inner / co-inner verification.
// ---------------------------------------------------------------------------

/// Pointwise normalization conditions for the image side on a probe grid:
/// D_I^T D_I = I and c_I^T D_I + P_x^T B_I = 0.
inline ResidualReport verify_sir_pointwise(const SirRealization& sir,
                                           const ProbeBox* probe = nullptr) {
    if (!sir.normalized)
        throw NotNormalized("verify_sir_pointwise");
    const ProbeBox box = probe ? *probe : ProbeBox::symmetric(sir.base.n);
    return max_residual_on(box.points(), [&](const VectorXd& x) {
        const MatrixXd DI = sir.D_I(x);
        const double d1 = (DI.transpose() * DI -
                           MatrixXd::Identity(sir.base.p, sir.base.p)).norm();
        const double d2 = (sir.c_I(x).transpose() * DI +
                           sir.storage.gradient(x).transpose() * sir.B_I(x)).norm();
        return std::max(d1, d2);
    });
}

/// D_K D_K^T = I on a probe grid.
inline ResidualReport verify_skr_pointwise(const SkrRealization& skr,
                                           const ProbeBox* probe = nullptr) {
    if (!skr.normalized)
        throw NotNormalized("verify_skr_pointwise");
    const ProbeBox box = probe ? *probe : ProbeBox::symmetric(skr.base.n);
    return max_residual_on(box.points(), [&](const VectorXd& x) {
        const MatrixXd DK = skr.D_K(x);
        return (DK * DK.transpose() - MatrixXd::Identity(skr.base.m, skr.base.m)).norm();
    });
}

/// Lossless energy balance of the normalized image representation on a
/// simulated run: P(x(T)) - P(x(0)) - 1/2 int (v^T v - zh^T zh) dt.
/// The balance integral is carried as an extra integrator state so its
/// accuracy matches the trajectory's.
struct EnergyBalanceReport {
    double defect = 0.0;
    double input_energy = 0.0;
};

inline EnergyBalanceReport verify_inner_energy(const SirRealization& sir,
                                               const InputSignal& latent,
                                               const VectorXd& x0, const Grid& grid) {
    if (!sir.normalized)
        throw NotNormalized("verify_inner_energy");
    const int n = sir.base.n;
    VectorXd aug0(n + 2);
    aug0 << x0, 0.0, 0.0;
    auto f = [&](double t, const VectorXd& aug) -> VectorXd {
        const VectorXd x = aug.head(n);
        const VectorXd v = latent(t);
        const VectorXd zh = sir.c_I(x) + sir.D_I(x) * v;
        VectorXd out(n + 2);
        out.head(n) = sir.a_I(x) + sir.B_I(x) * v;
        out(n) = 0.5 * (v.squaredNorm() - zh.squaredNorm()); // balance integral
        out(n + 1) = 0.5 * v.squaredNorm();                  // input energy
        return out;
    };
    const auto traj = rk4_integrate(f, aug0, grid);
    const VectorXd xT = traj.back().head(n);
    EnergyBalanceReport rep;
    rep.defect = std::abs(sir.storage.value(xT) - sir.storage.value(x0) - traj.back()(n));
    rep.input_energy = traj.back()(n + 1);
    return rep;
}

/// Frequency-domain inner defect of the assembled factors: the largest
/// singular value of I0(jw)^H I0(jw) - I over the probe frequencies.
inline double verify_inner_freq(const LtiSystem& sys, const LtiFactorization& fac,
                                const std::vector<double>& omegas);
// (defined in lti_oracle.hpp, which owns the frequency-response machinery)

/// Cascade the kernel representation after the image representation and
/// report max_k ||r_y(k)||. The image system is simulated first; the
/// observer then runs on the recorded window only, so the residual reflects
/// the full sampled-data round trip. With matched initial states it
/// vanishes at the integrator's order.
struct AnnihilationReport {
    double max_residual = 0.0;
    double signal_scale = 0.0;
    std::vector<VectorXd> residuals;
};

inline AnnihilationReport verify_annihilation(const SkrRealization& skr,
                                              const SirRealization& sir,
                                              const InputSignal& latent,
                                              const VectorXd& x0, const VectorXd& xh0,
                                              const Grid& grid) {
    const int n = sir.base.n;
    if (xh0.size() != n || x0.size() != n)
        throw DimensionMismatch("initial states");

    // image pass: record z(k) = (u(k); y(k))
    const SimulationResult sim = simulate(sir.as_affine(), latent, x0, grid);
    const std::vector<VectorXd>& zs = sim.window.y_samples;

    // kernel pass on the sampled window
    InputSignal z = InputSignal::sampled(grid.t0, grid.dt, zs);
    auto f = [&](double t, const VectorXd& xh) -> VectorXd { return skr.f_K(xh, z(t)); };
    const auto xhs = rk4_integrate(f, xh0, grid);

    AnnihilationReport rep;
    rep.residuals.resize(grid.samples());
    for (int k = 0; k < grid.samples(); ++k) {
        rep.residuals[k] = skr.h_K(xhs[k], zs[k]);
        rep.max_residual = std::max(rep.max_residual, rep.residuals[k].norm());
        rep.signal_scale = std::max(rep.signal_scale, zs[k].norm());
    }
    return rep;
}

} // namespace fdkit
