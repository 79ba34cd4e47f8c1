#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "fdkit/errors.hpp"
#include "fdkit/signals.hpp"

namespace fdkit {

/// Uniform integration grid: samples at t0 + k*dt, k = 0..steps.
struct Grid {
    double t0 = 0.0;
    double dt = 0.0;
    int steps = 0;

    int samples() const { return steps + 1; }
    double t(int k) const { return t0 + dt * k; }

    static Grid make(double t0, double dt, int steps) {
        if (!(dt > 0.0) || steps < 1)
            throw ConfigInvalid("grid needs dt > 0 and steps >= 1");
        return Grid{t0, dt, steps};
    }
};

/// Input-affine plant: xdot = a(x) + B(x) u, y = c(x) + D(x) u.
/// Analytic Jacobian hooks are optional; consumers fall back to finite
/// differences when they are absent.
struct AffineSystem {
    int n = 0; // states
    int p = 0; // inputs
    int m = 0; // outputs

    std::function<VectorXd(const VectorXd&)> a;
    std::function<MatrixXd(const VectorXd&)> B;
    std::function<VectorXd(const VectorXd&)> c;
    std::function<MatrixXd(const VectorXd&)> D;

    // optional: da/dx, dc/dx and x-derivatives of B(x)u, D(x)u for fixed u
    std::function<MatrixXd(const VectorXd&)> a_jac;
    std::function<MatrixXd(const VectorXd&)> c_jac;
    std::function<MatrixXd(const VectorXd&, const VectorXd&)> Bu_jac;
    std::function<MatrixXd(const VectorXd&, const VectorXd&)> Du_jac;

    bool has_analytic_jacobians() const {
        return a_jac && c_jac && Bu_jac && Du_jac;
    }

    VectorXd output(const VectorXd& x, const VectorXd& u) const {
        return c(x) + D(x) * u;
    }
};

/// Constant-matrix state space model.
struct LtiSystem {
    MatrixXd A, B, C, D;

    int n() const { return static_cast<int>(A.rows()); }
    int p() const { return static_cast<int>(B.cols()); }
    int m() const { return static_cast<int>(C.rows()); }

    static LtiSystem make(MatrixXd A, MatrixXd B, MatrixXd C, MatrixXd D) {
        if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.cols() ||
            D.rows() != C.rows() || D.cols() != B.cols())
            throw DimensionMismatch("inconsistent state-space shapes");
        if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite())
            throw NonFiniteValue("state-space matrix entry");
        return LtiSystem{std::move(A), std::move(B), std::move(C), std::move(D)};
    }
};

// ---------------------------------------------------------------------------
// Input signals. Analytic inputs are evaluated exactly at integration stage
// times; sampled inputs are reconstructed by piecewise-cubic (4-point
// Lagrange) interpolation, which keeps signal reconstruction error at the
// same order as the integrator.
// ---------------------------------------------------------------------------
class InputSignal {
public:
    static InputSignal analytic(int dim, std::function<VectorXd(double)> fn) {
        InputSignal s;
        s.dim_ = dim;
        s.fn_ = std::move(fn);
        return s;
    }

    static InputSignal zero(int dim) {
        return analytic(dim, [dim](double) { return VectorXd::Zero(dim).eval(); });
    }

    static InputSignal constant(const VectorXd& v) {
        return analytic(static_cast<int>(v.size()), [v](double) { return v; });
    }

    static InputSignal sampled(double t0, double dt, std::vector<VectorXd> samples) {
        if (samples.empty())
            throw EmptyWindow("sampled input needs at least one sample");
        InputSignal s;
        s.dim_ = static_cast<int>(samples.front().size());
        s.t0_ = t0;
        s.dt_ = dt;
        s.samples_ = std::move(samples);
        return s;
    }

    static InputSignal from_window_z(const SignalWindow& w) {
        std::vector<VectorXd> zs(w.count());
        for (int k = 0; k < w.count(); ++k) zs[k] = w.z(k);
        return sampled(w.t0, w.dt, std::move(zs));
    }

    static InputSignal from_latent(const LatentWindow& w) {
        return sampled(w.t0, w.dt, w.samples);
    }

    int dim() const { return dim_; }
    bool is_sampled() const { return !samples_.empty(); }
    int sample_count() const { return static_cast<int>(samples_.size()); }
    double sample_dt() const { return dt_; }
    double sample_t0() const { return t0_; }

    VectorXd operator()(double t) const {
        if (fn_) return fn_(t);
        return interpolate(t);
    }

private:
    VectorXd interpolate(double t) const {
        const int M = static_cast<int>(samples_.size());
        if (M == 1) return samples_[0];
        double s = (t - t0_) / dt_;
        if (s <= 0.0) s = 0.0;
        if (s >= M - 1) s = static_cast<double>(M - 1);
        int seg = static_cast<int>(std::floor(s));
        if (seg > M - 2) seg = M - 2;
        if (M == 2) {
            const double th = s - seg;
            return (1.0 - th) * samples_[0] + th * samples_[1];
        }
        // 4-point stencil around the segment, one-sided at the ends
        int j0 = seg - 1;
        const int maxj0 = M - 4;
        if (j0 < 0) j0 = 0;
        if (M >= 4 && j0 > maxj0) j0 = maxj0;
        const int npts = (M >= 4) ? 4 : 3;
        const double xl = s - j0;
        VectorXd out = VectorXd::Zero(dim_);
        for (int i = 0; i < npts; ++i) {
            double w = 1.0;
            for (int j = 0; j < npts; ++j) {
                if (j == i) continue;
                w *= (xl - j) / static_cast<double>(i - j);
            }
            out += w * samples_[j0 + i];
        }
        return out;
    }

    int dim_ = 0;
    std::function<VectorXd(double)> fn_;
    double t0_ = 0.0;
    double dt_ = 1.0;
    std::vector<VectorXd> samples_;
};

// ---------------------------------------------------------------------------
// Classical fixed-step RK4 on the grid, recording the state at every sample.
// ---------------------------------------------------------------------------
inline constexpr double kDivergenceGuard = 1e12;

template <class F>
std::vector<VectorXd> rk4_integrate(F&& f, const VectorXd& x0, const Grid& g) {
    std::vector<VectorXd> xs(g.samples());
    xs[0] = x0;
    VectorXd x = x0;
    const double h = g.dt;
    for (int k = 0; k < g.steps; ++k) {
        const double t = g.t(k);
        const VectorXd k1 = f(t, x);
        const VectorXd k2 = f(t + 0.5 * h, (x + 0.5 * h * k1).eval());
        const VectorXd k3 = f(t + 0.5 * h, (x + 0.5 * h * k2).eval());
        const VectorXd k4 = f(t + h, (x + h * k3).eval());
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceGuard)
            throw IntegrationDiverged("state bound exceeded at t=" + std::to_string(g.t(k + 1)));
        xs[k + 1] = x;
    }
    return xs;
}

struct SimulationResult {
    std::vector<VectorXd> states; // x at each grid sample
    SignalWindow window;          // recorded (u, y)
};

/// Simulate the plant driven by `input`, recording u and y on the grid.
inline SimulationResult simulate(const AffineSystem& sys, const InputSignal& input,
                                 const VectorXd& x0, const Grid& grid) {
    if (input.dim() != sys.p)
        throw DimensionMismatch("input dimension does not match plant");
    if (x0.size() != sys.n)
        throw DimensionMismatch("x0 dimension does not match plant");
    if (!x0.allFinite())
        throw NonFiniteValue("x0");
    if (input.is_sampled()) {
        if (std::abs(input.sample_dt() - grid.dt) > 1e-9 * grid.dt ||
            input.sample_count() < grid.samples())
            throw GridMismatch("sampled input does not cover the grid");
    }

    auto f = [&](double t, const VectorXd& x) -> VectorXd {
        return sys.a(x) + sys.B(x) * input(t);
    };
    SimulationResult out;
    out.states = rk4_integrate(f, x0, grid);

    std::vector<VectorXd> us(grid.samples()), ys(grid.samples());
    for (int k = 0; k < grid.samples(); ++k) {
        us[k] = input(grid.t(k));
        ys[k] = sys.output(out.states[k], us[k]);
    }
    out.window = SignalWindow::make(grid.t0, grid.dt, std::move(us), std::move(ys));
    return out;
}

// ---------------------------------------------------------------------------
// Central finite differences.
// ---------------------------------------------------------------------------
inline double fd_step(double xj) { return std::max(1e-6, 1e-6 * std::abs(xj)); }

/// Column j of the result is (f(x + h e_j) - f(x - h e_j)) / (2h).
inline MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& f,
                            const VectorXd& x, double h) {
    const VectorXd f0 = f(x);
    MatrixXd J(f0.size(), x.size());
    VectorXd xp = x, xm = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        const VectorXd fp = f(xp);
        const VectorXd fm = f(xm);
        if (!fp.allFinite() || !fm.allFinite())
            throw NonFiniteValue("function value in finite-difference probe");
        J.col(j) = (fp - fm) / (2.0 * h);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return J;
}

/// Per-coordinate step h_j = max(1e-6, 1e-6 |x_j|).
inline MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& f,
                            const VectorXd& x) {
    const VectorXd f0 = f(x);
    MatrixXd J(f0.size(), x.size());
    VectorXd xp = x, xm = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = fd_step(x(j));
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        const VectorXd fp = f(xp);
        const VectorXd fm = f(xm);
        if (!fp.allFinite() || !fm.allFinite())
            throw NonFiniteValue("function value in finite-difference probe");
        J.col(j) = (fp - fm) / (2.0 * h);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return J;
}

/// Central-difference gradient of a scalar field.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f,
                            const VectorXd& x) {
    VectorXd g(x.size());
    VectorXd xp = x, xm = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = fd_step(x(j));
        xp(j) = x(j) + h;
        xm(j) = x(j) - h;
        g(j) = (f(xp) - f(xm)) / (2.0 * h);
        xp(j) = x(j);
        xm(j) = x(j);
    }
    return g;
}

/// Embed an LTI plant into the affine interface with exact Jacobians.
inline AffineSystem lift_lti(const LtiSystem& sys) {
    AffineSystem s;
    s.n = sys.n();
    s.p = sys.p();
    s.m = sys.m();
    const MatrixXd A = sys.A, B = sys.B, C = sys.C, D = sys.D;
    s.a = [A](const VectorXd& x) -> VectorXd { return A * x; };
    s.B = [B](const VectorXd&) -> MatrixXd { return B; };
    s.c = [C](const VectorXd& x) -> VectorXd { return C * x; };
    s.D = [D](const VectorXd&) -> MatrixXd { return D; };
    s.a_jac = [A](const VectorXd&) -> MatrixXd { return A; };
    s.c_jac = [C](const VectorXd&) -> MatrixXd { return C; };
    const int n = s.n;
    s.Bu_jac = [n](const VectorXd&, const VectorXd&) -> MatrixXd { return MatrixXd::Zero(n, n); };
    const int m = s.m;
    s.Du_jac = [m, n](const VectorXd&, const VectorXd&) -> MatrixXd { return MatrixXd::Zero(m, n); };
    return s;
}

} // namespace fdkit
