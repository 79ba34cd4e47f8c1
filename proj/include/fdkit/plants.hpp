#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "fdkit/factorization.hpp"
#include "fdkit/riccati.hpp"
#include "fdkit/systems.hpp"

namespace fdkit {

/// A plant bundled with the design data needed to normalize both
/// representations: image-side storage P, kernel-side storage V, and the
/// kernel gain L satisfying the gain condition for that V.
struct PlantBundle {
    std::string name;
    AffineSystem system;
    StorageFunction storage_sir;
    StorageFunction storage_skr;
    std::function<MatrixXd(const VectorXd&)> L;
};

namespace plants {

// --- scalar_lti: xdot = -x + u, y = x ---------------------------------------
// Image side:  P(x) = (sqrt(2)-1) x^2 / 2  solves the scalar quadratic
//              Px^2 + 2 x Px - x^2 = 0 on the branch with x*Px >= 0.
// Kernel side: V(xh) = (1+sqrt(2)) xh^2 / 2, L = sqrt(2)-1.
inline PlantBundle scalar_lti() {
    PlantBundle b;
    b.name = "scalar_lti";
    LtiSystem sys = LtiSystem::make(MatrixXd::Constant(1, 1, -1.0), MatrixXd::Constant(1, 1, 1.0),
                                    MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, 0.0));
    b.system = lift_lti(sys);
    const double X = std::sqrt(2.0) - 1.0;
    const double Yinv = 1.0 + std::sqrt(2.0);
    b.storage_sir = StorageFunction::quadratic(MatrixXd::Constant(1, 1, X));
    b.storage_skr = StorageFunction::quadratic(MatrixXd::Constant(1, 1, Yinv));
    b.L = [](const VectorXd&) { return MatrixXd::Constant(1, 1, std::sqrt(2.0) - 1.0); };
    return b;
}

// --- scalar_cubic: xdot = -x - x^3 + u, y = x --------------------------------
// With s = 1 + x^2 and r = sqrt(s^2 + 1):
//   Px(x) = x (r - s)  solves  Px^2 + 2 x s Px - x^2 = 0,  x*Px >= 0,
//   P(x)  = [ u r(u) + asinh(u) - u^2 ]/4 evaluated from u=1 to u=s.
//   Vx(xh) = xh (s + r),  V = [ u^2 + u r(u) + asinh(u) ]/4 from 1 to s,
//   L(xh)  = 1 / (s + r), so that Vx * L = c = xh.
inline PlantBundle scalar_cubic() {
    PlantBundle b;
    b.name = "scalar_cubic";
    AffineSystem s;
    s.n = s.p = s.m = 1;
    s.a = [](const VectorXd& x) { return VectorXd::Constant(1, -x(0) - x(0) * x(0) * x(0)).eval(); };
    s.B = [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0).eval(); };
    s.c = [](const VectorXd& x) { return VectorXd::Constant(1, x(0)).eval(); };
    s.D = [](const VectorXd&) { return MatrixXd::Constant(1, 1, 0.0).eval(); };
    s.a_jac = [](const VectorXd& x) { return MatrixXd::Constant(1, 1, -1.0 - 3.0 * x(0) * x(0)).eval(); };
    s.c_jac = [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0).eval(); };
    s.Bu_jac = [](const VectorXd&, const VectorXd&) { return MatrixXd::Constant(1, 1, 0.0).eval(); };
    s.Du_jac = [](const VectorXd&, const VectorXd&) { return MatrixXd::Constant(1, 1, 0.0).eval(); };
    b.system = s;

    auto antideriv_p = [](double u) {
        const double r = std::sqrt(u * u + 1.0);
        return 0.25 * (u * r + std::asinh(u) - u * u);
    };
    auto antideriv_v = [](double u) {
        const double r = std::sqrt(u * u + 1.0);
        return 0.25 * (u * u + u * r + std::asinh(u));
    };
    b.storage_sir.value = [antideriv_p](const VectorXd& x) {
        const double u = 1.0 + x(0) * x(0);
        return antideriv_p(u) - antideriv_p(1.0);
    };
    b.storage_sir.gradient = [](const VectorXd& x) {
        const double sx = 1.0 + x(0) * x(0);
        const double r = std::sqrt(sx * sx + 1.0);
        return VectorXd::Constant(1, x(0) * (r - sx)).eval();
    };
    b.storage_skr.value = [antideriv_v](const VectorXd& x) {
        const double u = 1.0 + x(0) * x(0);
        return antideriv_v(u) - antideriv_v(1.0);
    };
    b.storage_skr.gradient = [](const VectorXd& x) {
        const double sx = 1.0 + x(0) * x(0);
        const double r = std::sqrt(sx * sx + 1.0);
        return VectorXd::Constant(1, x(0) * (sx + r)).eval();
    };
    b.L = [](const VectorXd& x) {
        const double sx = 1.0 + x(0) * x(0);
        const double r = std::sqrt(sx * sx + 1.0);
        return MatrixXd::Constant(1, 1, 1.0 / (sx + r)).eval();
    };
    return b;
}

// --- custom LTI: storages and gain from the normalized factorization --------
inline PlantBundle custom_lti(const LtiSystem& sys, const std::string& name = "lti_custom") {
    PlantBundle b;
    b.name = name;
    b.system = lift_lti(sys);
    LtiFactorization fac = lti_normalize(sys);
    b.storage_sir = StorageFunction::quadratic(fac.X);
    // kernel-side storage is x^T Y^{-1} x / 2; Y must be invertible here
    const MatrixXd Yinv = fac.Y.inverse();
    if (!Yinv.allFinite())
        throw RiccatiNoStabilizingSolution("filter Riccati solution is singular");
    b.storage_skr = StorageFunction::quadratic(0.5 * (Yinv + Yinv.transpose()));
    const MatrixXd L0 = fac.L0;
    b.L = [L0](const VectorXd&) { return L0; };
    return b;
}

/// Seeded stable test plant with n states, one input, one output, D != 0.
inline LtiSystem random_stable_lti(int n, std::uint64_t seed, double d_gain = 0.2) {
    CounterRng rng(seed, 77);
    MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.symmetric(1.0);
    const double shift = spectral_abscissa(A);
    A -= (shift + 1.0) * MatrixXd::Identity(n, n);
    MatrixXd B(n, 1), C(1, n);
    for (int i = 0; i < n; ++i) {
        B(i, 0) = rng.symmetric(1.0);
        C(0, i) = rng.symmetric(1.0);
    }
    return LtiSystem::make(A, B, C, MatrixXd::Constant(1, 1, d_gain));
}

} // namespace plants

inline PlantBundle make_builtin_plant(const std::string& name) {
    if (name == "scalar_lti") return plants::scalar_lti();
    if (name == "scalar_cubic") return plants::scalar_cubic();
    throw ConfigInvalid("unknown builtin plant '" + name + "'");
}

} // namespace fdkit
