#include <doctest.h>

#include <cmath>

#include "fdkit/lti_oracle.hpp"
#include "fdkit/plants.hpp"
#include "fdkit/projection.hpp"

using namespace fdkit;

namespace {

LtiSystem scalar_sys() {
    return LtiSystem::make(MatrixXd::Constant(1, 1, -1.0), MatrixXd::Constant(1, 1, 1.0),
                           MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, 0.0));
}

double smooth01(double th) {
    if (th <= 0.0) return 0.0;
    if (th >= 1.0) return 1.0;
    return th * th * th * (th * (th * 6.0 - 15.0) + 10.0);
}

InputSignal packet(double a, double w, double rise, double fall, double edge = 2.0) {
    return InputSignal::analytic(1, [=](double t) {
        const double env = smooth01((t - rise) / edge) * (1.0 - smooth01((t - fall) / edge));
        return VectorXd::Constant(1, env * a * std::sin(w * t)).eval();
    });
}

} // namespace

TEST_CASE("assembled factors satisfy the closed-form scalar transfer values") {
    const LtiSystem sys = scalar_sys();
    const FactorPair fp = assemble_factors(lti_normalize(sys), sys);
    // M0(s) = (s+1)/(s+sqrt(2)), N0(s) = 1/(s+sqrt(2))
    for (double w : {0.0, 0.5, 2.0}) {
        const std::complex<double> s(0.0, w);
        const Eigen::MatrixXcd I0 = fp.I0.response(w);
        const std::complex<double> M0 = (s + 1.0) / (s + std::sqrt(2.0));
        const std::complex<double> N0 = 1.0 / (s + std::sqrt(2.0));
        CHECK(std::abs(I0(0, 0) - M0) < 1e-12);
        CHECK(std::abs(I0(1, 0) - N0) < 1e-12);
    }
}

TEST_CASE("kernel factor annihilates the image factor at probe frequencies") {
    for (const LtiSystem& sys : {scalar_sys(), plants::random_stable_lti(3, 123, 0.25)}) {
        const LtiFactorization fac = lti_normalize(sys);
        const auto freqs = log_spaced_frequencies(1e-2, 1e2, 20);
        CHECK(verify_factor_annihilation_freq(sys, fac, freqs) < 1e-10);
        CHECK(verify_block_identity_freq(sys, fac, freqs) < 1e-8);
    }
}

TEST_CASE("zero-output plant has a vanishing output factor") {
    const LtiSystem sys = LtiSystem::make(MatrixXd::Constant(1, 1, -1.0),
                                          MatrixXd::Constant(1, 1, 1.0), MatrixXd::Zero(1, 1),
                                          MatrixXd::Zero(1, 1));
    LtiFactorization fac;
    lti_normalized_rcf(sys, fac);
    fac.Y = MatrixXd::Zero(1, 1);
    fac.L0 = MatrixXd::Zero(1, 1);
    fac.W0 = MatrixXd::Identity(1, 1);
    const FactorPair fp = assemble_factors(fac, sys);
    for (double w : {0.1, 1.0, 10.0})
        CHECK(fp.I0.response(w).bottomRows(1).norm() < 1e-14);
}

TEST_CASE("orthogonal projection reproduces image windows and kills conjugate data") {
    const LtiSystem sys = scalar_sys();
    const FactorPair fp = assemble_factors(lti_normalize(sys), sys);
    const AffineSystem lifted = lift_lti(sys);
    const double dt = 2e-3, T = 34.0;
    const Grid grid = Grid::make(0.0, dt, static_cast<int>(T / dt));

    SUBCASE("image-manifold data reproduced") {
        const SimulationResult sim =
            simulate(lifted, packet(1.0, 0.9, 1.0, 17.0), VectorXd::Zero(1), grid);
        const auto projected = orthogonal_project(fp, sim.window);
        std::vector<VectorXd> zs(sim.window.count());
        for (int k = 0; k < sim.window.count(); ++k) zs[k] = sim.window.z(k);
        CHECK(relative_sup_distance(zs, projected) < 1e-6);
    }
    SUBCASE("kernel-conjugate data annihilated") {
        InputSignal r = packet(1.0, 0.8, 12.0, 17.0);
        std::vector<VectorXd> rs(grid.samples());
        for (int k = 0; k < grid.samples(); ++k) rs[k] = r(grid.t(k));
        const auto zconj = lti_adjoint_pass(fp.K0, rs, 0.0, dt);
        const SignalWindow w = window_from_samples(0.0, dt, 1, zconj);
        const auto projected = orthogonal_project(fp, w);
        double zscale = 1e-12, worst = 0.0;
        for (const auto& zk : zconj) zscale = std::max(zscale, zk.norm());
        for (const auto& pk : projected) worst = std::max(worst, pk.norm());
        CHECK(worst / zscale < 1e-6);
    }
    SUBCASE("zero data projects to zero") {
        std::vector<VectorXd> us(100, VectorXd::Zero(1)), ys(100, VectorXd::Zero(1));
        const SignalWindow w = SignalWindow::make(0.0, dt, us, ys);
        const auto projected = orthogonal_project(fp, w);
        for (const auto& pk : projected)
            CHECK(pk.norm() == 0.0);
    }
}

TEST_CASE("pythagoras and observer equivalence on packet windows") {
    const LtiSystem sys = scalar_sys();
    const FactorPair fp = assemble_factors(lti_normalize(sys), sys);
    const AffineSystem lifted = lift_lti(sys);
    const double dt = 2e-3, T = 34.0;
    const Grid grid = Grid::make(0.0, dt, static_cast<int>(T / dt));
    const SimulationResult sim =
        simulate(lifted, packet(1.0, 1.1, 1.0, 16.0), VectorXd::Zero(1), grid);

    SignalWindow data = sim.window;
    std::vector<VectorXd> ys = data.y_samples;
    for (int k = 0; k < data.count(); ++k) {
        const double t = data.t(k);
        ys[k](0) += 0.4 * smooth01((t - 6.0) / 1.0) * (1.0 - smooth01((t - 13.0) / 1.0));
    }
    data = SignalWindow::make(data.t0, data.dt, data.u_samples, ys);

    const auto projected = orthogonal_project(fp, data);
    CHECK(pythagoras_check(data, projected) < 1e-6);
    CHECK(observer_equivalence_check(fp, data, projected) < 1e-6);

    SUBCASE("degenerate splits") {
        // zh = z: defect identically zero
        std::vector<VectorXd> zs(data.count());
        for (int k = 0; k < data.count(); ++k) zs[k] = data.z(k);
        CHECK(pythagoras_check(data, zs) < 1e-15);
        // zh = 0: defect identically zero
        std::vector<VectorXd> zeros(data.count(), VectorXd::Zero(2));
        CHECK(pythagoras_check(data, zeros) < 1e-15);
    }
}

TEST_CASE("nominal data give near-zero residual on both equivalence sides") {
    const LtiSystem sys = scalar_sys();
    const FactorPair fp = assemble_factors(lti_normalize(sys), sys);
    const AffineSystem lifted = lift_lti(sys);
    const Grid grid = Grid::make(0.0, 2e-3, 15000);
    const SimulationResult sim =
        simulate(lifted, packet(1.0, 0.7, 1.0, 14.0), VectorXd::Zero(1), grid);
    const auto r = kernel_residual_pass(fp, sim.window);
    double worst = 0.0;
    for (const auto& rk : r) worst = std::max(worst, rk.norm());
    CHECK(worst < 1e-8);
}
