#include <doctest.h>

#include <cmath>

#include "fdkit/lti_oracle.hpp"
#include "fdkit/plants.hpp"
#include "fdkit/projection.hpp"

using namespace fdkit;

namespace {

struct Fixture {
    PlantBundle plant;
    SirRealization sir;
    SkrRealization skr;

    explicit Fixture(const char* name) : plant(make_builtin_plant(name)) {
        sir = normalize_sir(plant.system, plant.storage_sir);
        skr = normalize_skr(plant.system, plant.storage_skr, plant.L);
    }
};

SignalWindow nominal_window(const SirRealization& sir, const InputSignal& v,
                            const VectorXd& x0, const Grid& grid) {
    const SimulationResult sim = simulate(sir.as_affine(), v, x0, grid);
    return window_from_samples(grid.t0, grid.dt, sir.base.p, sim.window.y_samples);
}

InputSignal two_tone(double a1, double w1, double a2, double w2) {
    return InputSignal::analytic(1, [=](double t) {
        return VectorXd::Constant(1, a1 * std::sin(w1 * t) + a2 * std::sin(w2 * t + 0.7)).eval();
    });
}

} // namespace

TEST_CASE("sir_project reproduces image-manifold data") {
    for (const char* name : {"scalar_lti", "scalar_cubic"}) {
        Fixture f(name);
        const VectorXd x0 = VectorXd::Constant(1, 0.3);
        const Grid grid = Grid::make(0.0, 1e-3, 8000);
        const SignalWindow data = nominal_window(f.sir, two_tone(1.0, 0.9, 0.4, 0.5), x0, grid);
        const SirProjectionResult run = sir_project(f.sir, data, x0);
        std::vector<VectorXd> zs(data.count());
        for (int k = 0; k < data.count(); ++k) zs[k] = data.z(k);
        CHECK(relative_sup_distance(zs, run.zhat) < 1e-6);
        // dual value is half the squared projection by construction
        for (int k = 0; k < data.count(); k += 500)
            CHECK(run.Hdual_series[k] ==
                  doctest::Approx(0.5 * run.zhat[k].squaredNorm()).epsilon(1e-12));
    }
}

TEST_CASE("sir_project sends zero data to zero") {
    Fixture f("scalar_lti");
    std::vector<VectorXd> us(200, VectorXd::Zero(1)), ys(200, VectorXd::Zero(1));
    const SignalWindow data = SignalWindow::make(0.0, 0.01, us, ys);
    const SirProjectionResult run = sir_project(f.sir, data, VectorXd::Zero(1));
    for (int k = 0; k < data.count(); ++k) {
        CHECK(run.zhat[k].norm() == 0.0);
        CHECK(run.H_series[k] == 0.0);
    }
}

TEST_CASE("sir_project requires a normalized realization") {
    Fixture f("scalar_lti");
    SirRealization raw = f.sir;
    raw.normalized = false;
    std::vector<VectorXd> us(5, VectorXd::Zero(1)), ys(5, VectorXd::Zero(1));
    const SignalWindow data = SignalWindow::make(0.0, 0.01, us, ys);
    CHECK_THROWS_AS(sir_project(raw, data, VectorXd::Zero(1)), NotNormalized);
}

TEST_CASE("hamiltonians_sir closed forms") {
    VectorXd a(2), b(2);
    SUBCASE("on-manifold equality") {
        a << 1.0, 1.0;
        auto [H, Hd] = hamiltonians_sir({a}, {a});
        CHECK(H[0] == doctest::Approx(1.0));
        CHECK(Hd[0] == doctest::Approx(1.0));
    }
    SUBCASE("zero projection") {
        a << 0.7, -0.3;
        b.setZero();
        auto [H, Hd] = hamiltonians_sir({a}, {b});
        CHECK(H[0] == doctest::Approx(0.0));
        CHECK(Hd[0] == doctest::Approx(0.0));
    }
    SUBCASE("generic pair") {
        a << 2.0, 0.0;
        b << 1.0, 0.0;
        auto [H, Hd] = hamiltonians_sir({a}, {b});
        CHECK(H[0] == doctest::Approx(1.5));
        CHECK(Hd[0] == doctest::Approx(0.5));
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(hamiltonians_sir({a}, {}), LengthMismatch);
    }
}

TEST_CASE("legendre pairing holds on randomized cubic runs") {
    Fixture f("scalar_cubic");
    const VectorXd x0 = VectorXd::Constant(1, 0.2);
    const Grid grid = Grid::make(0.0, 0.05, 99); // 100 samples
    SignalWindow data = nominal_window(f.sir, two_tone(0.8, 1.1, 0.3, 0.4), x0, grid);
    // perturb the y channel so the run is off-manifold
    std::vector<VectorXd> ys = data.y_samples;
    for (int k = 0; k < data.count(); ++k)
        ys[k](0) += 0.2 * std::sin(2.3 * data.t(k));
    data = SignalWindow::make(data.t0, data.dt, data.u_samples, ys);
    const SirProjectionResult run = sir_project(f.sir, data, x0);
    double scale = 1.0;
    for (int k = 0; k < data.count(); ++k)
        scale = std::max(scale, data.z(k).squaredNorm());
    CHECK(legendre_consistency_check(run, data) < 1e-12 * scale);
}

TEST_CASE("skr_forward behavior") {
    Fixture f("scalar_lti");
    const VectorXd x0 = VectorXd::Constant(1, 0.4);
    const Grid grid = Grid::make(0.0, 1e-3, 12000);
    const SignalWindow data = nominal_window(f.sir, two_tone(1.0, 0.8, 0.3, 0.5), x0, grid);

    SUBCASE("nominal data with matched state gives a null residual") {
        const SkrForwardResult fwd = skr_forward(f.skr, data, x0);
        double scale = 0.0, worst = 0.0;
        for (int k = 0; k < data.count(); ++k) {
            scale = std::max(scale, data.z(k).norm());
            worst = std::max(worst, fwd.residual_r[k].norm());
        }
        CHECK(worst < 1e-6 * scale);
    }
    SUBCASE("constant sensor bias converges to its filtered steady value") {
        std::vector<VectorXd> ys = data.y_samples;
        const double b = 0.5;
        for (int k = 0; k < data.count(); ++k) ys[k](0) += b;
        const SignalWindow biased = SignalWindow::make(data.t0, data.dt, data.u_samples, ys);
        const SkrForwardResult fwd = skr_forward(f.skr, biased, x0);
        // residual steady gain from y-offset to r is 1 - C (A - LC)^{-1} L = 1/sqrt(2)
        const double expected = b / std::sqrt(2.0);
        CHECK(fwd.residual_r.back()(0) == doctest::Approx(expected).epsilon(1e-6));
    }
    SUBCASE("zero data from the origin is identically zero") {
        std::vector<VectorXd> us(50, VectorXd::Zero(1)), ys(50, VectorXd::Zero(1));
        const SignalWindow zero = SignalWindow::make(0.0, 0.01, us, ys);
        const SkrForwardResult fwd = skr_forward(f.skr, zero, VectorXd::Zero(1));
        for (const auto& r : fwd.residual_r)
            CHECK(r.norm() == 0.0);
    }
}

TEST_CASE("skr_adjoint matches the dedicated conjugate-pass oracle") {
    Fixture f("scalar_lti");
    LtiSystem sys = LtiSystem::make(MatrixXd::Constant(1, 1, -1.0), MatrixXd::Constant(1, 1, 1.0),
                                    MatrixXd::Constant(1, 1, 1.0), MatrixXd::Zero(1, 1));
    const FactorPair fp = assemble_factors(lti_normalize(sys), sys);

    const int M = 6001;
    const double dt = 2e-3;
    std::vector<VectorXd> pulse(M), zeros_xhat(M, VectorXd::Zero(1));
    std::vector<VectorXd> us(M, VectorXd::Zero(1)), ys(M, VectorXd::Zero(1));
    for (int k = 0; k < M; ++k) {
        const double t = dt * k;
        pulse[k] = VectorXd::Constant(1, std::exp(-20.0 * (t - 5.0) * (t - 5.0)));
    }
    const SignalWindow zero_data = SignalWindow::make(0.0, dt, us, ys);

    SkrForwardResult fwd;
    fwd.t0 = 0.0;
    fwd.dt = dt;
    fwd.residual_r = pulse;
    fwd.state_xhat = zeros_xhat;
    const SkrProjectionResult adj = skr_adjoint(f.skr, fwd, zero_data);

    const auto oracle = lti_adjoint_pass(fp.K0, pulse, 0.0, dt);
    CHECK(relative_sup_distance(oracle, adj.zdelta) < 1e-6);
}

TEST_CASE("skr_adjoint of a zero residual is zero") {
    Fixture f("scalar_cubic");
    const VectorXd x0 = VectorXd::Constant(1, 0.2);
    const Grid grid = Grid::make(0.0, 0.01, 400);
    const SignalWindow data = nominal_window(f.sir, two_tone(0.6, 1.0, 0.2, 0.3), x0, grid);
    SkrForwardResult fwd = skr_forward(f.skr, data, x0);
    for (auto& r : fwd.residual_r) r.setZero();
    const SkrProjectionResult adj = skr_adjoint(f.skr, fwd, data);
    for (const auto& zd : adj.zdelta)
        CHECK(zd.norm() == 0.0);
}

TEST_CASE("skr_project on nominal and corrupted windows") {
    Fixture f("scalar_lti");
    const VectorXd x0 = VectorXd::Constant(1, 0.1);
    const Grid grid = Grid::make(0.0, 1e-3, 10000);
    const SignalWindow data = nominal_window(f.sir, two_tone(1.0, 0.7, 0.4, 1.3), x0, grid);

    SUBCASE("nominal energy ratio") {
        const SkrProjectionResult proj = skr_project(f.skr, data, x0);
        const double ratio = half_energy(stack_sequence(proj.zdelta)) /
                             half_energy(stack(data));
        CHECK(ratio < 1e-10);
    }
    SUBCASE("additive bias on the recorded input produces a nonzero estimate") {
        std::vector<VectorXd> us = data.u_samples;
        for (int k = data.count() / 3; k < data.count(); ++k) us[k](0) += 0.4;
        const SignalWindow biased = SignalWindow::make(data.t0, data.dt, us, data.y_samples);
        const SkrProjectionResult proj = skr_project(f.skr, biased, x0);
        double eu = 0.0, ey = 0.0;
        for (const auto& zd : proj.zdelta) {
            eu += zd(0) * zd(0);
            ey += zd(1) * zd(1);
        }
        CHECK(eu + ey > 1e-3);
        CHECK(eu > 0.2 * (eu + ey)); // both channels carry the estimate
    }
    SUBCASE("empty windows cannot be built") {
        CHECK_THROWS_AS(SignalWindow::make(0.0, 0.01, {}, {}), EmptyWindow);
    }
}

TEST_CASE("costate closure check flags a corrupted storage gradient") {
    Fixture f("scalar_cubic");
    const VectorXd x0 = VectorXd::Constant(1, 0.2);
    const Grid grid = Grid::make(0.0, 0.01, 800);
    const SignalWindow data = nominal_window(f.sir, two_tone(0.8, 0.9, 0.3, 0.4), x0, grid);

    const SirProjectionResult good = sir_project(f.sir, data, x0);
    CHECK(costate_closure_defect(f.sir, good, data) < 1e-3);

    SirRealization corrupted = f.sir; // keep maps, distort only the stored gradient
    corrupted.storage.gradient = [g = f.sir.storage.gradient](const VectorXd& x) {
        return (1.02 * g(x)).eval();
    };
    const SirProjectionResult bad = sir_project(corrupted, data, x0);
    CHECK(costate_closure_defect(corrupted, bad, data) > 1e-3);
}
