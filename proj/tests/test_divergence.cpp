#include <doctest.h>

#include <cmath>

#include "fdkit/divergence.hpp"
#include "fdkit/plants.hpp"

using namespace fdkit;

namespace {

VectorXd vec2(double a, double b) {
    VectorXd v(2);
    v << a, b;
    return v;
}

} // namespace

TEST_CASE("bregman with the quadratic generator") {
    const GeneratingFunction quad = GeneratingFunction::quadratic();
    CHECK(bregman(quad, vec2(1, 0), vec2(0, 1)) == doctest::Approx(1.0));
    CHECK(bregman(quad, vec2(0.3, -2), vec2(0.3, -2)) == doctest::Approx(0.0));
    CHECK_THROWS_AS(bregman(quad, vec2(1, 0), VectorXd::Zero(3)), DimensionMismatch);
}

TEST_CASE("bregman with the entropy generator reproduces KL values") {
    const GeneratingFunction ent = GeneratingFunction::negative_entropy();
    const VectorXd a = vec2(0.5, 0.5);
    const VectorXd b = vec2(0.25, 0.75);
    // direct-summation reference: sum a_i ln(a_i / b_i)
    auto kl = [](const VectorXd& p, const VectorXd& q) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) s += p(i) * std::log(p(i) / q(i));
        return s;
    };
    CHECK(bregman(ent, a, b) == doctest::Approx(kl(a, b)).epsilon(1e-12));
    CHECK(bregman(ent, a, b) == doctest::Approx(0.14384).epsilon(1e-4));
    CHECK(bregman(ent, b, a) == doctest::Approx(0.13081).epsilon(1e-4));
    CHECK(dual_bregman(ent, a, b) == doctest::Approx(kl(b, a)).epsilon(1e-12));
}

TEST_CASE("dual of the quadratic divergence is itself") {
    const GeneratingFunction quad = GeneratingFunction::quadratic();
    CounterRng rng(5, 0);
    for (int t = 0; t < 100; ++t) {
        const VectorXd a = vec2(rng.symmetric(2.0), rng.symmetric(2.0));
        const VectorXd b = vec2(rng.symmetric(2.0), rng.symmetric(2.0));
        CHECK(dual_bregman(quad, a, b) == doctest::Approx(bregman(quad, a, b)).epsilon(1e-12));
    }
}

TEST_CASE("convexity certificate") {
    GeneratingFunction quad = GeneratingFunction::quadratic();
    CHECK(check_convexity(quad, 3, CounterRng(9, 0), -2.0, 2.0));
    CHECK(quad.convexity_checked);
    GeneratingFunction bad;
    bad.value = [](const VectorXd& a) { return -a.squaredNorm(); };
    bad.gradient = [](const VectorXd& a) { return (-2.0 * a).eval(); };
    CHECK_FALSE(check_convexity(bad, 3, CounterRng(9, 1), -2.0, 2.0));
}

TEST_CASE("pointwise divergence cross-checks its two routes") {
    std::vector<VectorXd> z{vec2(2, 0), vec2(0, 1), vec2(0.5, 0.5)};
    std::vector<VectorXd> zh{vec2(1, 0), vec2(0, -1), vec2(0.5, 0.5)};
    const auto d = pointwise_divergence(z, zh);
    CHECK(d[0] == doctest::Approx(0.5));
    CHECK(d[1] == doctest::Approx(2.0));
    CHECK(d[2] == doctest::Approx(0.0));
}

TEST_CASE("window evaluation: stacked J and thresholds") {
    SUBCASE("single-sample window reduces to the pointwise case") {
        std::vector<VectorXd> us{VectorXd::Constant(1, 2.0)};
        std::vector<VectorXd> ys{VectorXd::Constant(1, 0.0)};
        const SignalWindow w = SignalWindow::make(0.0, 0.1, us, ys);
        SirProjectionResult run;
        run.t0 = 0.0;
        run.dt = 0.1;
        run.zhat = {vec2(1.0, 0.0)};
        run.latent_v = {VectorXd::Zero(1)};
        run.state_x = {VectorXd::Zero(1)};
        run.H_series = {run.zhat[0].dot(w.z(0)) - 0.5 * run.zhat[0].squaredNorm()};
        run.Hdual_series = {0.5 * run.zhat[0].squaredNorm()};
        const WindowEvaluation ev = evaluate_J_sir(w, run);
        CHECK(ev.J == doctest::Approx(0.5));
        CHECK(ev.pointwise_mean == doctest::Approx(0.5));
    }
    SUBCASE("annihilated projection leaves the data energy") {
        std::vector<VectorXd> us(4, VectorXd::Constant(1, 1.0));
        std::vector<VectorXd> ys(4, VectorXd::Constant(1, -1.0));
        const SignalWindow w = SignalWindow::make(0.0, 0.1, us, ys);
        SirProjectionResult run;
        run.t0 = 0.0;
        run.dt = 0.1;
        for (int k = 0; k < 4; ++k) {
            run.zhat.push_back(VectorXd::Zero(2));
            run.H_series.push_back(0.0);
            run.Hdual_series.push_back(0.0);
            run.latent_v.push_back(VectorXd::Zero(1));
            run.state_x.push_back(VectorXd::Zero(1));
        }
        const WindowEvaluation ev = evaluate_J_sir(w, run);
        CHECK(ev.J == doctest::Approx(0.5 * stack(w).squared_norm()));
    }
}

TEST_CASE("thresholds") {
    StackedVector zM;
    zM.entries = vec2(2.0, 0.0); // squared norm 4
    CHECK(threshold_sir(0.95, zM) == doctest::Approx(0.1));
    CHECK(threshold_sir(1.0, zM) == doctest::Approx(1e-12)); // floor at the boundary
    StackedVector z2;
    z2.entries = VectorXd::Constant(1, std::sqrt(2.0));
    CHECK(threshold_sir(0.5, z2) == doctest::Approx(0.5));
    CHECK_THROWS_AS(threshold_sir(0.3, zM), GammaOutOfRange);

    CHECK(threshold_skr(0.1, zM) == doctest::Approx(0.2));
    CHECK(threshold_skr(0.5, z2) == doctest::Approx(0.5));
    CHECK_THROWS_AS(threshold_skr(0.0, zM), AlphaOutOfRange);
    CHECK_THROWS_AS(threshold_skr(1.0, zM), AlphaOutOfRange);
}

TEST_CASE("decision logic keeps the boundary fault-free") {
    CHECK(decide(0.05, 0.1) == Verdict::fault_free);
    CHECK(decide(0.1, 0.1) == Verdict::fault_free);
    CHECK(decide(0.2, 0.1) == Verdict::faulty);
}

TEST_CASE("evaluate_J_skr") {
    SkrProjectionResult res;
    res.zdelta = {vec2(1, 0), vec2(1, 0), vec2(1, 0)};
    CHECK(evaluate_J_skr(res) == doctest::Approx(0.5));
    res.zdelta.clear();
    CHECK_THROWS_AS(evaluate_J_skr(res), EmptyWindow);
}

TEST_CASE("nominal windows evaluate to a vanishing J") {
    const PlantBundle b = plants::scalar_lti();
    const SirRealization sir = normalize_sir(b.system, b.storage_sir);
    const VectorXd x0 = VectorXd::Constant(1, 0.3);
    const Grid grid = Grid::make(0.0, 1e-3, 6000);
    InputSignal v = InputSignal::analytic(1, [](double t) {
        return VectorXd::Constant(1, std::sin(0.8 * t) + 0.4 * std::sin(0.5 * t + 0.3)).eval();
    });
    const SimulationResult sim = simulate(sir.as_affine(), v, x0, grid);
    const SignalWindow data = window_from_samples(0.0, grid.dt, 1, sim.window.y_samples);
    const SirProjectionResult run = sir_project(sir, data, x0);
    const WindowEvaluation ev = evaluate_J_sir(data, run);
    CHECK(ev.J < 1e-10 * half_energy(stack(data)));
}

TEST_CASE("minimality: the projector's own latent is a tight candidate") {
    const PlantBundle b = plants::scalar_lti();
    const SirRealization sir = normalize_sir(b.system, b.storage_sir);
    const VectorXd x0 = VectorXd::Constant(1, 0.2);
    const Grid grid = Grid::make(0.0, 2e-3, 5000);

    InputSignal v = InputSignal::analytic(1, [](double t) {
        return VectorXd::Constant(1, std::sin(0.8 * t)).eval();
    });
    const SimulationResult sim = simulate(sir.as_affine(), v, x0, grid);
    SignalWindow data = window_from_samples(0.0, grid.dt, 1, sim.window.y_samples);
    // off-manifold perturbation: per-sample noise, incoherent with any
    // smooth manifold candidate
    CounterRng noise(17, 0);
    std::vector<VectorXd> ys = data.y_samples;
    for (int k = 0; k < data.count(); ++k) ys[k](0) += noise.symmetric(0.15);
    data = SignalWindow::make(data.t0, data.dt, data.u_samples, ys);

    const SirProjectionResult run = sir_project(sir, data, x0);
    const StackedVector zM = stack(data);
    const double Dhat = 0.5 * (zM.entries - stack_sequence(run.zhat).entries).squaredNorm();

    // candidate driven by the projector's own latent reproduces its divergence
    InputSignal vhat = InputSignal::sampled(0.0, grid.dt, run.latent_v);
    const SimulationResult cand = simulate(sir.as_affine(), vhat, x0, grid);
    const StackedVector z0M = stack_sequence(cand.window.y_samples);
    const double Dcand = 0.5 * (zM.entries - z0M.entries).squaredNorm();
    CHECK(std::abs(Dcand - Dhat) < 1e-6 * std::max(1.0, zM.squared_norm()));

    // random candidates never beat the projection
    const MinimalityReport rep = minimality_check(data, run, sir, x0, 50, CounterRng(3, 0));
    CHECK(rep.violations == 0);
    CHECK(rep.min_margin > -1e-8 * std::max(1.0, zM.squared_norm()));
}

TEST_CASE("minimality: on-manifold data gives zero divergence to itself") {
    const PlantBundle b = plants::scalar_cubic();
    const SirRealization sir = normalize_sir(b.system, b.storage_sir);
    const VectorXd x0 = VectorXd::Constant(1, 0.1);
    const Grid grid = Grid::make(0.0, 2e-3, 4000);
    InputSignal v = InputSignal::analytic(1, [](double t) {
        return VectorXd::Constant(1, 0.8 * std::sin(0.6 * t)).eval();
    });
    const SimulationResult sim = simulate(sir.as_affine(), v, x0, grid);
    const SignalWindow data = window_from_samples(0.0, grid.dt, 1, sim.window.y_samples);
    const SirProjectionResult run = sir_project(sir, data, x0);
    const MinimalityReport rep = minimality_check(data, run, sir, x0, 25, CounterRng(4, 0));
    CHECK(rep.projection_divergence < 1e-10 * std::max(1.0, stack(data).squared_norm()));
    CHECK(rep.violations == 0);
}
