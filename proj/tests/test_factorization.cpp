#include <doctest.h>

#include <cmath>

#include "fdkit/factorization.hpp"
#include "fdkit/lti_oracle.hpp"
#include "fdkit/plants.hpp"

using namespace fdkit;

namespace {

const double kRoot2 = std::sqrt(2.0);

} // namespace

TEST_CASE("build_sir derives the closed-loop maps") {
    const PlantBundle b = plants::scalar_lti();
    SUBCASE("normalizing feedback gives a_I = -sqrt(2) x") {
        auto sir = build_sir(
            b.system, [](const VectorXd& x) { return (-(kRoot2 - 1.0) * x).eval(); },
            [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0).eval(); });
        const VectorXd x = VectorXd::Constant(1, 1.3);
        CHECK(sir.a_I(x)(0) == doctest::Approx(-kRoot2 * 1.3).epsilon(1e-14));
    }
    SUBCASE("identity pre-filter leaves the plant untouched") {
        auto sir = build_sir(
            b.system, [](const VectorXd& x) { return VectorXd::Zero(x.size()).eval(); },
            [](const VectorXd&) { return MatrixXd::Identity(1, 1).eval(); });
        const VectorXd x = VectorXd::Constant(1, 0.7);
        CHECK(sir.a_I(x)(0) == doctest::Approx(b.system.a(x)(0)));
        CHECK(sir.c_I(x)(0) == doctest::Approx(0.0));
        CHECK(sir.c_I(x)(1) == doctest::Approx(0.7));
        CHECK(sir.D_I(x)(0, 0) == doctest::Approx(1.0));
        CHECK(sir.D_I(x)(1, 0) == doctest::Approx(0.0));
    }
    SUBCASE("singular pre-filter rejected") {
        CHECK_THROWS_AS(build_sir(b.system,
                                  [](const VectorXd& x) { return VectorXd::Zero(x.size()).eval(); },
                                  [](const VectorXd&) { return MatrixXd::Zero(1, 1).eval(); }),
                        SingularV);
    }
}

TEST_CASE("build_skr derives the observer maps") {
    const PlantBundle b = plants::scalar_lti();
    SUBCASE("normalizing gain gives a_K = -sqrt(2) xh") {
        auto skr = build_skr(
            b.system, [](const VectorXd&) { return MatrixXd::Constant(1, 1, kRoot2 - 1.0).eval(); },
            [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0).eval(); });
        const VectorXd x = VectorXd::Constant(1, -0.4);
        CHECK(skr.a_K(x)(0) == doctest::Approx(-kRoot2 * -0.4));
    }
    SUBCASE("zero gain is the open-loop predictor") {
        auto skr = build_skr(
            b.system, [](const VectorXd&) { return MatrixXd::Zero(1, 1).eval(); },
            [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0).eval(); });
        const VectorXd x = VectorXd::Constant(1, 0.9);
        CHECK(skr.a_K(x)(0) == doctest::Approx(b.system.a(x)(0)));
    }
    SUBCASE("cubic gain linearizes to the scalar dual at the origin") {
        const PlantBundle c = plants::scalar_cubic();
        auto skr = build_skr(c.system, c.L,
                             [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0).eval(); });
        const MatrixXd J = fd_jacobian([&](const VectorXd& x) { return skr.a_K(x); },
                                       VectorXd::Zero(1));
        CHECK(std::abs(J(0, 0) + kRoot2) < 1e-6);
    }
}

TEST_CASE("normalize_sir on the scalar plant") {
    const PlantBundle b = plants::scalar_lti();
    const SirRealization sir = normalize_sir(b.system, b.storage_sir);
    CHECK(sir.normalized);
    const VectorXd x = VectorXd::Constant(1, 1.0);
    CHECK(sir.g(x)(0) == doctest::Approx(-(kRoot2 - 1.0)).epsilon(1e-12));
    CHECK(sir.V(x)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("normalize_sir on the cubic plant") {
    const PlantBundle b = plants::scalar_cubic();
    // storage equation residual stays at solver precision over the probe box
    const ProbeBox box = ProbeBox::symmetric(1);
    for (const auto& x : box.points())
        CHECK(std::abs(sir_hje_residual(b.system, b.storage_sir, x)) < 1e-12);
    const SirRealization sir = normalize_sir(b.system, b.storage_sir);
    const VectorXd one = VectorXd::Constant(1, 1.0);
    CHECK(sir.g(one)(0) == doctest::Approx(-(std::sqrt(5.0) - 2.0)).epsilon(1e-12));
    CHECK(sir.a_I(one)(0) == doctest::Approx(-std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("normalize_sir accepts the trivial zero-output plant") {
    AffineSystem s;
    s.n = s.p = s.m = 1;
    s.a = [](const VectorXd& x) { return (-x).eval(); };
    s.B = [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0).eval(); };
    s.c = [](const VectorXd&) { return VectorXd::Zero(1).eval(); };
    s.D = [](const VectorXd&) { return MatrixXd::Zero(1, 1).eval(); };
    StorageFunction zero;
    zero.value = [](const VectorXd&) { return 0.0; };
    zero.gradient = [](const VectorXd&) { return VectorXd::Zero(1).eval(); };
    const SirRealization sir = normalize_sir(s, zero);
    const VectorXd x = VectorXd::Constant(1, 1.7);
    CHECK(sir.g(x).norm() == 0.0);
    CHECK(sir.V(x)(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("normalize_sir rejects an inconsistent storage") {
    const PlantBundle b = plants::scalar_cubic();
    StorageFunction bad = b.storage_sir;
    bad.gradient = [g = b.storage_sir.gradient](const VectorXd& x) {
        return (1.05 * g(x)).eval();
    };
    CHECK_THROWS_AS(normalize_sir(b.system, bad), HjeResidualTooLarge);
}

TEST_CASE("normalize_skr on both built-in plants") {
    SUBCASE("scalar plant") {
        const PlantBundle b = plants::scalar_lti();
        const ProbeBox box = ProbeBox::symmetric(1);
        for (const auto& x : box.points())
            CHECK(std::abs(skr_hje_residual(b.system, b.storage_skr, x)) < 1e-12);
        const SkrRealization skr = normalize_skr(b.system, b.storage_skr, b.L);
        CHECK(skr.normalized);
        CHECK(skr.W(VectorXd::Zero(1))(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("cubic plant") {
        const PlantBundle b = plants::scalar_cubic();
        const ProbeBox box = ProbeBox::symmetric(1);
        for (const auto& x : box.points())
            CHECK(std::abs(skr_hje_residual(b.system, b.storage_skr, x)) < 1e-10);
        CHECK_NOTHROW(normalize_skr(b.system, b.storage_skr, b.L));
    }
    SUBCASE("wrong gain is rejected") {
        const PlantBundle b = plants::scalar_lti();
        auto badL = [](const VectorXd&) { return MatrixXd::Constant(1, 1, 1.0).eval(); };
        CHECK_THROWS_AS(normalize_skr(b.system, b.storage_skr, badL), GainConditionViolated);
    }
}

TEST_CASE("pointwise normalization identities") {
    for (const char* name : {"scalar_lti", "scalar_cubic"}) {
        const PlantBundle b = make_builtin_plant(name);
        const SirRealization sir = normalize_sir(b.system, b.storage_sir);
        const SkrRealization skr = normalize_skr(b.system, b.storage_skr, b.L);
        CHECK(verify_sir_pointwise(sir).max_residual < 1e-8);
        CHECK(verify_skr_pointwise(skr).max_residual < 1e-8);
    }
}

TEST_CASE("inner-system energy balance on the cubic plant") {
    const PlantBundle b = plants::scalar_cubic();
    const SirRealization sir = normalize_sir(b.system, b.storage_sir);
    InputSignal v = InputSignal::analytic(1, [](double t) {
        return VectorXd::Constant(1, std::sin(0.9 * t) + 0.4 * std::sin(1.7 * t + 1.0)).eval();
    });
    const auto rep = verify_inner_energy(sir, v, VectorXd::Constant(1, 0.5),
                                         Grid::make(0.0, 1e-3, 10000));
    CHECK(rep.defect < 1e-4 * rep.input_energy);

    // zero input from rest stays at zero balance
    const auto zero = verify_inner_energy(sir, InputSignal::zero(1), VectorXd::Zero(1),
                                          Grid::make(0.0, 1e-2, 100));
    CHECK(zero.defect < 1e-14);
}

TEST_CASE("inner identity of the scalar factors over frequency") {
    const LtiSystem sys = LtiSystem::make(MatrixXd::Constant(1, 1, -1.0),
                                          MatrixXd::Constant(1, 1, 1.0),
                                          MatrixXd::Constant(1, 1, 1.0), MatrixXd::Zero(1, 1));
    const LtiFactorization fac = lti_normalize(sys);
    CHECK(verify_inner_freq(sys, fac, log_spaced_frequencies(1e-2, 1e2, 50)) < 1e-10);
}

TEST_CASE("cascade annihilation") {
    const PlantBundle b = plants::scalar_lti();
    const SirRealization sir = normalize_sir(b.system, b.storage_sir);
    const SkrRealization skr = normalize_skr(b.system, b.storage_skr, b.L);
    InputSignal v = InputSignal::analytic(1, [](double t) {
        return VectorXd::Constant(1, std::sin(t) + 0.3 * std::cos(2.1 * t)).eval();
    });
    const VectorXd x0 = VectorXd::Constant(1, 0.4);

    SUBCASE("matched initial states annihilate") {
        const auto rep = verify_annihilation(skr, sir, v, x0, x0, Grid::make(0.0, 1e-3, 10000));
        CHECK(rep.max_residual < 1e-8 * std::max(1.0, rep.signal_scale));
    }
    SUBCASE("zero latent from the origin stays identically zero") {
        const auto rep = verify_annihilation(skr, sir, InputSignal::zero(1), VectorXd::Zero(1),
                                             VectorXd::Zero(1), Grid::make(0.0, 1e-2, 100));
        CHECK(rep.max_residual == 0.0);
    }
    SUBCASE("mismatched observer state decays at the closed-loop rate") {
        const VectorXd xh0 = VectorXd::Constant(1, 1.4); // x0 + 1
        const auto rep = verify_annihilation(skr, sir, v, x0, xh0, Grid::make(0.0, 1e-3, 8000));
        // r(t) = -e^{-sqrt(2) t} * (xh0 - x0): sample the decay rate
        const double r1 = rep.residuals[1000].norm();
        const double r2 = rep.residuals[3000].norm();
        const double rate = std::log(r1 / r2) / 2.0;
        CHECK(rate == doctest::Approx(std::sqrt(2.0)).epsilon(1e-3));
        CHECK(rep.residuals[0].norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("annihilation residual scales with the integrator order") {
    const PlantBundle b = plants::scalar_cubic();
    const SirRealization sir = normalize_sir(b.system, b.storage_sir);
    const SkrRealization skr = normalize_skr(b.system, b.storage_skr, b.L);
    InputSignal v = InputSignal::analytic(1, [](double t) {
        return VectorXd::Constant(1, std::sin(3.0 * t) + 0.5 * std::sin(1.3 * t)).eval();
    });
    const VectorXd x0 = VectorXd::Constant(1, 0.3);
    const auto coarse = verify_annihilation(skr, sir, v, x0, x0, Grid::make(0.0, 4e-3, 2500));
    const auto fine = verify_annihilation(skr, sir, v, x0, x0, Grid::make(0.0, 2e-3, 5000));
    CHECK(coarse.max_residual / fine.max_residual >= 8.0);
}

TEST_CASE("storage gradients match central differences of the values") {
    for (const char* name : {"scalar_lti", "scalar_cubic"}) {
        const PlantBundle b = make_builtin_plant(name);
        const ProbeBox box = ProbeBox::symmetric(1);
        for (const auto& x : box.points()) {
            CHECK((b.storage_sir.gradient(x) - fd_gradient(b.storage_sir.value, x))
                      .cwiseAbs().maxCoeff() < 1e-6);
            CHECK((b.storage_skr.gradient(x) - fd_gradient(b.storage_skr.value, x))
                      .cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}
