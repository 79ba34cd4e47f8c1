#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fdkit/random.hpp"
#include "fdkit/signals.hpp"

using namespace fdkit;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream f(path, std::ios::binary);
    f << text;
    return path;
}

SignalWindow random_window(CounterRng& rng, int M, int p, int m, double dt = 0.1) {
    std::vector<VectorXd> us(M), ys(M);
    for (int k = 0; k < M; ++k) {
        us[k] = VectorXd::Zero(p);
        ys[k] = VectorXd::Zero(m);
        for (int j = 0; j < p; ++j) us[k](j) = rng.symmetric(2.0);
        for (int j = 0; j < m; ++j) ys[k](j) = rng.symmetric(2.0);
    }
    return SignalWindow::make(0.0, dt, std::move(us), std::move(ys));
}

} // namespace

TEST_CASE("load_csv parses a uniform window") {
    const auto path = write_temp("fdkit_ok.csv",
                                 "t,u_1,y_1\n0,1,0\n0.1,1,0\n0.2,1,0\n");
    const SignalWindow w = load_csv(path);
    CHECK(w.count() == 3);
    CHECK(w.dt == doctest::Approx(0.1));
    CHECK(w.p() == 1);
    CHECK(w.m() == 1);
    CHECK(w.u_samples[2](0) == doctest::Approx(1.0));
    std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects a non-uniform grid") {
    const auto path = write_temp("fdkit_grid.csv",
                                 "t,u_1,y_1\n0,1,0\n0.1,1,0\n0.25,1,0\n");
    CHECK_THROWS_AS(load_csv(path), NonUniformGrid);
    std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects non-finite values") {
    const auto path = write_temp("fdkit_nan.csv",
                                 "t,u_1,y_1\n0,nan,0\n0.1,1,0\n");
    CHECK_THROWS_AS(load_csv(path), NonFiniteValue);
    std::filesystem::remove(path);
}

TEST_CASE("load_csv rejects a malformed header") {
    const auto path = write_temp("fdkit_hdr.csv", "t,u_1,x_1\n0,1,0\n");
    CHECK_THROWS_AS(load_csv(path), MalformedHeader);
    std::filesystem::remove(path);
}

TEST_CASE("stack scales blocks by 1/sqrt(M)") {
    SUBCASE("single sample is the identity") {
        std::vector<VectorXd> seq{VectorXd::Constant(1, 2.0)};
        const StackedVector s = stack_sequence(seq);
        CHECK(s.entries.size() == 1);
        CHECK(s.entries(0) == doctest::Approx(2.0));
        CHECK(s.squared_norm() == doctest::Approx(4.0));
    }
    SUBCASE("four equal samples average to the per-sample norm") {
        VectorXd z(2);
        z << 1.0, 0.0;
        std::vector<VectorXd> seq(4, z);
        CHECK(stack_sequence(seq).squared_norm() == doctest::Approx(1.0));
    }
    SUBCASE("zero window stacks to zero") {
        std::vector<VectorXd> us(3, VectorXd::Zero(1)), ys(3, VectorXd::Zero(1));
        const SignalWindow w = SignalWindow::make(0.0, 0.1, us, ys);
        CHECK(stack(w).squared_norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("half_energy") {
    StackedVector v;
    v.entries = VectorXd(2);
    v.entries << 2.0, 0.0;
    CHECK(half_energy(v) == doctest::Approx(2.0));
    v.entries = VectorXd::Zero(4);
    CHECK(half_energy(v) == doctest::Approx(0.0));
    v.entries = VectorXd::Ones(4);
    CHECK(half_energy(v) == doctest::Approx(2.0));
}

TEST_CASE("stack is linear and energy-consistent") {
    CounterRng rng(7, 0);
    for (int trial = 0; trial < 50; ++trial) {
        CounterRng r = rng.fork(trial);
        const int M = 1 + static_cast<int>(r.uniform(0.0, 20.0));
        SignalWindow w1 = random_window(r, M, 2, 1);
        SignalWindow w2 = random_window(r, M, 2, 1);
        const double a = r.symmetric(3.0), b = r.symmetric(3.0);

        std::vector<VectorXd> us(M), ys(M);
        for (int k = 0; k < M; ++k) {
            us[k] = a * w1.u_samples[k] + b * w2.u_samples[k];
            ys[k] = a * w1.y_samples[k] + b * w2.y_samples[k];
        }
        const SignalWindow combo = SignalWindow::make(0.0, w1.dt, us, ys);
        const VectorXd lhs = stack(combo).entries;
        const VectorXd rhs = a * stack(w1).entries + b * stack(w2).entries;
        CHECK((lhs - rhs).norm() <= 1e-12 * std::max(1.0, rhs.norm()));

        double acc = 0.0;
        for (int k = 0; k < M; ++k) acc += combo.z(k).squaredNorm();
        const double expected = acc / (2.0 * M);
        CHECK(half_energy(stack(combo)) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("csv round trip preserves values") {
    CounterRng rng(11, 0);
    SignalWindow w = random_window(rng, 17, 2, 3, 0.05);
    const auto path = (std::filesystem::temp_directory_path() / "fdkit_rt.csv").string();
    save_csv(path, w);
    const SignalWindow back = load_csv(path);
    REQUIRE(back.count() == w.count());
    CHECK(back.dt == doctest::Approx(w.dt).epsilon(1e-15));
    for (int k = 0; k < w.count(); ++k) {
        CHECK((back.u_samples[k] - w.u_samples[k]).norm() <= 1e-12);
        CHECK((back.y_samples[k] - w.y_samples[k]).norm() <= 1e-12);
    }
    std::filesystem::remove(path);
}
