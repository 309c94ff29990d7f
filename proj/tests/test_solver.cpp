#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "oracles.hpp"
#include "qflow/diagnostics.hpp"
#include "qflow/solver.hpp"

using namespace qflow;

namespace {
Grid grid1d(std::size_t n, double L = 1.0) { return Grid(1, {n, 1, 1}, {L, 0, 0}); }
Grid grid2d(std::size_t n, double L = 1.0) { return Grid(2, {n, n, 1}, {L, L, 0}); }
}  // namespace

TEST_CASE("laplacian of a constant field vanishes") {
    Grid g = grid2d(16);
    QField f(g);
    std::mt19937_64 rng(51);
    const QTensor q = oracle::random_qtensor(rng);
    for (std::size_t i = 0; i < g.cells(); ++i) f.set(i, q);
    QField lap(g);
    laplacian_field(f, lap);
    for (int c = 0; c < 5; ++c)
        for (double v : lap.ch[c]) CHECK(std::abs(v) <= 1e-11);
}

TEST_CASE("laplacian converges at second order on a cosine field") {
    const auto err = [](std::size_t n) {
        Grid g = grid1d(n);
        QField f(g);
        const double k = 2.0 * M_PI;
        for (std::size_t i = 0; i < n; ++i)
            f.set(i, QTensor(std::cos(k * g.position(i)[0]), 0, 0, 0, 0));
        QField lap(g);
        laplacian_field(f, lap);
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(lap.ch[0][i] +
                                             k * k * std::cos(k * g.position(i)[0])));
        return worst;
    };
    const double e32 = err(32), e64 = err(64), e128 = err(128);
    CHECK(std::log2(e32 / e64) >= 1.9);
    CHECK(std::log2(e64 / e128) >= 1.9);
}

TEST_CASE("laplacian_at reproduces the field kernel bit for bit") {
    std::mt19937_64 rng(52);
    Grid g(3, {8, 8, 8}, {1.0, 2.0, 0.5});
    QField f(g);
    for (int c = 0; c < 5; ++c)
        for (auto& v : f.ch[c]) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    QField lap(g);
    laplacian_field(f, lap);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const QTensor a = laplacian_at(f, i);
        const QTensor b = lap.at(i);
        for (std::size_t c = 0; c < 5; ++c) CHECK(a.comp(c) == b.comp(c));
    }
}

TEST_CASE("3-d flow run: dissipative and bounded") {
    MaterialParams p;
    Grid g(3, {8, 8, 8}, {1.0, 1.0, 1.0});
    QField f = initial_from_director(initial_perturbed_constant(g, 0.2, 13), p);
    SolverConfig cfg;
    QFlowStepper stepper(g, p, cfg);
    const double bound = std::sqrt(2.0 / 3.0) * s_plus(p) * (1.0 + 1e-6);
    double prev = total_energy(f, p).total();
    for (int it = 0; it < 100; ++it) {
        stepper.step(f);
        const double cur = total_energy(f, p).total();
        CHECK(cur <= prev * (1.0 + 1e-10) + 1e-10);
        prev = cur;
    }
    for (std::size_t i = 0; i < g.cells(); ++i) CHECK(norm(f.at(i)) <= bound);
}

TEST_CASE("q_flow_rhs on constant fields") {
    MaterialParams p;
    Grid g = grid2d(8);
    // constant field on N: rhs vanishes
    {
        QField f(g);
        const QTensor q = uniaxial(s_plus(p), {0, 0, 1});
        for (std::size_t i = 0; i < g.cells(); ++i) f.set(i, q);
        const QField rhs = q_flow_rhs(f, p);
        for (std::size_t i = 0; i < g.cells(); ++i) CHECK(norm(rhs.at(i)) <= 1e-11);
    }
    // constant field off N: rhs = -J/(eps Gamma)
    {
        std::mt19937_64 rng(53);
        const QTensor q = oracle::random_qtensor(rng);
        QField f(g);
        for (std::size_t i = 0; i < g.cells(); ++i) f.set(i, q);
        const QField rhs = q_flow_rhs(f, p);
        const QTensor expect = (-1.0 / (p.eps * p.Gamma)) * bulk_force_J(q, p);
        for (std::size_t i = 0; i < g.cells(); ++i)
            CHECK(norm(rhs.at(i) - expect) <= 1e-10 * std::max(1.0, norm(expect)));
    }
}

TEST_CASE("q_flow_rhs of the circle map is purely normal") {
    MaterialParams p;
    Grid g = grid2d(32);
    const DirectorField n0 = initial_circle_map(g, 1, 0);
    const QField q0 = initial_from_director(n0, p);
    const QField rhs = q_flow_rhs(q0, p);
    QField lap(g);
    laplacian_field(q0, lap);
    const double diff = p.L1 / p.Gamma;
    for (std::size_t i = 0; i < g.cells(); i += 17) {
        const auto [pi, frame] = project_to_N(q0.at(i), p, 1e-8);
        const TangentNormalCoeffs c = decompose_at_N(rhs.at(i), frame);
        CHECK(std::sqrt(c.tangent_norm_sq()) <= 1e-10 * std::max(1.0, norm(rhs.at(i))));
        // normal part equals (L1/Gamma) * normal part of Lap Q (J = 0 on N)
        const TangentNormalCoeffs cl = decompose_at_N(lap.at(i), frame);
        for (int k = 0; k < 3; ++k)
            CHECK(c.normal[k] == doctest::Approx(diff * cl.normal[k]).epsilon(1e-10));
    }
}

TEST_CASE("full flow rhs converges at second order in h on the circle map") {
    MaterialParams p;
    const auto err = [&](std::size_t n) {
        Grid g = grid2d(n);
        const QField q0 = initial_from_director(initial_circle_map(g, 1, 0), p);
        const QField rhs = q_flow_rhs(q0, p);
        const double sp = s_plus(p);
        const double k = 2.0 * M_PI;
        double worst = 0.0;
        for (std::size_t i = 0; i < g.cells(); ++i) {
            const double x = g.position(i)[0];
            const Vec3 nn = {std::cos(k * x), std::sin(k * x), 0.0};
            const Vec3 np = {-std::sin(k * x), std::cos(k * x), 0.0};
            // continuum rhs: J = 0 on N and Lap Q = 2 s+ k^2 (n' n' - n n)
            const QTensor exact =
                (p.L1 / p.Gamma) * 2.0 * sp * k * k * (uniaxial(1.0, np) - uniaxial(1.0, nn));
            worst = std::max(worst, norm(rhs.at(i) - exact));
        }
        return worst;
    };
    const double e32 = err(32), e64 = err(64), e128 = err(128);
    CHECK(std::log2(e32 / e64) >= 1.9);
    CHECK(std::log2(e64 / e128) >= 1.9);
}

TEST_CASE("stability bound refuses an oversized dt") {
    MaterialParams p;
    Grid g = grid2d(32);
    SolverConfig cfg;
    cfg.scheme = Scheme::explicit_euler;
    cfg.dt = 10.0 * stability_bound(g, p, cfg.scheme);
    CHECK_THROWS_AS(QFlowStepper(g, p, cfg), ConfigError);
    cfg.scheme = Scheme::strang_split;
    cfg.dt = 1.01 * stability_bound(g, p, cfg.scheme);
    CHECK_THROWS_AS(QFlowStepper(g, p, cfg), ConfigError);
}

TEST_CASE("strang bound depends only on diffusion") {
    MaterialParams p;
    p.eps = 1e-6;  // stiff bulk
    Grid g = grid2d(16);
    CHECK(stability_bound(g, p, Scheme::strang_split) ==
          doctest::Approx(diffusion_bound(g, p)).epsilon(1e-15));
    CHECK(stability_bound(g, p, Scheme::explicit_euler) <
          0.01 * diffusion_bound(g, p));
}

TEST_CASE("constant field on N is a fixed point of every scheme") {
    MaterialParams p;
    Grid g = grid2d(8);
    QField f0(g);
    const QTensor q = uniaxial(s_plus(p), {0, 0, 1});
    for (std::size_t i = 0; i < g.cells(); ++i) f0.set(i, q);
    for (Scheme s : {Scheme::explicit_euler, Scheme::rk2, Scheme::strang_split}) {
        SolverConfig cfg;
        cfg.scheme = s;
        QField f = f0;
        QFlowStepper stepper(g, p, cfg);
        for (int it = 0; it < 100; ++it) stepper.step(f);
        for (std::size_t i = 0; i < g.cells(); ++i)
            CHECK(norm(f.at(i) - q) <= 1e-10);
    }
}

TEST_CASE("zero field stays exactly zero") {
    MaterialParams p;
    Grid g = grid2d(8);
    QField f(g);
    SolverConfig cfg;
    QFlowStepper stepper(g, p, cfg);
    for (int it = 0; it < 10; ++it) stepper.step(f);
    for (int c = 0; c < 5; ++c)
        for (double v : f.ch[c]) CHECK(v == 0.0);
}

TEST_CASE("uniform uniaxial field follows the scalar ODE oracle") {
    MaterialParams p;
    Grid g = grid1d(8);
    const double q0 = 0.2;
    const double T = 10.0 * p.eps * p.Gamma;
    for (Scheme s : {Scheme::strang_split, Scheme::rk2}) {
        QField f(g);
        for (std::size_t i = 0; i < g.cells(); ++i) f.set(i, uniaxial(q0, {1, 0, 0}));
        SolverConfig cfg;
        cfg.scheme = s;
        if (s == Scheme::rk2) cfg.dt = stability_bound(g, p, s) / 50.0;
        QFlowStepper probe(g, p, cfg);
        const long steps = std::lround(std::ceil(T / probe.dt()));
        cfg.dt = T / steps;
        QFlowStepper stepper(g, p, cfg);
        for (long it = 0; it < steps; ++it) stepper.step(f);

        const double qref = oracle::rk4(
            [&](double x) {
                return (p.a * x + p.b * x * x / 3.0 - 2.0 * p.c * x * x * x / 3.0) /
                       (p.eps * p.Gamma);
            },
            q0, T, steps * 100);
        // order parameter recovered by projecting on the uniaxial direction
        const QTensor dir = uniaxial(1.0, {1, 0, 0});
        const double got = frobenius(f.at(3), dir) / norm_sq(dir);
        CHECK(std::abs(got - qref) <= 1e-4 * std::abs(qref));
    }
}

TEST_CASE("blow-up is reported with cell and time") {
    MaterialParams p;
    Grid g = grid1d(8);
    QField f(g);
    for (std::size_t i = 0; i < g.cells(); ++i)
        f.set(i, uniaxial(1e160, {1, 0, 0}));  // |Q|^2 overflows in J
    SolverConfig cfg;
    QFlowStepper stepper(g, p, cfg);
    CHECK_THROWS_AS(stepper.step(f), BlowupError);
}

TEST_CASE("runs preserve the symmetric-traceless representation exactly") {
    MaterialParams p;
    Grid g = grid2d(16);
    DirectorField n0 = initial_perturbed_constant(g, 0.2, 99);
    QField f = initial_from_director(n0, p);
    SolverConfig cfg;
    cfg.drift_correction = false;
    QFlowStepper stepper(g, p, cfg);
    for (int it = 0; it < 1000; ++it) stepper.step(f);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const Mat3 m = f.at(i).matrix();
        CHECK(m[0][0] + m[1][1] + m[2][2] == 0.0);
        CHECK(m[0][1] == m[1][0]);
        CHECK(m[0][2] == m[2][0]);
        CHECK(m[1][2] == m[2][1]);
    }
}

TEST_CASE("maximum principle on a short circle-map run") {
    MaterialParams p;
    Grid g = grid2d(32);
    QField f = initial_from_director(initial_circle_map(g, 1, 0), p);
    const double bound = std::sqrt(2.0 / 3.0) * s_plus(p) * (1.0 + 1e-6);
    SolverConfig cfg;
    QFlowStepper stepper(g, p, cfg);
    for (int it = 0; it < 200; ++it) {
        stepper.step(f);
        double sup = 0.0;
        for (std::size_t i = 0; i < g.cells(); ++i) sup = std::max(sup, norm(f.at(i)));
        CHECK(sup <= bound);
    }
}

TEST_CASE("energy decreases step to step under every scheme") {
    MaterialParams p;
    Grid g = grid2d(32);
    for (Scheme s : {Scheme::strang_split, Scheme::rk2, Scheme::explicit_euler}) {
        QField f = initial_from_director(initial_circle_map(g, 1, 0), p);
        SolverConfig cfg;
        cfg.scheme = s;
        cfg.dt = 0.5 * stability_bound(g, p, s);
        QFlowStepper stepper(g, p, cfg);
        double prev = total_energy(f, p).total();
        const int steps = s == Scheme::strang_split ? 200 : 50;
        for (int it = 0; it < steps; ++it) {
            stepper.step(f);
            const double cur = total_energy(f, p).total();
            CHECK(cur <= prev * (1.0 + 1e-10) + 1e-10);
            prev = cur;
        }
    }
}

TEST_CASE("harmonic map: constant field is exactly fixed") {
    Grid g = grid2d(16);
    const DirectorField n0 = initial_constant(g, {0, 0, 1});
    SolverConfig cfg;
    const DirectorField n1 = step_harmonic_map(n0, cfg);
    for (int c = 0; c < 3; ++c)
        CHECK(std::memcmp(n0.ch[c].data(), n1.ch[c].data(),
                          g.cells() * sizeof(double)) == 0);
}

TEST_CASE("harmonic map: circle map is stationary per step") {
    Grid g = grid1d(64);
    const DirectorField n0 = initial_circle_map(g, 1, 0);
    SolverConfig cfg;
    cfg.dt = g.spacing(0) * g.spacing(0) / 8.0;
    const DirectorField n1 = step_harmonic_map(n0, cfg);
    double sup = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const Vec3 d = {n1.ch[0][i] - n0.ch[0][i], n1.ch[1][i] - n0.ch[1][i],
                        n1.ch[2][i] - n0.ch[2][i]};
        sup = std::max(sup, norm(d));
    }
    CHECK(sup <= 1e-8);
}

TEST_CASE("harmonic map: perturbed constant relaxes, Dirichlet energy decreases") {
    Grid g = grid2d(24);
    DirectorField n = initial_perturbed_constant(g, 0.15, 5);
    SolverConfig cfg;
    HarmonicMapStepper stepper(g, cfg);
    std::vector<double> gsq;
    director_grad_sq(n, gsq);
    double prev = kernels::pairwise_sum(gsq.data(), gsq.size());
    const double initial = prev;
    for (int it = 0; it < 100; ++it) {
        stepper.step(n);
        director_grad_sq(n, gsq);
        const double cur = kernels::pairwise_sum(gsq.data(), gsq.size());
        CHECK(cur <= prev * (1.0 + 1e-10) + 1e-12);
        prev = cur;
        CHECK(n.max_unit_defect() <= 1e-12);
    }
    CHECK(prev < 0.9 * initial);
}

TEST_CASE("initial_from_director closed form and sign invariance") {
    MaterialParams p;
    Grid g = grid1d(8);
    {
        const DirectorField n = initial_constant(g, {0, 0, 1});
        const QField q = initial_from_director(n, p);
        const QTensor expect(-0.5, -0.5, 0, 0, 0);  // 1.5*diag(-1/3,-1/3,2/3)
        for (std::size_t i = 0; i < g.cells(); ++i)
            CHECK(norm(q.at(i) - expect) <= 1e-14);
    }
    {
        std::mt19937_64 rng(54);
        DirectorField n(g);
        for (std::size_t i = 0; i < g.cells(); ++i) n.set(i, oracle::random_unit(rng));
        const QField q1 = initial_from_director(n, p);
        for (std::size_t i = 0; i < g.cells(); ++i) n.set(i, scaled(n.at(i), -1.0));
        const QField q2 = initial_from_director(n, p);
        for (std::size_t i = 0; i < g.cells(); ++i) {
            CHECK(norm(q1.at(i) - q2.at(i)) == 0.0);
            CHECK(norm(q1.at(i)) ==
                  doctest::Approx(std::sqrt(2.0 / 3.0) * 1.5).epsilon(1e-13));
            CHECK(std::abs(tilde_bulk_energy(q1.at(i), p)) <= 1e-13);
            CHECK(dist_to_N(q1.at(i), p) <= 1e-7);
        }
    }
    {
        DirectorField n(g);
        for (std::size_t i = 0; i < g.cells(); ++i) n.set(i, {0.5, 0, 0});
        CHECK_THROWS_AS(initial_from_director(n, p), InvalidInput);
    }
}

TEST_CASE("initial_circle_map properties") {
    Grid g = grid1d(128);
    {
        const DirectorField n = initial_circle_map(g, 0, 0);
        for (std::size_t i = 0; i < g.cells(); ++i)
            CHECK(norm(vsub(n.at(i), Vec3{1, 0, 0})) == 0.0);
    }
    {
        const DirectorField n = initial_circle_map(g, 1, 0);
        CHECK(n.max_unit_defect() <= 1e-15);
        std::vector<double> gsq;
        director_grad_sq(n, gsq);
        // discrete central-difference value, then the continuum limit
        const double h = g.spacing(0);
        const double k = 2.0 * M_PI;
        const double expect = std::pow(std::sin(k * h) / h, 2.0);
        for (double v : gsq) CHECK(v == doctest::Approx(expect).epsilon(1e-12));
        CHECK(expect == doctest::Approx(k * k).epsilon(2e-3));
    }
}

TEST_CASE("initial_perturbed_constant: zero amplitude and determinism") {
    Grid g = grid2d(12);
    const DirectorField base = initial_perturbed_constant(g, 0.0, 1);
    for (std::size_t i = 0; i < g.cells(); ++i)
        CHECK(norm(vsub(base.at(i), Vec3{0, 0, 1})) == 0.0);

    const DirectorField a = initial_perturbed_constant(g, 0.1, 42);
    const DirectorField b = initial_perturbed_constant(g, 0.1, 42);
    const DirectorField c = initial_perturbed_constant(g, 0.1, 43);
    double diff_same = 0.0, diff_other = 0.0;
    for (int ch = 0; ch < 3; ++ch)
        for (std::size_t i = 0; i < g.cells(); ++i) {
            diff_same = std::max(diff_same, std::abs(a.ch[ch][i] - b.ch[ch][i]));
            diff_other = std::max(diff_other, std::abs(a.ch[ch][i] - c.ch[ch][i]));
        }
    CHECK(diff_same == 0.0);
    CHECK(diff_other > 1e-4);
    CHECK(a.max_unit_defect() <= 1e-14);
}
