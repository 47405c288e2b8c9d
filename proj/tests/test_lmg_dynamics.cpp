#include <catch_amalgamated.hpp>

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

#include "rydcat/lmg_dynamics.hpp"

using namespace rydcat;
using namespace rydcat::lmg;
using Catch::Approx;

namespace {
constexpr double pi = constants::pi;
}

TEST_CASE("LMG parameters", "[lmg]") {
    const auto p = LmgParams::from_dimensionless(30, 2.0, 0.3, 2.5);
    CHECK(p.lambda() == Approx(2.0));
    CHECK(p.delta_prime() == Approx(0.3));
    CHECK(p.chi == Approx(2.0 * 2.5 / 30));
    CHECK_THROWS_AS(LmgParams::from_dimensionless(0, 1, 0), ConfigError);
}

TEST_CASE("Hamiltonian structure", "[lmg]") {
    SECTION("pure rotation") {
        const DickeSpace s(9);
        const RMat h = build_hamiltonian(s, {0.0, 0.0, 1.7, 9});
        Eigen::SelfAdjointEigenSolver<RMat> es(h);
        for (int k = 0; k < s.dim(); ++k) CHECK(es.eigenvalues()[k] == Approx(1.7 * (k - 4.5)).margin(1e-12));
    }
    SECTION("one-axis twisting is diagonal") {
        const DickeSpace s(6);
        const RMat h = build_hamiltonian(s, {0.4, 0.0, 0.0, 6});
        CHECK((h - RMat(h.diagonal().asDiagonal())).norm() == 0.0);
        for (int k = 0; k <= 6; ++k) CHECK(h(k, k) == Approx(0.4 * s.m(k) * s.m(k)));
    }
    SECTION("spin-1 by hand") {
        const double chi = 0.3, delta = -0.7, om = 1.9;
        const RMat h = build_hamiltonian(DickeSpace(2), {chi, delta, om, 2});
        const double r = om / std::sqrt(2.0);
        RMat expect(3, 3);
        expect << chi + delta, r, 0, r, 0, r, 0, r, chi - delta;
        CHECK((h - expect).norm() < 1e-14);
    }
    CHECK_THROWS_AS(build_hamiltonian(DickeSpace(3), {0, 0, 1, 4}), ConfigError);
}

TEST_CASE("exact evolution", "[lmg][property]") {
    const DickeSpace s(24);
    const auto p = LmgParams::from_dimensionless(24, 2.0, 0.0);
    const RMat h = build_hamiltonian(s, p);
    const Propagator prop(h);
    const SpinState psi0 = initial_state(s);
    const double e0 = expect(psi0, h);

    CHECK((prop.evolve(psi0, 0.0).amplitudes() - psi0.amplitudes()).norm() < 1e-12);

    const spin::CMat u = (spin::CMat(h.cast<spin::cplx>()) * spin::cplx(0, -0.8)).exp();
    CHECK((prop.evolve(psi0, 0.8).amplitudes() - u * psi0.amplitudes()).norm() < 1e-10);

    for (double t : {0.5, 1.7, 3.3, 8.0}) {
        const SpinState psi = prop.evolve(psi0, t);
        CHECK(std::abs(psi.amplitudes().norm() - 1.0) < 1e-9);
        CHECK(std::abs(expect(psi, h) - e0) <= 1e-8 * std::abs(e0));
        // delta = 0: |amplitude| symmetric under m -> -m
        for (int k = 0; k < s.dim(); ++k)
            CHECK(std::abs(std::norm(psi.amplitudes()[k]) - std::norm(psi.amplitudes()[s.dim() - 1 - k])) < 1e-8);
    }
    CHECK_THROWS_AS(prop.evolve(psi0, -1.0), ConfigError);
}

TEST_CASE("one-axis twisting revival", "[lmg]") {
    for (int n : {5, 8}) {
        const DickeSpace s(n);
        const double chi = 0.37;
        const Propagator prop(build_hamiltonian(s, {chi, 0.0, 0.0, n}));
        const SpinState psi0 = spin::coherent_spin_state(s, SphericalPoint(1.0, 0.2));
        // chi m^2 t is a multiple of 2 pi for integer m, and of pi/2 for half-integer m,
        // so the state returns up to a global phase.
        const SpinState psi = prop.evolve(psi0, 2 * pi / chi);
        CHECK(std::norm(psi.overlap(psi0)) == Approx(1.0).margin(1e-10));
        CHECK(std::norm(prop.evolve(psi0, pi / (2 * chi)).overlap(psi0)) < 0.99);
    }
}

TEST_CASE("semiclassical flow", "[lmg]") {
    const auto f0 = semiclassical_flow(pi / 2, 0.0, 2.0, 0.0);
    CHECK(f0.dtheta == Approx(0.0).margin(1e-15));
    CHECK(f0.dphi == Approx(0.0).margin(1e-15));
    CHECK(semiclassical_flow(1.2, pi / 2, 2.0, 0.1).dtheta == Approx(-1.0));
    CHECK_THROWS_AS(semiclassical_flow(0.0, 0.0, 2.0, 0.0), SingularityError);
    CHECK_THROWS_AS(semiclassical_flow(pi, 0.0, 2.0, 0.0), SingularityError);

    // Branch fixed points for Lambda = 2 satisfy 2 cos th = cot th, th != pi/2.
    const double th = bisect_root([](double x) { return 2 * std::cos(x) - std::cos(x) / std::sin(x); }, 0.1, 1.2);
    CHECK(std::sin(th) == Approx(0.5));
    for (double t : {th, pi - th}) {
        const auto f = semiclassical_flow(t, 0.0, 2.0, 0.0);
        CHECK(std::abs(f.dtheta) < 1e-12);
        CHECK(std::abs(f.dphi) < 1e-10);
    }
}

TEST_CASE("flow integration", "[lmg][property]") {
    SECTION("fixed point stays put") {
        const auto tr = integrate_flow(SphericalPoint(pi / 2, 0.0), 2.0, 0.0, 5.0);
        CHECK(std::abs(tr.back().theta - pi / 2) < 1e-12);
    }
    SECTION("linear case rotates about x") {
        const SphericalPoint p0(0.9, 0.4);
        const auto tr = integrate_flow(p0, 0.0, 0.0, 2 * pi, 1e-3);
        const double x0 = std::sin(p0.theta) * std::cos(p0.phi);
        double max_dx = 0;
        for (const auto& s : tr) max_dx = std::max(max_dx, std::abs(std::sin(s.theta) * std::cos(s.phi) - x0));
        CHECK(max_dx < 1e-9);
        CHECK(tr.back().theta == Approx(p0.theta).margin(1e-8));
        CHECK(tr.back().phi == Approx(p0.phi).margin(1e-8));
    }
    SECTION("energy conservation and times") {
        const SphericalPoint p0(pi / 2 - 0.05, 0.02);
        const double lam = 2.0, dp = 0.1;
        const auto tr = integrate_flow(p0, lam, dp, 10.0, 1e-3, 10);
        const double e0 = classical_energy(p0.theta, p0.phi, lam, dp);
        for (std::size_t i = 1; i < tr.size(); ++i) {
            CHECK(tr[i].t > tr[i - 1].t);
            CHECK(std::abs(classical_energy(tr[i].theta, tr[i].phi, lam, dp) - e0) <= 1e-6 * std::abs(e0));
        }
        CHECK(tr.back().t == Approx(10.0));
    }
    SECTION("lambda = 2 start near +x moves toward a pole") {
        // The separatrix passes through the pole, so neighbouring orbits swing close to it.
        const auto tr = integrate_flow(SphericalPoint(pi / 2 - 0.01, 0.1), 2.0, 0.0, 6.0, 1e-3, 10);
        double min_theta = pi;
        for (const auto& s : tr) min_theta = std::min(min_theta, s.theta);
        CHECK(min_theta < 0.05);
    }
    CHECK_THROWS_AS(integrate_flow(SphericalPoint(0.0, 0.0), 2.0, 0.0, 1.0), SingularityError);
}

TEST_CASE("Husimi peak follows the mean-field flow", "[lmg][property]") {
    // A CSS started off the unstable point, N = 300, compared up to t = 2.
    const int n = 300;
    const DickeSpace s(n);
    const SphericalPoint p0(pi / 2 - 0.25, 0.1);
    const Propagator prop(build_hamiltonian(s, LmgParams::from_dimensionless(n, 2.0, 0.0)));
    const SpinState psi0 = spin::coherent_spin_state(s, p0);
    const auto tr = integrate_flow(p0, 2.0, 0.0, 2.0, 1e-3, 250);
    for (const auto& sample : tr) {
        const SpinState psi = prop.evolve(psi0, sample.t);
        // Husimi maximum on a local grid of half-width 0.15 rad around the flow point
        double best_q = -1, best_th = 0, best_ph = 0;
        for (int a = -30; a <= 30; ++a) {
            for (int b = -30; b <= 30; ++b) {
                const double th = sample.theta + 0.005 * a;
                const double ph = sample.phi + 0.005 * b;
                const double q = spin::husimi_q(psi, SphericalPoint(th, ph));
                if (q > best_q) best_q = q, best_th = th, best_ph = ph;
            }
        }
        const double cosang = std::sin(best_th) * std::sin(sample.theta) * std::cos(best_ph - sample.phi) +
                              std::cos(best_th) * std::cos(sample.theta);
        CHECK(std::acos(std::min(1.0, cosang)) < 0.05);
    }
}

TEST_CASE("cat-time search", "[lmg]") {
    const DickeSpace s(30);
    SECTION("lambda = 2") {
        const auto ct = cat_time(s, LmgParams::from_dimensionless(30, 2.0, 0.0));
        CHECK(ct.fit.delta_theta / pi == Approx(0.98).margin(0.05));
        CHECK(ct.fit.fidelity == Approx(0.42).margin(0.05));
        CHECK(ct.tau > 0.0);
    }
    SECTION("fidelity rescales with omega_c") {
        const auto a = cat_time(s, LmgParams::from_dimensionless(30, 2.0, 0.0, 1.0));
        const auto b = cat_time(s, LmgParams::from_dimensionless(30, 2.0, 0.0, 4.0));
        CHECK(b.tau == Approx(a.tau / 4).epsilon(1e-4));
        CHECK(b.fit.fidelity == Approx(a.fit.fidelity).epsilon(1e-6));
    }
    CHECK_THROWS_AS(cat_time(s, LmgParams::from_dimensionless(30, 0.5, 0.0)), ConfigError);
}

TEST_CASE("best cat fit for a known cat", "[lmg]") {
    const DickeSpace s(30);
    const auto psi = spin::cat_state(s, 0.6 * pi, pi);
    const CatFit f = best_cat_fit(psi);
    CHECK(f.fidelity == Approx(1.0).margin(1e-8));
    CHECK(f.delta_theta == Approx(0.6 * pi).margin(1e-4));
    CHECK(f.phi_c == Approx(pi).margin(1e-4));
}

TEST_CASE("asymmetric detuning breaks the m -> -m symmetry", "[lmg]") {
    const DickeSpace s(30);
    const auto p = LmgParams::from_dimensionless(30, 2.0, 0.3);
    const Propagator prop(build_hamiltonian(s, p));
    const SpinState psi = prop.evolve(initial_state(s), 3.0);
    const auto& a = psi.amplitudes();
    const double upper = a.head(15).squaredNorm();
    const double lower = a.tail(15).squaredNorm();
    CHECK(std::abs(upper - lower) > 0.05);
}

TEST_CASE("linear dynamics keeps the CSS", "[lmg]") {
    const DickeSpace s(30);
    const Propagator prop(build_hamiltonian(s, LmgParams::from_dimensionless(30, 0.0, 0.0)));
    for (double t : {1.0, 2.5, 4.0}) {
        const SpinState psi = prop.evolve(initial_state(s), t);
        const double f0 = spin::cat_fidelity(psi, 0.0, 0.0);
        CHECK(f0 == Approx(1.0).margin(1e-10));
        for (double dth : {0.2, 1.0, 2.0}) CHECK(spin::cat_fidelity(psi, dth, 0.0) < f0);
    }
}
