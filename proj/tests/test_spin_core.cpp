#include <catch_amalgamated.hpp>

#include <bit>
#include <cmath>

#include "rydcat/spin_core.hpp"

using namespace rydcat;
using namespace rydcat::spin;
using Catch::Approx;

namespace {

constexpr double pi = constants::pi;

// Full 2^N construction. Bit b of a basis index set means atom b is in |g>.
struct Qubits {
    int n;
    CMat sx, sy, sz;

    explicit Qubits(int n_) : n(n_) {
        const int d = 1 << n;
        sx = CMat::Zero(d, d);
        sy = CMat::Zero(d, d);
        sz = CMat::Zero(d, d);
        for (int s = 0; s < d; ++s) {
            for (int b = 0; b < n; ++b) {
                const bool ground = (s >> b) & 1;
                sz(s, s) += ground ? -0.5 : 0.5;
                const int t = s ^ (1 << b);
                sx(t, s) += 0.5;
                // sigma_y/2: |e><g| -> -i/2, |g><e| -> +i/2
                sy(t, s) += ground ? cplx(0, -0.5) : cplx(0, 0.5);
            }
        }
    }

    // Dicke vector with k atoms in |g>, i.e. m = n/2 - k.
    CVec dicke(int k) const {
        const int d = 1 << n;
        CVec v = CVec::Zero(d);
        for (int s = 0; s < d; ++s)
            if (std::popcount(static_cast<unsigned>(s)) == k) v[s] = 1.0;
        return v.normalized();
    }

    CMat projector() const {
        CMat p(1 << n, n + 1);
        for (int k = 0; k <= n; ++k) p.col(k) = dicke(k);
        return p;
    }

    CVec product(double th, double ph) const {
        const cplx a = std::cos(th / 2);
        const cplx b = std::sin(th / 2) * std::polar(1.0, ph);
        CVec v(1 << n);
        for (int s = 0; s < (1 << n); ++s) {
            const int k = std::popcount(static_cast<unsigned>(s));
            v[s] = std::pow(a, n - k) * std::pow(b, k);
        }
        return v;
    }
};

double residual(const CMat& a, const CMat& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("DickeSpace dimensions", "[spin]") {
    DickeSpace s(7);
    CHECK(s.dim() == 8);
    CHECK(s.j() == 3.5);
    CHECK(s.m(0) == 3.5);
    CHECK(s.m(7) == -3.5);
    CHECK_THROWS_AS(DickeSpace(0), ConfigError);
}

TEST_CASE("spin-1/2 operators", "[spin]") {
    const auto ops = build_operators(DickeSpace(1));
    CMat px(2, 2), py(2, 2), pz(2, 2);
    px << 0, 1, 1, 0;
    py << 0, cplx(0, -1), cplx(0, 1), 0;
    pz << 1, 0, 0, -1;
    CHECK(residual(ops.jx.cast<cplx>(), 0.5 * px) < 1e-15);
    CHECK(residual(ops.jy, 0.5 * py) < 1e-15);
    CHECK(residual(ops.jz.cast<cplx>(), 0.5 * pz) < 1e-15);
}

TEST_CASE("commutators and Casimir", "[spin][property]") {
    for (int n = 1; n <= 64; ++n) {
        const DickeSpace s(n);
        const auto o = build_operators(s);
        const CMat jx = o.jx.cast<cplx>();
        const CMat jz = o.jz.cast<cplx>();
        const CMat& jy = o.jy;
        const cplx i(0, 1);
        INFO("N = " << n);
        CHECK(residual(jx * jy - jy * jx, i * jz) < 1e-10);
        CHECK(residual(jy * jz - jz * jy, i * jx) < 1e-10);
        CHECK(residual(jz * jx - jx * jz, i * jy) < 1e-10);
        const CMat cas = jx * jx + jy * jy + jz * jz;
        const double jj = s.j() * (s.j() + 1);
        CHECK(residual(cas, jj * CMat::Identity(s.dim(), s.dim())) < 1e-9);
    }
}

TEST_CASE("matrix-free operators agree with dense ones", "[spin]") {
    const DickeSpace s(9);
    const auto o = build_operators(s);
    const CVec v = CVec::Random(s.dim());
    CHECK((apply_jx(s, v) - o.jx * v).norm() < 1e-12);
    CHECK((apply_jy(s, v) - o.jy * v).norm() < 1e-12);
    CHECK((apply_jz(s, v) - o.jz * v).norm() < 1e-12);
    CHECK((apply_jminus(s, v) - o.jplus.transpose() * v).norm() < 1e-12);
}

TEST_CASE("brute-force equivalence for N <= 4", "[spin][oracle]") {
    for (int n = 1; n <= 4; ++n) {
        INFO("N = " << n);
        const Qubits q(n);
        const DickeSpace s(n);
        const auto o = build_operators(s);
        const CMat p = q.projector();
        CHECK(residual(p.adjoint() * q.sx * p, o.jx.cast<cplx>()) < 1e-12);
        CHECK(residual(p.adjoint() * q.sy * p, o.jy) < 1e-12);
        CHECK(residual(p.adjoint() * q.sz * p, o.jz.cast<cplx>()) < 1e-12);

        for (double th : {0.0, 0.3, pi / 2, 2.0, pi}) {
            for (double ph : {0.0, 1.1, 4.0}) {
                const CVec full = q.product(th, ph);
                const CVec proj = p.adjoint() * full;
                const auto css = coherent_spin_state(s, SphericalPoint(th, ph));
                CHECK((proj - css.amplitudes()).norm() < 1e-8);
                CHECK((p * proj - full).norm() < 1e-8);  // product states are symmetric
            }
        }

        // Cat state and its fidelity against an arbitrary state.
        for (double dth : {0.0, 0.7, pi / 2, pi}) {
            const CVec full =
                (q.product((pi - dth) / 2, 0.4) + q.product((pi + dth) / 2, 0.4)).normalized();
            const auto cat = cat_state(s, dth, 0.4);
            CHECK((p.adjoint() * full - cat.amplitudes()).norm() < 1e-8);

            CVec r = CVec::Zero(s.dim());
            for (int k = 0; k < s.dim(); ++k) r[k] = cplx(std::cos(1.3 * k + 0.2), std::sin(0.7 * k));
            const SpinState psi(s, r);
            const double fid_full = std::norm(full.dot(p * psi.amplitudes()));
            CHECK(cat_fidelity(psi, dth, 0.4) == Approx(fid_full).margin(1e-8));
        }

        // Fisher information from the full variance.
        const CVec full = q.product(1.0, 0.5);
        const double ez = std::real(full.dot(q.sz * full));
        const double ez2 = std::real(full.dot(q.sz * q.sz * full));
        const auto f = fisher_information(coherent_spin_state(s, SphericalPoint(1.0, 0.5)));
        CHECK(f.fisher == Approx(4 * (ez2 - ez * ez)).margin(1e-8));
    }
}

TEST_CASE("CSS at the poles and the equator", "[spin]") {
    const DickeSpace s(10);
    const auto north = coherent_spin_state(s, SphericalPoint(0, 0));
    CHECK(std::abs(north.amplitudes()[0]) == Approx(1.0));
    CHECK(moments(north).jz == Approx(5.0));
    const auto south = coherent_spin_state(s, SphericalPoint(pi, 0));
    CHECK(std::abs(south.amplitudes()[10]) == Approx(1.0));

    const auto xplus = coherent_spin_state(s, SphericalPoint(pi / 2, 0));
    const auto mo = moments(xplus);
    CHECK(mo.jx == Approx(5.0));
    CHECK(mo.jz2 - mo.jz * mo.jz == Approx(10.0 / 4));
}

TEST_CASE("CSS expectation geometry on a 13x13 grid", "[spin][property]") {
    for (int n : {1, 5, 40, 301}) {
        const DickeSpace s(n);
        for (int a = 0; a < 13; ++a) {
            for (int b = 0; b < 13; ++b) {
                const double th = pi * a / 12;
                const double ph = 2 * pi * b / 13;
                const auto mo = moments(coherent_spin_state(s, SphericalPoint(th, ph)));
                const double j = s.j();
                CHECK(std::abs(mo.jx / j - std::sin(th) * std::cos(ph)) < 1e-9);
                CHECK(std::abs(mo.jy / j - std::sin(th) * std::sin(ph)) < 1e-9);
                CHECK(std::abs(mo.jz / j - std::cos(th)) < 1e-9);
            }
        }
    }
}

TEST_CASE("CSS overlap closed form", "[spin]") {
    const DickeSpace s(17);
    const SphericalPoint a(0.4, 1.0), b(2.2, 5.5);
    const cplx direct = coherent_spin_state(s, a).overlap(coherent_spin_state(s, b));
    const cplx closed = css_overlap(17, a, b);
    CHECK(std::abs(direct - closed) < 1e-12);
}

TEST_CASE("cat states", "[spin]") {
    const DickeSpace s(6);
    SECTION("GHZ limit") {
        const auto ghz = cat_state(s, pi, 0.0);
        CHECK(std::abs(ghz.amplitudes()[0]) == Approx(1 / std::sqrt(2.0)));
        CHECK(std::abs(ghz.amplitudes()[6]) == Approx(1 / std::sqrt(2.0)));
        CHECK(ghz.amplitudes().segment(1, 5).norm() < 1e-12);
        CHECK(cat_fidelity(ghz, pi, 0.0) == Approx(1.0));
    }
    SECTION("degenerate branches") {
        const auto c = cat_state(s, 0.0, 0.0);
        const auto css = coherent_spin_state(s, SphericalPoint(pi / 2, 0));
        CHECK(std::norm(c.overlap(css)) == Approx(1.0));
    }
    SECTION("N=4 hand-evaluated binomial sum") {
        const DickeSpace s4(4);
        const auto c = cat_state(s4, pi / 2, 0.0);
        const double a1 = std::cos(pi / 8), b1 = std::sin(pi / 8);
        const double a2 = std::cos(3 * pi / 8), b2 = std::sin(3 * pi / 8);
        const double binom[] = {1, 4, 6, 4, 1};
        CVec expect(5);
        for (int k = 0; k <= 4; ++k)
            expect[k] = std::sqrt(binom[k]) * (std::pow(a1, 4 - k) * std::pow(b1, k) + std::pow(a2, 4 - k) * std::pow(b2, k));
        expect.normalize();
        CHECK((c.amplitudes() - expect).norm() < 1e-12);
    }
    CHECK_THROWS_AS(cat_state(s, -0.1, 0.0), ConfigError);
}

TEST_CASE("Husimi function", "[spin][property]") {
    const DickeSpace s(20);
    SECTION("CSS peaks at its own point") {
        const SphericalPoint p0(1.1, 2.0);
        const auto psi = coherent_spin_state(s, p0);
        const double q0 = husimi_q(psi, p0);
        for (double dt : {-0.05, 0.05})
            for (double dp : {-0.05, 0.0, 0.05}) CHECK(husimi_q(psi, SphericalPoint(1.1 + dt, 2.0 + dp)) < q0);
        CHECK(q0 == Approx(21 / (4 * pi)));
    }
    SECTION("normalization on a 200x400 grid") {
        for (const auto& psi : {cat_state(s, 2.0, 0.3), coherent_spin_state(s, SphericalPoint(0.3, 1.0)),
                                SpinState::dicke(s, 7)}) {
            const int nt = 200, np = 400;
            double total = 0;
            double qmin = 1;
            for (int a = 0; a < nt; ++a) {
                const double th = pi * (a + 0.5) / nt;
                for (int b = 0; b < np; ++b) {
                    const double q = husimi_q(psi, SphericalPoint(th, 2 * pi * b / np));
                    qmin = std::min(qmin, q);
                    total += q * std::sin(th);
                }
            }
            total *= (pi / nt) * (2 * pi / np);
            CHECK(total == Approx(1.0).margin(1e-3));
            CHECK(qmin >= 0.0);
        }
    }
    SECTION("GHZ has equal peaks at the poles") {
        const auto ghz = cat_state(s, pi, 0.0);
        const double qn = husimi_q(ghz, SphericalPoint(0, 0));
        const double qs = husimi_q(ghz, SphericalPoint(pi, 0));
        CHECK(qn == Approx(qs));
        CHECK(qn == Approx(0.5 * 21 / (4 * pi)));
        CHECK(husimi_q(ghz, SphericalPoint(pi / 2, 0)) < 1e-3 * qn);
    }
}

TEST_CASE("Fisher information", "[spin][property]") {
    for (int n : {1, 2, 10, 300}) {
        const DickeSpace s(n);
        for (double th : {0.2, 1.0, pi / 2, 2.9}) {
            const auto f = fisher_information(coherent_spin_state(s, SphericalPoint(th, 0.7)));
            CHECK(f.fisher == Approx(n * std::sin(th) * std::sin(th)).margin(1e-8));
        }
        // Equatorial CSS gives the standard quantum limit.
        const auto f = fisher_information(coherent_spin_state(s, SphericalPoint(pi / 2, 1.3)));
        CHECK(f.fisher == Approx(n).margin(1e-8));
        CHECK(f.db == Approx(0.0).margin(1e-9));
        for (int k = 0; k <= n; k += std::max(1, n / 5)) CHECK(fisher_information(SpinState::dicke(s, k)).fisher == 0.0);
    }
    const auto ghz = fisher_information(cat_state(DickeSpace(300), pi, 0));
    CHECK(ghz.db == Approx(10 * std::log10(300.0)));
    CHECK(heisenberg_db(300) == Approx(24.771212547).margin(1e-8));
}
