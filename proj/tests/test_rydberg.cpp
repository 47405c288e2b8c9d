#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "rydcat/dressing_model.hpp"
#include "rydcat/rydberg/pairs.hpp"

using namespace rydcat;
using namespace rydcat::rydberg;
using Catch::Approx;

namespace {
constexpr double two_pi = constants::two_pi;

double hydrogen_radial(int n, int l, double r) {
    if (n == 1 && l == 0) return 2 * std::exp(-r);
    if (n == 2 && l == 0) return std::exp(-r / 2) * (2 - r) / (2 * std::sqrt(2.0));
    if (n == 2 && l == 1) return r * std::exp(-r / 2) / (2 * std::sqrt(6.0));
    if (n == 3 && l == 2) return 4 / (81 * std::sqrt(30.0)) * r * r * std::exp(-r / 3);
    return 0;
}

const AtomicData& rb() {
    static const AtomicData d = load_rb87();
    return d;
}
} // namespace

TEST_CASE("quantum defects", "[rydberg]") {
    CHECK(hydrogen().quantum_defect(30, 2, 2.5) == 0.0);
    CHECK(rb().quantum_defect(60, 0, 0.5) == Approx(3.13).margin(0.01));
    for (int l = 0; l <= 3; ++l)
        for (int n = l + 5; n < 120; ++n) CHECK(rb().energy_rad_s(n, l, l + 0.5) < rb().energy_rad_s(n + 1, l, l + 0.5));

    AtomicData sparse = rb();
    sparse.defects.erase(std::remove_if(sparse.defects.begin(), sparse.defects.end(), [](const auto& s) { return s.l == 1; }),
                         sparse.defects.end());
    CHECK_THROWS_AS(sparse.quantum_defect(40, 1, 0.5), DataError);
    CHECK_THROWS_AS(rb().quantum_defect(40, 1, 2.5), ConfigError);
}

TEST_CASE("Clebsch-Gordan and 6j values", "[rydberg][angular]") {
    CHECK(cg_coefficient(0.5, 0.5, 0.5, -0.5, 1, 0) == Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
    CHECK(cg_coefficient(1, 0, 1, 0, 1, 0) == 0.0);
    CHECK(cg_coefficient(1, 1, 1, 1, 1, 2) == 0.0);  // |M| > J
    CHECK(wigner6j(1, 1, 1, 1, 1, 1) == Approx(1.0 / 6).epsilon(1e-14));
    CHECK(wigner6j(0.5, 0.5, 1, 0.5, 0.5, 1) == Approx(1.0 / 6).epsilon(1e-14));
    CHECK(wigner6j(1, 1, 3, 1, 1, 1) == 0.0);
    CHECK(wigner3j(1, 1, 0, 1, -1, 0) == Approx(1 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK_THROWS_AS(cg_coefficient(0.3, 0, 1, 0, 1, 0), ConfigError);
}

TEST_CASE("Clebsch-Gordan unitarity", "[rydberg][angular][property]") {
    // j = 120 exercises the log-factorial path
    for (double j1 : {0.5, 1.0, 1.5, 3.0, 40.0, 120.0}) {
        for (double j2 : {0.5, 1.0, 2.5}) {
            for (double J = std::abs(j1 - j2); J <= j1 + j2 + 1e-9; J += 1) {
                for (double M = -J; M <= J + 1e-9; M += 1) {
                    double s = 0;
                    for (double m1 = -j1; m1 <= j1 + 1e-9; m1 += 1) {
                        const double c = cg_coefficient(j1, m1, j2, M - m1, J, M);
                        s += c * c;
                    }
                    CHECK(s == Approx(1.0).margin(j1 > 100 ? 1e-8 : 1e-12));
                }
            }
            // orthogonality over J at fixed (m1, m2)
            const double m1 = j1 - 1 >= -j1 ? j1 - 1 : j1, m2 = -j2;
            double s = 0;
            for (double J = std::abs(j1 - j2); J <= j1 + j2 + 1e-9; J += 1) {
                const double c = cg_coefficient(j1, m1, j2, m2, J, m1 + m2);
                s += c * c;
            }
            CHECK(s == Approx(1.0).margin(j1 > 100 ? 1e-8 : 1e-12));
        }
    }
}

TEST_CASE("6j orthogonality", "[rydberg][angular][property]") {
    // sum_x (2x+1)(2j+1) {a b x; c d j}{a b x; c d j'} = delta_jj' for j, j' allowed by (a d j) and (c b j)
    for (const auto& [a, b, c, d] : std::vector<std::array<double, 4>>{{1, 1, 1, 1}, {2, 1.5, 0.5, 2}, {30, 31, 29, 30}}) {
        std::vector<double> js;
        const double lo = std::max(std::abs(a - d), std::abs(c - b)), hi = std::min(a + d, c + b);
        for (double j = lo; j <= hi; j += 1)
            if (a < 10 || j < lo + 2 || j > hi - 2 || j == 30) js.push_back(j);
        for (double j : js) {
            for (double jp : js) {
                double s = 0;
                for (double x = std::abs(a - b); x <= a + b; x += 1)
                    s += (2 * x + 1) * (2 * j + 1) * wigner6j(a, b, x, c, d, j) * wigner6j(a, b, x, c, d, jp);
                CHECK(s == Approx(j == jp ? 1.0 : 0.0).margin(1e-10));
            }
        }
    }
}

TEST_CASE("Numerov hydrogen regression", "[rydberg][numerov][oracle]") {
    const auto h = hydrogen();
    for (const auto& [n, l] : std::vector<std::pair<int, int>>{{1, 0}, {2, 0}, {2, 1}, {3, 2}}) {
        const auto s = RydbergState::make(h, n, l, l + 0.5, 0.5);
        const auto wf = numerov_radial(s, h);
        double ov = 0;
        for (std::size_t i = 0; i < wf.values.size(); ++i) {
            const double r = wf.r(i);
            ov += wf.radial(i) * hydrogen_radial(n, l, r) * r * r * 2 * wf.x(i);
        }
        ov *= wf.h;
        CHECK(std::abs(ov) > 1 - 1e-6);
        CHECK(wf.norm == Approx(1.0).margin(1e-12));
        CHECK(wf.nodes == n - l - 1);
        CHECK(mean_radius(wf) == Approx((3.0 * n * n - l * (l + 1)) / 2).epsilon(1e-6));
    }
}

TEST_CASE("Numerov mean radius at n*", "[rydberg][numerov][property]") {
    for (int n : {30, 50, 80}) {
        for (int l : {0, 1, 2}) {
            const auto s = RydbergState::make(rb(), n, l, l + 0.5, 0.5);
            const auto wf = numerov_radial(s, rb());
            const double expect = (3 * s.n_star * s.n_star - l * (l + 1)) / 2;
            CHECK(std::abs(mean_radius(wf) / expect - 1) < 0.01);
        }
    }
}

TEST_CASE("dipole matrix elements", "[rydberg][dipole]") {
    const auto h = hydrogen();
    const auto s1 = RydbergState::make(h, 1, 0, 0.5, 0.5);
    const auto p2 = RydbergState::make(h, 2, 1, 0.5, 0.5);
    const double radial = radial_integral(numerov_radial(s1, h), numerov_radial(p2, h));
    CHECK(radial == Approx(128 * std::sqrt(6.0) / 243).epsilon(1e-4));
    // <2p m=0| z |1s> = radial / sqrt(3) without spin
    CHECK(std::abs(orbital_reduced_factor(0, 1) * cg_coefficient(0, 0, 1, 0, 1, 0) / std::sqrt(3.0) * radial) ==
          Approx(128 * std::sqrt(2.0) / 243).epsilon(1e-4));

    const auto a = RydbergState::make(rb(), 40, 0, 0.5, 0.5);
    CHECK(dipole_matrix_element(a, RydbergState::make(rb(), 41, 0, 0.5, 0.5), rb()) == 0.0);
    CHECK(dipole_matrix_element(a, RydbergState::make(rb(), 40, 2, 1.5, 0.5), rb()) == 0.0);

    const auto s179 = RydbergState::make(rb(), 179, 0, 0.5, 0.5);
    const auto p179 = RydbergState::make(rb(), 179, 1, 1.5, 0.5);
    CHECK(std::abs(dipole_matrix_element(s179, p179, rb()) / 15620 - 1) < 0.15);

    // Wigner-Eckart: sum over final m and q of |<b|r_q|a>|^2 is m-independent
    RadialCache cache(rb());
    for (double ma : {-0.5, 0.5}) {
        const auto pa = RydbergState::make(rb(), 45, 1, 1.5, ma);
        double sum = 0;
        for (double mb = -2.5; mb <= 2.5; mb += 1)
            for (int q = -1; q <= 1; ++q) {
                if (std::abs(mb - ma - q) > 1e-9) continue;
                sum += std::pow(cache.dipole(pa, RydbergState::make(rb(), 44, 2, 2.5, mb), q), 2);
            }
        const auto pa3 = RydbergState::make(rb(), 45, 1, 1.5, 1.5);
        double sum3 = 0;
        for (double mb = -2.5; mb <= 2.5; mb += 1)
            for (int q = -1; q <= 1; ++q)
                if (std::abs(mb - 1.5 - q) < 1e-9) sum3 += std::pow(cache.dipole(pa3, RydbergState::make(rb(), 44, 2, 2.5, mb), q), 2);
        CHECK(sum == Approx(sum3).epsilon(1e-10));
    }
}

TEST_CASE("dipole-dipole angular weights", "[rydberg][c3]") {
    const auto w0 = dd_weights(0.0);
    CHECK(w0[1][1] == Approx(-2.0));
    CHECK(w0[0][2] == Approx(-1.0));
    CHECK(w0[2][0] == Approx(-1.0));
    CHECK(w0[0][0] == Approx(0.0).margin(1e-15));
    CHECK(w0[0][1] == Approx(0.0).margin(1e-15));
    const auto w90 = dd_weights(constants::pi / 2);
    CHECK(std::abs(w90[0][0]) > 0.1);
    CHECK(std::abs(w90[2][2]) > 0.1);
    for (double th : {0.0, 0.4, 1.1, constants::pi / 2})
        for (int q = 0; q < 3; ++q)
            for (int p = 0; p < 3; ++p) CHECK(dd_weights(th)[q][p] == Approx(dd_weights(th)[p][q]));
}

TEST_CASE("C3 selection rules and exchange symmetry", "[rydberg][c3]") {
    RadialCache cache(rb());
    const auto s = RydbergState::make(rb(), 50, 0, 0.5, 0.5);
    const PairState in{s, s};
    const PairState dm1 = PairState::canonical(RydbergState::make(rb(), 50, 1, 1.5, 1.5), RydbergState::make(rb(), 49, 1, 1.5, 0.5));
    const PairState dm2 = PairState::canonical(RydbergState::make(rb(), 50, 1, 1.5, 1.5), RydbergState::make(rb(), 49, 1, 1.5, 1.5));
    const PairState dm0 = PairState::canonical(RydbergState::make(rb(), 50, 1, 1.5, 1.5), RydbergState::make(rb(), 49, 1, 1.5, -0.5));
    CHECK(c3_coefficient(cache, in, dm1, 0.0) == 0.0);
    CHECK(c3_coefficient(cache, in, dm0, 0.0) != 0.0);
    CHECK(std::abs(c3_coefficient(cache, in, dm2, constants::pi / 2)) > 1e3);
    CHECK(c3_coefficient(cache, in, dm2, 0.0) == 0.0);

    // swapping the atoms and mirroring m preserves |C3|
    const auto a = RydbergState::make(rb(), 50, 0, 0.5, 0.5), b = RydbergState::make(rb(), 50, 0, 0.5, -0.5);
    const auto c = RydbergState::make(rb(), 50, 1, 0.5, 0.5), d = RydbergState::make(rb(), 49, 1, 1.5, -1.5);
    const auto mirror = [&](const RydbergState& x) { return RydbergState::make(rb(), x.n, x.l, x.j, -x.m_j); };
    for (double th : {0.0, 0.7, constants::pi / 2}) {
        const double v = c3_coefficient(cache, PairState{a, b}, PairState{c, d}, th);
        CHECK(std::abs(c3_coefficient(cache, PairState{b, a}, PairState{d, c}, th)) == Approx(std::abs(v)));
        CHECK(std::abs(c3_coefficient(cache, PairState{mirror(b), mirror(a)}, PairState{mirror(d), mirror(c)}, th)) ==
              Approx(std::abs(v)));
    }
}

TEST_CASE("pair basis growth", "[rydberg][pairs]") {
    RadialCache cache(rb());
    const auto s = RydbergState::make(rb(), 50, 0, 0.5, 0.5);
    PairBasisOptions opt;
    opt.coupling_floor = 1e12;
    CHECK(build_pair_basis(cache, s, opt).size() == 1);

    opt = {};
    opt.energy_window = two_pi * 25e9;
    const auto b0 = build_pair_basis(cache, s, opt);
    opt.theta = constants::pi / 2;
    const auto b90 = build_pair_basis(cache, s, opt);
    CHECK(b0.size() > 5);
    CHECK(b90.size() > b0.size());
    std::set<decltype(b0.pairs[0].key())> keys;
    for (const auto& p : b0.pairs) {
        CHECK(keys.insert(p.key()).second);
        CHECK(p.m_total() == Approx(1.0));
    }

    opt.max_size = 3;
    CHECK_THROWS_AS(build_pair_basis(cache, s, opt), NumericError);
}

TEST_CASE("three-level blockade ladder", "[rydberg][pairs][oracle]") {
    RadialCache cache(rb());
    const auto s = RydbergState::make(rb(), 50, 0, 0.5, 0.5);
    PairBasisOptions opt;
    opt.coupling_floor = 1e12;
    auto basis = build_pair_basis(cache, s, opt);
    const double om = two_pi * 3.3e6, det = -two_pi * 23e6;
    const auto mh = build_mixing_hamiltonian(cache, basis, {laser_for(s, s, om, det)});
    REQUIRE(mh.dim() == 3);
    RMatD hand(3, 3);
    const double c = std::sqrt(2.0) * om / 2;
    hand << 0, c, 0, c, det, c, 0, c, 2 * det;
    CHECK((mh.dense(3e-6) - hand).norm() < 1e-9 * hand.norm());

    // non-interacting atoms: ground energy is twice the single-atom shift
    Eigen::SelfAdjointEigenSolver<RMatD> es(hand);
    const double single = dressing::light_shift(1, om, det);
    double nearest = 1e300;
    for (int k = 0; k < 3; ++k)
        if (std::abs(es.eigenvalues()[k] - 2 * single) < std::abs(nearest - 2 * single)) nearest = es.eigenvalues()[k];
    CHECK(nearest == Approx(2 * single).epsilon(1e-10));

    // perfect blockade reproduces the collective light shift with N_e = 2
    Eigen::SelfAdjointEigenSolver<RMatD> ideal(mh.ideal());
    const double shift = dressing::light_shift(2, om, det);
    CHECK(blockaded_light_shift(om, det) == Approx(shift));
    CHECK(std::min(std::abs(ideal.eigenvalues()[0] - shift), std::abs(ideal.eigenvalues()[1] - shift)) < 1e-6 * std::abs(shift));
}

TEST_CASE("mixing Hamiltonian structure", "[rydberg][pairs][property]") {
    RadialCache cache(rb());
    const auto s = RydbergState::make(rb(), 50, 0, 0.5, 0.5);
    const double om = two_pi * 3.3e6, det = -two_pi * 23e6;
    for (double theta : {0.0, constants::pi / 2}) {
        PairBasisOptions opt;
        opt.energy_window = two_pi * 25e9;
        opt.theta = theta;
        auto basis = build_pair_basis(cache, s, opt);
        const auto mh = build_mixing_hamiltonian(cache, basis, {laser_for(s, s, om, det)});
        for (double r : {1e-6, 3e-6, 1e-4}) {
            const RMatD h = mh.dense(r);
            CHECK((h - h.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * h.cwiseAbs().maxCoeff());
            Eigen::SelfAdjointEigenSolver<RMatD> es(h);
            CHECK(es.info() == Eigen::Success);
        }
        // selection rules on every nonzero C3 entry
        const auto off = static_cast<Eigen::Index>(mh.pair_offset());
        for (int k = 0; k < mh.hc.outerSize(); ++k)
            for (SparseD::InnerIterator it(mh.hc, k); it; ++it) {
                const auto& p = basis.pairs[static_cast<std::size_t>(it.row() - off)];
                const auto& q = basis.pairs[static_cast<std::size_t>(it.col() - off)];
                const long dm = std::lround(std::abs(p.m_total() - q.m_total()));
                if (theta == 0.0)
                    CHECK(dm == 0);
                else
                    CHECK((dm == 0 || dm == 2));
            }
    }
    auto basis = build_pair_basis(cache, s, PairBasisOptions{.energy_window = two_pi * 25e9});
    CHECK_THROWS_AS(build_mixing_hamiltonian(cache, basis, {}), ConfigError);
}

TEST_CASE("spectrum tracking and blockade fidelity", "[rydberg][pairs]") {
    RadialCache cache(rb());
    const auto s = RydbergState::make(rb(), 50, 0, 0.5, 0.5);
    const double om = two_pi * 3.3e6, det = -two_pi * 23e6;
    PairBasisOptions opt;
    opt.energy_window = two_pi * 25e9;
    auto basis = build_pair_basis(cache, s, opt);
    const auto mh = build_mixing_hamiltonian(cache, basis, {laser_for(s, s, om, det)});

    std::vector<double> grid;
    for (double r = 4e-6; r <= 12e-6; r += 0.25e-6) grid.push_back(r);
    const double center = blockaded_light_shift(om, det);
    const auto curves = spectrum_vs_separation(mh, grid, center, two_pi * 5e6);
    REQUIRE_FALSE(curves.empty());
    // the dressed ground curve approaches the non-interacting value at large R
    double closest = 1e300;
    for (const auto& p : curves)
        if (p.r == grid.back()) closest = std::min(closest, std::abs(p.energy - 2 * dressing::light_shift(1, om, det)));
    CHECK(closest < 1e-3 * std::abs(center));
    CHECK_THROWS_AS(spectrum_vs_separation(mh, {2e-6, 1e-6}, center, 1.0), ConfigError);

    CHECK(blockade_fidelity(mh, 3e-6, 0.0) == 1.0);
    CHECK(blockade_fidelity(mh, 1.0, 2e-6) > 1 - 1e-3);
    // a bare start sees the unblockaded doubles at large R
    CHECK(blockade_fidelity(mh, 1.0, 2e-6, InitialState::bare) < 1 - 1e-3);
    const auto scan = blockade_scan(mh, {1.2e-6, 1.5e-6}, 2e-6);
    for (const auto& p : scan) {
        CHECK(p.fidelity >= 0.0);
        CHECK(p.fidelity <= 1.0);
    }
}
