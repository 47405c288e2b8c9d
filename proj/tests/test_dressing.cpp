#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rydcat/dressing_model.hpp"
#include "rydcat/dressing_scan.hpp"

using namespace rydcat;
using namespace rydcat::dressing;
using Catch::Approx;

namespace {
constexpr double two_pi = constants::two_pi;

// Thresholds at Lambda = 2, 160 trajectories, local noise (tools/rydcat thresholds).
std::vector<ThresholdRow> reference_rows() {
    return {{16, 2.5662, 10.563, 0.0971}, {36, 2.8630, 13.770, 0.1274}, {64, 3.1323, 16.157, 0.1287},
            {100, 3.3000, 17.996, 0.1300}, {144, 3.5237, 19.592, 0.1300}, {300, 3.8913, 22.747, 0.1655}};
}
} // namespace

TEST_CASE("BEC mean-field energy", "[dressing]") {
    BecParams b;
    CHECK(bec_energy(b, 0, 0) == 0.0);
    b.nu_e = 3.0;
    CHECK(bec_energy(b, 1, 0) == Approx(3.0));

    BecParams s;
    s.a_ee = s.a_gg = 5e-9;
    s.a_eg = 4e-9;
    s.overlap_ee = s.overlap_gg = s.overlap_eg = 1e18;
    s.nu_e = s.nu_g = 1.5;
    CHECK(bec_energy(s, 7, 3) == Approx(bec_energy(s, 3, 7)));
    CHECK_THROWS_AS(bec_energy(s, -1, 3), ConfigError);
}

TEST_CASE("light shift and its truncation", "[dressing]") {
    const double delta = two_pi * 40e6;
    CHECK(light_shift(50, 0.0, delta) == 0.0);

    const int n = 100;
    const double ne = 0.5 * n;
    std::vector<double> lw, le;
    for (double w : {0.004, 0.008, 0.016, 0.032}) {
        const auto d = DressingParams::from_w(w, delta, n);
        const double exact = light_shift(ne, d.omega_r, delta);
        const double linear = -ne * d.omega_r * d.omega_r / (4 * delta);
        CHECK(std::abs(exact / linear - 1) < 2 * w);
        lw.push_back(std::log(w));
        le.push_back(std::log(std::abs(exact - light_shift_truncated(ne, d.omega_r, delta))));
    }
    // least-squares slope of log error against log w
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lw.size(); ++i) mx += lw[i] / lw.size(), my += le[i] / lw.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lw.size(); ++i) sxy += (lw[i] - mx) * (le[i] - my), sxx += (lw[i] - mx) * (lw[i] - mx);
    CHECK(sxy / sxx == Approx(3.0).margin(0.3));
}

TEST_CASE("Jz expansion coefficients", "[dressing]") {
    const double c0 = 2.5;
    const auto small = jz_expansion(1e-6, c0, 80);
    CHECK(small.c2 / c0 == Approx(1.0).epsilon(1e-5));
    const auto c = jz_expansion(0.1, c0, 100);
    CHECK(c.c3 == Approx(c0 * (2.0 / 100) * (-0.01 + 5e-4)));
    CHECK(effective_chi(0.1, c0) == Approx(c.c2));
    CHECK_THROWS_AS(jz_expansion(0.0, c0, 10), ConfigError);
}

TEST_CASE("Taylor route reproduces the light shift on the diagonal", "[dressing][oracle]") {
    const double delta = -two_pi * 30e6;
    for (int n : {50, 100, 300}) {
        for (double w : {0.01, 0.05, 0.1}) {
            const auto d = DressingParams::from_w(w, delta, n);
            const auto t = light_shift_taylor(d.omega_r, delta, n);
            double worst = 0, scale = 0;
            for (int m = -n / 10; m <= n / 10; ++m) {
                const double exact = light_shift(0.5 * n + m, d.omega_r, delta);
                double series = 0;
                for (int k = 4; k >= 0; --k) series = series * m + t[k];
                worst = std::max(worst, std::abs(exact - series));
                scale = std::max(scale, std::abs(exact - t[0]));
            }
            CHECK(worst / scale < 1e-4);

            // Twisting coefficient: exact chi0 (1+w)^(-3/2) against the printed
            // polynomial, which agrees only at leading order.
            const double c0 = chi0(d.omega_r, delta);
            CHECK(t[2] == Approx(c0 * std::pow(1 + w, -1.5)).epsilon(1e-10));
            CHECK(std::abs(jz_expansion(w, c0, n).c2 / t[2] - 1) < 2 * w);
        }
    }
}

TEST_CASE("compensating control detuning", "[dressing][property]") {
    BecParams b;
    b.a_ee = 6e-9;
    b.a_gg = 5.3e-9;
    b.a_eg = 5.5e-9;
    b.overlap_ee = b.overlap_gg = b.overlap_eg = 2e19;
    b.nu_e = two_pi * 3e3;
    b.nu_g = two_pi * 1e3;
    const auto d = DressingParams::from_w(0.05, -two_pi * 30e6, 200);
    const double dc = compensating_delta_c(b, d);
    CHECK(delta_linear(b, d, dc) == Approx(0.0).margin(1e-9 * std::abs(dc)));
    CHECK(delta_linear(b, d, dc + 17.0) == Approx(17.0).margin(1e-9 * std::abs(dc)));

    const auto m = effective_model(b, d, rydberg::hydrogen());
    CHECK(m.required_delta_c == Approx(dc));
    CHECK(m.w == Approx(0.05));
}

TEST_CASE("Rydberg decay and survival", "[dressing]") {
    const auto rb = rydberg::load_rb87();
    // n* = 100 exactly in hydrogen
    CHECK(rydberg_decay(100, rydberg::hydrogen()) / two_pi == Approx(116.0).epsilon(1e-12));
    CHECK(rydberg_decay(104, rb) / two_pi == Approx(113).margin(1.0));
    for (int n = 30; n < 140; ++n) CHECK(rydberg_decay(n + 1, rb) < rydberg_decay(n, rb));

    CHECK(poisson_survival(0.3, 1e4, 0.0) == 1.0);
    const double p1 = poisson_survival(0.1, 200, 1e-3), p2 = poisson_survival(0.1, 200, 2e-3);
    CHECK(p2 == Approx(p1 * p1));

    for (const auto& [name, expected] : {std::pair{"cryogenic", 0.9995}, std::pair{"room", 0.9721}}) {
        const auto& s = rb.scenario(name);
        const double p = bbr_survival(rb, s.principal_n, s.temperature_k, s.w, s.tau_c_s);
        CHECK(p == Approx(expected).margin(1e-3));
    }
}

TEST_CASE("blockade constraint", "[dressing]") {
    const double d = 2e-6;
    CHECK_FALSE(blockade_constraint(0.0, two_pi * 1e6, d).satisfied);
    const double c6 = 2.0 * two_pi * 1e6 * std::pow(3 * d, 6);
    const auto edge = blockade_constraint(c6, two_pi * 1e6, d);
    CHECK(edge.margin == Approx(0.0).margin(1e-15));
    CHECK(max_blockade_detuning(c6, d) == Approx(two_pi * 1e6));
    double prev = 1e9;
    for (double det : {1e5, 1e6, 1e7, 1e8}) {
        const double r = blockade_radius(c6, det);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("w-independence without decoherence or Jz^3", "[dressing][scan]") {
    DressingBudget b;
    b.loss_scale = 0.0;
    b.jz3_scale = 0.0;
    b.w_grid = {0.05, 0.1, 0.2};
    const auto r = optimal_dressing(24, b);
    REQUIRE(r.points.size() == 3);
    for (const auto& p : r.points) CHECK(p.qfi == Approx(r.points[0].qfi).epsilon(1e-9));
    CHECK(r.w_star == 0.2);
}

TEST_CASE("a larger Jz^3 term lowers the Fisher peak", "[dressing][scan]") {
    for (double w : {0.1, 0.3}) {
        const double f1 = peak_fisher(40, w, 1.0);
        const double f2 = peak_fisher(40, w, 2.0);
        CHECK(f2 < f1);
    }
}

TEST_CASE("threshold model fit", "[dressing][scan]") {
    const ThresholdModel tm(reference_rows());
    CHECK(tm.exponent() == Approx(0.1489).margin(0.01));
    CHECK(tm.kappa(100) == Approx(3.3));
    CHECK(tm.kappa(120) > 3.3);
    CHECK(tm.kappa(120) < 3.5237);
    CHECK(tm.qfi0_db(300) == Approx(22.747));
    CHECK(tm.events(64) == Approx(tm.amplitude() * std::pow(64.0, tm.exponent())));
}

TEST_CASE("threshold search brackets the target loss", "[dressing][scan]") {
    ThresholdOptions opt;
    opt.n_traj = 60;
    const auto row = fisher_loss_threshold(12, opt);
    CHECK(row.events > 0.0);
    CHECK(row.p_de == Approx(row.p_dp));
    const double at = qfi_at_events(12, opt.lambda, row.kappa, row.events, opt.n_traj, opt.seed, opt.noise);
    const double f0 = std::pow(10.0, row.qfi0_db / 10) * 12;
    CHECK(at / f0 == Approx(0.9).margin(0.03));
}

TEST_CASE("cat-size scan shape", "[dressing][scan]") {
    const ThresholdModel tm(reference_rows());
    const auto rb = rydberg::load_rb87();
    const ScanConfig cfg;
    std::vector<int> ns;
    for (int n = 40; n <= 100; n += 10) ns.push_back(n);
    for (auto env : {Environment::cryogenic, Environment::room}) {
        const auto rows = cat_size_scan(ns, env, tm, rb, cfg);
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].n_max > rows[i - 1].n_max);
    }
    const auto cryo = scan_row(104, Environment::cryogenic, tm, rb, cfg);
    const auto room = scan_row(104, Environment::room, tm, rb, cfg);
    CHECK(cryo.n_max > room.n_max);
    CHECK(std::abs(cryo.n_max / 700.0 - 1) < 0.25);
    CHECK(std::abs(room.n_max / 550.0 - 1) < 0.25);
    CHECK(cryo.gamma < room.gamma);
    CHECK_THROWS_AS(parse_environment("lukewarm"), ConfigError);
}
