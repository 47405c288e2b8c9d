#pragma once

// Rydberg superatom coupled to charged bridge cantilevers: coupling constant,
// transfer time and a step-by-step simulation of the cat transfer protocol
// with a no-loss probability.
//
// SI units throughout; rates and couplings are angular (rad/s).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "core/constants.hpp"
#include "core/error.hpp"

namespace rydcat::mechanical {

inline constexpr double beta1 = 4.730;                 ///< clamped-clamped fundamental root
inline constexpr double default_mass_factor = 0.735;   ///< m_eff / (rho V)

/// Clamped-clamped Euler-Bernoulli fundamental (rad/s).
inline double beam_frequency(double length, double width, double thickness, double density, double young_modulus) {
    if (!(length > 0 && width > 0 && thickness > 0 && density > 0 && young_modulus > 0))
        throw ConfigError("beam_frequency: inputs must be positive");
    const double inertia = width * thickness * thickness * thickness / 12.0;
    const double area = width * thickness;
    return beta1 * beta1 * std::sqrt(young_modulus * inertia / (density * area)) / (length * length);
}

/// Charge times the zero-point displacement sqrt(hbar / 2 m omega).
inline double zero_point_dipole(double charge, double effective_mass, double frequency) {
    if (!(effective_mass > 0 && frequency > 0)) throw ConfigError("zero_point_dipole: mass and frequency must be positive");
    return charge * std::sqrt(constants::hbar / (2.0 * effective_mass * frequency));
}

/// g = mu_at mu_l / (4 pi eps0 R^3 hbar), dipoles in C m.
inline double coupling_constant(double mu_at, double mu_l, double separation) {
    if (!(separation > 0)) throw ConfigError("coupling_constant: separation must be positive");
    return mu_at * mu_l / (4.0 * constants::pi * constants::epsilon0 * std::pow(separation, 3) * constants::hbar);
}

/// Bose occupation at angular frequency omega and temperature T (K).
inline double thermal_occupation(double omega, double temperature) {
    if (temperature <= 0) return 0.0;
    return 1.0 / std::expm1(constants::hbar * omega / (constants::boltzmann * temperature));
}

struct Cantilever {
    double length = 0.5e-6, width = 0.05e-6, thickness = 0.05e-6;  ///< m
    double density = 3000;                ///< kg/m^3
    double young_modulus = 1050e9;        ///< Pa
    double quality_factor = 6e6;
    double charge = 7e3 * constants::elementary_charge;  ///< C
    double frequency = constants::two_pi * 590e6;        ///< rad/s, tuned to the Rydberg transition
    double mass_factor = default_mass_factor;
    double heating = constants::two_pi * 300.0;          ///< Gamma_T, rad/s

    double volume() const { return length * width * thickness; }
    double effective_mass() const { return mass_factor * density * volume(); }
    double zero_point_dipole() const { return mechanical::zero_point_dipole(charge, effective_mass(), frequency); }
    double damping() const { return frequency / quality_factor; }
    double beam_frequency() const { return mechanical::beam_frequency(length, width, thickness, density, young_modulus); }

    void validate() const {
        if (!(length > 0 && width > 0 && thickness > 0 && density > 0 && mass_factor > 0))
            throw ConfigError("Cantilever: geometry, density and mass factor must be positive");
        if (!(quality_factor > 0)) throw ConfigError("Cantilever: quality factor must be positive");
        if (!(frequency > 0)) throw ConfigError("Cantilever: frequency must be positive");
        if (heating < 0) throw ConfigError("Cantilever: heating rate must be non-negative");
    }
};

struct LossRates {
    double damping = 0;   ///< Gamma_m, per phonon
    double heating = 0;   ///< Gamma_T, per phonon
    double rydberg = 0;   ///< Gamma_R

    double mechanical() const { return damping + heating; }
};

/// Gamma_m = omega / Q and Gamma_T = nbar(T) Gamma_m.
inline LossRates loss_rates(const Cantilever& c, double temperature, double rydberg_decay = 0.0) {
    if (!(c.quality_factor > 0)) throw ConfigError("loss_rates: quality factor must be positive");
    const double gm = c.damping();
    return {gm, thermal_occupation(c.frequency, temperature) * gm, rydberg_decay};
}

enum class Layout { single, double_ };

inline Layout parse_layout(const std::string& s) {
    if (s == "single") return Layout::single;
    if (s == "double") return Layout::double_;
    throw ConfigError("unknown layout '" + s + "' (expected single or double)");
}

inline std::string to_string(Layout l) { return l == Layout::single ? "single" : "double"; }

/// Duration of coupling step m: pi / (g sqrt(N-m) sqrt(m+1)).
inline double step_time(int n_atoms, int m, double g) {
    return constants::pi / (g * std::sqrt(double(n_atoms - m)) * std::sqrt(m + 1.0));
}

/// Sum of the N coupling steps; twice that for the two-cantilever layout.
inline double transfer_time(int n_atoms, double g, Layout layout = Layout::single) {
    if (n_atoms < 1) throw ConfigError("transfer_time: n_atoms must be >= 1");
    if (!(g > 0)) throw ConfigError("transfer_time: g must be positive");
    double tau = 0;
    for (int m = 0; m < n_atoms; ++m) tau += step_time(n_atoms, m, g);
    return layout == Layout::double_ ? 2.0 * tau : tau;
}

struct TransferConfig {
    int n_atoms = 100;
    double g = constants::two_pi * 1e6;
    double separation = 5e-6;
    Layout layout = Layout::single;
    double rydberg_decay = constants::two_pi * 10e3;
    int max_phonons = 100000;

    void validate() const {
        if (n_atoms < 1) throw ConfigError("TransferConfig: n_atoms must be >= 1");
        if (!(g > 0)) throw ConfigError("TransferConfig: g must be positive");
        if (rydberg_decay < 0) throw ConfigError("TransferConfig: rydberg_decay must be non-negative");
        if (n_atoms > max_phonons)
            throw ConfigError("TransferConfig: " + std::to_string(n_atoms) + " phonons overflow the register of " +
                              std::to_string(max_phonons));
    }
};

/// One branch of the cat: atoms still in the branch's clock state, Rydberg
/// flag, phonons on the right (0) and left (1) cantilevers.
struct BranchState {
    int atoms = 0;
    bool rydberg = false;
    int phonons[2] = {0, 0};

    bool operator==(const BranchState&) const = default;
};

struct ProtocolStep {
    int pass = 0;
    int index = 0;             ///< cycle index m within the pass
    std::string stage;         ///< pi_up, coupling, pi_down
    double t_start = 0, duration = 0;
    BranchState e, g;          ///< branch states after the step
    double survival = 1;       ///< no-loss probability of this step
};

struct ProtocolReport {
    double duration = 0;
    std::vector<std::pair<double, std::array<double, 2>>> phonon_trajectory;  ///< expected phonons per cantilever
    double success_probability = 1;
    double branch_survival[2] = {1, 1};  ///< per-branch no-jump probability (e, g)
    BranchState final_e, final_g;
    std::vector<ProtocolStep> steps;

    double branch_average_survival() const { return 0.5 * (branch_survival[0] + branch_survival[1]); }
};

/// Ideal-pulse protocol on the cat (|e=N> + |g=N>)/sqrt2 with cantilevers in
/// their ground state. Each pass runs N cycles of pi pulse to |p>, coupling
/// |p,m> -> |s,m+1> and pi pulse back down. The single layout maps the e branch
/// to the right cantilever; the double layout then maps the g branch to the left.
///
/// Loss exponent per coupling step: expected phonons (cat-averaged, m + 1/2 in
/// the active branch over a Rabi pi pulse) times Gamma_m + Gamma_T, plus the
/// expected Rydberg population times Gamma_R. Pi pulses are instantaneous.
inline ProtocolReport simulate_protocol(const TransferConfig& cfg, const LossRates& loss) {
    cfg.validate();
    const int n = cfg.n_atoms;
    ProtocolReport rep;
    BranchState br[2];
    br[0].atoms = br[1].atoms = n;

    double t = 0;
    auto expected = [&] {
        return std::array<double, 2>{0.5 * (br[0].phonons[0] + br[1].phonons[0]),
                                     0.5 * (br[0].phonons[1] + br[1].phonons[1])};
    };
    auto log = [&](int pass, int m, const char* stage, double t0, double dt, double surv) {
        rep.steps.push_back({pass, m, stage, t0, dt, br[0], br[1], surv});
    };
    rep.phonon_trajectory.push_back({t, expected()});

    const int passes = cfg.layout == Layout::double_ ? 2 : 1;
    for (int pass = 0; pass < passes; ++pass) {
        const int b = pass;  // pass 0 moves branch e to cantilever 0, pass 1 branch g to cantilever 1
        for (int m = 0; m < n; ++m) {
            BranchState& a = br[b];
            if (a.atoms != n - m || a.phonons[pass] != m) throw NumericError("simulate_protocol: bookkeeping drift");

            a.rydberg = true;
            a.atoms -= 1;
            log(pass, m, "pi_up", t, 0.0, 1.0);

            const double dt = step_time(n, m, cfg.g);
            double phonons_total = 0;  // time-averaged over the step, summed over branches
            double branch_phonons[2];
            for (int k = 0; k < 2; ++k) {
                branch_phonons[k] = br[k].phonons[0] + br[k].phonons[1] + (k == b ? 0.5 : 0.0);
                phonons_total += 0.5 * branch_phonons[k];
            }
            const double rate = phonons_total * loss.mechanical() + 0.5 * loss.rydberg;
            const double surv = std::exp(-rate * dt);
            for (int k = 0; k < 2; ++k)
                rep.branch_survival[k] *=
                    std::exp(-(branch_phonons[k] * loss.mechanical() + (k == b ? loss.rydberg : 0.0)) * dt);
            rep.success_probability *= surv;
            a.phonons[pass] += 1;
            log(pass, m, "coupling", t, dt, surv);
            t += dt;

            a.rydberg = false;
            log(pass, m, "pi_down", t, 0.0, 1.0);
            rep.phonon_trajectory.push_back({t, expected()});
        }
    }
    rep.duration = t;
    rep.final_e = br[0];
    rep.final_g = br[1];
    return rep;
}

struct JcResult {
    double target_population = 0;  ///< |<0 atoms, ground, N phonons|psi>|^2
    double norm = 0;               ///< no-jump probability of the branch
    double mean_phonons = 0;       ///< conditional on no jump
};

/// Schrodinger-picture check of one pass on the e branch: basis |k, r, m> with
/// k atoms left in |e>, r in {none, p, s}, m phonons. Coupling steps evolve
/// under H = (g/2) sqrt(k+1) sqrt(m+1) (|s,m+1><p,m| + h.c.) - (i/2)[(Gamma_m +
/// Gamma_T) m + Gamma_R P_ryd]; pi pulses are exact permutations.
/// duration_scale stretches every coupling step.
inline JcResult jaynes_cummings_transfer(int n_atoms, double g, const LossRates& loss, double duration_scale = 1.0) {
    if (n_atoms < 1 || n_atoms > 10) throw ConfigError("jaynes_cummings_transfer: n_atoms must be in [1, 10]");
    using CVec = Eigen::VectorXcd;
    using Trip = Eigen::Triplet<std::complex<double>>;
    const int n = n_atoms, nm = n + 1;
    const int dim = (n + 1) * 3 * nm;
    auto idx = [&](int k, int r, int m) { return (k * 3 + r) * nm + m; };
    enum { none = 0, p = 1, s = 2 };

    // -i H_eff
    std::vector<Trip> trips;
    const std::complex<double> mi(0, -1);
    for (int k = 0; k <= n; ++k)
        for (int m = 0; m <= n; ++m) {
            for (int r = 0; r < 3; ++r)
                trips.emplace_back(idx(k, r, m), idx(k, r, m),
                                   -0.5 * (loss.mechanical() * m + (r != none ? loss.rydberg : 0.0)));
            if (m < n && k < n) {
                const double c = 0.5 * g * std::sqrt(k + 1.0) * std::sqrt(m + 1.0);
                trips.emplace_back(idx(k, s, m + 1), idx(k, p, m), mi * c);
                trips.emplace_back(idx(k, p, m), idx(k, s, m + 1), mi * c);
            }
        }
    Eigen::SparseMatrix<std::complex<double>> gen(dim, dim);
    gen.setFromTriplets(trips.begin(), trips.end());
    const double fastest = 0.5 * g * (n + 1.0);

    CVec psi = CVec::Zero(dim);
    psi(idx(n, none, 0)) = 1.0;
    for (int m = 0; m < n; ++m) {
        CVec up = CVec::Zero(dim);  // |k, none> -> |k-1, p>
        for (int k = 1; k <= n; ++k)
            for (int q = 0; q <= n; ++q) up(idx(k - 1, p, q)) = psi(idx(k, none, q));
        psi = up;

        // classical RK4, phase error per step ~ (rate h)^4
        const double dt = duration_scale * step_time(n, m, g);
        const int sub = std::max(64, static_cast<int>(std::ceil(fastest * dt / 2e-3)));
        const double h = dt / sub;
        for (int i = 0; i < sub; ++i) {
            const CVec k1 = gen * psi;
            const CVec k2 = gen * (psi + 0.5 * h * k1);
            const CVec k3 = gen * (psi + 0.5 * h * k2);
            const CVec k4 = gen * (psi + h * k3);
            psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }

        CVec down = CVec::Zero(dim);  // |k, s> -> |k, none>
        for (int k = 0; k <= n; ++k)
            for (int q = 0; q <= n; ++q) down(idx(k, none, q)) = psi(idx(k, s, q));
        // population left in |p> is lost by the down pulse, as in an experiment
        psi = down;
    }

    JcResult out;
    out.norm = psi.squaredNorm();
    out.target_population = std::norm(psi(idx(0, none, n)));
    for (int k = 0; k <= n; ++k)
        for (int m = 0; m <= n; ++m) out.mean_phonons += m * std::norm(psi(idx(k, none, m)));
    if (out.norm > 0) out.mean_phonons /= out.norm;
    return out;
}

} // namespace rydcat::mechanical
