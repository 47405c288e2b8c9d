#pragma once

// Rydberg dressing of the |e> component: light shift, its Jz expansion, the
// effective LMG parameters, decay and survival estimates, blockade check.
//
// Frequencies are angular (rad/s) unless a name says otherwise.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "core/constants.hpp"
#include "core/error.hpp"
#include "rydberg/atomic_data.hpp"

namespace rydcat::dressing {

struct DressingParams {
    double omega_r = 0;   ///< single-atom Rabi frequency
    double detuning = 0;  ///< signed
    int n_atoms = 0;
    int principal_n = 0;

    double n_e() const { return 0.5 * n_atoms; }

    /// Dressing strength w = N_e omega_r^2 / detuning^2 with N_e = N/2.
    double w() const { return n_e() * omega_r * omega_r / (detuning * detuning); }

    /// Expected Rydberg population of the ensemble.
    double rydberg_population() const { return 0.5 * w(); }

    void validate() const {
        if (n_atoms < 1) throw ConfigError("DressingParams: n_atoms must be >= 1");
        if (detuning == 0.0) throw ConfigError("DressingParams: zero detuning");
        if (!(omega_r > 0.0)) throw ConfigError("DressingParams: omega_r must be positive");
    }

    /// Non-fatal diagnostics (weak-dressing guard).
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (w() >= 0.5) out.push_back("dressing strength w = " + std::to_string(w()) + " is outside the weak-dressing regime");
        return out;
    }

    /// Dressing with the Rabi frequency chosen to give strength w.
    static DressingParams from_w(double w, double detuning, int n_atoms, int principal_n = 0) {
        if (!(w > 0.0)) throw ConfigError("from_w: w must be positive");
        return {std::abs(detuning) * std::sqrt(2.0 * w / n_atoms), detuning, n_atoms, principal_n};
    }
};

struct BecParams {
    double a_ee = 0, a_gg = 0, a_eg = 0;         ///< scattering lengths, m
    double mass = 87 * constants::atomic_mass_unit;  ///< kg
    double overlap_ee = 0, overlap_gg = 0, overlap_eg = 0;  ///< int |psi_i|^2 |psi_j|^2, 1/m^3
    double nu_e = 0, nu_g = 0;                   ///< single-particle energies, rad/s

    void validate() const {
        if (!(mass > 0.0)) throw ConfigError("BecParams: mass must be positive");
        if (a_ee < 0 || a_gg < 0 || a_eg < 0) throw ConfigError("BecParams: scattering lengths must be nonnegative");
    }

    /// Contact interaction 4 pi hbar a / m * overlap, rad/s.
    double u(double a, double overlap) const { return 4.0 * constants::pi * constants::hbar * a / mass * overlap; }
    double u_ee() const { return u(a_ee, overlap_ee); }
    double u_gg() const { return u(a_gg, overlap_gg); }
    double u_eg() const { return u(a_eg, overlap_eg); }
};

/// Mean-field energy of the two-component condensate, rad/s.
inline double bec_energy(const BecParams& b, double n_e, double n_g) {
    if (n_e < 0 || n_g < 0) throw ConfigError("bec_energy: negative population");
    return n_e * (b.nu_e + 0.5 * (n_e - 1.0) * b.u_ee()) + n_g * (b.nu_g + 0.5 * (n_g - 1.0) * b.u_gg()) +
           n_e * n_g * b.u_eg();
}

/// Collective light shift (detuning/2)(1 - sqrt(1 + n_e omega_r^2 / detuning^2)).
inline double light_shift(double n_e, double omega_r, double detuning) {
    if (detuning == 0.0) throw ConfigError("light_shift: zero detuning");
    const double x = n_e * omega_r * omega_r / (detuning * detuning);
    // 1 - sqrt(1+x) = -x / (1 + sqrt(1+x)) avoids cancellation for small x.
    return -0.5 * detuning * x / (1.0 + std::sqrt(1.0 + x));
}

/// Second-order truncation of the light shift in x = n_e omega_r^2 / detuning^2.
inline double light_shift_truncated(double n_e, double omega_r, double detuning) {
    if (detuning == 0.0) throw ConfigError("light_shift_truncated: zero detuning");
    const double x = n_e * omega_r * omega_r / (detuning * detuning);
    return 0.5 * detuning * (-0.5 * x + 0.125 * x * x);
}

inline double chi0(double omega_r, double detuning) {
    if (detuning == 0.0) throw ConfigError("chi0: zero detuning");
    return std::pow(omega_r, 4) / (16.0 * std::pow(detuning, 3));
}

/// Coefficients of Jz, Jz^2, Jz^3 in the interaction expansion.
struct JzCoefficients {
    double c1 = 0, c2 = 0, c3 = 0;
};

/// Published polynomial form:
///   chi0 [ N(-1/w + 1 - 9w^2 + 5w^4) Jz + (1 - 3w + 15w^2/2) Jz^2 + (2/N)(-w^2 + 5w^4) Jz^3 ].
inline JzCoefficients jz_expansion(double w, double chi0_value, int n_atoms) {
    if (!(w > 0.0 && w < 1.0)) throw ConfigError("jz_expansion: requires 0 < w < 1");
    const double n = n_atoms;
    const double w2 = w * w;
    const double w4 = w2 * w2;
    return {chi0_value * n * (-1.0 / w + 1.0 - 9.0 * w2 + 5.0 * w4), chi0_value * (1.0 - 3.0 * w + 7.5 * w2),
            chi0_value * (2.0 / n) * (-w2 + 5.0 * w4)};
}

/// Effective twisting strength chi = chi0 (1 - 3w + 15 w^2 / 2).
inline double effective_chi(double w, double chi0_value) { return chi0_value * (1.0 - 3.0 * w + 7.5 * w * w); }

/// Taylor coefficients of light_shift(N/2 + m) in m, taken directly from the closed form.
/// Index k holds the coefficient of m^k, k = 1..4.
inline std::array<double, 5> light_shift_taylor(double omega_r, double detuning, int n_atoms) {
    if (detuning == 0.0) throw ConfigError("light_shift_taylor: zero detuning");
    const double a = omega_r * omega_r / (detuning * detuning);
    const double s = 1.0 + 0.5 * n_atoms * a;
    // d^k/dn_e^k of (D/2)(1 - sqrt(1 + a n_e)), divided by k!
    std::array<double, 5> c{};
    c[0] = light_shift(0.5 * n_atoms, omega_r, detuning);
    c[1] = -detuning * a / (4.0 * std::sqrt(s));
    c[2] = detuning * a * a / (16.0 * std::pow(s, 1.5));
    c[3] = -detuning * a * a * a / (32.0 * std::pow(s, 2.5));
    c[4] = 5.0 * detuning * std::pow(a, 4) / (256.0 * std::pow(s, 3.5));
    return c;
}

/// Linear term of the LMG Hamiltonian:
/// nu_e - nu_g + delta_c + (u_ee - u_gg)(N-1)/2 + chi0 N(-1/w + 1 - 9w^2 + 5w^4).
inline double delta_linear(const BecParams& b, const DressingParams& d, double delta_c) {
    const double c0 = chi0(d.omega_r, d.detuning);
    return b.nu_e - b.nu_g + delta_c + 0.5 * (b.u_ee() - b.u_gg()) * (d.n_atoms - 1) +
           jz_expansion(d.w(), c0, d.n_atoms).c1;
}

/// Control detuning that cancels the linear term.
inline double compensating_delta_c(const BecParams& b, const DressingParams& d) {
    b.validate();
    d.validate();
    return -delta_linear(b, d, 0.0);
}

/// Radiative decay of nS1/2, rad/s.
inline double rydberg_decay(int principal_n, const rydberg::AtomicData& data) {
    if (principal_n <= data.quantum_defect(std::max(principal_n, 1), 0, 0.5))
        throw ConfigError("rydberg_decay: principal_n must exceed the quantum defect");
    return data.decay_rate(principal_n);
}

/// Probability of no event, exp(-w gamma tau).
inline double poisson_survival(double w, double gamma, double tau) {
    if (w < 0 || gamma < 0 || tau < 0) throw ConfigError("poisson_survival: negative input");
    return std::exp(-w * gamma * tau);
}

struct BlockadeCheck {
    bool satisfied = false;
    double radius = 0;  ///< blockade radius, m
    double margin = 0;  ///< radius - 3 * trap diameter, m
};

/// Blockade radius from C6 / R^6 = 2 |detuning|.
inline double blockade_radius(double c6, double detuning) {
    if (detuning == 0.0) throw ConfigError("blockade_radius: zero detuning");
    return std::pow(std::max(c6, 0.0) / (2.0 * std::abs(detuning)), 1.0 / 6.0);
}

inline BlockadeCheck blockade_constraint(double c6, double detuning, double trap_diameter) {
    if (!(trap_diameter > 0.0)) throw ConfigError("blockade_constraint: trap diameter must be positive");
    BlockadeCheck out;
    out.radius = blockade_radius(c6, detuning);
    out.margin = out.radius - 3.0 * trap_diameter;
    out.satisfied = out.margin >= 0.0 && out.radius > 0.0;
    return out;
}

/// Largest |detuning| for which the blockade radius still covers three trap diameters.
inline double max_blockade_detuning(double c6, double trap_diameter) {
    return c6 / (2.0 * std::pow(3.0 * trap_diameter, 6));
}

struct EffectiveModel {
    double chi0 = 0;
    double chi = 0;
    double delta_linear = 0;
    double required_delta_c = 0;
    double gamma_r = 0;
    double gamma_eff = 0;
    double w = 0;
};

inline EffectiveModel effective_model(const BecParams& b, const DressingParams& d, const rydberg::AtomicData& data) {
    d.validate();
    EffectiveModel m;
    m.w = d.w();
    m.chi0 = chi0(d.omega_r, d.detuning);
    m.chi = effective_chi(m.w, m.chi0);
    m.required_delta_c = compensating_delta_c(b, d);
    m.delta_linear = delta_linear(b, d, m.required_delta_c);
    m.gamma_r = d.principal_n > 0 ? rydberg_decay(d.principal_n, data) : 0.0;
    m.gamma_eff = m.w * m.gamma_r;
    return m;
}

/// Spacing to the neighbouring nS level, rad/s.
inline double level_spacing(int principal_n, const rydberg::AtomicData& data) {
    return data.energy_rad_s(principal_n + 1, 0, 0.5) - data.energy_rad_s(principal_n, 0, 0.5);
}

/// Probability of no black-body transfer, exp(-w gamma_BBR tau).
inline double bbr_survival(const rydberg::AtomicData& data, int principal_n, double temperature_k, double w,
                           double tau) {
    return poisson_survival(w, data.bbr_rate(principal_n, temperature_k), tau);
}

/// Pass-through estimate for collisional atom loss from a 1/e lifetime.
inline double atom_loss_survival(double n_atoms, double lifetime_s, double tau) {
    if (!(lifetime_s > 0.0)) throw ConfigError("atom_loss_survival: lifetime must be positive");
    return std::exp(-n_atoms * tau / lifetime_s);
}

} // namespace rydcat::dressing
