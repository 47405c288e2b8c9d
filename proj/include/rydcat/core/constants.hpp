#pragma once

#include <numbers>

// CODATA 2018 values, SI units.
namespace rydcat::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double planck = 6.62607015e-34;       // J s
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double bohr_radius = 5.29177210903e-11;     // m
inline constexpr double epsilon0 = 8.8541878128e-12;         // F/m
inline constexpr double boltzmann = 1.380649e-23;            // J/K
inline constexpr double atomic_mass_unit = 1.66053906660e-27; // kg
inline constexpr double hartree_energy = 4.3597447222071e-18; // J
inline constexpr double fine_structure = 7.2973525693e-3;
inline constexpr double speed_of_light = 299792458.0;         // m/s

/// e * a0 in C m.
inline constexpr double ea0 = elementary_charge * bohr_radius;

/// Hartree energy expressed as an angular frequency (rad/s).
inline constexpr double hartree_rad_s = hartree_energy / hbar;

/// Atomic unit of C3 (E_h a0^3) divided by hbar, in rad/s * m^3.
inline constexpr double c3_atomic_unit = hartree_rad_s * bohr_radius * bohr_radius * bohr_radius;

/// Atomic unit of C6 (E_h a0^6) divided by hbar, in rad/s * m^6.
inline constexpr double c6_atomic_unit = c3_atomic_unit * bohr_radius * bohr_radius * bohr_radius;

inline constexpr double hz_to_rad_s(double f) { return two_pi * f; }
inline constexpr double rad_s_to_hz(double w) { return w / two_pi; }

} // namespace rydcat::constants
