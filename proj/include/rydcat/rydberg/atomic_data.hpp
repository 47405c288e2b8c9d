#pragma once

// Versioned atomic data: quantum defects, decay and black-body models, C6 fit.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../core/constants.hpp"
#include "../core/error.hpp"

#ifndef RYDCAT_DEFAULT_DATA_DIR
#define RYDCAT_DEFAULT_DATA_DIR "data"
#endif

namespace rydcat::rydberg {

inline constexpr int supported_schema_version = 1;

/// Rydberg-Ritz coefficients of one (l, j) series.
struct DefectSeries {
    int l = 0;
    double j = 0.5;
    double delta0 = 0;
    double delta2 = 0;
    double delta4 = 0;
};

struct ReferenceScenario {
    std::string name;
    int principal_n = 0;
    double temperature_k = 0;
    int n_atoms = 0;
    double w = 0;
    double tau_c_s = 0;
};

struct AtomicData {
    std::string species = "H";
    double rydberg_constant_hz = 3.2898419602508e15;
    double core_polarizability_au = 0.0;
    std::vector<DefectSeries> defects;  ///< empty: all defects zero
    double decay_prefactor_mhz = 116.0;
    double decay_exponent = 3.0;
    double bbr_exponent = 2.0;
    int c6_n_exponent = 11;
    std::vector<double> c6_coefficients;
    std::vector<ReferenceScenario> scenarios;

    bool hydrogenic() const { return defects.empty(); }

    /// Rydberg-Ritz series delta0 + delta2/(n-delta0)^2 + delta4/(n-delta0)^4.
    double quantum_defect(int n, int l, double j) const {
        if (l < 0 || n <= l) throw ConfigError("quantum_defect: requires 0 <= l < n");
        if (std::abs(std::abs(j - l) - 0.5) > 1e-9) throw ConfigError("quantum_defect: j must be l +/- 1/2");
        if (hydrogenic()) return 0.0;
        for (const auto& s : defects) {
            if (s.l == l && std::abs(s.j - j) < 1e-9) {
                const double x = 1.0 / ((n - s.delta0) * (n - s.delta0));
                return s.delta0 + s.delta2 * x + s.delta4 * x * x;
            }
        }
        // Beyond the tabulated series the defect is negligible for Rydberg purposes.
        int lmax = 0;
        for (const auto& s : defects) lmax = std::max(lmax, s.l);
        if (l > lmax) return 0.0;
        throw DataError("quantum_defect: no series for l=" + std::to_string(l) + " j=" + std::to_string(j));
    }

    double n_star(int n, int l, double j) const { return n - quantum_defect(n, l, j); }

    /// Binding energy as an angular frequency (negative).
    double energy_rad_s(int n, int l, double j) const {
        const double ns = n_star(n, l, j);
        return -constants::two_pi * rydberg_constant_hz / (ns * ns);
    }

    /// Radiative decay rate of nS1/2 in rad/s.
    double decay_rate(int n) const {
        const double ns = n_star(n, 0, 0.5);
        return constants::two_pi * decay_prefactor_mhz * 1e6 / std::pow(ns, decay_exponent);
    }

    /// Black-body induced depopulation rate of nS1/2 in 1/s.
    double bbr_rate(int n, double temperature_k) const {
        if (temperature_k < 0) throw ConfigError("bbr_rate: negative temperature");
        const double a3 = std::pow(constants::fine_structure, 3);
        const double ns = n_star(n, 0, 0.5);
        return 4.0 * a3 * constants::boltzmann * temperature_k / (3.0 * constants::hbar * std::pow(ns, bbr_exponent));
    }

    /// |C6| of the nS1/2 + nS1/2 pair in rad/s * m^6.
    double c6_ss(int n) const {
        if (c6_coefficients.empty()) throw DataError("c6_ss: no C6 fit in the data file");
        double poly = 0.0;
        double p = 1.0;
        for (double c : c6_coefficients) {
            poly += c * p;
            p *= n;
        }
        return std::abs(std::pow(static_cast<double>(n), c6_n_exponent) * poly) * constants::c6_atomic_unit;
    }

    const ReferenceScenario& scenario(const std::string& name) const {
        for (const auto& s : scenarios)
            if (s.name == name) return s;
        throw DataError("no reference scenario named '" + name + "'");
    }
};

/// Pure hydrogen with all defects zero; useful as an analytic oracle.
inline AtomicData hydrogen() {
    AtomicData d;
    d.c6_coefficients = {};
    return d;
}

inline AtomicData parse_atomic_data(const nlohmann::json& j) {
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != supported_schema_version)
            throw DataError("atomic data schema version " + std::to_string(version) + " is not supported");
        AtomicData d;
        d.species = j.at("species").get<std::string>();
        d.rydberg_constant_hz = j.at("rydberg_constant_hz").get<double>();
        d.core_polarizability_au = j.value("core_polarizability_au", 0.0);
        for (const auto& s : j.at("quantum_defects"))
            d.defects.push_back({s.at("l").get<int>(), s.at("j").get<double>(), s.at("delta0").get<double>(),
                                 s.value("delta2", 0.0), s.value("delta4", 0.0)});
        d.decay_prefactor_mhz = j.at("decay").at("prefactor_mhz").get<double>();
        d.decay_exponent = j.at("decay").at("n_star_exponent").get<double>();
        d.bbr_exponent = j.at("bbr").at("n_star_exponent").get<double>();
        d.c6_n_exponent = j.at("c6_fit").at("n_exponent").get<int>();
        d.c6_coefficients = j.at("c6_fit").at("coefficients").get<std::vector<double>>();
        if (j.contains("reference_scenarios")) {
            for (const auto& s : j.at("reference_scenarios"))
                d.scenarios.push_back({s.at("name").get<std::string>(), s.at("principal_n").get<int>(),
                                       s.at("temperature_k").get<double>(), s.at("n_atoms").get<int>(),
                                       s.at("w").get<double>(), s.at("tau_c_s").get<double>()});
        }
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed atomic data: ") + e.what());
    }
}

/// Directory searched for data files: $RYDCAT_DATA_DIR, else the build-time default.
inline std::filesystem::path data_dir() {
    if (const char* env = std::getenv("RYDCAT_DATA_DIR")) return env;
    return RYDCAT_DEFAULT_DATA_DIR;
}

inline AtomicData load_atomic_data(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open atomic data file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("cannot parse " + path.string() + ": " + e.what());
    }
    return parse_atomic_data(j);
}

inline AtomicData load_rb87() { return load_atomic_data(data_dir() / "rb87.json"); }

} // namespace rydcat::rydberg
