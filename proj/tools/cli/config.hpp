#pragma once

// Run configuration: per-command defaults, a JSON config file and scalar
// --set overrides, merged into one fully resolved parameter object.

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rydcat/core/error.hpp"

namespace rydcat::cli {

using nlohmann::json;

class Params {
  public:
    Params() = default;
    Params(std::string command, json values) : command_(std::move(command)), values_(std::move(values)) {}

    const std::string& command() const { return command_; }
    const json& values() const { return values_; }

    template <typename T>
    T get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(command_ + ": missing key '" + key + "'");
        try {
            return it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(command_ + ": key '" + key + "' has the wrong type (" + it->dump() + ")");
        }
    }

    double number(const std::string& key) const { return get<double>(key); }
    int integer(const std::string& key) const {
        const double v = get<double>(key);
        if (v != static_cast<double>(static_cast<long>(v))) throw ConfigError(command_ + ": key '" + key + "' must be an integer");
        return static_cast<int>(v);
    }
    std::string text(const std::string& key) const { return get<std::string>(key); }
    bool flag(const std::string& key) const { return get<bool>(key); }
    std::vector<double> numbers(const std::string& key) const { return get<std::vector<double>>(key); }
    std::vector<int> integers(const std::string& key) const { return get<std::vector<int>>(key); }

  private:
    std::string command_;
    json values_;
};

/// Documented keys and defaults of every command.
inline const std::map<std::string, json>& command_defaults() {
    static const std::map<std::string, json> d = {
        {"evolve",
         {{"n_atoms", 30},
          {"lambda", 2.0},
          {"delta_prime", 0.0},
          {"t_end_over_tauc", 2.0},
          {"time_points", 101},
          {"husimi_theta_points", 61},
          {"husimi_phi_points", 121},
          {"flow_points", 400}}},
        {"bifurcation-sweep", {{"n_atoms", 30}, {"lambdas", {1.15, 2.0, 3.0}}, {"delta_prime", 0.0}}},
        {"dressing-optimize",
         {{"n_atoms", 40},
          {"lambda", 2.0},
          {"w_grid", {0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2, 0.25, 0.3}},
          {"loss_scale", 0.05},
          {"jz3_scale", 1.0},
          {"trajectories", 160},
          {"noise_model", "local"}}},
        {"qjmc",
         {{"n_atoms", 300},
          {"lambda", 2.0},
          {"probabilities", {0.0, 0.01, 0.3, 0.8}},
          {"channel", "de_excitation"},
          {"trajectories", 160},
          {"time_points", 21},
          {"t_end_over_tauc", 1.0},
          {"noise_model", "local"}}},
        {"catsize-scan",
         {{"n_min", 40},
          {"n_max", 104},
          {"n_step", 4},
          {"environments", {"cryogenic", "room"}},
          {"threshold_sizes", {16, 36, 64, 100, 144, 300}},
          {"threshold_trajectories", 160},
          {"threshold_file", ""},
          {"w", 0.08},
          {"detuning_fraction", 0.5},
          {"density_m3", 1e20},
          {"blockade_factor", 3.0},
          {"noise_model", "local"}}},
        {"pair-mixing",
         {{"principal_n", 50},
          {"theta_deg", 0.0},
          {"omega_r_mhz", 3.3},
          {"detuning_mhz", -23.0},
          {"t_final_us", 5.0},
          {"r_min_um", 2.0},
          {"r_max_um", 10.0},
          {"r_points", 81},
          {"spectrum_window_mhz", 60.0},
          {"energy_window_ghz", 150.0},
          {"coupling_floor", 0.1},
          {"delta_n", 4},
          {"l_max", 3},
          {"initial_state", "dressed"}}},
        {"transfer-sim",
         {{"n_atoms", 100},
          {"layout", "single"},
          {"g_mhz", 1.0},
          {"derive_g", false},
          {"mu_at_ea0", 15620.0},
          {"separation_um", 5.0},
          {"charge_e", 7000.0},
          {"frequency_mhz", 590.0},
          {"quality_factor", 6e6},
          {"mass_factor", 0.735},
          {"gamma_m_hz", 96.0},
          {"gamma_t_hz", 300.0},
          {"gamma_r_hz", 10e3},
          {"temperature_k", 0.09},
          {"derive_rates", false}}},
    };
    return d;
}

inline std::string command_description(const std::string& c) {
    static const std::map<std::string, std::string> d = {
        {"evolve", "closed-system LMG evolution, Husimi Q at tau_c, mean-field flow"},
        {"bifurcation-sweep", "cat angle, fidelity and Fisher information versus Lambda (fig2.csv)"},
        {"dressing-optimize", "Fisher information at tau_c versus dressing strength w"},
        {"qjmc", "trajectory-averaged Fisher information versus time under decoherence (fig3a.csv)"},
        {"catsize-scan", "10% Fisher-loss thresholds and the largest cat versus principal quantum number"},
        {"pair-mixing", "pair-state spectrum and blockade fidelity versus separation (fig5_*.csv)"},
        {"transfer-sim", "spin-cat to phonon-cat transfer: timing and no-loss probability"},
    };
    return d.at(c);
}

inline std::vector<std::string> command_names() {
    std::vector<std::string> out;
    for (const auto& [k, v] : command_defaults()) out.push_back(k);
    return out;
}

/// "key=value" with value parsed as JSON where possible, else as a string.
inline std::pair<std::string, json> parse_override(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + s + "' is not key=value");
    const std::string key = s.substr(0, eq), raw = s.substr(eq + 1);
    json v = json::parse(raw, nullptr, false);
    if (v.is_discarded()) v = raw;
    return {key, v};
}

/// Defaults, then the "parameters" object of the config file, then overrides.
/// Unknown keys and type changes are rejected; overrides must be scalar.
inline Params resolve(const std::string& command, const json& file, const std::vector<std::string>& overrides) {
    const auto it = command_defaults().find(command);
    if (it == command_defaults().end()) throw ConfigError("unknown command '" + command + "'");
    json values = it->second;

    auto merge = [&](const std::string& key, const json& v, bool scalar_only) {
        if (!values.contains(key)) throw ConfigError(command + ": unknown key '" + key + "'");
        const json& def = values[key];
        if (scalar_only && def.is_array()) throw ConfigError(command + ": '" + key + "' is a list; set it in the config file");
        const bool ok = (def.is_number() && v.is_number()) || (def.is_boolean() && v.is_boolean()) ||
                        (def.is_string() && v.is_string()) || (def.is_array() && v.is_array());
        if (!ok) throw ConfigError(command + ": key '" + key + "' expects " + std::string(def.type_name()) + ", got " + v.dump());
        values[key] = v;
    };

    if (!file.is_null()) {
        if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
        for (const auto& [k, v] : file.items()) {
            if (k == "command") {
                if (v != command) throw ConfigError("config file is for command " + v.dump());
            } else if (k == "seed" || k == "output_dir") {
                continue;
            } else if (k == "parameters") {
                if (!v.is_object()) throw ConfigError("'parameters' must be an object");
                for (const auto& [pk, pv] : v.items()) merge(pk, pv, false);
            } else {
                throw ConfigError("unknown top-level key '" + k + "'");
            }
        }
    }
    for (const auto& o : overrides) {
        const auto [k, v] = parse_override(o);
        merge(k, v, true);
    }
    return {command, values};
}

inline json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j = json::parse(in, nullptr, false, true);
    if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
    return j;
}

} // namespace rydcat::cli
