#pragma once

// Decoherence budget and cat-size scan.
//
// Units: the LMG part runs with omega_c = 1, so times are kappa = omega_c t.
// With the linear term compensated and Lambda = N chi / omega_c fixed, the
// physical cat time is tau_c = 4 N Lambda kappa / (w^2 |Delta| f(w)) with
// f(w) = 1 - 3w + 15w^2/2, and the expected number of decoherence events over
// the cat time is w gamma tau_c = 4 N Lambda kappa gamma / (w |Delta| f(w)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core/optimize.hpp"
#include "dressing_model.hpp"
#include "lmg_dynamics.hpp"
#include "qjmc.hpp"

namespace rydcat::dressing {

using spin::CVec;
using spin::DickeSpace;
using spin::RMat;
using spin::SpinState;

inline double twisting_factor(double w) { return 1.0 - 3.0 * w + 7.5 * w * w; }

/// chi Jz^2 + chi3 Jz^3 + omega_c Jx on the multiplet 2j = j2.
inline RMat dressed_hamiltonian_spin(int j2, double chi, double chi3, double omega_c) {
    RMat h = lmg::build_hamiltonian_spin(j2, {chi, 0.0, omega_c, std::max(j2, 1)});
    for (int k = 0; k <= j2; ++k) {
        const double m = 0.5 * j2 - k;
        h(k, k) += chi3 * m * m * m;
    }
    return h;
}

/// Ratio chi3 / chi of the printed expansion at dressing strength w.
inline double cubic_ratio(double w, int n_atoms) {
    const double w2 = w * w;
    return (2.0 / n_atoms) * (-w2 + 5.0 * w2 * w2) / twisting_factor(w);
}

// ---------------------------------------------------------------------------
// 10% Fisher-loss thresholds.

struct ThresholdOptions {
    double lambda = 2.0;
    int n_traj = qjmc::default_trajectories;
    std::uint64_t seed = 20160;
    double fisher_loss = 0.1;
    double events_lo = 1e-3;  ///< bracket on the expected event count over tau_c
    double events_hi = 30.0;
    double rel_tol = 0.02;
    qjmc::NoiseModel noise = qjmc::NoiseModel::local;
};

struct ThresholdRow {
    int n_atoms = 0;
    double kappa = 0;    ///< omega_c tau_c
    double qfi0_db = 0;  ///< closed-system 10 log10(F/N) at tau_c
    double events = 0;   ///< expected events (both channels) at the threshold
    double p_de = 0;     ///< per-channel probabilities, equal split
    double p_dp = 0;
    double fisher_loss = 0.1;
};

/// Quantum Fisher information at tau_c (kappa) for a given expected event count.
inline double qfi_at_events(int n_atoms, double lambda, double kappa, double events, int n_traj, std::uint64_t seed,
                            qjmc::NoiseModel noise, double w = 0.0, double jz3_scale = 0.0) {
    const DickeSpace s(n_atoms);
    const double chi = lambda / n_atoms;
    const double chi3 = jz3_scale * chi * (w > 0 ? cubic_ratio(w, n_atoms) : 0.0);
    const auto psi0 = lmg::initial_state(s);
    std::vector<qjmc::CollapseChannel> ch;
    if (events > 0) ch = qjmc::split_channels(psi0, events / kappa, noise);
    const qjmc::JumpModel jm(
        n_atoms, [=](int j2) { return dressed_hamiltonian_spin(j2, chi, chi3, 1.0); }, noise, ch);
    qjmc::QjmcOptions opt;
    opt.keep_states = true;
    const int runs = events > 0 ? n_traj : 1;
    const auto st = qjmc::aggregate(qjmc::run_ensemble(jm, psi0.amplitudes(), {0.0, kappa}, runs, seed, opt), n_atoms);
    return st.qfi.mean.back();
}

/// Expected event count that lowers the quantum Fisher information at tau_c by
/// the requested fraction, by bisection in log(events) with shared seeds.
inline ThresholdRow fisher_loss_threshold(int n_atoms, const ThresholdOptions& opt = {}) {
    if (n_atoms < 2) throw ConfigError("fisher_loss_threshold: needs at least two atoms");
    if (!(opt.fisher_loss > 0 && opt.fisher_loss < 1)) throw ConfigError("fisher_loss_threshold: loss must be in (0, 1)");
    const DickeSpace s(n_atoms);
    const auto p = lmg::LmgParams::from_dimensionless(n_atoms, opt.lambda, 0.0);
    const auto ct = lmg::cat_time(s, p);
    ThresholdRow row;
    row.n_atoms = n_atoms;
    row.fisher_loss = opt.fisher_loss;
    row.kappa = ct.tau;
    const double f0 = ct.fisher.fisher;
    row.qfi0_db = 10.0 * std::log10(f0 / n_atoms);
    const double target = (1.0 - opt.fisher_loss) * f0;
    auto excess = [&](double e) {
        return qfi_at_events(n_atoms, opt.lambda, row.kappa, e, opt.n_traj, opt.seed, opt.noise) - target;
    };
    double lo = std::log(opt.events_lo), hi = std::log(opt.events_hi);
    if (!(excess(opt.events_lo) > 0) || !(excess(opt.events_hi) < 0))
        throw NumericError("fisher_loss_threshold: threshold not bracketed for N=" + std::to_string(n_atoms));
    while (hi - lo > opt.rel_tol) {
        const double mid = 0.5 * (lo + hi);
        if (excess(std::exp(mid)) > 0) lo = mid;
        else hi = mid;
    }
    row.events = std::exp(0.5 * (lo + hi));
    row.p_de = row.p_dp = -std::expm1(-0.5 * row.events);
    return row;
}

inline std::vector<ThresholdRow> threshold_table(const std::vector<int>& sizes, const ThresholdOptions& opt = {}) {
    if (sizes.empty()) throw ConfigError("threshold_table: empty size list");
    std::vector<ThresholdRow> rows;
    for (int n : sizes) rows.push_back(fisher_loss_threshold(n, opt));
    return rows;
}

/// Interpolation of a threshold table: kappa and the closed-system Fisher
/// linearly in log N, the event threshold as a least-squares power law.
class ThresholdModel {
  public:
    explicit ThresholdModel(std::vector<ThresholdRow> rows) : rows_(std::move(rows)) {
        if (rows_.size() < 2) throw ConfigError("ThresholdModel: need at least two rows");
        std::sort(rows_.begin(), rows_.end(), [](const auto& a, const auto& b) { return a.n_atoms < b.n_atoms; });
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double k = static_cast<double>(rows_.size());
        for (const auto& r : rows_) {
            if (!(r.events > 0)) throw ConfigError("ThresholdModel: nonpositive event threshold");
            const double x = std::log(r.n_atoms), y = std::log(r.events);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        exponent_ = (k * sxy - sx * sy) / (k * sxx - sx * sx);
        log_amp_ = (sy - exponent_ * sx) / k;
    }

    const std::vector<ThresholdRow>& rows() const { return rows_; }
    double exponent() const { return exponent_; }
    double amplitude() const { return std::exp(log_amp_); }

    double events(double n) const { return std::exp(log_amp_ + exponent_ * std::log(n)); }
    double kappa(double n) const { return interp(n, [](const ThresholdRow& r) { return r.kappa; }); }
    double qfi0_db(double n) const { return interp(n, [](const ThresholdRow& r) { return r.qfi0_db; }); }

  private:
    template <typename F>
    double interp(double n, F&& f) const {
        const double x = std::log(n);
        std::size_t i = 1;
        while (i + 1 < rows_.size() && std::log(rows_[i].n_atoms) < x) ++i;
        const double x0 = std::log(rows_[i - 1].n_atoms), x1 = std::log(rows_[i].n_atoms);
        const double y0 = f(rows_[i - 1]), y1 = f(rows_[i]);
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }

    std::vector<ThresholdRow> rows_;
    double exponent_ = 0;
    double log_amp_ = 0;
};

// ---------------------------------------------------------------------------
// Optimal dressing strength.

struct DressingBudget {
    /// Decoherence at strength w is loss_scale / (w f(w)) expected events over
    /// tau_c; loss_scale = 4 N Lambda kappa gamma / |Delta| for a physical setup.
    double loss_scale = 0.0;
    std::vector<double> w_grid{0.02, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45};
    double lambda = 2.0;
    double jz3_scale = 1.0;  ///< 0 truncates the interaction at Jz^2
    int n_traj = qjmc::default_trajectories;
    std::uint64_t seed = 7;
    qjmc::NoiseModel noise = qjmc::NoiseModel::local;
};

struct DressingPoint {
    double w = 0;
    double events = 0;
    double qfi = 0;
    double qfi_db = 0;
};

struct OptimalDressing {
    double w_star = 0;
    double kappa = 0;
    std::vector<DressingPoint> points;
};

/// argmax over the w grid of the quantum Fisher information at the design
/// time tau_c, including the Jz^3 term and decoherence. Ties go to larger w.
inline OptimalDressing optimal_dressing(int n_atoms, const DressingBudget& b = {}) {
    if (n_atoms < 2) throw ConfigError("optimal_dressing: needs at least two atoms");
    if (b.w_grid.empty()) throw ConfigError("optimal_dressing: empty w grid");
    if (b.loss_scale < 0) throw ConfigError("optimal_dressing: negative loss scale");
    for (double w : b.w_grid)
        if (!(w > 0 && w < 0.5)) throw ConfigError("optimal_dressing: w grid must lie in (0, 0.5)");
    const DickeSpace s(n_atoms);
    OptimalDressing out;
    out.kappa = lmg::cat_time(s, lmg::LmgParams::from_dimensionless(n_atoms, b.lambda, 0.0)).tau;
    double best = -1;
    for (double w : b.w_grid) {
        DressingPoint p;
        p.w = w;
        p.events = b.loss_scale / (w * twisting_factor(w));
        p.qfi = qfi_at_events(n_atoms, b.lambda, out.kappa, p.events, b.n_traj, b.seed, b.noise, w, b.jz3_scale);
        p.qfi_db = 10.0 * std::log10(p.qfi / n_atoms);
        out.points.push_back(p);
        if (p.qfi >= best * (1.0 - 1e-12)) {
            best = std::max(best, p.qfi);
            out.w_star = w;
        }
    }
    return out;
}

/// Closed-system peak of 4 Var(Jz) over t in [0, t_max] (omega_c = 1).
inline double peak_fisher(int n_atoms, double w, double jz3_scale, double lambda = 2.0, double t_max = 8.0) {
    const DickeSpace s(n_atoms);
    const double chi = lambda / n_atoms;
    const lmg::Propagator prop(dressed_hamiltonian_spin(n_atoms, chi, jz3_scale * chi * cubic_ratio(w, n_atoms), 1.0));
    const CVec c0 = prop.to_eigen(lmg::initial_state(s).amplitudes());
    auto f = [&](double t) { return spin::fisher_information(SpinState(s, prop.from_eigen(prop.evolve_eigen(c0, t)))).fisher; };
    const int grid = 400;
    int best = 0;
    double fb = -1;
    for (int i = 0; i <= grid; ++i) {
        const double v = f(t_max * i / grid);
        if (v > fb) {
            fb = v;
            best = i;
        }
    }
    const double h = t_max / grid;
    return std::max(fb, golden_maximize(f, std::max(0.0, (best - 1) * h), std::min(t_max, (best + 1) * h), 1e-9).second);
}

// ---------------------------------------------------------------------------
// Cat-size scan.

enum class Environment { cryogenic, room };

inline const char* to_string(Environment e) { return e == Environment::cryogenic ? "cryogenic" : "room"; }

inline Environment parse_environment(const std::string& s) {
    if (s == "cryogenic") return Environment::cryogenic;
    if (s == "room") return Environment::room;
    throw ConfigError("unknown environment '" + s + "' (expected cryogenic or room)");
}

struct ScanConfig {
    double w = 0.08;                  ///< dressing strength
    double lambda = 2.0;
    double detuning_fraction = 0.5;   ///< |Delta| <= fraction * spacing to the next nS level
    double density_m3 = 1e20;         ///< peak condensate density
    double blockade_factor = 3.0;     ///< blockade radius / trap diameter
    double cryogenic_temperature_k = 3.0;
    double room_temperature_k = 300.0;
    int max_atoms = 20000;

    void validate() const {
        if (!(w > 0 && w < 0.5)) throw ConfigError("ScanConfig: w must lie in (0, 0.5)");
        if (!(detuning_fraction > 0)) throw ConfigError("ScanConfig: detuning fraction must be positive");
        if (!(density_m3 > 0)) throw ConfigError("ScanConfig: density must be positive");
        if (!(blockade_factor > 0)) throw ConfigError("ScanConfig: blockade factor must be positive");
        if (max_atoms < 2) throw ConfigError("ScanConfig: max_atoms must be >= 2");
    }
};

struct ScanRow {
    int principal_n = 0;
    bool feasible = false;
    int n_max = 0;
    double fisher_db = 0;    ///< 10 log10(F/N) at the threshold
    double tau_c = 0;        ///< s
    double omega_r = 0;      ///< rad/s
    double detuning = 0;     ///< |Delta|, rad/s
    double chi0 = 0;         ///< rad/s
    double gamma = 0;        ///< total Rydberg loss rate, 1/s
    double trap_diameter = 0;  ///< m
    std::string limit;       ///< binding detuning cap at N_max
};

/// Trap diameter of a uniform sphere holding n atoms at the given density.
inline double trap_diameter(double n_atoms, double density_m3) {
    return std::cbrt(6.0 * n_atoms / (constants::pi * density_m3));
}

/// One row of the scan: the largest N whose required detuning for the
/// threshold event count stays below both the level-spacing and blockade caps.
inline ScanRow scan_row(int principal_n, Environment env, const ThresholdModel& tm, const rydberg::AtomicData& data,
                        const ScanConfig& cfg) {
    cfg.validate();
    ScanRow row;
    row.principal_n = principal_n;
    const double temp = env == Environment::cryogenic ? cfg.cryogenic_temperature_k : cfg.room_temperature_k;
    row.gamma = data.decay_rate(principal_n) + data.bbr_rate(principal_n, temp);
    const double spacing_cap = cfg.detuning_fraction * level_spacing(principal_n, data);
    const double c6 = data.c6_ss(principal_n);
    const double f = twisting_factor(cfg.w);
    auto required = [&](double n) { return 4.0 * n * cfg.lambda * tm.kappa(n) * row.gamma / (cfg.w * f * tm.events(n)); };
    auto blockade_cap = [&](double n) {
        return c6 / (2.0 * std::pow(cfg.blockade_factor * trap_diameter(n, cfg.density_m3), 6));
    };
    auto feasible = [&](int n) { return required(n) <= std::min(spacing_cap, blockade_cap(n)); };
    if (!feasible(2)) {
        row.limit = blockade_cap(2) < spacing_cap ? "blockade" : "spacing";
        return row;
    }
    int lo = 2, hi = cfg.max_atoms;
    if (feasible(hi)) lo = hi;
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (feasible(mid)) lo = mid;
        else hi = mid;
    }
    const double n = lo;
    row.feasible = true;
    row.n_max = lo;
    row.detuning = std::min(spacing_cap, blockade_cap(n));
    row.limit = blockade_cap(n) < spacing_cap ? "blockade" : "spacing";
    row.omega_r = row.detuning * std::sqrt(2.0 * cfg.w / n);
    row.chi0 = cfg.w * cfg.w * row.detuning / (4.0 * n * n);
    row.tau_c = 4.0 * n * cfg.lambda * tm.kappa(n) / (cfg.w * cfg.w * row.detuning * f);
    row.fisher_db = tm.qfi0_db(n) + 10.0 * std::log10(1.0 - tm.rows().front().fisher_loss);
    row.trap_diameter = trap_diameter(n, cfg.density_m3);
    return row;
}

inline std::vector<ScanRow> cat_size_scan(const std::vector<int>& n_range, Environment env, const ThresholdModel& tm,
                                          const rydberg::AtomicData& data, const ScanConfig& cfg = {}) {
    if (n_range.empty()) throw ConfigError("cat_size_scan: empty n range");
    std::vector<ScanRow> rows;
    for (int n : n_range) rows.push_back(scan_row(n, env, tm, data, cfg));
    return rows;
}

} // namespace rydcat::dressing
