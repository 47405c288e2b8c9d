#pragma once

// Command implementations. Each writes its CSV/JSON files into the output
// directory and returns a JSON summary for the manifest.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "figures.hpp"
#include "rydcat/dressing_scan.hpp"
#include "rydcat/lmg_dynamics.hpp"
#include "rydcat/mechanical_transfer.hpp"
#include "rydcat/qjmc.hpp"
#include "rydcat/rydberg/pairs.hpp"
#include "rydcat/spin_core.hpp"

namespace rydcat::cli {

namespace fs = std::filesystem;

struct Context {
    fs::path out;
    std::uint64_t seed = 1;
    std::vector<std::string> files;

    void write(const std::string& name, const FigureTable& t) {
        auto os = open(name);
        t.write(os);
    }

    std::ofstream open(const std::string& name) {
        std::ofstream os(out / name);
        if (!os) throw ConfigError("cannot write " + (out / name).string());
        files.push_back(name);
        return os;
    }
};

inline void require_positive(const std::string& what, double v) {
    if (!(v > 0)) throw ConfigError(what + " must be positive");
}

// ---------------------------------------------------------------------------

inline json run_evolve(const Params& p, Context& ctx) {
    const int n = p.integer("n_atoms");
    const double lambda = p.number("lambda"), dp = p.number("delta_prime");
    const int points = p.integer("time_points");
    if (points < 2) throw ConfigError("evolve: time_points must be >= 2");
    const spin::DickeSpace s(n);
    const auto lp = lmg::LmgParams::from_dimensionless(n, lambda, dp);
    const auto ct = lmg::cat_time(s, lp);
    const lmg::Propagator prop(lmg::build_hamiltonian(s, lp));
    const auto psi0 = lmg::initial_state(s);

    FigureTable evo(FigureSchema::evolution());
    const double t_end = p.number("t_end_over_tauc") * ct.tau;
    for (int i = 0; i < points; ++i) {
        const double t = t_end * i / (points - 1);
        const auto psi = prop.evolve(psi0, t);
        const auto fi = spin::fisher_information(psi);
        const auto m = spin::moments(psi);
        evo.add({t, t / ct.tau, std::norm(psi.overlap(psi0)), m.jz, fi.per_atom, fi.db});
    }
    ctx.write("evolution.csv", evo);

    // Husimi Q at tau_c on a theta x phi grid
    FigureTable hus(FigureSchema::husimi());
    const int nt = p.integer("husimi_theta_points"), np = p.integer("husimi_phi_points");
    if (nt < 2 || np < 2) throw ConfigError("evolve: husimi grid needs at least 2 points per axis");
    const auto cat = prop.evolve(psi0, ct.tau);
    for (int a = 0; a < nt; ++a)
        for (int b = 0; b < np; ++b) {
            const double th = constants::pi * a / (nt - 1), ph = constants::two_pi * b / (np - 1);
            hus.add({th, ph, spin::husimi_q(cat, spin::SphericalPoint(th, ph))});
        }
    ctx.write("husimi_tauc.csv", hus);

    // mean-field flow from a ring around the initial point
    FigureTable flow(FigureSchema::flow());
    const int fp = p.integer("flow_points");
    if (fp < 2) throw ConfigError("evolve: flow_points must be >= 2");
    for (int k = 0; k < 8; ++k) {
        const double a = constants::two_pi * k / 8;
        const spin::SphericalPoint start(constants::pi / 2 + 0.15 * std::cos(a), 0.15 * std::sin(a));
        // segment by segment; a line ends where it enters the pole guard band
        const double seg = t_end / fp;
        spin::SphericalPoint at = start;
        flow.add({double(k), 0.0, at.theta, at.phi});
        for (int i = 0; i < fp; ++i) {
            try {
                const auto traj = lmg::integrate_flow(at, lambda, dp, seg, seg / 50, 50);
                at = spin::SphericalPoint(traj.back().theta, traj.back().phi);
            } catch (const SingularityError&) {
                break;
            }
            flow.add({double(k), seg * (i + 1), at.theta, at.phi});
        }
    }
    ctx.write("flow.csv", flow);

    const double revival = std::norm(prop.evolve(psi0, 2 * ct.tau).overlap(psi0));
    return {{"tau_c_omega_c", ct.tau},
            {"delta_theta_over_pi", ct.fit.delta_theta / constants::pi},
            {"phi_c_rad", ct.fit.phi_c},
            {"fidelity", ct.fit.fidelity},
            {"fisher_over_n", ct.fisher.per_atom},
            {"fisher_db", ct.fisher.db},
            {"revival_overlap", revival}};
}

inline json run_bifurcation_sweep(const Params& p, Context& ctx) {
    const auto lambdas = p.numbers("lambdas");
    if (lambdas.empty()) throw ConfigError("bifurcation-sweep: empty lambda list");
    const spin::DickeSpace s(p.integer("n_atoms"));
    const auto rows = lmg::sweep_lambda(s, lambdas, p.number("delta_prime"));
    FigureTable t(FigureSchema::fig2());
    json summary = json::array();
    for (const auto& r : rows) {
        t.add({r.lambda, r.delta_theta / constants::pi, r.phi_c, r.fidelity, r.fisher_over_n, r.tau});
        summary.push_back({{"lambda", r.lambda}, {"delta_theta_over_pi", r.delta_theta / constants::pi},
                           {"fidelity", r.fidelity}, {"fisher_over_n", r.fisher_over_n}});
    }
    ctx.write("fig2.csv", t);
    return {{"rows", summary}};
}

inline json run_qjmc(const Params& p, Context& ctx) {
    const int n = p.integer("n_atoms");
    const auto probs = p.numbers("probabilities");
    if (probs.empty()) throw ConfigError("qjmc: empty probability list");
    for (double x : probs)
        if (!(x >= 0 && x < 1)) throw ConfigError("qjmc: probabilities must lie in [0, 1)");
    const std::string channel = p.text("channel");
    if (channel != "de_excitation" && channel != "dephasing" && channel != "both")
        throw ConfigError("qjmc: channel must be de_excitation, dephasing or both");
    const int n_traj = p.integer("trajectories");
    const auto noise = qjmc::parse_noise_model(p.text("noise_model"));

    const spin::DickeSpace s(n);
    const auto lp = lmg::LmgParams::from_dimensionless(n, p.number("lambda"), 0.0);
    const double tau = lmg::cat_time(s, lp).tau;
    const auto psi0 = lmg::initial_state(s);
    const auto grid = qjmc::uniform_grid(p.number("t_end_over_tauc") * tau, p.integer("time_points"));

    FigureTable t(FigureSchema::fig3a());
    json summary = json::array();
    for (std::size_t c = 0; c < probs.size(); ++c) {
        const double pr = probs[c];
        const double pde = channel == "dephasing" ? 0.0 : pr, pdp = channel == "de_excitation" ? 0.0 : pr;
        const auto ch = qjmc::channels_from_probabilities(psi0, pde, pdp, tau, noise);
        const auto st = qjmc::ensemble_fisher(s, lp, ch, n_traj, grid, derive_seed(ctx.seed, c), noise);
        const double k = 10.0 / std::log(10.0);
        for (std::size_t i = 0; i < st.t.size(); ++i)
            t.add({st.t[i] / tau, pr, st.qfi_db(i), k * st.qfi.stderr_[i] / st.qfi.mean[i], st.fisher_db(i), st.mean_jumps[i]});
        const std::size_t last = st.t.size() - 1;
        summary.push_back({{"probability", pr}, {"fisher_db_end", st.qfi_db(last)}, {"mean_jumps_end", st.mean_jumps[last]}});
    }
    ctx.write("fig3a.csv", t);
    return {{"tau_c_omega_c", tau}, {"curves", summary}};
}

inline json run_dressing_optimize(const Params& p, Context& ctx) {
    dressing::DressingBudget b;
    b.w_grid = p.numbers("w_grid");
    b.loss_scale = p.number("loss_scale");
    b.lambda = p.number("lambda");
    b.jz3_scale = p.number("jz3_scale");
    b.n_traj = p.integer("trajectories");
    b.seed = ctx.seed;
    b.noise = qjmc::parse_noise_model(p.text("noise_model"));
    const auto r = dressing::optimal_dressing(p.integer("n_atoms"), b);
    FigureTable t(FigureSchema::dressing());
    for (const auto& pt : r.points) t.add({pt.w, pt.events, pt.qfi, pt.qfi_db});
    ctx.write("dressing.csv", t);
    return {{"w_star", r.w_star}, {"kappa", r.kappa}};
}

inline std::vector<dressing::ThresholdRow> read_thresholds(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open threshold file " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != FigureSchema::thresholds().header_line()) throw DataError("threshold file " + path.string() + " has an unexpected header");
    std::vector<dressing::ThresholdRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        dressing::ThresholdRow r;
        double n = 0;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &n, &r.kappa, &r.qfi0_db, &r.events, &r.p_de, &r.p_dp) != 6)
            throw DataError("malformed threshold row: " + line);
        r.n_atoms = static_cast<int>(n);
        rows.push_back(r);
    }
    return rows;
}

inline json run_catsize_scan(const Params& p, Context& ctx) {
    const int lo = p.integer("n_min"), hi = p.integer("n_max"), step = p.integer("n_step");
    if (step < 1 || hi < lo) throw ConfigError("catsize-scan: need n_min <= n_max and n_step >= 1");
    std::vector<int> ns;
    for (int n = lo; n <= hi; n += step) ns.push_back(n);
    if (ns.back() != hi) ns.push_back(hi);
    const auto envs = p.get<std::vector<std::string>>("environments");
    if (envs.empty()) throw ConfigError("catsize-scan: empty environment list");

    std::vector<dressing::ThresholdRow> rows;
    const std::string file = p.text("threshold_file");
    if (!file.empty()) {
        rows = read_thresholds(file);
    } else {
        dressing::ThresholdOptions opt;
        opt.n_traj = p.integer("threshold_trajectories");
        opt.seed = ctx.seed;
        opt.noise = qjmc::parse_noise_model(p.text("noise_model"));
        const auto sizes = p.integers("threshold_sizes");
        if (sizes.size() < 2) throw ConfigError("catsize-scan: need at least two threshold sizes");
        rows = dressing::threshold_table(sizes, opt);
    }
    FigureTable th(FigureSchema::thresholds());
    for (const auto& r : rows) th.add({double(r.n_atoms), r.kappa, r.qfi0_db, r.events, r.p_de, r.p_dp});
    ctx.write("thresholds.csv", th);

    const dressing::ThresholdModel tm(rows);
    const auto data = rydberg::load_rb87();
    dressing::ScanConfig cfg;
    cfg.w = p.number("w");
    cfg.detuning_fraction = p.number("detuning_fraction");
    cfg.density_m3 = p.number("density_m3");
    cfg.blockade_factor = p.number("blockade_factor");
    cfg.validate();

    FigureTable t(FigureSchema::catsize());
    json summary = json::object();
    for (const auto& name : envs) {
        const auto env = dressing::parse_environment(name);
        const auto scan = dressing::cat_size_scan(ns, env, tm, data, cfg);
        for (const auto& r : scan)
            t.add_raw({std::to_string(r.principal_n), name, std::to_string(r.n_max), FigureTable::num(r.fisher_db),
                       FigureTable::num(r.tau_c), FigureTable::num(r.omega_r / constants::two_pi / 1e6),
                       FigureTable::num(r.detuning / constants::two_pi / 1e6), FigureTable::num(r.gamma),
                       FigureTable::num(r.trap_diameter * 1e6), r.limit});
        summary[name] = {{"principal_n", scan.back().principal_n}, {"n_max", scan.back().n_max}};
    }
    ctx.write("catsize.csv", t);
    return {{"endpoints", summary}, {"threshold_exponent", tm.exponent()}, {"threshold_amplitude", tm.amplitude()}};
}

inline json run_pair_mixing(const Params& p, Context& ctx) {
    using namespace rydberg;
    const auto data = load_rb87();
    const RadialCache cache(data);
    const auto target = RydbergState::make(data, p.integer("principal_n"), 0, 0.5, 0.5);
    PairBasisOptions o;
    o.theta = p.number("theta_deg") * constants::pi / 180.0;
    o.energy_window = constants::two_pi * p.number("energy_window_ghz") * 1e9;
    o.coupling_floor = p.number("coupling_floor");
    o.delta_n = p.integer("delta_n");
    o.l_max = p.integer("l_max");
    auto basis = build_pair_basis(cache, target, o);

    const double omega = constants::two_pi * p.number("omega_r_mhz") * 1e6;
    const double det = constants::two_pi * p.number("detuning_mhz") * 1e6;
    require_positive("pair-mixing: omega_r_mhz", omega);
    const auto mh = build_mixing_hamiltonian(cache, basis, {laser_for(target, target, omega, det)});

    const int np = p.integer("r_points");
    const double r0 = p.number("r_min_um") * 1e-6, r1 = p.number("r_max_um") * 1e-6;
    if (np < 2 || !(r0 > 0) || !(r1 > r0)) throw ConfigError("pair-mixing: need r_points >= 2 and 0 < r_min < r_max");
    std::vector<double> grid(static_cast<std::size_t>(np));
    for (int i = 0; i < np; ++i) grid[static_cast<std::size_t>(i)] = r0 + (r1 - r0) * i / (np - 1);

    const std::string start_name = p.text("initial_state");
    if (start_name != "dressed" && start_name != "bare") throw ConfigError("pair-mixing: initial_state must be dressed or bare");
    const auto start = start_name == "dressed" ? InitialState::dressed : InitialState::bare;

    const double window = constants::two_pi * p.number("spectrum_window_mhz") * 1e6;
    const auto spec = spectrum_vs_separation(mh, grid, 0.0, window);
    FigureTable st(FigureSchema::fig5_spectrum());
    for (const auto& s : spec) st.add({s.r * 1e6, s.energy / constants::two_pi / 1e6, double(s.curve), s.ambiguous ? 1.0 : 0.0});
    ctx.write("fig5_spectrum.csv", st);

    const auto scan = blockade_scan(mh, grid, p.number("t_final_us") * 1e-6, start);
    const auto crossings = avoided_crossings(mh, scan);
    std::vector<bool> at_crossing(scan.size(), false);
    for (auto i : crossings) at_crossing[i] = true;
    FigureTable ft(FigureSchema::fig5_fidelity());
    double min_away = 1.0;
    for (std::size_t i = 0; i < scan.size(); ++i) {
        ft.add({scan[i].r * 1e6, scan[i].fidelity, scan[i].ground_weight, at_crossing[i] ? 1.0 : 0.0});
        if (!at_crossing[i]) min_away = std::min(min_away, scan[i].fidelity);
    }
    ctx.write("fig5_fidelity.csv", ft);

    json cr = json::array();
    for (auto i : crossings) cr.push_back(scan[i].r * 1e6);
    return {{"basis_size", basis.size()}, {"hamiltonian_dim", mh.dim()}, {"crossings_um", cr},
            {"min_fidelity_away_from_crossings", min_away}};
}

inline json report_json(const mechanical::ProtocolReport& r) {
    auto branch = [](const mechanical::BranchState& b) {
        return json{{"atoms", b.atoms}, {"rydberg", b.rydberg}, {"phonons_right", b.phonons[0]}, {"phonons_left", b.phonons[1]}};
    };
    json steps = json::array();
    for (const auto& s : r.steps)
        steps.push_back({{"pass", s.pass}, {"cycle", s.index}, {"stage", s.stage}, {"t_start_s", s.t_start},
                         {"duration_s", s.duration}, {"survival", s.survival}, {"e", branch(s.e)}, {"g", branch(s.g)}});
    return {{"duration_s", r.duration},
            {"success_probability", r.success_probability},
            {"branch_survival", {r.branch_survival[0], r.branch_survival[1]}},
            {"final_e", branch(r.final_e)},
            {"final_g", branch(r.final_g)},
            {"steps", steps}};
}

inline json run_transfer_sim(const Params& p, Context& ctx) {
    using namespace mechanical;
    Cantilever c;
    c.charge = p.number("charge_e") * constants::elementary_charge;
    c.frequency = constants::two_pi * p.number("frequency_mhz") * 1e6;
    c.quality_factor = p.number("quality_factor");
    c.mass_factor = p.number("mass_factor");
    c.validate();

    TransferConfig cfg;
    cfg.n_atoms = p.integer("n_atoms");
    cfg.layout = parse_layout(p.text("layout"));
    cfg.separation = p.number("separation_um") * 1e-6;
    const double mu_l = c.zero_point_dipole();
    const double g_derived = coupling_constant(p.number("mu_at_ea0") * constants::ea0, mu_l, cfg.separation);
    cfg.g = p.flag("derive_g") ? g_derived : constants::two_pi * p.number("g_mhz") * 1e6;
    cfg.rydberg_decay = constants::two_pi * p.number("gamma_r_hz");

    LossRates loss{constants::two_pi * p.number("gamma_m_hz"), constants::two_pi * p.number("gamma_t_hz"), cfg.rydberg_decay};
    const LossRates thermal = loss_rates(c, p.number("temperature_k"), cfg.rydberg_decay);
    if (p.flag("derive_rates")) loss = thermal;

    const auto rep = simulate_protocol(cfg, loss);
    FigureTable t(FigureSchema::transfer());
    for (const auto& [time, ph] : rep.phonon_trajectory) t.add({time * 1e6, ph[0], ph[1]});
    ctx.write("transfer_phonons.csv", t);
    {
        auto os = ctx.open("transfer_report.json");
        os << report_json(rep).dump(2) << '\n';
    }
    const double hz = 1.0 / constants::two_pi;
    return {{"duration_us", rep.duration * 1e6},
            {"success_probability", rep.success_probability},
            {"branch_average_survival", rep.branch_average_survival()},
            {"g_used_mhz", cfg.g * hz / 1e6},
            {"g_derived_mhz", g_derived * hz / 1e6},
            {"mu_l_ea0", mu_l / constants::ea0},
            {"effective_mass_kg", c.effective_mass()},
            {"beam_frequency_mhz", c.beam_frequency() * hz / 1e6},
            {"gamma_m_derived_hz", thermal.damping * hz},
            {"gamma_t_derived_hz", thermal.heating * hz}};
}

inline json run_command(const Params& p, Context& ctx) {
    const auto& c = p.command();
    if (c == "evolve") return run_evolve(p, ctx);
    if (c == "bifurcation-sweep") return run_bifurcation_sweep(p, ctx);
    if (c == "qjmc") return run_qjmc(p, ctx);
    if (c == "dressing-optimize") return run_dressing_optimize(p, ctx);
    if (c == "catsize-scan") return run_catsize_scan(p, ctx);
    if (c == "pair-mixing") return run_pair_mixing(p, ctx);
    if (c == "transfer-sim") return run_transfer_sim(p, ctx);
    throw ConfigError("unknown command '" + c + "'");
}

} // namespace rydcat::cli
