#pragma once

// LMG Hamiltonian H = chi Jz^2 + delta Jz + omega_c Jx, exact propagation, the
// mean-field flow on the sphere, and the search for the bifurcation time.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "core/optimize.hpp"
#include "core/parallel.hpp"
#include "spin_core.hpp"

namespace rydcat::lmg {

using spin::CVec;
using spin::DickeSpace;
using spin::RMat;
using spin::RVec;
using spin::SphericalPoint;
using spin::SpinState;

struct LmgParams {
    double chi = 0.0;
    double delta = 0.0;
    double omega_c = 1.0;
    int n_atoms = 1;

    double lambda() const { return n_atoms * chi / omega_c; }
    double delta_prime() const { return delta / omega_c; }

    /// Parameters from Lambda = N chi / omega_c and delta' = delta / omega_c.
    static LmgParams from_dimensionless(int n_atoms, double lambda, double delta_prime, double omega_c = 1.0) {
        if (n_atoms < 1) throw ConfigError("LmgParams: n_atoms must be >= 1");
        if (!(omega_c > 0.0)) throw ConfigError("LmgParams: omega_c must be positive");
        return {lambda * omega_c / n_atoms, delta_prime * omega_c, omega_c, n_atoms};
    }
};

/// LMG Hamiltonian on a spin-j multiplet of dimension 2j+1 (j2 = 2j), m descending.
inline RMat build_hamiltonian_spin(int j2, const LmgParams& p) {
    if (j2 < 0) throw ConfigError("build_hamiltonian_spin: negative spin");
    const int d = j2 + 1;
    const double j = 0.5 * j2;
    RMat h = RMat::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        const double m = j - k;
        h(k, k) = p.chi * m * m + p.delta * m;
        if (k > 0) h(k - 1, k) = h(k, k - 1) = 0.5 * p.omega_c * std::sqrt(j * (j + 1) - m * (m + 1));
    }
    return h;
}

inline RMat build_hamiltonian(const DickeSpace& space, const LmgParams& p) {
    if (p.n_atoms != space.n_atoms()) throw ConfigError("build_hamiltonian: params and space disagree on N");
    return build_hamiltonian_spin(space.n_atoms(), p);
}

/// Spectral propagator of a real symmetric Hamiltonian.
class Propagator {
  public:
    explicit Propagator(const RMat& h) {
        Eigen::SelfAdjointEigenSolver<RMat> es(h);
        if (es.info() != Eigen::Success) throw NumericError("Propagator: eigendecomposition failed");
        energies_ = es.eigenvalues();
        vectors_ = es.eigenvectors();
    }

    const RVec& energies() const { return energies_; }
    const RMat& vectors() const { return vectors_; }

    /// Coordinates of psi in the eigenbasis.
    CVec to_eigen(const CVec& psi) const { return vectors_.transpose() * psi; }
    CVec from_eigen(const CVec& c) const { return vectors_ * c; }

    CVec evolve_eigen(const CVec& c, double t) const {
        CVec out(c.size());
        for (Eigen::Index i = 0; i < c.size(); ++i) out[i] = c[i] * std::polar(1.0, -energies_[i] * t);
        return out;
    }

    SpinState evolve(const SpinState& psi0, double t) const {
        if (t < 0) throw ConfigError("evolve: negative time");
        return {psi0.space(), from_eigen(evolve_eigen(to_eigen(psi0.amplitudes()), t))};
    }

  private:
    RVec energies_;
    RMat vectors_;
};

inline SpinState evolve(const SpinState& psi0, const RMat& h, double t) { return Propagator(h).evolve(psi0, t); }

inline double expect(const SpinState& psi, const RMat& op) {
    const CVec& v = psi.amplitudes();
    return std::real(v.dot(op * v));
}

// ---------------------------------------------------------------------------
// Mean-field flow, time in units of 1/omega_c.

inline constexpr double pole_guard = 1e-4;

struct FlowRate {
    double dtheta = 0;
    double dphi = 0;
};

inline FlowRate semiclassical_flow(double theta, double phi, double lambda, double delta_prime) {
    const double st = std::sin(theta);
    if (theta <= 0.0 || theta >= constants::pi || st == 0.0)
        throw SingularityError("semiclassical_flow: theta at a pole");
    return {-std::sin(phi), lambda * std::cos(theta) - std::cos(phi) * std::cos(theta) / st + delta_prime};
}

/// Conserved quantity of the flow (classical energy per j, units of omega_c).
inline double classical_energy(double theta, double phi, double lambda, double delta_prime) {
    const double c = std::cos(theta);
    return 0.5 * lambda * c * c + delta_prime * c + std::sin(theta) * std::cos(phi);
}

struct FlowSample {
    double t;
    double theta;
    double phi;
};

/// Fixed-step RK4 integration. Phi is wrapped into [0, 2pi) in the samples.
inline std::vector<FlowSample> integrate_flow(const SphericalPoint& start, double lambda, double delta_prime,
                                              double t_max, double dt = 1e-3, int sample_every = 1) {
    if (!(dt > 0.0) || !(t_max >= 0.0)) throw ConfigError("integrate_flow: dt must be positive, t_max nonnegative");
    if (start.theta < pole_guard || start.theta > constants::pi - pole_guard)
        throw SingularityError("integrate_flow: start inside the pole guard band");
    sample_every = std::max(1, sample_every);
    const long steps = std::lround(std::ceil(t_max / dt - 1e-12));
    std::vector<FlowSample> out;
    out.reserve(static_cast<std::size_t>(steps / sample_every + 2));
    double th = start.theta;
    double ph = start.phi;
    out.push_back({0.0, th, ph});
    auto f = [&](double a, double b) { return semiclassical_flow(a, b, lambda, delta_prime); };
    for (long i = 1; i <= steps; ++i) {
        const double h = std::min(dt, t_max - (i - 1) * dt);
        const FlowRate k1 = f(th, ph);
        const FlowRate k2 = f(th + 0.5 * h * k1.dtheta, ph + 0.5 * h * k1.dphi);
        const FlowRate k3 = f(th + 0.5 * h * k2.dtheta, ph + 0.5 * h * k2.dphi);
        const FlowRate k4 = f(th + h * k3.dtheta, ph + h * k3.dphi);
        th += h / 6.0 * (k1.dtheta + 2 * k2.dtheta + 2 * k3.dtheta + k4.dtheta);
        ph += h / 6.0 * (k1.dphi + 2 * k2.dphi + 2 * k3.dphi + k4.dphi);
        if (th < pole_guard || th > constants::pi - pole_guard)
            throw SingularityError("integrate_flow: trajectory entered the pole guard band");
        if (i % sample_every == 0 || i == steps) out.push_back({std::min(i * dt, t_max), th, SphericalPoint::wrap(ph)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bifurcation time.

struct CatFit {
    double delta_theta = 0;
    double phi_c = 0;
    double fidelity = 0;
};

struct CatSearchOptions {
    double t_max = 12.0;        ///< in units of 1/omega_c
    int time_points = 240;      ///< grid points on (0, t_max]
    int theta_grid = 64;        ///< coarse delta_theta grid on [0, pi]
    int phi_grid = 8;           ///< coarse phi_c grid on [0, 2pi)
    double refine_tol = 1e-6;
};

/// Maximum over (delta_theta, phi_c) of the cat fidelity: coarse grid then
/// golden-section refinement in each coordinate around the best cell.
inline CatFit best_cat_fit(const SpinState& psi, const CatSearchOptions& opt = {}) {
    const double pi = constants::pi;
    CatFit best{0, 0, -1};
    for (int ip = 0; ip < opt.phi_grid; ++ip) {
        const double ph = constants::two_pi * ip / opt.phi_grid;
        for (int it = 0; it <= opt.theta_grid; ++it) {
            const double dth = pi * it / opt.theta_grid;
            const double f = spin::cat_fidelity(psi, dth, ph);
            if (f > best.fidelity) best = {dth, ph, f};
        }
    }
    const double hth = pi / opt.theta_grid;
    const double hph = constants::two_pi / opt.phi_grid;
    auto refine_theta = [&](double ph, double center) {
        return golden_maximize([&](double x) { return spin::cat_fidelity(psi, x, ph); },
                               std::max(0.0, center - hth), std::min(pi, center + hth), opt.refine_tol);
    };
    for (int pass = 0; pass < 2; ++pass) {
        const auto [th, f] = refine_theta(best.phi_c, best.delta_theta);
        if (f > best.fidelity) best = {th, best.phi_c, f};
        const double th_fixed = best.delta_theta;
        const auto [ph, g] = golden_maximize([&](double x) { return spin::cat_fidelity(psi, th_fixed, x); },
                                             best.phi_c - hph, best.phi_c + hph, opt.refine_tol);
        if (g > best.fidelity) best = {th_fixed, SphericalPoint::wrap(ph), g};
    }
    return best;
}

struct CatTime {
    double tau = 0;  ///< same units as 1/omega_c
    CatFit fit;
    spin::FisherInfo fisher;
};

/// Initial state used throughout: the CSS along +x.
inline SpinState initial_state(const DickeSpace& space) {
    return spin::coherent_spin_state(space, SphericalPoint(constants::pi / 2, 0.0));
}

/// Bifurcation time: the earliest interior local maximum of the jointly
/// optimized cat fidelity on the time grid, refined by golden-section search.
inline CatTime cat_time(const DickeSpace& space, const LmgParams& p, const CatSearchOptions& opt = {}) {
    if (p.lambda() < 1.0) throw ConfigError("cat_time: requires lambda >= 1");
    const Propagator prop(build_hamiltonian(space, p));
    const SpinState psi0 = initial_state(space);
    const CVec c0 = prop.to_eigen(psi0.amplitudes());
    const double t_max = opt.t_max / p.omega_c;
    auto state_at = [&](double t) { return SpinState(space, prop.from_eigen(prop.evolve_eigen(c0, t))); };
    auto fid_at = [&](double t) { return best_cat_fit(state_at(t), opt).fidelity; };

    const int n = opt.time_points;
    std::vector<double> f(n + 1);
    for (int i = 0; i <= n; ++i) f[i] = fid_at(t_max * i / n);
    for (int i = 1; i < n; ++i) {
        if (f[i] > f[i - 1] && f[i] >= f[i + 1]) {
            const double h = t_max / n;
            const auto [t, fv] = golden_maximize(fid_at, (i - 1) * h, (i + 1) * h, 1e-6 / p.omega_c);
            CatTime out;
            out.tau = fv >= f[i] ? t : i * h;
            const SpinState psi = state_at(out.tau);
            out.fit = best_cat_fit(psi, opt);
            out.fisher = spin::fisher_information(psi);
            return out;
        }
    }
    throw NumericError("cat_time: no local fidelity maximum inside the search window");
}

struct SweepRow {
    double lambda = 0;
    double tau = 0;
    double delta_theta = 0;
    double phi_c = 0;
    double fidelity = 0;
    double fisher_over_n = 0;
};

inline std::vector<SweepRow> sweep_lambda(const DickeSpace& space, const std::vector<double>& lambdas,
                                          double delta_prime, const CatSearchOptions& opt = {}) {
    if (lambdas.empty()) throw ConfigError("sweep_lambda: empty lambda list");
    return parallel_map(lambdas.size(), [&](std::size_t i) {
        const auto p = LmgParams::from_dimensionless(space.n_atoms(), lambdas[i], delta_prime);
        const CatTime ct = cat_time(space, p, opt);
        return SweepRow{lambdas[i], ct.tau, ct.fit.delta_theta, ct.fit.phi_c, ct.fit.fidelity, ct.fisher.per_atom};
    });
}

} // namespace rydcat::lmg
