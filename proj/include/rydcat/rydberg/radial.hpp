#pragma once

// Rydberg states, Numerov radial wavefunctions and dipole matrix elements.
// Atomic units throughout: lengths in a0, energies in hartree, dipoles in e a0.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include "../core/constants.hpp"
#include "../core/error.hpp"
#include "angular.hpp"
#include "atomic_data.hpp"

namespace rydcat::rydberg {

struct RydbergState {
    int n = 0;
    int l = 0;
    double j = 0.5;
    double m_j = 0.5;
    double n_star = 0;
    double energy = 0;  ///< rad/s, negative binding energy

    static RydbergState make(const AtomicData& data, int n, int l, double j, double m_j) {
        if (l < 0 || n <= l) throw ConfigError("RydbergState: requires 0 <= l < n");
        if (std::abs(std::abs(j - l) - 0.5) > 1e-9 || j < 0) throw ConfigError("RydbergState: j must be l +/- 1/2");
        if (std::abs(m_j) > j + 1e-9) throw ConfigError("RydbergState: |m_j| > j");
        if (std::abs(std::fmod(std::abs(m_j - j), 1.0)) > 1e-9) throw ConfigError("RydbergState: m_j - j must be integer");
        return {n, l, j, m_j, data.n_star(n, l, j), data.energy_rad_s(n, l, j)};
    }

    /// Energy in hartree from the Rydberg formula at n*.
    double energy_au() const { return -0.5 / (n_star * n_star); }

    std::string label() const {
        static const char* names = "SPDFGHIK";
        std::string s = std::to_string(n);
        s += l < 8 ? std::string(1, names[l]) : "[l=" + std::to_string(l) + "]";
        s += std::to_string(static_cast<int>(std::lround(2 * j))) + "/2";
        s += " m=" + std::to_string(static_cast<int>(std::lround(2 * m_j))) + "/2";
        return s;
    }

    auto key() const { return std::tuple(n, l, std::lround(2 * j), std::lround(2 * m_j)); }
    bool operator==(const RydbergState& o) const { return key() == o.key(); }
    bool operator<(const RydbergState& o) const { return key() < o.key(); }
};

// ---------------------------------------------------------------------------
// Numerov on the square-root mesh x = sqrt(r), X(x) = r^(3/4) R(r):
//   X'' = [8 x^2 (V - E) + (2l + 1/2)(2l + 3/2) / x^2] X.
// Mesh points sit at x = k h for integer k so that different states share nodes.

inline constexpr double numerov_step = 0.005;

struct RadialWavefunction {
    double h = numerov_step;
    int k_min = 0;               ///< x of values[0] is k_min h
    std::vector<double> values;  ///< X at x = (k_min + i) h
    double norm = 0;             ///< int R^2 r^2 dr after normalization
    int nodes = 0;

    double x(std::size_t i) const { return (k_min + static_cast<double>(i)) * h; }
    double r(std::size_t i) const { return x(i) * x(i); }

    /// R(r) at mesh point i.
    double radial(std::size_t i) const { return values[i] / std::pow(r(i), 0.75); }

    /// Linear interpolation of R(r); zero outside the mesh.
    double radial_at(double rr) const {
        const double xx = std::sqrt(rr) / h - k_min;
        if (xx < 0 || xx >= static_cast<double>(values.size() - 1)) return 0.0;
        const auto i = static_cast<std::size_t>(xx);
        const double f = xx - i;
        return (1 - f) * radial(i) + f * radial(i + 1);
    }
};

struct NumerovOptions {
    double h = numerov_step;
    double outer_scale = 15.0;  ///< r_outer = 2 n (n + outer_scale)
    double r_min = 1e-6;        ///< innermost radius for hydrogenic states
};

inline double core_cutoff(const AtomicData& data) {
    return data.hydrogenic() ? 0.0 : std::cbrt(data.core_polarizability_au);
}

/// Inward integration at E = -1/(2 n*^2), Coulomb potential. For a
/// non-hydrogenic atom the integration stops at the core radius
/// alpha_c^(1/3) or where the solution starts to grow inside the inner
/// turning point, whichever comes first.
inline RadialWavefunction numerov_radial(const RydbergState& s, const AtomicData& data, const NumerovOptions& opt = {}) {
    if (!(s.n_star > s.l)) throw ConfigError("numerov_radial: requires n* > l");
    const double e = s.energy_au();
    const double l = s.l;
    const double r_outer = 2.0 * s.n * (s.n + opt.outer_scale);
    const double r_stop = std::max(opt.r_min, core_cutoff(data));
    const double h = opt.h;
    const int k_out = static_cast<int>(std::ceil(std::sqrt(r_outer) / h));
    const int k_stop = std::max(1, static_cast<int>(std::ceil(std::sqrt(r_stop) / h)));
    const double c = (2 * l + 0.5) * (2 * l + 1.5);
    auto g = [&](int k) {
        const double x = k * h;
        return 8.0 * x * x * (-1.0 / (x * x) - e) + c / (x * x);
    };
    // inner classical turning point of the effective potential
    const double disc = 1.0 + 2.0 * e * l * (l + 1);
    const double r_turn = l > 0 && disc > 0 ? l * (l + 1) / (1.0 + std::sqrt(disc)) : 0.0;

    std::vector<double> y(static_cast<std::size_t>(k_out + 1), 0.0);
    y[k_out] = 1e-10;
    y[k_out - 1] = 1e-10 * (1.0 + 1e-3);
    const double h2 = h * h / 12.0;
    int k_end = k_stop;
    for (int k = k_out - 1; k > k_stop; --k) {
        const double a = 1.0 - h2 * g(k + 1), b = 2.0 * (1.0 + 5.0 * h2 * g(k)), d = 1.0 - h2 * g(k - 1);
        y[k - 1] = (b * y[k] - a * y[k + 1]) / d;
        if (!std::isfinite(y[k - 1])) throw NumericError("numerov_radial: integration diverged for " + s.label());
        // no nodes and no growth inside the inner turning point
        const double rk = (k - 1) * h * (k - 1) * h;
        if (rk < r_turn && (std::abs(y[k - 1]) > std::abs(y[k]) || y[k - 1] * y[k] <= 0.0)) {
            k_end = k;
            y[k - 1] = 0.0;
            break;
        }
    }

    RadialWavefunction wf;
    wf.h = h;
    wf.k_min = k_end;
    wf.values.assign(y.begin() + k_end, y.end());
    // int R^2 r^2 dr = int 2 x^2 X^2 dx
    double norm = 0;
    for (std::size_t i = 0; i < wf.values.size(); ++i) norm += 2.0 * wf.x(i) * wf.x(i) * wf.values[i] * wf.values[i];
    norm *= h;
    if (!(norm > 0)) throw NumericError("numerov_radial: zero norm for " + s.label());
    const double scale = 1.0 / std::sqrt(norm);
    for (double& v : wf.values) v *= scale;
    // sign convention: positive tail at large r
    int last = static_cast<int>(wf.values.size()) - 1;
    while (last > 0 && wf.values[static_cast<std::size_t>(last)] == 0.0) --last;
    double biggest = 0;
    for (std::size_t i = 0; i < wf.values.size(); ++i) biggest = std::max(biggest, std::abs(wf.values[i]));
    for (int i = last; i >= 0; --i)
        if (std::abs(wf.values[static_cast<std::size_t>(i)]) > 1e-6 * biggest) {
            if (wf.values[static_cast<std::size_t>(i)] < 0)
                for (double& v : wf.values) v = -v;
            break;
        }

    wf.norm = 0;
    for (std::size_t i = 0; i < wf.values.size(); ++i) wf.norm += 2.0 * wf.x(i) * wf.x(i) * wf.values[i] * wf.values[i];
    wf.norm *= h;
    // sign changes among non-negligible values
    int sign = 0;
    for (double v : wf.values) {
        if (std::abs(v) < 1e-8 * biggest) continue;
        const int sv = v > 0 ? 1 : -1;
        if (sign != 0 && sv != sign) ++wf.nodes;
        sign = sv;
    }
    return wf;
}

/// int R_a R_b r^(2+power) dr on the shared mesh.
inline double radial_integral(const RadialWavefunction& a, const RadialWavefunction& b, int power = 1) {
    if (a.h != b.h) throw ConfigError("radial_integral: wavefunctions on different meshes");
    const int lo = std::max(a.k_min, b.k_min);
    const int hi = std::min(a.k_min + static_cast<int>(a.values.size()), b.k_min + static_cast<int>(b.values.size()));
    double s = 0;
    for (int k = lo; k < hi; ++k) {
        const double x = k * a.h;
        // R_a R_b r^(2+p) dr = X_a X_b r^(1/2 + p) 2x dx
        s += a.values[static_cast<std::size_t>(k - a.k_min)] * b.values[static_cast<std::size_t>(k - b.k_min)] *
             2.0 * std::pow(x, 2 + 2 * power);
    }
    return s * a.h;
}

/// <r> = int R^2 r^3 dr.
inline double mean_radius(const RadialWavefunction& wf) { return radial_integral(wf, wf, 1); }

// ---------------------------------------------------------------------------
// Dipole matrix elements.

/// <l_b || r || l_a> / R = sqrt(2 l_a + 1) <l_a 0 1 0 | l_b 0>.
inline double orbital_reduced_factor(int la, int lb) {
    return std::sqrt(2.0 * la + 1) * cg_coefficient(la, 0, 1, 0, lb, 0);
}

/// <j_b || r || j_a> / R for fine-structure states (Wigner-Eckart with the CG convention).
inline double fine_reduced_factor(int la, double ja, int lb, double jb) {
    const double six = wigner6j(lb, jb, 0.5, ja, la, 1);
    if (six == 0.0) return 0.0;
    const int phase = static_cast<int>(std::lround(lb + 0.5 + ja + 1));
    return (phase % 2 ? -1.0 : 1.0) * std::sqrt((2 * ja + 1) * (2 * jb + 1)) * six * orbital_reduced_factor(la, lb);
}

/// Angular part of <b| r_q |a> (spherical component q), the radial integral excluded.
inline double dipole_angular(const RydbergState& a, const RydbergState& b, int q) {
    if (std::abs(a.l - b.l) != 1) return 0.0;
    if (std::abs(b.m_j - a.m_j - q) > 1e-9) return 0.0;
    const double cg = cg_coefficient(a.j, a.m_j, 1, q, b.j, b.m_j);
    if (cg == 0.0) return 0.0;
    return cg * fine_reduced_factor(a.l, a.j, b.l, b.j) / std::sqrt(2 * b.j + 1);
}

/// Radial integrals keyed by (n, l, 2j) pairs. Concurrent readers, exclusive insertion.
class RadialCache {
  public:
    explicit RadialCache(AtomicData data, NumerovOptions opt = {}) : data_(std::move(data)), opt_(opt) {}

    const AtomicData& data() const { return data_; }

    std::shared_ptr<const RadialWavefunction> wavefunction(const RydbergState& s) const {
        const auto key = std::tuple(s.n, s.l, std::lround(2 * s.j));
        {
            std::shared_lock lock(mutex_);
            if (auto it = wf_.find(key); it != wf_.end()) return it->second;
        }
        auto wf = std::make_shared<const RadialWavefunction>(numerov_radial(s, data_, opt_));
        std::unique_lock lock(mutex_);
        return wf_.try_emplace(key, std::move(wf)).first->second;
    }

    /// int R_a R_b r^3 dr, in a0.
    double radial_dipole(const RydbergState& a, const RydbergState& b) const {
        auto ka = std::tuple(a.n, a.l, std::lround(2 * a.j));
        auto kb = std::tuple(b.n, b.l, std::lround(2 * b.j));
        if (kb < ka) std::swap(ka, kb);
        const auto key = std::tuple_cat(ka, kb);
        {
            std::shared_lock lock(mutex_);
            if (auto it = dip_.find(key); it != dip_.end()) return it->second;
        }
        const double v = radial_integral(*wavefunction(a), *wavefunction(b), 1);
        std::unique_lock lock(mutex_);
        return dip_.try_emplace(key, v).first->second;
    }

    /// <b| r_q |a> in e a0.
    double dipole(const RydbergState& a, const RydbergState& b, int q) const {
        if (std::abs(a.l - b.l) != 1 || std::abs(b.m_j - a.m_j - q) > 1e-9) return 0.0;
        const auto key = std::pair(a.key(), b.key());
        {
            std::shared_lock lock(mutex_);
            if (auto it = full_.find(key); it != full_.end()) return it->second;
        }
        const double ang = dipole_angular(a, b, q);
        const double v = ang == 0.0 ? 0.0 : ang * radial_dipole(a, b);
        std::unique_lock lock(mutex_);
        return full_.try_emplace(key, v).first->second;
    }

  private:
    using WfKey = std::tuple<int, int, long>;
    AtomicData data_;
    NumerovOptions opt_;
    mutable std::shared_mutex mutex_;
    mutable std::map<WfKey, std::shared_ptr<const RadialWavefunction>> wf_;
    mutable std::map<std::tuple<int, int, long, int, int, long>, double> dip_;
    using StateKey = decltype(RydbergState{}.key());
    mutable std::map<std::pair<StateKey, StateKey>, double> full_;
};

/// z-component <b| r_z |a> in e a0; dipole-forbidden pairs give 0.
inline double dipole_matrix_element(const RydbergState& a, const RydbergState& b, const AtomicData& data) {
    if (std::abs(a.l - b.l) != 1) return 0.0;
    const double ang = dipole_angular(a, b, 0);
    if (ang == 0.0) return 0.0;
    return ang * radial_integral(numerov_radial(a, data), numerov_radial(b, data), 1);
}

} // namespace rydcat::rydberg
