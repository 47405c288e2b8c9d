#pragma once

// Collective spin algebra on the symmetric (Dicke) manifold of N two-level atoms.
//
// Basis ordering: index k = 0..N holds |j, m = j - k>, i.e. m descending.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "core/constants.hpp"
#include "core/error.hpp"

namespace rydcat::spin {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

class DickeSpace {
  public:
    explicit DickeSpace(int n_atoms) : n_(n_atoms) {
        if (n_atoms < 1) throw ConfigError("DickeSpace: n_atoms must be >= 1");
    }

    int n_atoms() const { return n_; }
    double j() const { return 0.5 * n_; }
    int dim() const { return n_ + 1; }

    /// Magnetic quantum number of basis index k.
    double m(int k) const { return j() - k; }

    /// Diagonal of Jz.
    RVec m_values() const {
        RVec out(dim());
        for (int k = 0; k < dim(); ++k) out[k] = m(k);
        return out;
    }

    /// Ladder coefficients: ladder()[k-1] = <m_k + 1| J+ |m_k> for k = 1..N.
    RVec ladder() const {
        RVec out(n_);
        const double jj = j() * (j() + 1.0);
        for (int k = 1; k <= n_; ++k) {
            const double mk = m(k);
            out[k - 1] = std::sqrt(std::max(0.0, jj - mk * (mk + 1.0)));
        }
        return out;
    }

    bool operator==(const DickeSpace&) const = default;

  private:
    int n_;
};

/// Point on the Bloch sphere. phi is wrapped into [0, 2pi).
struct SphericalPoint {
    double theta = 0.0;
    double phi = 0.0;

    SphericalPoint() = default;
    SphericalPoint(double th, double ph) : theta(th), phi(wrap(ph)) {
        if (!(th >= 0.0 && th <= constants::pi)) throw ConfigError("SphericalPoint: theta outside [0, pi]");
    }

    static double wrap(double ph) {
        double w = std::fmod(ph, constants::two_pi);
        if (w < 0) w += constants::two_pi;
        if (w >= constants::two_pi) w = 0.0;
        return w;
    }
};

/// Normalized state vector over the Dicke basis.
class SpinState {
  public:
    SpinState(DickeSpace space, CVec amplitudes) : space_(space), amps_(std::move(amplitudes)) {
        if (amps_.size() != space_.dim()) throw ConfigError("SpinState: amplitude count does not match dim");
        const double nrm = amps_.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm)) throw NumericError("SpinState: zero or non-finite norm");
        amps_ /= nrm;
    }

    /// Dicke state |j, m_k>.
    static SpinState dicke(DickeSpace space, int k) {
        if (k < 0 || k >= space.dim()) throw ConfigError("SpinState::dicke: index out of range");
        CVec v = CVec::Zero(space.dim());
        v[k] = 1.0;
        return {space, v};
    }

    const DickeSpace& space() const { return space_; }
    const CVec& amplitudes() const { return amps_; }
    int dim() const { return space_.dim(); }

    cplx overlap(const SpinState& other) const { return amps_.dot(other.amps_); }

  private:
    DickeSpace space_;
    CVec amps_;
};

struct SpinOperators {
    RMat jz;
    RMat jx;
    CMat jy;
    RMat jplus;
};

inline SpinOperators build_operators(const DickeSpace& space) {
    const int d = space.dim();
    const RVec lad = space.ladder();
    SpinOperators ops;
    ops.jz = space.m_values().asDiagonal();
    ops.jplus = RMat::Zero(d, d);
    for (int k = 1; k < d; ++k) ops.jplus(k - 1, k) = lad[k - 1];
    const RMat jminus = ops.jplus.transpose();
    ops.jx = 0.5 * (ops.jplus + jminus);
    ops.jy = (ops.jplus - jminus).cast<cplx>() / cplx(0.0, 2.0);
    return ops;
}

// Matrix-free application of the tridiagonal operators.

inline CVec apply_jz(const DickeSpace& s, const CVec& v) { return s.m_values().cwiseProduct(v); }

inline CVec apply_jplus(const DickeSpace& s, const CVec& v) {
    const RVec lad = s.ladder();
    CVec out = CVec::Zero(v.size());
    for (int k = 1; k < s.dim(); ++k) out[k - 1] = lad[k - 1] * v[k];
    return out;
}

inline CVec apply_jminus(const DickeSpace& s, const CVec& v) {
    const RVec lad = s.ladder();
    CVec out = CVec::Zero(v.size());
    for (int k = 1; k < s.dim(); ++k) out[k] = lad[k - 1] * v[k - 1];
    return out;
}

inline CVec apply_jx(const DickeSpace& s, const CVec& v) { return 0.5 * (apply_jplus(s, v) + apply_jminus(s, v)); }

inline CVec apply_jy(const DickeSpace& s, const CVec& v) {
    return (apply_jplus(s, v) - apply_jminus(s, v)) / cplx(0.0, 2.0);
}

struct Moments {
    double jx = 0, jy = 0, jz = 0, jz2 = 0;
};

inline Moments moments(const SpinState& psi) {
    const auto& s = psi.space();
    const CVec& v = psi.amplitudes();
    const RVec m = s.m_values();
    const RVec lad = s.ladder();
    Moments out;
    cplx jp = 0.0;
    for (int k = 0; k < s.dim(); ++k) {
        const double p = std::norm(v[k]);
        out.jz += m[k] * p;
        out.jz2 += m[k] * m[k] * p;
        if (k > 0) jp += std::conj(v[k - 1]) * lad[k - 1] * v[k];
    }
    out.jx = jp.real();
    out.jy = jp.imag();
    return out;
}

/// Coherent spin state with <J> = j (sin th cos ph, sin th sin ph, cos th).
///
/// c_k = sqrt(C(N,k)) cos(th/2)^(N-k) sin(th/2)^k e^{i k ph}, evaluated in log
/// space so that large N does not underflow.
inline SpinState coherent_spin_state(const DickeSpace& space, const SphericalPoint& p) {
    const int n = space.n_atoms();
    const double c = std::cos(0.5 * p.theta);
    const double s = std::sin(0.5 * p.theta);
    const double lc = c > 0 ? std::log(c) : -INFINITY;
    const double ls = s > 0 ? std::log(s) : -INFINITY;
    const double lgn = std::lgamma(n + 1.0);
    CVec v(space.dim());
    for (int k = 0; k <= n; ++k) {
        double lg = 0.5 * (lgn - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
        if (n - k > 0) lg += (n - k) * lc;
        if (k > 0) lg += k * ls;
        const double mag = std::exp(lg);
        v[k] = mag * std::polar(1.0, k * p.phi);
    }
    return {space, v};
}

/// <css(a)|css(b)> in closed form.
inline cplx css_overlap(int n, const SphericalPoint& a, const SphericalPoint& b) {
    const cplx inner = std::cos(0.5 * a.theta) * std::cos(0.5 * b.theta) +
                       std::sin(0.5 * a.theta) * std::sin(0.5 * b.theta) * std::polar(1.0, b.phi - a.phi);
    return std::pow(inner, n);
}

inline std::pair<SphericalPoint, SphericalPoint> cat_branches(double delta_theta, double phi_c) {
    return {SphericalPoint(0.5 * (constants::pi - delta_theta), phi_c),
            SphericalPoint(0.5 * (constants::pi + delta_theta), phi_c)};
}

/// Equal superposition of the two branch CSS, normalized exactly.
inline SpinState cat_state(const DickeSpace& space, double delta_theta, double phi_c) {
    if (!(delta_theta >= 0.0 && delta_theta <= constants::pi)) throw ConfigError("cat_state: delta_theta outside [0, pi]");
    const auto [a, b] = cat_branches(delta_theta, phi_c);
    return {space, coherent_spin_state(space, a).amplitudes() + coherent_spin_state(space, b).amplitudes()};
}

/// Overlap of psi with the cat of (delta_theta, phi_c), squared.
inline double cat_fidelity(const SpinState& psi, double delta_theta, double phi_c) {
    const auto [a, b] = cat_branches(delta_theta, phi_c);
    const auto& s = psi.space();
    const cplx o = coherent_spin_state(s, a).overlap(psi) + coherent_spin_state(s, b).overlap(psi);
    const double norm2 = 2.0 + 2.0 * std::real(css_overlap(s.n_atoms(), a, b));
    return std::clamp(std::norm(o) / norm2, 0.0, 1.0);
}

/// Husimi function normalized so that its sphere integral is one.
inline double husimi_q(const SpinState& psi, const SphericalPoint& p) {
    const auto& s = psi.space();
    return (s.dim() / (4.0 * constants::pi)) * std::norm(coherent_spin_state(s, p).overlap(psi));
}

inline std::vector<double> husimi_q(const SpinState& psi, const std::vector<SphericalPoint>& grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (const auto& p : grid) out.push_back(husimi_q(psi, p));
    return out;
}

struct FisherInfo {
    double variance = 0;  ///< Var(Jz)
    double fisher = 0;    ///< 4 Var(Jz)
    double per_atom = 0;  ///< F / N
    double db = 0;        ///< 10 log10(F / N)
};

inline FisherInfo fisher_from_moments(double jz, double jz2, int n_atoms) {
    FisherInfo f;
    f.variance = std::max(0.0, jz2 - jz * jz);
    f.fisher = 4.0 * f.variance;
    f.per_atom = f.fisher / n_atoms;
    f.db = 10.0 * std::log10(f.per_atom);
    return f;
}

inline FisherInfo fisher_information(const SpinState& psi) {
    const Moments mo = moments(psi);
    return fisher_from_moments(mo.jz, mo.jz2, psi.space().n_atoms());
}

/// Heisenberg bound 10 log10(N) in dB.
inline double heisenberg_db(int n_atoms) { return 10.0 * std::log10(static_cast<double>(n_atoms)); }

} // namespace rydcat::spin
