#pragma once

// Two-atom level mixing: dipole-dipole pair couplings, pair-basis closure,
// the dressing Hamiltonian H_s + H_d + H_c, spectra versus separation and the
// blockade fidelity.
//
// Pair states are exchange-symmetrized, |ab+> = (|ab> + |ba>) / sqrt(2 (1 + delta_ab)),
// and stored canonically with a <= b. Energies are angular frequencies in the
// frame rotating at the dressing laser; the ground pair |ee> sits at zero.
// The dipole-dipole term is used down to short range, where it is only a toy model.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "../core/constants.hpp"
#include "../core/error.hpp"
#include "../core/parallel.hpp"
#include "radial.hpp"

namespace rydcat::rydberg {

using RMatD = Eigen::MatrixXd;
using RVecD = Eigen::VectorXd;
using SparseD = Eigen::SparseMatrix<double>;
using CVecD = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Dipole-dipole angular weights.
//
// V = [d1.d2 - 3 (d1.n)(d2.n)] / R^3 with n = (sin theta, 0, cos theta) is
// rewritten as sum_{q q'} W_{q q'}(theta) d1_q d2_q' / R^3 in spherical
// components d_{+-1} = -+(d_x +- i d_y)/sqrt(2), d_0 = d_z. Index q + 1.

inline std::array<std::array<double, 3>, 3> dd_weights(double theta) {
    using C = std::complex<double>;
    const double s = 1.0 / std::sqrt(2.0);
    // Cartesian component a in terms of spherical q: d_a = sum_q U[a][q] d_q
    const C u[3][3] = {{C(s, 0), C(0, 0), C(-s, 0)}, {C(0, s), C(0, 0), C(0, s)}, {C(0, 0), C(1, 0), C(0, 0)}};
    const double n[3] = {std::sin(theta), 0.0, std::cos(theta)};
    std::array<std::array<double, 3>, 3> w{};
    for (int q = 0; q < 3; ++q)
        for (int p = 0; p < 3; ++p) {
            C acc = 0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) acc += ((a == b ? 1.0 : 0.0) - 3.0 * n[a] * n[b]) * u[a][q] * u[b][p];
            w[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)] = acc.real();
        }
    return w;
}

struct PairState {
    RydbergState a;
    RydbergState b;

    double m_total() const { return a.m_j + b.m_j; }
    double pair_energy() const { return a.energy + b.energy; }
    bool symmetric_pair() const { return a == b; }

    static PairState canonical(const RydbergState& x, const RydbergState& y) { return y < x ? PairState{y, x} : PairState{x, y}; }
    auto key() const { return std::pair(a.key(), b.key()); }
};

/// <c d| V R^3 |a b> for distinguishable atoms (atom 1: a -> c, atom 2: b -> d), in E_h a0^3.
inline double c3_ordered(const RadialCache& cache, const RydbergState& a, const RydbergState& b, const RydbergState& c,
                         const RydbergState& d, const std::array<std::array<double, 3>, 3>& w) {
    if (std::abs(a.l - c.l) != 1 || std::abs(b.l - d.l) != 1) return 0.0;
    const long q1 = std::lround(c.m_j - a.m_j), q2 = std::lround(d.m_j - b.m_j);
    if (std::abs(q1) > 1 || std::abs(q2) > 1) return 0.0;
    const double wq = w[static_cast<std::size_t>(q1 + 1)][static_cast<std::size_t>(q2 + 1)];
    if (wq == 0.0) return 0.0;
    return wq * cache.dipole(a, c, static_cast<int>(q1)) * cache.dipole(b, d, static_cast<int>(q2));
}

/// C3 between exchange-symmetrized pair states, in E_h a0^3.
inline double c3_coefficient(const RadialCache& cache, const PairState& in, const PairState& out, double theta) {
    const auto w = dd_weights(theta);
    const double direct = c3_ordered(cache, in.a, in.b, out.a, out.b, w);
    const double exchange = c3_ordered(cache, in.b, in.a, out.a, out.b, w);
    const double norm = std::sqrt(2.0 * (1 + in.symmetric_pair()) * 2.0 * (1 + out.symmetric_pair()));
    return 2.0 * (direct + exchange) / norm;
}

/// Converts a C3 in atomic units to rad/s m^3.
inline double c3_si(double c3_au) { return c3_au * constants::c3_atomic_unit; }

// ---------------------------------------------------------------------------
// Pair basis.

struct PairBasisOptions {
    double energy_window = constants::two_pi * 150e9; ///< |E_pair - E_seed| cap, rad/s
    double coupling_floor = 0.1;   ///< admit when |C3| / R_ref^3 >= floor |energy defect to the parent|
    double theta = 0.0;            ///< angle between the pair axis and the quantization axis
    double r_ref = 1e-6;           ///< m
    int delta_n = 4;               ///< |n - n_target| cutoff
    int l_max = 3;
    std::size_t max_size = 20000;  ///< abort beyond this many pairs
};

struct PairBasis {
    RydbergState target;
    std::vector<PairState> pairs;  ///< pairs[0] is the seed |target, target>
    PairBasisOptions options;

    std::size_t size() const { return pairs.size(); }

    std::optional<std::size_t> find(const PairState& p) const {
        const auto k = PairState::canonical(p.a, p.b).key();
        for (std::size_t i = 0; i < pairs.size(); ++i)
            if (pairs[i].key() == k) return i;
        return std::nullopt;
    }
};

/// Single-atom states dipole-coupled to s inside the n and l cutoffs.
inline std::vector<RydbergState> dipole_neighbours(const RydbergState& s, const AtomicData& data, int n_center,
                                                   int delta_n, int l_max) {
    std::vector<RydbergState> out;
    for (int dl : {-1, 1}) {
        const int l = s.l + dl;
        if (l < 0 || l > l_max) continue;
        for (double j : {l - 0.5, l + 0.5}) {
            if (j < 0 || std::abs(j - s.j) > 1.0 + 1e-9) continue;
            for (int q = -1; q <= 1; ++q) {
                const double m = s.m_j + q;
                if (std::abs(m) > j + 1e-9) continue;
                for (int n = std::max(l + 1, n_center - delta_n); n <= n_center + delta_n; ++n)
                    out.push_back(RydbergState::make(data, n, l, j, m));
            }
        }
    }
    return out;
}

/// Breadth-first closure from |target, target> under the dipole-dipole coupling.
inline PairBasis build_pair_basis(const RadialCache& cache, const RydbergState& target, const PairBasisOptions& opt) {
    if (!(opt.energy_window > 0) || !(opt.coupling_floor > 0) || !(opt.r_ref > 0))
        throw ConfigError("build_pair_basis: window, floor and r_ref must be positive");
    const auto& data = cache.data();
    const auto w = dd_weights(opt.theta);
    const double r3 = std::pow(opt.r_ref / constants::bohr_radius, 3);
    PairBasis basis{target, {PairState{target, target}}, opt};
    const double e_seed = basis.pairs[0].pair_energy();
    std::map<decltype(basis.pairs[0].key()), std::size_t> index{{basis.pairs[0].key(), 0}};
    std::map<decltype(target.key()), std::vector<RydbergState>> neighbour_cache;
    auto neighbours = [&](const RydbergState& s) -> const std::vector<RydbergState>& {
        auto it = neighbour_cache.find(s.key());
        if (it == neighbour_cache.end())
            it = neighbour_cache.emplace(s.key(), dipole_neighbours(s, data, target.n, opt.delta_n, opt.l_max)).first;
        return it->second;
    };

    std::deque<std::size_t> queue{0};
    while (!queue.empty()) {
        const PairState p = basis.pairs[queue.front()];
        queue.pop_front();
        const double e_p = p.pair_energy();
        for (const auto& c : neighbours(p.a)) {
            for (const auto& d : neighbours(p.b)) {
                const PairState cand = PairState::canonical(c, d);
                const double e = cand.pair_energy();
                if (std::abs(e - e_seed) > opt.energy_window) continue;
                if (index.count(cand.key())) continue;
                const double v = std::abs(c3_ordered(cache, p.a, p.b, c, d, w) + c3_ordered(cache, p.b, p.a, c, d, w));
                if (v == 0.0) continue;
                const double coupling = v * constants::hartree_rad_s / r3;
                if (coupling < opt.coupling_floor * std::abs(e - e_p)) continue;
                index.emplace(cand.key(), basis.pairs.size());
                queue.push_back(basis.pairs.size());
                basis.pairs.push_back(cand);
                if (basis.pairs.size() > opt.max_size)
                    throw NumericError("build_pair_basis: more than " + std::to_string(opt.max_size) +
                                       " pairs; raise coupling_floor or shrink energy_window");
            }
        }
    }
    return basis;
}

// ---------------------------------------------------------------------------
// Dressing Hamiltonian.

struct LaserCoupling {
    RydbergState level;
    double omega = 0;     ///< single-atom Rabi frequency, rad/s
    double detuning = 0;  ///< level energy minus laser frequency, rad/s
};

/// Index layout: 0 = |ee>, 1..k = |r^i e+> for the k laser levels, then the pair basis.
struct MixingHamiltonian {
    SparseD h0;         ///< H_s + H_d, rad/s
    SparseD hc;         ///< H_c R^3, rad/s m^3
    std::size_t n_singles = 0;
    std::size_t n_pairs = 0;
    double theta = 0;

    std::size_t dim() const { return 1 + n_singles + n_pairs; }
    std::size_t pair_offset() const { return 1 + n_singles; }

    RMatD dense(double r) const {
        if (!(r > 0)) throw ConfigError("MixingHamiltonian: separation must be positive");
        return RMatD(h0) + RMatD(hc) / (r * r * r);
    }

    /// H_s alone: the perfectly blockaded model on |ee> and the singles.
    RMatD ideal() const { return RMatD(h0).topLeftCorner(1 + n_singles, 1 + n_singles); }
};

/// Laser frequency omega_L = E_target - detuning; every other level i has
/// detuning E_i - omega_L.
inline LaserCoupling laser_for(const RydbergState& level, const RydbergState& target, double omega, double detuning) {
    return {level, omega, level.energy - (target.energy - detuning)};
}

inline MixingHamiltonian build_mixing_hamiltonian(const RadialCache& cache, PairBasis& basis,
                                                  const std::vector<LaserCoupling>& lasers) {
    if (lasers.empty()) throw ConfigError("build_mixing_hamiltonian: no laser couplings");
    const double omega_l = lasers[0].level.energy - lasers[0].detuning;
    for (const auto& l : lasers) {
        if (!(l.omega >= 0)) throw ConfigError("build_mixing_hamiltonian: negative Rabi frequency");
        if (std::abs(l.level.energy - l.detuning - omega_l) > 1e-6 * std::abs(omega_l))
            throw ConfigError("build_mixing_hamiltonian: laser detunings disagree on the laser frequency");
    }
    // doubly excited laser levels must be present in the pair basis
    for (std::size_t i = 0; i < lasers.size(); ++i)
        for (std::size_t j = i; j < lasers.size(); ++j) {
            const auto p = PairState::canonical(lasers[i].level, lasers[j].level);
            if (!basis.find(p)) basis.pairs.push_back(p);
        }

    MixingHamiltonian mh;
    mh.theta = basis.options.theta;
    mh.n_singles = lasers.size();
    mh.n_pairs = basis.size();
    const auto dim = static_cast<Eigen::Index>(mh.dim());
    const auto off = static_cast<Eigen::Index>(mh.pair_offset());
    std::vector<Eigen::Triplet<double>> t0, tc;

    // H_s: |ee> <-> |r^i e+> with sqrt(2) Omega_i / 2
    for (std::size_t i = 0; i < lasers.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(1 + i);
        t0.emplace_back(k, k, lasers[i].detuning);
        const double c = std::sqrt(2.0) * 0.5 * lasers[i].omega;
        t0.emplace_back(0, k, c);
        t0.emplace_back(k, 0, c);
    }
    // H_d: pair energies and |r^i e+> <-> |r^i r^j+> with sqrt(1 + delta_ij) Omega_j / 2
    for (std::size_t p = 0; p < basis.size(); ++p) {
        const auto k = off + static_cast<Eigen::Index>(p);
        t0.emplace_back(k, k, basis.pairs[p].pair_energy() - 2.0 * omega_l);
    }
    for (std::size_t i = 0; i < lasers.size(); ++i)
        for (std::size_t j = 0; j < lasers.size(); ++j) {
            const auto p = *basis.find(PairState::canonical(lasers[i].level, lasers[j].level));
            const double c = std::sqrt(1.0 + (i == j)) * 0.5 * lasers[j].omega;
            const auto k = off + static_cast<Eigen::Index>(p);
            t0.emplace_back(static_cast<Eigen::Index>(1 + i), k, c);
            t0.emplace_back(k, static_cast<Eigen::Index>(1 + i), c);
        }
    // H_c: C3 couplings among pairs (the diagonal carries resonant exchange)
    const auto w = dd_weights(basis.options.theta);
    const auto rows = parallel_map(basis.size(), [&](std::size_t p) {
        std::vector<std::pair<std::size_t, double>> row;
        const auto& in = basis.pairs[p];
        for (std::size_t q = p; q < basis.size(); ++q) {
            const auto& out = basis.pairs[q];
            if (std::abs(in.m_total() - out.m_total()) > 2.5) continue;
            const double direct = c3_ordered(cache, in.a, in.b, out.a, out.b, w);
            const double exchange = c3_ordered(cache, in.b, in.a, out.a, out.b, w);
            if (direct == 0.0 && exchange == 0.0) continue;
            const double norm = std::sqrt(2.0 * (1 + in.symmetric_pair()) * 2.0 * (1 + out.symmetric_pair()));
            row.emplace_back(q, c3_si(2.0 * (direct + exchange) / norm));
        }
        return row;
    });
    for (std::size_t p = 0; p < rows.size(); ++p)
        for (const auto& [q, v] : rows[p]) {
            const auto a = off + static_cast<Eigen::Index>(p), b = off + static_cast<Eigen::Index>(q);
            tc.emplace_back(a, b, v);
            if (a != b) tc.emplace_back(b, a, v);
        }

    mh.h0.resize(dim, dim);
    mh.h0.setFromTriplets(t0.begin(), t0.end());
    mh.hc.resize(dim, dim);
    mh.hc.setFromTriplets(tc.begin(), tc.end());
    return mh;
}

// ---------------------------------------------------------------------------
// Spectra and blockade fidelity.

struct SpectrumPoint {
    double r = 0;          ///< m
    double energy = 0;     ///< rad/s
    int curve = 0;
    bool ambiguous = false;  ///< tracking overlap below threshold
};

/// Eigenvalues within +-window of `center`, continued across the R grid by
/// maximal eigenvector overlap. Curves entering the window get new ids.
inline std::vector<SpectrumPoint> spectrum_vs_separation(const MixingHamiltonian& mh, const std::vector<double>& r_grid,
                                                         double center, double window, double min_overlap = 0.5) {
    if (r_grid.empty()) throw ConfigError("spectrum_vs_separation: empty R grid");
    if (!std::is_sorted(r_grid.begin(), r_grid.end())) throw ConfigError("spectrum_vs_separation: R grid must be sorted");
    struct Solved {
        RVecD values;
        RMatD vectors;
    };
    const auto solved = parallel_map(r_grid.size(), [&](std::size_t i) {
        Eigen::SelfAdjointEigenSolver<RMatD> es(mh.dense(r_grid[i]));
        if (es.info() != Eigen::Success) throw NumericError("spectrum_vs_separation: eigensolver failed");
        std::vector<Eigen::Index> keep;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
            if (std::abs(es.eigenvalues()[k] - center) <= window) keep.push_back(k);
        Solved s{RVecD(static_cast<Eigen::Index>(keep.size())), RMatD(es.eigenvectors().rows(), static_cast<Eigen::Index>(keep.size()))};
        for (std::size_t c = 0; c < keep.size(); ++c) {
            s.values[static_cast<Eigen::Index>(c)] = es.eigenvalues()[keep[c]];
            s.vectors.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]);
        }
        return s;
    });

    std::vector<SpectrumPoint> out;
    std::vector<int> ids;
    int next_id = 0;
    for (std::size_t i = 0; i < solved.size(); ++i) {
        const auto& s = solved[i];
        std::vector<int> now(static_cast<std::size_t>(s.values.size()), -1);
        std::vector<bool> flag(now.size(), false);
        if (i > 0 && s.values.size() > 0 && solved[i - 1].values.size() > 0) {
            const RMatD ov = (solved[i - 1].vectors.transpose() * s.vectors).cwiseAbs();
            std::vector<bool> used(static_cast<std::size_t>(ov.rows()), false);
            for (Eigen::Index c = 0; c < ov.cols(); ++c) {
                Eigen::Index best;
                const double o = ov.col(c).maxCoeff(&best);
                if (o >= min_overlap && !used[static_cast<std::size_t>(best)]) {
                    now[static_cast<std::size_t>(c)] = ids[static_cast<std::size_t>(best)];
                    used[static_cast<std::size_t>(best)] = true;
                } else if (o > 0.1) {
                    flag[static_cast<std::size_t>(c)] = true;
                }
            }
        }
        for (std::size_t c = 0; c < now.size(); ++c) {
            if (now[c] < 0) now[c] = next_id++;
            out.push_back({r_grid[i], s.values[static_cast<Eigen::Index>(c)], now[c], flag[c]});
        }
        ids = std::move(now);
    }
    return out;
}

/// Initial state of the blockade comparison: the |ee>-like eigenstate of H_s
/// (dressing switched on adiabatically) or the bare |ee>.
enum class InitialState { dressed, bare };

struct BlockadePoint {
    double r = 0;              ///< m
    double fidelity = 1;
    double ground_weight = 1;  ///< largest |<ee|v>|^2 over eigenvectors of the full Hamiltonian
};

namespace detail {

inline CVecD initial_blockade_state(const MixingHamiltonian& mh, InitialState start) {
    CVecD psi0 = CVecD::Zero(static_cast<Eigen::Index>(mh.dim()));
    if (start == InitialState::bare) {
        psi0[0] = 1.0;
        return psi0;
    }
    Eigen::SelfAdjointEigenSolver<RMatD> es(mh.ideal());
    Eigen::Index k;
    es.eigenvectors().row(0).cwiseAbs().maxCoeff(&k);
    psi0.head(es.eigenvectors().rows()) = es.eigenvectors().col(k).cast<std::complex<double>>();
    return psi0;
}

inline CVecD evolve_spectral(const Eigen::SelfAdjointEigenSolver<RMatD>& es, const CVecD& psi0, double t) {
    CVecD c = es.eigenvectors().transpose().cast<std::complex<double>>() * psi0;
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::polar(1.0, -es.eigenvalues()[k] * t);
    return es.eigenvectors().cast<std::complex<double>>() * c;
}

} // namespace detail

/// Fidelity and |ee> character at one separation from a single eigendecomposition.
inline BlockadePoint blockade_point(const MixingHamiltonian& mh, double r, double t_final,
                                    InitialState start = InitialState::dressed) {
    if (t_final < 0) throw ConfigError("blockade_fidelity: negative time");
    Eigen::SelfAdjointEigenSolver<RMatD> es(mh.dense(r));
    if (es.info() != Eigen::Success) throw NumericError("blockade_fidelity: eigensolver failed");
    BlockadePoint out;
    out.r = r;
    out.ground_weight = es.eigenvectors().row(0).cwiseAbs2().maxCoeff();
    if (t_final == 0) return out;
    const CVecD psi0 = detail::initial_blockade_state(mh, start);
    Eigen::SelfAdjointEigenSolver<RMatD> ideal(mh.ideal());
    const CVecD full = detail::evolve_spectral(es, psi0, t_final);
    const CVecD id = detail::evolve_spectral(ideal, psi0.head(ideal.eigenvalues().size()), t_final);
    out.fidelity = std::min(1.0, std::norm(id.dot(full.head(id.size()))));
    return out;
}

/// |<psi_ideal(t)|psi_full(t)>|^2, psi_ideal evolved under H_s alone.
inline double blockade_fidelity(const MixingHamiltonian& mh, double r, double t_final,
                                InitialState start = InitialState::dressed) {
    return blockade_point(mh, r, t_final, start).fidelity;
}

inline std::vector<BlockadePoint> blockade_scan(const MixingHamiltonian& mh, const std::vector<double>& r_grid,
                                                double t_final, InitialState start = InitialState::dressed) {
    if (r_grid.empty()) throw ConfigError("blockade_scan: empty R grid");
    return parallel_map(r_grid.size(), [&](std::size_t i) { return blockade_point(mh, r_grid[i], t_final, start); });
}

/// Grid indices where the |ee> character of the spectrum drops by more than
/// `drop` below its large-separation value: the avoided crossings with the
/// dressed ground state.
inline std::vector<std::size_t> avoided_crossings(const MixingHamiltonian& mh, const std::vector<BlockadePoint>& scan,
                                                  double drop = 3e-3) {
    Eigen::SelfAdjointEigenSolver<RMatD> es(RMatD(mh.h0));
    const double reference = es.eigenvectors().row(0).cwiseAbs2().maxCoeff();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < scan.size(); ++i)
        if (scan[i].ground_weight < reference - drop) out.push_back(i);
    return out;
}

/// Two-atom collective light shift (Delta/2)(1 - sqrt(1 + 2 Omega^2/Delta^2)), the perfect-blockade value.
inline double blockaded_light_shift(double omega, double detuning) {
    const double x = 2.0 * omega * omega / (detuning * detuning);
    return -0.5 * detuning * x / (1.0 + std::sqrt(1.0 + x));
}

} // namespace rydcat::rydberg
