#pragma once

// Quantum-jump Monte Carlo for the LMG model with de-excitation and dephasing.
//
// Two noise models share one trajectory engine:
//   collective  J- and Jz acting on the j = N/2 multiplet;
//   local       single-atom |g><e| and |e><e| on every atom. The state stays
//               permutation invariant, so it is tracked as a vector in one
//               total-spin sector j at a time; jumps may move j by one.
// Every jump operator is a single shifted diagonal in the |j, m> basis, which
// keeps c^dagger c diagonal and the bookkeeping uniform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "core/parallel.hpp"
#include "core/random.hpp"
#include "lmg_dynamics.hpp"

namespace rydcat::qjmc {

using spin::cplx;
using spin::CMat;
using spin::CVec;
using spin::DickeSpace;
using spin::RMat;
using spin::RVec;
using spin::SpinState;

enum class ChannelKind { de_excitation, dephasing };
enum class NoiseModel { collective, local };

inline const char* to_string(ChannelKind k) { return k == ChannelKind::de_excitation ? "de_excitation" : "dephasing"; }
inline const char* to_string(NoiseModel m) { return m == NoiseModel::collective ? "collective" : "local"; }

inline NoiseModel parse_noise_model(const std::string& s) {
    if (s == "collective") return NoiseModel::collective;
    if (s == "local") return NoiseModel::local;
    throw ConfigError("unknown noise model '" + s + "' (expected collective or local)");
}

/// rate is the operator rate: per atom for the local model.
struct CollapseChannel {
    ChannelKind kind = ChannelKind::de_excitation;
    double rate = 0.0;
};

/// Operator mapping sector j2 to target_j2 with out[k + shift] = coef[k] v[k].
/// Sectors are labelled by j2 = 2j; index k runs over m = j - k.
struct ShiftOp {
    int source_j2 = 0;
    int target_j2 = 0;
    int shift = 0;
    RVec coef;

    CVec apply(const CVec& v) const {
        CVec out = CVec::Zero(target_j2 + 1);
        for (int k = 0; k < coef.size(); ++k) {
            const int t = k + shift;
            if (t >= 0 && t <= target_j2) out[t] += coef[k] * v[k];
        }
        return out;
    }

    RMat dense() const {
        RMat out = RMat::Zero(target_j2 + 1, source_j2 + 1);
        for (int k = 0; k < coef.size(); ++k) {
            const int t = k + shift;
            if (t >= 0 && t <= target_j2) out(t, k) = coef[k];
        }
        return out;
    }
};

namespace detail {

inline void check_sector(int n_atoms, int j2) {
    if (n_atoms < 1) throw ConfigError("qjmc: n_atoms must be >= 1");
    if (j2 < 0 || j2 > n_atoms || (n_atoms - j2) % 2 != 0)
        throw ConfigError("qjmc: sector 2j=" + std::to_string(j2) + " does not exist for N=" + std::to_string(n_atoms));
}

template <typename F>
RVec tabulate(int j2, F&& f) {
    RVec c(j2 + 1);
    const double j = 0.5 * j2;
    for (int k = 0; k <= j2; ++k) c[k] = std::sqrt(std::max(0.0, f(j - k)));
    return c;
}

} // namespace detail

/// Unit-rate jump operators of one channel kind acting on sector j2.
inline std::vector<ShiftOp> channel_operators(NoiseModel model, int n_atoms, int j2, ChannelKind kind) {
    detail::check_sector(n_atoms, j2);
    const double j = 0.5 * j2;
    std::vector<ShiftOp> ops;
    if (model == NoiseModel::collective) {
        if (j2 != n_atoms) throw ConfigError("collective channels act on the symmetric sector only");
        if (kind == ChannelKind::de_excitation)
            ops.push_back({j2, j2, 1, detail::tabulate(j2, [&](double m) { return (j + m) * (j - m + 1); })});
        else {
            RVec c(j2 + 1);
            for (int k = 0; k <= j2; ++k) c[k] = j - k;
            ops.push_back({j2, j2, 0, c});
        }
        return ops;
    }

    const double h = 0.5 * n_atoms;
    const bool down = j2 >= 2;
    const bool up = j2 + 2 <= n_atoms;
    const double a_down = down ? (h + j + 1) / (2 * j * (2 * j + 1)) : 0.0;
    const double a_up = (h - j) / (2 * (j + 1) * (2 * j + 1));
    const double a_same = j > 0 ? (h + 1) / (2 * j * (j + 1)) : 0.0;
    if (kind == ChannelKind::de_excitation) {
        if (j2 > 0)
            ops.push_back({j2, j2, 1, detail::tabulate(j2, [&](double m) { return a_same * (j + m) * (j - m + 1); })});
        if (down)
            ops.push_back(
                {j2, j2 - 2, 0, detail::tabulate(j2, [&](double m) { return a_down * (j + m) * (j + m - 1); })});
        if (up)
            ops.push_back(
                {j2, j2 + 2, 2, detail::tabulate(j2, [&](double m) { return a_up * (j - m + 1) * (j - m + 2); })});
        return ops;
    }
    // Dephasing: the same-sector part a + b(m + m') + c m m' of the kernel is
    // split into (a + b Jz)/sqrt(a) and sqrt(c - b^2/a) Jz.
    const double a = 0.25 * n_atoms;
    const double b = 0.5;
    RVec l1(j2 + 1);
    for (int k = 0; k <= j2; ++k) l1[k] = (a + b * (j - k)) / std::sqrt(a);
    ops.push_back({j2, j2, 0, l1});
    const double c2 = a_same - b * b / a;
    if (j2 > 0 && c2 > 1e-14) {
        RVec l2(j2 + 1);
        for (int k = 0; k <= j2; ++k) l2[k] = std::sqrt(c2) * (j - k);
        ops.push_back({j2, j2, 0, l2});
    }
    if (down) ops.push_back({j2, j2 - 2, -1, detail::tabulate(j2, [&](double m) { return a_down * (j * j - m * m); })});
    if (up)
        ops.push_back(
            {j2, j2 + 2, 1, detail::tabulate(j2, [&](double m) { return a_up * ((j + 1) * (j + 1) - m * m); })});
    return ops;
}

/// Diagonal of c^dagger c summed over the operators of one channel kind.
inline RVec cdagc_diagonal(NoiseModel model, int n_atoms, int j2, ChannelKind kind) {
    RVec d = RVec::Zero(j2 + 1);
    for (const auto& op : channel_operators(model, n_atoms, j2, kind)) {
        for (int k = 0; k <= j2; ++k) {
            const int t = k + op.shift;
            if (t >= 0 && t <= op.target_j2) d[k] += op.coef[k] * op.coef[k];
        }
    }
    return d;
}

inline RVec cdagc_diagonal(const DickeSpace& s, ChannelKind k) {
    return cdagc_diagonal(NoiseModel::collective, s.n_atoms(), s.n_atoms(), k);
}

/// Diagonal of (1/2) sum_i gamma_i c_i^dagger c_i on sector j2.
inline RVec decay_diagonal(NoiseModel model, int n_atoms, int j2, const std::vector<CollapseChannel>& channels) {
    RVec g = RVec::Zero(j2 + 1);
    for (const auto& c : channels) {
        if (!(c.rate >= 0)) throw ConfigError("collapse channel with negative rate");
        if (c.rate > 0) g += 0.5 * c.rate * cdagc_diagonal(model, n_atoms, j2, c.kind);
    }
    return g;
}

/// H_eff = H - (i/2) sum gamma c^dagger c for the collective channels.
inline CMat effective_hamiltonian(const RMat& h, const DickeSpace& s, const std::vector<CollapseChannel>& channels) {
    CMat out = h.cast<cplx>();
    out.diagonal() -= cplx(0, 1) * decay_diagonal(NoiseModel::collective, s.n_atoms(), s.n_atoms(), channels).cast<cplx>();
    return out;
}

/// <psi| sum c^dagger c |psi> at unit rate for a normalized vector in sector j2.
inline double channel_weight(NoiseModel model, int n_atoms, int j2, const CVec& psi, ChannelKind kind) {
    const RVec d = cdagc_diagonal(model, n_atoms, j2, kind);
    double acc = 0;
    for (int i = 0; i <= j2; ++i) acc += d[i] * std::norm(psi[i]);
    return acc;
}

inline double channel_weight(const SpinState& psi, ChannelKind k, NoiseModel model = NoiseModel::collective) {
    const int n = psi.space().n_atoms();
    return channel_weight(model, n, n, psi.amplitudes(), k);
}

/// Effective system rate lambda = -ln(1-p)/tau for an event probability p over tau.
inline double probability_to_rate(double p, double tau) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("probability_to_rate: p must lie in [0, 1)");
    if (!(tau > 0.0)) throw ConfigError("probability_to_rate: tau must be positive");
    return -std::log1p(-p) / tau;
}

/// Operator rate gamma such that gamma <sum c^dagger c>_0 equals the system rate lambda.
/// For the local model the weight is <N_e> = N/2 on the +x state.
inline double calibrate_rate(const SpinState& psi0, ChannelKind k, double lambda,
                             NoiseModel model = NoiseModel::collective) {
    if (lambda == 0.0) return 0.0;
    const double w = channel_weight(psi0, k, model);
    if (!(w > 0.0)) throw ConfigError("calibrate_rate: channel does not act on the initial state");
    return lambda / w;
}

/// Channels for event probabilities p_de, p_dp over tau, calibrated on psi0.
inline std::vector<CollapseChannel> channels_from_probabilities(const SpinState& psi0, double p_de, double p_dp,
                                                                double tau, NoiseModel model = NoiseModel::collective) {
    std::vector<CollapseChannel> out;
    if (p_de > 0)
        out.push_back({ChannelKind::de_excitation,
                       calibrate_rate(psi0, ChannelKind::de_excitation, probability_to_rate(p_de, tau), model)});
    if (p_dp > 0)
        out.push_back({ChannelKind::dephasing,
                       calibrate_rate(psi0, ChannelKind::dephasing, probability_to_rate(p_dp, tau), model)});
    return out;
}

/// Channels for a total system rate split equally between the two kinds.
inline std::vector<CollapseChannel> split_channels(const SpinState& psi0, double total_rate,
                                                   NoiseModel model = NoiseModel::collective) {
    return {{ChannelKind::de_excitation, calibrate_rate(psi0, ChannelKind::de_excitation, 0.5 * total_rate, model)},
            {ChannelKind::dephasing, calibrate_rate(psi0, ChannelKind::dephasing, 0.5 * total_rate, model)}};
}

/// Non-unitary propagation exp(-i H_eff t), H_eff = H - i diag(g), through one eigendecomposition.
class NoJumpPropagator {
  public:
    NoJumpPropagator(const RMat& h, const RVec& damping) {
        if (h.rows() != damping.size()) throw ConfigError("NoJumpPropagator: dimension mismatch");
        if (damping.isZero(0.0)) {
            Eigen::SelfAdjointEigenSolver<RMat> es(h);
            if (es.info() != Eigen::Success) throw NumericError("NoJumpPropagator: eigendecomposition failed");
            lambda_ = es.eigenvalues().cast<cplx>();
            v_ = es.eigenvectors().cast<cplx>();
            vinv_ = v_.adjoint();
            return;
        }
        CMat heff = h.cast<cplx>();
        heff.diagonal() -= cplx(0, 1) * damping.cast<cplx>();
        Eigen::ComplexEigenSolver<CMat> es(heff);
        if (es.info() != Eigen::Success) throw NumericError("NoJumpPropagator: eigendecomposition failed");
        lambda_ = es.eigenvalues();
        v_ = es.eigenvectors();
        Eigen::PartialPivLU<CMat> lu(v_);
        vinv_ = lu.inverse();
        const double resid = (v_ * lambda_.asDiagonal() * vinv_ - heff).cwiseAbs().maxCoeff();
        const double scale = std::max(1.0, heff.cwiseAbs().maxCoeff());
        if (!(resid <= 1e-9 * scale))
            throw NumericError("NoJumpPropagator: eigenbasis too ill-conditioned (residual " + std::to_string(resid) + ")");
    }

    NoJumpPropagator(const RMat& h, const DickeSpace& s, const std::vector<CollapseChannel>& channels)
        : NoJumpPropagator(h, decay_diagonal(NoiseModel::collective, s.n_atoms(), s.n_atoms(), channels)) {}

    CVec to_eigen(const CVec& psi) const { return vinv_ * psi; }

    /// Unnormalized state at time t for eigen-coordinates c.
    CVec state(const CVec& c, double t) const {
        CVec e(c.size());
        for (Eigen::Index i = 0; i < c.size(); ++i) e[i] = c[i] * std::exp(cplx(0, -1) * lambda_[i] * t);
        return v_ * e;
    }

  private:
    CVec lambda_;
    CMat v_;
    CMat vinv_;
};

/// Hamiltonian, noise model and channels. Sector propagators are built on
/// first use and shared by copies and threads.
class JumpModel {
  public:
    using HamiltonianFn = std::function<RMat(int j2)>;

    JumpModel(int n_atoms, HamiltonianFn hamiltonian, NoiseModel model, std::vector<CollapseChannel> channels)
        : n_atoms_(n_atoms), model_(model), channels_(std::move(channels)), hamiltonian_(std::move(hamiltonian)),
          cache_(std::make_shared<Cache>()) {
        detail::check_sector(n_atoms, n_atoms);
        for (const auto& c : channels_)
            if (!(c.rate >= 0)) throw ConfigError("collapse channel with negative rate");
    }

    /// Collective channels with a fixed Hamiltonian on the symmetric multiplet.
    static JumpModel collective(const RMat& h, int n_atoms, std::vector<CollapseChannel> channels) {
        if (h.rows() != n_atoms + 1 || h.cols() != n_atoms + 1)
            throw ConfigError("JumpModel: Hamiltonian dimension does not match N + 1");
        return {n_atoms, [h](int) { return h; }, NoiseModel::collective, std::move(channels)};
    }

    /// LMG Hamiltonian in every sector the noise model can reach.
    static JumpModel lmg(const lmg::LmgParams& p, NoiseModel model, std::vector<CollapseChannel> channels) {
        return {p.n_atoms, [p](int j2) { return lmg::build_hamiltonian_spin(j2, p); }, model, std::move(channels)};
    }

    int n_atoms() const { return n_atoms_; }
    NoiseModel noise_model() const { return model_; }
    const std::vector<CollapseChannel>& channels() const { return channels_; }

    RMat hamiltonian(int j2) const {
        detail::check_sector(n_atoms_, j2);
        return hamiltonian_(j2);
    }

    RVec damping(int j2) const { return decay_diagonal(model_, n_atoms_, j2, channels_); }

    const NoJumpPropagator& propagator(int j2) const {
        detail::check_sector(n_atoms_, j2);
        std::lock_guard lock(cache_->mutex);
        auto& slot = cache_->props[j2];
        if (!slot) slot = std::make_unique<NoJumpPropagator>(hamiltonian(j2), damping(j2));
        return *slot;
    }

    struct Candidate {
        ChannelKind kind;
        ShiftOp op;
        double rate;
    };

    std::vector<Candidate> candidates(int j2) const {
        std::vector<Candidate> out;
        for (const auto& ch : channels_) {
            if (ch.rate == 0.0) continue;
            for (auto& op : channel_operators(model_, n_atoms_, j2, ch.kind)) out.push_back({ch.kind, std::move(op), ch.rate});
        }
        return out;
    }

  private:
    struct Cache {
        std::mutex mutex;
        std::map<int, std::unique_ptr<NoJumpPropagator>> props;
    };

    int n_atoms_;
    NoiseModel model_;
    std::vector<CollapseChannel> channels_;
    HamiltonianFn hamiltonian_;
    std::shared_ptr<Cache> cache_;
};

struct Sample {
    double t = 0;
    double fisher = 0;
    double jz = 0;
    double jz2 = 0;
    double jx = 0;
    int j2 = 0;  ///< sector at this time
};

struct TrajectoryResult {
    std::uint64_t seed = 0;
    std::vector<double> jump_times;
    std::vector<ChannelKind> jump_kinds;
    std::vector<int> jump_sectors;  ///< 2j after each jump
    std::vector<Sample> observables;
    std::vector<CVec> states;  ///< normalized, one per grid time, if requested
};

struct QjmcOptions {
    double dt = 0.0;          ///< jump-search lattice spacing; 0 selects t_end / 2000
    double time_tol = 1e-12;  ///< relative tolerance on jump times
    bool keep_states = false;
};

/// Moments of Jz and Jx for a vector in sector j2 (normalized internally).
inline Sample sector_sample(int j2, const CVec& v, double t) {
    const double n2 = v.squaredNorm();
    if (!(n2 > 0)) throw NumericError("sector_sample: zero state");
    const double j = 0.5 * j2;
    Sample s{t, 0, 0, 0, 0, j2};
    cplx jp = 0;
    for (int k = 0; k <= j2; ++k) {
        const double m = j - k;
        const double p = std::norm(v[k]) / n2;
        s.jz += m * p;
        s.jz2 += m * m * p;
        // <J+> = sum_k conj(v[k-1]) sqrt(j(j+1) - m(m+1)) v[k]
        if (k > 0) jp += std::conj(v[k - 1]) * std::sqrt(j * (j + 1) - m * (m + 1)) * v[k];
    }
    s.jx = jp.real() / n2;
    s.fisher = 4.0 * std::max(0.0, s.jz2 - s.jz * s.jz);
    return s;
}

/// One trajectory from psi0 in the symmetric sector. The output grid must be
/// sorted and nonnegative.
inline TrajectoryResult run_trajectory(const JumpModel& model, const CVec& psi0, const std::vector<double>& t_grid,
                                       std::uint64_t seed, const QjmcOptions& opt = {}) {
    if (t_grid.empty()) throw ConfigError("run_trajectory: empty time grid");
    if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.front() < 0)
        throw ConfigError("run_trajectory: time grid must be sorted and nonnegative");
    if (psi0.size() != model.n_atoms() + 1) throw ConfigError("run_trajectory: initial state dimension mismatch");
    const double t_end = t_grid.back();
    const double dt = opt.dt > 0 ? opt.dt : (t_end > 0 ? t_end / 2000.0 : 1.0);

    TrajectoryResult res;
    res.seed = seed;
    UniformStream rng(seed);

    int j2 = model.n_atoms();
    const NoJumpPropagator* prop = &model.propagator(j2);
    double t0 = 0.0;  // time of the last jump
    CVec c = prop->to_eigen(psi0 / psi0.norm());
    double r = rng.next();
    auto norm2_at = [&](double t) { return prop->state(c, t - t0).squaredNorm(); };

    // Earliest time in (a, b] where the norm drops below r, given norm2(a) >= r > norm2(b).
    // Propagation is exact, so the lattice only brackets the crossing: binary
    // search over lattice cells, then bisection inside the bracketing cell.
    auto locate = [&](double a, double b) {
        long lo = 0;
        long hi = std::max(1L, static_cast<long>(std::ceil((b - a) / dt)));
        auto cell_t = [&](long i) { return std::min(b, a + i * dt); };
        while (hi - lo > 1) {
            const long mid = (lo + hi) / 2;
            if (norm2_at(cell_t(mid)) >= r) lo = mid;
            else hi = mid;
        }
        double x = cell_t(lo);
        double y = cell_t(hi);
        while (y - x > opt.time_tol * std::max(1.0, t_end)) {
            const double mid = 0.5 * (x + y);
            if (norm2_at(mid) >= r) x = mid;
            else y = mid;
        }
        return y;
    };

    double t_prev = 0.0;
    for (double tg : t_grid) {
        while (norm2_at(tg) < r) {
            const double tj = locate(std::max(t_prev, t0), tg);
            CVec psi = prop->state(c, tj - t0);
            psi /= psi.norm();
            // channel choice weighted by gamma_i ||c_i psi||^2
            const auto cands = model.candidates(j2);
            std::vector<CVec> outs;
            std::vector<double> weights;
            double total = 0;
            for (const auto& cd : cands) {
                outs.push_back(cd.op.apply(psi));
                weights.push_back(cd.rate * outs.back().squaredNorm());
                total += weights.back();
            }
            if (!(total > 0)) throw NumericError("run_trajectory: norm decayed with no active channel");
            const double u = rng.next() * total;
            std::size_t pick = 0;
            double acc = weights[0];
            while (pick + 1 < weights.size() && (u > acc || weights[pick] == 0.0)) acc += weights[++pick];
            const double jn = outs[pick].norm();
            if (!(jn > 0)) throw NumericError("run_trajectory: jump annihilated the state");
            j2 = cands[pick].op.target_j2;
            prop = &model.propagator(j2);
            res.jump_times.push_back(tj);
            res.jump_kinds.push_back(cands[pick].kind);
            res.jump_sectors.push_back(j2);
            c = prop->to_eigen(outs[pick] / jn);
            t0 = tj;
            t_prev = tj;
            r = rng.next();
        }
        const CVec psi = prop->state(c, tg - t0);
        res.observables.push_back(sector_sample(j2, psi, tg));
        if (opt.keep_states) res.states.push_back(psi / psi.norm());
        t_prev = tg;
    }
    return res;
}

/// Collective channels on the symmetric multiplet.
inline TrajectoryResult run_trajectory(const SpinState& psi0, const RMat& h, const std::vector<CollapseChannel>& channels,
                                       const std::vector<double>& t_grid, std::uint64_t seed,
                                       const QjmcOptions& opt = {}) {
    return run_trajectory(JumpModel::collective(h, psi0.space().n_atoms(), channels), psi0.amplitudes(), t_grid, seed,
                          opt);
}

struct Series {
    std::vector<double> mean;
    std::vector<double> stderr_;
};

struct EnsembleStats {
    int n_trajectories = 0;
    int n_atoms = 0;
    std::vector<double> t;
    Series fisher;  ///< 4 Var(Jz) of the averaged state, jackknife errors
    Series qfi;     ///< quantum Fisher information of the averaged state; empty without stored states
    Series jz;
    Series jz2;
    Series jx;
    std::vector<double> mean_jumps;  ///< mean number of jumps up to each time

    double fisher_db(std::size_t i) const { return 10.0 * std::log10(fisher.mean[i] / n_atoms); }
    double qfi_db(std::size_t i) const { return 10.0 * std::log10(qfi.mean.at(i) / n_atoms); }
};

/// Quantum Fisher information for rotations about z of rho = sum_k w_k |psi_k><psi_k|.
/// psi_k lives in sector j2_k; distinct sectors are orthogonal and Jz is block
/// diagonal, so the blocks add. Each block uses the support of its Gram matrix:
///   F = sum_a 4 l_a <a|Jz^2|a> - sum_{a,b} 8 l_a l_b / (l_a + l_b) |<a|Jz|b>|^2.
inline double mixture_qfi(const std::vector<int>& j2, const std::vector<const CVec*>& psi,
                          const std::vector<double>& weight) {
    if (j2.size() != psi.size() || psi.size() != weight.size()) throw ConfigError("mixture_qfi: size mismatch");
    std::map<int, std::vector<std::size_t>> blocks;
    for (std::size_t k = 0; k < psi.size(); ++k)
        if (weight[k] > 0) blocks[j2[k]].push_back(k);
    double f = 0;
    for (const auto& [sector, idx] : blocks) {
        const int d = sector + 1;
        const int r = static_cast<int>(idx.size());
        CMat a(d, r);
        for (int c = 0; c < r; ++c) a.col(c) = *psi[idx[c]] * std::sqrt(weight[idx[c]]);
        Eigen::SelfAdjointEigenSolver<CMat> es(a.adjoint() * a);
        const RVec& lam = es.eigenvalues();
        const double cut = 1e-12 * std::max(lam.maxCoeff(), 0.0);
        std::vector<int> sup;
        for (int i = 0; i < r; ++i)
            if (lam[i] > cut) sup.push_back(i);
        const int ns = static_cast<int>(sup.size());
        CMat u(d, ns);
        for (int c = 0; c < ns; ++c) u.col(c) = a * es.eigenvectors().col(sup[c]) / std::sqrt(lam[sup[c]]);
        RVec m(d);
        for (int k = 0; k < d; ++k) m[k] = 0.5 * sector - k;
        const CMat ju = m.cast<cplx>().asDiagonal() * u;
        const CMat jab = u.adjoint() * ju;
        for (int x = 0; x < ns; ++x) {
            const double la = lam[sup[x]];
            f += 4.0 * la * ju.col(x).squaredNorm();
            for (int y = 0; y < ns; ++y) {
                const double lb = lam[sup[y]];
                f -= 8.0 * la * lb / (la + lb) * std::norm(jab(x, y));
            }
        }
    }
    return std::max(0.0, f);
}

namespace detail {

inline Series mean_and_error(const std::vector<std::vector<double>>& x) {
    const std::size_t n = x.size();
    const std::size_t m = x.front().size();
    Series s;
    s.mean.assign(m, 0.0);
    s.stderr_.assign(m, 0.0);
    for (const auto& row : x)
        for (std::size_t i = 0; i < m; ++i) s.mean[i] += row[i];
    for (auto& v : s.mean) v /= static_cast<double>(n);
    if (n > 1) {
        for (const auto& row : x)
            for (std::size_t i = 0; i < m; ++i) s.stderr_[i] += (row[i] - s.mean[i]) * (row[i] - s.mean[i]);
        for (auto& v : s.stderr_) v = std::sqrt(v / (static_cast<double>(n) * (n - 1)));
    }
    return s;
}

} // namespace detail

/// Aggregates trajectories in index order. Fisher is evaluated on the averaged
/// moments; its error is a leave-one-out jackknife.
inline EnsembleStats aggregate(const std::vector<TrajectoryResult>& trajs, int n_atoms) {
    if (trajs.empty()) throw ConfigError("aggregate: no trajectories");
    const std::size_t n = trajs.size();
    const std::size_t m = trajs.front().observables.size();
    std::vector<std::vector<double>> jz(n), jz2(n), jx(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (trajs[k].observables.size() != m) throw ConfigError("aggregate: trajectories on different grids");
        for (const auto& o : trajs[k].observables) {
            jz[k].push_back(o.jz);
            jz2[k].push_back(o.jz2);
            jx[k].push_back(o.jx);
        }
    }
    EnsembleStats st;
    st.n_trajectories = static_cast<int>(n);
    st.n_atoms = n_atoms;
    for (const auto& o : trajs.front().observables) st.t.push_back(o.t);
    st.jz = detail::mean_and_error(jz);
    st.jz2 = detail::mean_and_error(jz2);
    st.jx = detail::mean_and_error(jx);
    st.fisher.mean.resize(m);
    st.fisher.stderr_.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        st.fisher.mean[i] = 4.0 * std::max(0.0, st.jz2.mean[i] - st.jz.mean[i] * st.jz.mean[i]);
        if (n > 1) {
            const double sz = st.jz.mean[i] * n;
            const double sz2 = st.jz2.mean[i] * n;
            double acc = 0;
            std::vector<double> loo(n);
            for (std::size_t k = 0; k < n; ++k) {
                const double a = (sz - jz[k][i]) / (n - 1);
                const double b = (sz2 - jz2[k][i]) / (n - 1);
                loo[k] = 4.0 * (b - a * a);
                acc += loo[k];
            }
            const double mean_loo = acc / n;
            double var = 0;
            for (double v : loo) var += (v - mean_loo) * (v - mean_loo);
            st.fisher.stderr_[i] = std::sqrt(var * (n - 1) / n);
        }
    }
    st.mean_jumps.assign(m, 0.0);
    for (const auto& tr : trajs)
        for (std::size_t i = 0; i < m; ++i)
            st.mean_jumps[i] += static_cast<double>(
                std::upper_bound(tr.jump_times.begin(), tr.jump_times.end(), st.t[i]) - tr.jump_times.begin());
    for (auto& v : st.mean_jumps) v /= static_cast<double>(n);

    bool have_states = true;
    for (const auto& tr : trajs) have_states &= tr.states.size() == m;
    if (have_states) {
        // grouped jackknife over at most eight contiguous blocks of trajectories
        const std::size_t groups = std::min<std::size_t>(8, n);
        st.qfi.mean.assign(m, 0.0);
        st.qfi.stderr_.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            std::vector<int> j2(n);
            std::vector<const CVec*> psi(n);
            for (std::size_t k = 0; k < n; ++k) {
                j2[k] = trajs[k].observables[i].j2;
                psi[k] = &trajs[k].states[i];
            }
            st.qfi.mean[i] = mixture_qfi(j2, psi, std::vector<double>(n, 1.0 / n));
            if (groups > 1) {
                std::vector<double> loo(groups);
                double acc = 0;
                for (std::size_t g = 0; g < groups; ++g) {
                    const std::size_t lo = g * n / groups, hi = (g + 1) * n / groups;
                    std::vector<double> w(n, 1.0 / static_cast<double>(n - (hi - lo)));
                    for (std::size_t k = lo; k < hi; ++k) w[k] = 0.0;
                    loo[g] = mixture_qfi(j2, psi, w);
                    acc += loo[g];
                }
                const double mean_loo = acc / groups;
                double var = 0;
                for (double v : loo) var += (v - mean_loo) * (v - mean_loo);
                st.qfi.stderr_[i] = std::sqrt(var * (groups - 1) / groups);
            }
        }
    }
    return st;
}

/// Runs n_traj trajectories in parallel; trajectory k uses derive_seed(seed0, k).
inline std::vector<TrajectoryResult> run_ensemble(const JumpModel& model, const CVec& psi0,
                                                  const std::vector<double>& t_grid, int n_traj, std::uint64_t seed0,
                                                  const QjmcOptions& opt = {}) {
    if (n_traj < 1) throw ConfigError("run_ensemble: n_traj must be >= 1");
    // build the symmetric-sector propagator before fanning out
    model.propagator(model.n_atoms());
    return parallel_map(static_cast<std::size_t>(n_traj), [&](std::size_t k) {
        return run_trajectory(model, psi0, t_grid, derive_seed(seed0, k), opt);
    });
}

inline std::vector<TrajectoryResult> run_ensemble(const SpinState& psi0, const RMat& h,
                                                  const std::vector<CollapseChannel>& channels,
                                                  const std::vector<double>& t_grid, int n_traj, std::uint64_t seed0,
                                                  const QjmcOptions& opt = {}) {
    return run_ensemble(JumpModel::collective(h, psi0.space().n_atoms(), channels), psi0.amplitudes(), t_grid, n_traj,
                        seed0, opt);
}

inline constexpr int default_trajectories = 160;

/// Ensemble Fisher information for the LMG Hamiltonian started from the +x CSS.
inline EnsembleStats ensemble_fisher(const DickeSpace& s, const lmg::LmgParams& p,
                                     const std::vector<CollapseChannel>& channels, int n_traj,
                                     const std::vector<double>& t_grid, std::uint64_t seed0,
                                     NoiseModel model = NoiseModel::local, const QjmcOptions& opt = {}) {
    if (p.n_atoms != s.n_atoms()) throw ConfigError("ensemble_fisher: params and space disagree on N");
    const JumpModel jm = JumpModel::lmg(p, model, channels);
    QjmcOptions o = opt;
    o.keep_states = true;
    return aggregate(run_ensemble(jm, lmg::initial_state(s).amplitudes(), t_grid, n_traj, seed0, o), s.n_atoms());
}

inline std::vector<double> uniform_grid(double t_end, int points) {
    if (points < 2) throw ConfigError("uniform_grid: need at least two points");
    std::vector<double> t(points);
    for (int i = 0; i < points; ++i) t[i] = t_end * i / (points - 1);
    return t;
}

// ---------------------------------------------------------------------------
// Density-matrix integrator (reference for small N). The state is block
// diagonal over the sectors reachable from j = N/2.

struct DensityMoments {
    double t, jz, jz2, jx, trace;
};

/// rho' = -i[H, rho] + sum gamma (c rho c^dagger - {c^dagger c, rho}/2), fixed-step RK4.
inline std::vector<DensityMoments> master_equation(const JumpModel& model, const CVec& psi0,
                                                   const std::vector<double>& t_grid, double dt) {
    if (!(dt > 0)) throw ConfigError("master_equation: dt must be positive");
    const int n = model.n_atoms();
    const bool local = model.noise_model() == NoiseModel::local;
    std::vector<int> sectors;
    for (int j2 = n; j2 >= (local ? n % 2 : n); j2 -= 2) sectors.push_back(j2);
    const std::size_t ns = sectors.size();
    auto index_of = [&](int j2) { return static_cast<std::size_t>((n - j2) / 2); };

    struct Jump {
        std::size_t from, to;
        double rate;
        CMat op;
    };
    std::vector<CMat> hs, damp;
    std::vector<Jump> jumps;
    for (int j2 : sectors) {
        hs.push_back(model.hamiltonian(j2).cast<cplx>());
        damp.push_back(CMat(model.damping(j2).cast<cplx>().asDiagonal()));
        for (const auto& cd : model.candidates(j2))
            jumps.push_back({index_of(j2), index_of(cd.op.target_j2), cd.rate, cd.op.dense().cast<cplx>()});
    }
    const cplx I(0, 1);
    using Blocks = std::vector<CMat>;
    auto rhs = [&](const Blocks& rho) {
        Blocks out(ns);
        for (std::size_t b = 0; b < ns; ++b)
            out[b] = -I * (hs[b] * rho[b] - rho[b] * hs[b]) - (damp[b] * rho[b] + rho[b] * damp[b]);
        for (const auto& jp : jumps) out[jp.to] += jp.rate * jp.op * rho[jp.from] * jp.op.adjoint();
        return out;
    };
    auto axpy = [&](const Blocks& a, double s, const Blocks& b) {
        Blocks out(ns);
        for (std::size_t i = 0; i < ns; ++i) out[i] = a[i] + s * b[i];
        return out;
    };
    Blocks rho(ns);
    for (std::size_t b = 0; b < ns; ++b) rho[b] = CMat::Zero(sectors[b] + 1, sectors[b] + 1);
    const CVec v0 = psi0 / psi0.norm();
    rho[0] = v0 * v0.adjoint();

    std::vector<DensityMoments> out;
    double t = 0;
    for (double tg : t_grid) {
        while (t < tg - 1e-15) {
            const double hstep = std::min(dt, tg - t);
            const Blocks k1 = rhs(rho);
            const Blocks k2 = rhs(axpy(rho, 0.5 * hstep, k1));
            const Blocks k3 = rhs(axpy(rho, 0.5 * hstep, k2));
            const Blocks k4 = rhs(axpy(rho, hstep, k3));
            for (std::size_t b = 0; b < ns; ++b) rho[b] += hstep / 6.0 * (k1[b] + 2.0 * k2[b] + 2.0 * k3[b] + k4[b]);
            t += hstep;
        }
        DensityMoments dm{tg, 0, 0, 0, 0};
        for (std::size_t b = 0; b < ns; ++b) {
            const double j = 0.5 * sectors[b];
            for (int k = 0; k <= sectors[b]; ++k) {
                const double m = j - k;
                const double p = rho[b](k, k).real();
                dm.trace += p;
                dm.jz += m * p;
                dm.jz2 += m * m * p;
                if (k > 0) dm.jx += std::sqrt(j * (j + 1) - m * (m + 1)) * rho[b](k, k - 1).real();
            }
        }
        out.push_back(dm);
    }
    return out;
}

inline std::vector<DensityMoments> master_equation(const SpinState& psi0, const RMat& h,
                                                   const std::vector<CollapseChannel>& channels,
                                                   const std::vector<double>& t_grid, double dt) {
    return master_equation(JumpModel::collective(h, psi0.space().n_atoms(), channels), psi0.amplitudes(), t_grid, dt);
}

} // namespace rydcat::qjmc
