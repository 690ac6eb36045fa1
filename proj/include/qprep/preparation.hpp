// preparation.hpp - synthesis of preparing sequences and panel evaluation.
#pragma once

#include <optional>
#include <string>

#include "completeness.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace qprep {

struct PreparingSequence {
    std::vector<ChainInput> thetas;
    std::vector<int> n_values;  // slots of each theta
    DensityState target;
    std::string method;  // forward | reverse | convex | constant | concatenated
    std::optional<std::string> compatible_group;
    std::vector<int> skipped;         // n with vanishing normalizer
    std::vector<double> normalizers;  // forward and convex only, aligned with n_values

    std::size_t size() const { return thetas.size(); }
    bool empty() const { return thetas.empty(); }
};

// W_n = Q_n J_n(p_xi)
inline Matrix forward_weight(const CouplingModel& m, const Vector& xi, int n) {
    return hermitian_part(qj_matrix(m, Matrix(xi * xi.adjoint()), n));
}

inline PreparingSequence synth_forward(const CouplingModel& m, const Vector& xi_in, int n_max,
                                       double vanish_tol = 1e-14) {
    if (xi_in.size() != m.N()) throw DimensionMismatch("synth_forward: target vector is not on the system");
    if (n_max < 1) throw InvalidInput("synth_forward: n_max must be >= 1");
    m.guard(n_max);
    const Vector xi = xi_in / xi_in.norm();
    PreparingSequence seq;
    seq.method = "forward";
    seq.target = DensityState::pure(xi);
    seq.compatible_group = "forward/" + std::to_string(n_max);
    for (int n = 1; n <= n_max; ++n) {
        const Matrix w = forward_weight(m, xi, n);
        const Matrix t = w * psi_power(m, n) * w;
        const double norm = t.trace().real();
        if (norm < vanish_tol) {
            seq.skipped.push_back(n);
            continue;
        }
        seq.thetas.push_back(ChainInput::single(hermitian_part(t) / norm, m.d(), n));
        seq.n_values.push_back(n);
        seq.normalizers.push_back(norm);
    }
    return seq;
}

inline PreparingSequence synth_mixed(const CouplingModel& m, const DensityState& rho, int n_max,
                                     double drop = 1e-12) {
    if (rho.side() != m.N()) throw DimensionMismatch("synth_mixed: target is not on the system");
    auto es = hermitian_eigen(rho.matrix);
    std::vector<std::pair<double, Vector>> parts;
    double total = 0.0;
    for (Index k = es.eigenvalues().size() - 1; k >= 0; --k)
        if (es.eigenvalues()(k) >= drop) {
            parts.emplace_back(es.eigenvalues()(k), es.eigenvectors().col(k));
            total += es.eigenvalues()(k);
        }
    std::vector<PreparingSequence> seqs;
    for (const auto& [c, v] : parts) seqs.push_back(synth_forward(m, v, n_max));
    PreparingSequence out;
    out.method = parts.size() == 1 ? "forward" : "convex";
    out.target = rho;
    out.compatible_group = "forward/" + std::to_string(n_max);
    for (int n = 1; n <= n_max; ++n) {
        Matrix acc;
        double norm = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i < seqs.size() && ok; ++i) {
            auto it = std::find(seqs[i].n_values.begin(), seqs[i].n_values.end(), n);
            if (it == seqs[i].n_values.end()) {
                ok = false;
                break;
            }
            const auto idx = static_cast<std::size_t>(it - seqs[i].n_values.begin());
            const double c = parts[i].first / total;
            Matrix t = c * seqs[i].thetas[idx].blocks[0];
            acc = i == 0 ? t : Matrix(acc + t);
            norm += c * seqs[i].normalizers[idx];
        }
        if (!ok) {
            out.skipped.push_back(n);
            continue;
        }
        out.thetas.push_back(ChainInput::single(acc, m.d(), n));
        out.n_values.push_back(n);
        out.normalizers.push_back(norm);
    }
    return out;
}

// Recovers rho from the vector state prepared by `reverse_seq` on the reversed
// coupling: theta_k = Tr_sys[U_n* (rho kron reversed(theta^r_k)) U_n].
inline PreparingSequence synth_reverse(const CouplingModel& m, const DensityState& rho,
                                       const PreparingSequence& reverse_seq) {
    if (rho.side() != m.N()) throw DimensionMismatch("synth_reverse: target is not on the system");
    if (reverse_seq.target.side() != m.N()) throw DimensionMismatch("synth_reverse: reverse target size");
    if (support_rank(reverse_seq.target.matrix, 1e-10) != 1)
        throw InvalidInput("synth_reverse: reverse sequence does not target a vector state");
    PreparingSequence out;
    out.method = "reverse";
    out.target = rho;
    const int d = m.d();
    for (std::size_t k = 0; k < reverse_seq.size(); ++k) {
        const int n = reverse_seq.n_values[k];
        m.guard(n);
        const Matrix theta_hat = reverse_slots(reverse_seq.thetas[k].dense(), d, n);
        // U_n* Y with Y Y* = rho kron theta_hat, then trace out the system
        Matrix y = kron(low_rank_root(rho.matrix), low_rank_root(theta_hat));
        const Matrix wa = m.w().adjoint();
        for (int j = n; j >= 1; --j) apply_left(y, wa, slot_groups(m.N(), d, n, j));
        const Index D = theta_hat.rows();
        Matrix t = Matrix::Zero(D, D);
        for (int s = 0; s < m.N(); ++s) t.noalias() += y.middleRows(s * D, D) * y.middleRows(s * D, D).adjoint();
        out.thetas.push_back(ChainInput::single(hermitian_part(t), d, n));
        out.n_values.push_back(n);
    }
    return out;
}

inline PreparingSequence concatenate(const CouplingModel& m, const PreparingSequence& first,
                                     const PreparingSequence& second,
                                     const std::vector<std::pair<int, int>>& pairing,
                                     long long max_total_slots = 4096) {
    if (second.empty()) return first;
    PreparingSequence out;
    out.method = "concatenated";
    out.target = second.target;
    for (const auto& [l, k] : pairing) {
        if (l < 0 || k < 0 || static_cast<std::size_t>(l) >= first.size() ||
            static_cast<std::size_t>(k) >= second.size())
            throw InvalidInput("concatenate: index pair out of range");
        const long long slots = static_cast<long long>(first.n_values[l]) + second.n_values[k];
        if (slots > max_total_slots) throw ChainCapExceeded(slots, max_total_slots);
        ChainInput c(m.d());
        c.append(first.thetas[l]);
        c.append(second.thetas[k]);
        out.thetas.push_back(std::move(c));
        out.n_values.push_back(static_cast<int>(slots));
    }
    return out;
}

inline PreparingSequence constant_protocol(const CouplingModel& m, const DensityState& input, int n_max,
                                           std::optional<DensityState> target = std::nullopt) {
    if (input.side() != m.d()) throw DimensionMismatch("constant_protocol: input is not an ancilla state");
    if (n_max < 1) throw InvalidInput("constant_protocol: n_max must be >= 1");
    PreparingSequence out;
    out.method = "constant";
    out.compatible_group = "constant";
    if (target) {
        out.target = *target;
    } else {
        // the unique stationary state of the input channel, when there is one
        CouplingModel driven = m;
        driven.psi = DensityState(input.matrix, FactorDims{m.d()}, input.tol);
        auto rep = stationary_states(transition_channel(driven));
        out.target = rep.fixed_space_dim == 1 ? rep.stationary_densities[0] : DensityState::maximally_mixed(FactorDims{m.N()});
    }
    for (int n = 1; n <= n_max; ++n) {
        out.thetas.push_back(ChainInput::product(input.matrix, m.d(), n));
        out.n_values.push_back(n);
    }
    return out;
}

struct TraceRow {
    int n = 0;
    int sigma_id = 0;
    double trace_distance = 0.0;
    double fidelity = 0.0;
};

struct ConvergenceTrace {
    std::vector<TraceRow> rows;           // ordered by sequence index, then sigma
    std::vector<std::vector<Matrix>> prepared;  // [k][sigma]
    std::vector<int> n_values;

    // max over panel pairs of the trace distance between prepared states at index k
    double spread(std::size_t k) const {
        double s = 0.0;
        for (std::size_t i = 0; i < prepared[k].size(); ++i)
            for (std::size_t j = i + 1; j < prepared[k].size(); ++j)
                s = std::max(s, qprep::trace_distance(prepared[k][i], prepared[k][j]));
        return s;
    }
    double min_fidelity(std::size_t k) const {
        double f = 1.0;
        for (const auto& r : rows)
            if (r.n == n_values[k]) f = std::min(f, r.fidelity);
        return f;
    }
    double max_distance(std::size_t k) const {
        double t = 0.0;
        for (const auto& r : rows)
            if (r.n == n_values[k]) t = std::max(t, r.trace_distance);
        return t;
    }
};

inline std::vector<DensityState> default_panel(int N, std::uint64_t seed, int mixed = 5, int pure = 4) {
    Rng rng(seed);
    std::vector<DensityState> out{DensityState::maximally_mixed(FactorDims{N})};
    for (int k = 0; k < mixed; ++k) out.emplace_back(random_density(rng, N));
    for (int k = 0; k < pure; ++k) out.emplace_back(random_pure(rng, N));
    return out;
}

inline ConvergenceTrace run_panel(const CouplingModel& m, const PreparingSequence& seq,
                                  const std::vector<DensityState>& panel, int threads = 1) {
    ConvergenceTrace tr;
    tr.n_values = seq.n_values;
    const std::size_t K = seq.size(), S = panel.size();
    tr.prepared.assign(K, std::vector<Matrix>(S));
    parallel_for(K * S, threads, [&](std::size_t idx) {
        const std::size_t k = idx / S, s = idx % S;
        tr.prepared[k][s] = evolve_matrix(m, panel[s].matrix, seq.thetas[k]);
    });
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t s = 0; s < S; ++s) {
            const Matrix& p = tr.prepared[k][s];
            tr.rows.push_back({seq.n_values[k], static_cast<int>(s), trace_distance(p, seq.target.matrix),
                               fidelity(p, seq.target.matrix)});
        }
    return tr;
}

// Largest entropy of a prefix marginal, over all cuts of the chain.
inline double entanglement_proxy(const Matrix& theta, int d, int slots) {
    double best = 0.0;
    std::vector<int> dims(static_cast<std::size_t>(slots), d);
    for (int cut = 1; cut < slots; ++cut) {
        std::set<int> keep;
        for (int k = 0; k < cut; ++k) keep.insert(k);
        best = std::max(best, von_neumann_entropy(partial_trace(theta, FactorDims(dims), keep)));
    }
    return best;
}

}  // namespace qprep
