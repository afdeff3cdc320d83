#include "phirl/phiid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phirl/error.hpp"
#include "phirl/numeric.hpp"
#include "phirl/preprocess.hpp"

namespace phirl {

namespace {

constexpr int idx(PidNode n) { return static_cast<int>(n); }

// Variables of each lattice node for the source half (0, 1) of the joint
// covariance; the target half is offset by 2.
std::vector<Eigen::Index> node_vars(PidNode n, Eigen::Index offset) {
    switch (n) {
        case PidNode::unique1: return {offset};
        case PidNode::unique2: return {offset + 1};
        case PidNode::synergy: return {offset, offset + 1};
        case PidNode::redundancy: break;
    }
    return {};
}

double block_mi(const Eigen::Matrix4d& cov, const std::vector<Eigen::Index>& a,
                const std::vector<Eigen::Index>& b) {
    std::vector<Eigen::Index> vars = a;
    vars.insert(vars.end(), b.begin(), b.end());
    const auto k = static_cast<Eigen::Index>(vars.size());
    Eigen::MatrixXd sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = cov(vars[static_cast<std::size_t>(i)], vars[static_cast<std::size_t>(j)]);
    }
    return gaussian_mi_blocks(sub, static_cast<Eigen::Index>(a.size()));
}

Eigen::Matrix4d to_correlation(const Eigen::Matrix4d& cov) {
    const Eigen::Vector4d d = cov.diagonal();
    if (!((d.array() > 0.0).all()) || !cov.allFinite()) {
        throw Error("phiid: joint covariance needs positive finite variances");
    }
    const Eigen::Vector4d inv = d.array().sqrt().inverse();
    Eigen::Matrix4d corr = inv.asDiagonal() * cov * inv.asDiagonal();
    corr = 0.5 * (corr + corr.transpose()).eval();
    corr.diagonal().setOnes();
    return corr;
}

// Rank of a node in the product order, used for the topological sweep.
int product_rank(PidNode a, PidNode b) {
    auto r = [](PidNode n) { return n == PidNode::redundancy ? 0 : (n == PidNode::synergy ? 2 : 1); };
    return r(a) + r(b);
}

}  // namespace

bool pid_leq(PidNode a, PidNode b) {
    return a == b || a == PidNode::redundancy || b == PidNode::synergy;
}

std::string atom_name(PidNode source, PidNode target) {
    static constexpr char letters[] = {'r', 'x', 'y', 's'};
    return std::string{letters[idx(source)], 't', letters[idx(target)]};
}

double PhiAtoms::total() const {
    double s = 0.0;
    for (const auto& row : atoms) s = std::accumulate(row.begin(), row.end(), s);
    return s;
}

LatticeTable double_mmi_lattice(const Eigen::Matrix4d& joint_cov) {
    const std::array<PidNode, 3> sets = {PidNode::unique1, PidNode::unique2, PidNode::synergy};
    // mi[a][b]: I(X_a; Y_b) for a, b in {1}, {2}, {12} (lattice indices 1..3)
    LatticeTable mi{};
    for (PidNode a : sets) {
        for (PidNode b : sets) mi[idx(a)][idx(b)] = block_mi(joint_cov, node_vars(a, 0), node_vars(b, 2));
    }
    LatticeTable v{};
    for (PidNode a : sets) {
        for (PidNode b : sets) v[idx(a)][idx(b)] = mi[idx(a)][idx(b)];
    }
    const int x1 = idx(PidNode::unique1), x2 = idx(PidNode::unique2);
    for (PidNode b : sets) {
        v[idx(PidNode::redundancy)][idx(b)] = std::min(mi[x1][idx(b)], mi[x2][idx(b)]);
    }
    for (PidNode a : sets) {
        v[idx(a)][idx(PidNode::redundancy)] = std::min(mi[idx(a)][x1], mi[idx(a)][x2]);
    }
    v[0][0] = std::min({mi[x1][x1], mi[x1][x2], mi[x2][x1], mi[x2][x2]});
    return v;
}

PhiAtoms solve_atoms(const LatticeTable& lattice_values) {
    PhiAtoms out;
    out.lattice_values = lattice_values;
    std::vector<std::pair<PidNode, PidNode>> order;
    for (PidNode a : kPidNodes) {
        for (PidNode b : kPidNodes) order.emplace_back(a, b);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& l, const auto& r) {
        return product_rank(l.first, l.second) < product_rank(r.first, r.second);
    });
    // every strict lower bound of a node has a smaller rank, so it is solved first
    for (const auto& [a, b] : order) {
        double below = 0.0;
        for (PidNode a2 : kPidNodes) {
            for (PidNode b2 : kPidNodes) {
                if ((a2 != a || b2 != b) && pid_leq(a2, a) && pid_leq(b2, b)) below += out.atoms[idx(a2)][idx(b2)];
            }
        }
        out.atoms[idx(a)][idx(b)] = lattice_values[idx(a)][idx(b)] - below;
    }
    for (PidNode a : kPidNodes) {
        for (PidNode b : kPidNodes) {
            double sum = 0.0;
            for (PidNode a2 : kPidNodes) {
                for (PidNode b2 : kPidNodes) {
                    if (pid_leq(a2, a) && pid_leq(b2, b)) sum += out.atoms[idx(a2)][idx(b2)];
                }
            }
            out.residual = std::max(out.residual, std::abs(sum - lattice_values[idx(a)][idx(b)]));
        }
    }
    const int s = idx(PidNode::synergy);
    out.causal_decoupling = out.atoms[s][s];
    out.downward_causation = out.atoms[s][idx(PidNode::unique1)] + out.atoms[s][idx(PidNode::unique2)] +
                             out.atoms[s][idx(PidNode::redundancy)];
    out.phi_r = out.downward_causation + out.causal_decoupling;
    return out;
}

PhiAtoms phiid_atoms_from_cov(const Eigen::Matrix4d& joint_cov) {
    if ((joint_cov - joint_cov.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, joint_cov.cwiseAbs().maxCoeff())) {
        throw Error("phiid: joint covariance is not symmetric");
    }
    return solve_atoms(double_mmi_lattice(to_correlation(joint_cov)));
}

Eigen::Matrix4d lagged_pair_covariance(const LatentTrajectory& pair) {
    if (pair.units() != 2) throw Error("phiid: expected a two-column trajectory");
    const Eigen::Index L = pair.values.rows() - 1;
    if (L < 2) throw Error("phiid: trajectory too short");
    Eigen::MatrixXd joint(L, 4);
    joint.leftCols(2) = pair.values.topRows(L);
    joint.rightCols(2) = pair.values.bottomRows(L);
    const Eigen::RowVector4d mu = joint.colwise().mean();
    joint.rowwise() -= mu;
    Eigen::Matrix4d cov = (joint.transpose() * joint) / static_cast<double>(L - 1);
    return 0.5 * (cov + cov.transpose());
}

PhiAtoms phiid_atoms(const LatentTrajectory& pair) {
    if (pair.units() != 2) throw Error("phiid_atoms: expected a two-column trajectory");
    if (pair.steps() < kMinPhiidSteps) {
        throw Error("phiid_atoms: need T >= " + std::to_string(kMinPhiidSteps) + ", got " +
                    std::to_string(pair.steps()));
    }
    if (!pair.values.allFinite()) throw Error("phiid_atoms: non-finite values");
    for (Eigen::Index j = 0; j < 2; ++j) {
        if ((pair.values.col(j).array() == pair.values(0, j)).all()) {
            throw Error("phiid_atoms: column " + std::to_string(j) + " is constant");
        }
    }
    const Eigen::Matrix4d cov = lagged_pair_covariance(pair);
    if (!((cov.diagonal().array() > 0.0).all())) {
        throw Error("phiid_atoms: a lagged slice is constant");
    }
    return phiid_atoms_from_cov(cov);
}

Bipartition fiedler_bipartition(const MIMatrix& mi) {
    const Eigen::Index n = mi.values.rows();
    if (n < 2 || mi.values.cols() != n) throw Error("fiedler_bipartition: need a square matrix with n >= 2");
    if (!mi.values.allFinite()) throw Error("fiedler_bipartition: non-finite MI entries");
    Eigen::MatrixXd w = 0.5 * (mi.values + mi.values.transpose());
    w.diagonal().setZero();
    if (w.cwiseAbs().maxCoeff() == 0.0) throw Error("fiedler_bipartition: MI matrix is all zero");

    Eigen::MatrixXd lap = -w;
    lap.diagonal() = w.rowwise().sum();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    if (eig.info() != Eigen::Success) throw Error("fiedler_bipartition: eigen-decomposition failed");
    const Eigen::VectorXd& lambda = eig.eigenvalues();  // ascending
    if (lambda(n - 1) <= 0.0) throw Error("fiedler_bipartition: Laplacian has no positive eigenvalue");
    const Eigen::Index k = 1;

    // On a disconnected graph the zero eigenspace is spanned by component
    // indicators; removing the constant direction leaves a clean component split.
    Eigen::VectorXd v = eig.eigenvectors().col(k);
    v.array() -= v.mean();
    const double zero_tol = 1e-12 * v.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(v(i)) > zero_tol) {
            if (v(i) < 0.0) v = -v;
            break;
        }
    }
    Bipartition part;
    part.fiedler_value = lambda(k);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool a = v(i) > 0.0 || std::abs(v(i)) <= zero_tol;
        (a ? part.side_a : part.side_b).push_back(static_cast<std::size_t>(i));
    }
    if (part.side_a.empty() || part.side_b.empty()) {
        std::vector<std::size_t> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
            return v(static_cast<Eigen::Index>(l)) > v(static_cast<Eigen::Index>(r));
        });
        const std::size_t half = (order.size() + 1) / 2;
        part.side_a.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
        part.side_b.assign(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
        std::sort(part.side_a.begin(), part.side_a.end());
        std::sort(part.side_b.begin(), part.side_b.end());
    }
    return part;
}

LatentTrajectory coarse_grain(const LatentTrajectory& traj, const Bipartition& part) {
    const std::size_t n = traj.units();
    std::vector<int> seen(n, 0);
    for (const auto* side : {&part.side_a, &part.side_b}) {
        if (side->empty()) throw Error("coarse_grain: bipartition has an empty side");
        for (std::size_t i : *side) {
            if (i >= n) throw Error("coarse_grain: unit index out of range");
            ++seen[i];
        }
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
        throw Error("coarse_grain: bipartition must cover every unit exactly once");
    }
    LatentTrajectory out;
    out.episode_id = traj.episode_id;
    out.values.resize(traj.values.rows(), 2);
    for (int c = 0; c < 2; ++c) {
        const auto& side = c == 0 ? part.side_a : part.side_b;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(traj.values.rows());
        for (std::size_t i : side) acc += traj.values.col(static_cast<Eigen::Index>(i));
        out.values.col(c) = acc / static_cast<double>(side.size());
    }
    return out;
}

double causal_emergence(const LatentTrajectory& traj) {
    const MIMatrix mi = lag1_mi_matrix(traj);
    const Bipartition part = fiedler_bipartition(mi);
    return phiid_atoms(coarse_grain(traj, part)).phi_r;
}

EmergenceTrajectory emergence_trajectory(const LatentTrajectory& latents, const WindowConfig& config) {
    if (config.stride < 1) throw Error("emergence_trajectory: stride must be >= 1");
    if (config.window < kMinPhiidSteps) {
        throw Error("emergence_trajectory: window must be >= " + std::to_string(kMinPhiidSteps));
    }
    const std::size_t T = latents.steps();
    if (T < config.window) {
        throw Error("emergence_trajectory: episode '" + latents.episode_id + "' has T=" + std::to_string(T) +
                    " steps, shorter than the window of " + std::to_string(config.window) +
                    "; reduce --window");
    }
    check_trajectory(latents);
    const LatentTrajectory prepared = preprocess(latents).trajectory;
    EmergenceTrajectory out;
    out.window = config.window;
    out.stride = config.stride;
    const std::size_t count = (T - config.window) / config.stride + 1;
    out.values.reserve(count);
    LatentTrajectory slice;
    slice.episode_id = latents.episode_id;
    for (std::size_t w = 0; w < count; ++w) {
        slice.values = prepared.values.middleRows(static_cast<Eigen::Index>(w * config.stride),
                                                  static_cast<Eigen::Index>(config.window));
        out.values.push_back(causal_emergence(slice));
    }
    out.median = median(out.values);
    return out;
}

EmergenceTrajectory emergence_trajectory(const EpisodeRecord& episode, const WindowConfig& config) {
    return emergence_trajectory(episode.latents, config);
}

}  // namespace phirl
