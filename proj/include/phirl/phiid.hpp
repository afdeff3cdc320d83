#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phirl/gaussinfo.hpp"
#include "phirl/trajdata.hpp"

namespace phirl {

struct Bipartition {
    std::vector<std::size_t> side_a;
    std::vector<std::size_t> side_b;
    double fiedler_value = 0.0;  // eigenvalue used for the split
};

// Spectral bisection of the symmetrized lag-1 MI graph. Components >= 0 of
// the sign-normalized Fiedler vector form side_a; if a side ends up empty the
// split falls back to the component median.
Bipartition fiedler_bipartition(const MIMatrix& mi);

// T x 2 trajectory of per-timestep means over side_a and side_b.
LatentTrajectory coarse_grain(const LatentTrajectory& traj, const Bipartition& part);

// Nodes of the two-source redundancy lattice: {1}{2} <= {1}, {2} <= {12}.
enum class PidNode : int { redundancy = 0, unique1 = 1, unique2 = 2, synergy = 3 };
inline constexpr std::array<PidNode, 4> kPidNodes = {PidNode::redundancy, PidNode::unique1,
                                                     PidNode::unique2, PidNode::synergy};

bool pid_leq(PidNode a, PidNode b);

// Indexed [source node][target node].
using LatticeTable = std::array<std::array<double, 4>, 4>;

struct PhiAtoms {
    LatticeTable atoms{};
    LatticeTable lattice_values{};  // cumulative values the atoms were solved from
    double phi_r = 0.0;
    double downward_causation = 0.0;
    double causal_decoupling = 0.0;
    double residual = 0.0;  // largest |downset sum - lattice value|

    double atom(PidNode source, PidNode target) const {
        return atoms[static_cast<int>(source)][static_cast<int>(target)];
    }
    double total() const;
};

// Conventional short names: "rtr", "rtx", ..., "sts" (r = {1}{2}, x = {1},
// y = {2}, s = {12}).
std::string atom_name(PidNode source, PidNode target);

// Cumulative lattice values under double-MMI redundancy from the joint
// covariance of (X1(t), X2(t), X1(t+1), X2(t+1)).
LatticeTable double_mmi_lattice(const Eigen::Matrix4d& joint_cov);

// Mobius inversion over the product lattice.
PhiAtoms solve_atoms(const LatticeTable& lattice_values);

// Atoms straight from a 4 x 4 joint covariance (any positive scale per variable).
PhiAtoms phiid_atoms_from_cov(const Eigen::Matrix4d& joint_cov);

// Joint covariance of (x(t), x(t+1)) from the T - 1 lag pairs of a T x 2 trajectory.
Eigen::Matrix4d lagged_pair_covariance(const LatentTrajectory& pair);

// Requires T >= 32 and two non-constant columns.
PhiAtoms phiid_atoms(const LatentTrajectory& pair);

// Full pipeline on a preprocessed trajectory: lag-1 MI matrix, Fiedler
// bipartition, coarse-graining, atoms; returns phi_r.
double causal_emergence(const LatentTrajectory& traj);

struct WindowConfig {
    std::size_t window = 100;
    std::size_t stride = 10;
};

struct EmergenceTrajectory {
    std::vector<double> values;
    std::size_t window = 0;
    std::size_t stride = 0;
    double median = 0.0;
};

inline constexpr std::size_t kMinPhiidSteps = 32;

// Preprocesses the whole episode once, then evaluates causal_emergence on
// every window. Requires T >= window >= 32 and stride >= 1.
EmergenceTrajectory emergence_trajectory(const LatentTrajectory& latents, const WindowConfig& config);
EmergenceTrajectory emergence_trajectory(const EpisodeRecord& episode, const WindowConfig& config);

}  // namespace phirl
