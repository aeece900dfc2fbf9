#pragma once

#include <cstdint>

#include "visilin/types.hpp"

namespace visilin {

/// Free parameters of the experiment-consistent family for a given (sys, x0):
/// theta is the k x (n-k) cross block, psi the (n-k) x (n-k) hidden block.
/// Every choice yields a system indistinguishable from the truth on the
/// experiment's trajectories; the family has n(n-k) degrees of freedom.
struct ConsistentParam {
    Eigen::MatrixXd theta;
    Eigen::MatrixXd psi;
};

/// Builds the family member
///   A~ = T [[A_V, theta], [0, psi]] T^T,  B~ = B,
/// in the orthogonal adapted basis T = [P Q] of the visible splitting.
/// When the visible subspace is the whole space, the unique member (A, B)
/// is returned unchanged.
LtiSystem consistent_member(const LtiSystem& sys, const Eigen::VectorXd& x0,
                            const ConsistentParam& param);

/// Random member with i.i.d. N(0, scale^2) entries in (theta, psi).
/// Deterministic for a fixed seed.
LtiSystem sample_consistent(const LtiSystem& sys, const Eigen::VectorXd& x0,
                            double scale, std::uint64_t seed);

/// Largest gap between the two systems' exact sampled responses to the same
/// experiment, normalized by the trajectories' sup norm:
///   max_j ||x1[j] - x2[j]|| / max(1, sup_j ||x1[j]||, sup_j ||x2[j]||).
/// Zero (to tolerance) exactly when the experiment cannot tell the systems
/// apart at its sample times.
double consistency_residual(const LtiSystem& sys1, const LtiSystem& sys2,
                            const Experiment& exp);

/// True when the experiment-consistent set is just {(A, B)}, i.e. the visible
/// subspace spans the whole state space.
bool is_singleton(const LtiSystem& sys, const Eigen::VectorXd& x0);

}  // namespace visilin
