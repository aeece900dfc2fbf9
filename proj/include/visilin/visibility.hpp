#pragma once

#include <utility>

#include "visilin/types.hpp"

namespace visilin {

/// An orthonormal basis of a detected subspace, together with the singular
/// values and the relative threshold that justified its dimension.
struct Subspace {
    Eigen::MatrixXd basis;            ///< n x k, orthonormal columns
    int k = 0;                        ///< detected dimension
    Eigen::VectorXd singular_values;  ///< nonincreasing, from the generating matrix
    double rtol = 0.0;                ///< relative cutoff used for k
};

/// Coordinates adapted to the visible/hidden splitting.
///
/// t_matrix = [P Q] is orthogonal with Im(P) the visible subspace and Q its
/// orthogonal complement.  In these coordinates the state matrix is block
/// upper triangular:
///   T^T A T = [[a_v, a_star], [~0, a_w]],   T^T B = [[b_v], [~0]],
/// and lower_left_residual records the Frobenius norm of the block that is
/// zero in exact arithmetic.
struct BlockForm {
    Eigen::MatrixXd t_matrix;
    Eigen::MatrixXd a_v;      ///< k x k, the visible restriction
    Eigen::MatrixXd a_star;   ///< k x (n-k) cross coupling
    Eigen::MatrixXd a_w;      ///< (n-k) x (n-k) hidden block
    Eigen::MatrixXd b_v;      ///< k x m
    Eigen::VectorXd x0_v;     ///< k-vector
    double lower_left_residual = 0.0;
};

/// Stacks [S, A S, ..., A^{n-1} S] with S = [x0 B], built by iterated
/// multiplication.  Its column space is the smallest A-invariant subspace
/// containing x0 and the columns of B.
Eigen::MatrixXd krylov_matrix(const LtiSystem& sys, const Eigen::VectorXd& x0);

/// Visible subspace of the experiment design: SVD of the Krylov stack with
/// rank detected at sigma_i > rtol * sigma_max.
Subspace visible_subspace(const LtiSystem& sys, const Eigen::VectorXd& x0,
                          double rtol = 1e-10);

/// Completes the visible basis with its orthogonal complement and returns the
/// adapted-coordinates blocks.  `sub` must come from visible_subspace on the
/// same (sys, x0).
BlockForm block_form(const LtiSystem& sys, const Eigen::VectorXd& x0,
                     const Subspace& sub);

/// Restriction of (A, B) to the span of an orthonormal basis P:
/// returns (P^T A P, P^T B).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> restrict_to(const LtiSystem& sys,
                                                        const Eigen::MatrixXd& basis);

/// Largest principal angle between two equal-dimension subspaces, in degrees.
/// Computed from both the cosine (singular values of p1^T p2) and sine
/// (residual of p2 against span(p1)) so small angles are not lost to rounding.
double principal_angle_deg(const Eigen::MatrixXd& p1, const Eigen::MatrixXd& p2);

/// Largest principal angle for possibly different dimensions: the angle over
/// the min(k1, k2) canonical pairs.  Empty bases give 90 degrees.
double max_principal_angle_deg(const Eigen::MatrixXd& p1, const Eigen::MatrixXd& p2);

/// Data-driven visible basis from state snapshots X = [x[0] ... x[T-1]]
/// (the final sample is excluded).  The dimension is chosen by the largest
/// consecutive singular-value ratio among indices above the tau * sigma_max
/// floor, with the smallest index winning ties; if no ratio candidate exists
/// the count of above-floor values is used.  Returns (basis, k_hat).
std::pair<Eigen::MatrixXd, int> empirical_visible_basis(const Trajectory& traj,
                                                        double tau = 1e-10);

}  // namespace visilin
