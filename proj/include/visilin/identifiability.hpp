#pragma once

#include <optional>
#include <vector>

#include "visilin/types.hpp"

namespace visilin {

/// Per-eigenpair alignment of the left eigenvectors of A with the excitation
/// block [x0 B].  mu_i = ||w_i^T [x0 B]||_2 / (||w_i||_2 ||[x0 B]||_2), where
/// the matrix norm is spectral.  A zero mu flags a mode the experiment cannot
/// reach.  `degenerate` is set when eigenvalues cluster within
/// 1e-8 * ||A||_F, where eigenvector-based margins become unreliable.
struct AlignmentMargins {
    std::vector<double> mu_values;
    double mu_min = 0.0;
    bool degenerate = false;
};

/// Finite-time Gramian of the joint regressor z = [xi; u] and its
/// positive-definiteness verdict at a scale-free tolerance.
struct GramianReport {
    Eigen::MatrixXd gramian;  ///< (k+m) x (k+m), symmetric PSD
    double min_eig = 0.0;
    bool informative = false;
};

/// Summary of every algebraic identifiability test for one (system, x0).
struct MarginReport {
    std::vector<double> mu_values;
    double mu_min = 0.0;
    double d_pbh = 0.0;
    int ctrb_rank = 0;
    int visible_dim = 0;
    std::optional<double> gramian_min_eig;  ///< present when a trajectory was supplied
    bool identifiable = false;              ///< d_pbh > eps
    double eps = 1e-6;
    bool degenerate_spectrum = false;
};

/// Rank of the Kalman controllability matrix [B, AB, ..., A^{n-1}B], detected
/// by SVD at rtol * sigma_max.  Returns 0 when there are no inputs.
int controllability_rank(const LtiSystem& sys, double rtol = 1e-10);

/// Left-eigenvector alignment margins; requires [x0 B] != 0.
AlignmentMargins eig_alignment_margins(const LtiSystem& sys, const Eigen::VectorXd& x0);

/// Fixed-experiment identifiability margin:
///   d = min over eigenvalues lambda of A of sigma_min(Q^T [lambda I - A, B]),
/// with Q an orthonormal basis of the orthogonal complement of x0 (Q = I when
/// x0 = 0).  Zero exactly when some left eigenvector annihilates [x0 B].
/// With refine_grid set, lambda is additionally searched on rings around each
/// eigenvalue, a stricter variant approximating the infimum over the plane.
/// Returns +infinity for n = 1 with nonzero x0 (the complement is empty).
double pbh_margin(const LtiSystem& sys, const Eigen::VectorXd& x0,
                  bool refine_grid = false);

/// Thresholded margin decision: d_pbh > eps.
bool is_identifiable(const LtiSystem& sys, const Eigen::VectorXd& x0, double eps = 1e-6);

/// Discrete finite-time Gramian G = sum_j z[j] z[j]^T dt with z = [xi; u].
/// xi_seq is k x N (projected states), u_seq is m x N.  Informative when
/// lambda_min(G) > 1e-8 * trace(G) / (k + m).
GramianReport informativeness_gramian(const Eigen::MatrixXd& xi_seq,
                                      const Eigen::MatrixXd& u_seq, double dt);

/// Persistent excitation of order r: the depth-r block Hankel matrix of the
/// input sequence has full row rank r*m (SVD rank at rtol).
bool hankel_pe_order(const Eigen::MatrixXd& u_seq, int r, double rtol = 1e-10);

/// Smallest eigenvalue of the finite-horizon controllability Gramian of the
/// augmented pair (A, [x0 B]):
///   W = sum_{j=0}^{steps-1} e^{A j dt} S S^T e^{A^T j dt} dt,  S = [x0 B].
/// Zero (to tolerance) exactly when the visible subspace is proper.
double augmented_gramian_min_eig(const LtiSystem& sys, const Eigen::VectorXd& x0,
                                 int horizon_steps, double dt);

/// Runs every test and assembles the report.  The overload taking a trajectory
/// also evaluates the informativeness Gramian of the realized experiment.
MarginReport margin_report(const LtiSystem& sys, const Eigen::VectorXd& x0,
                           double eps = 1e-6);
MarginReport margin_report(const LtiSystem& sys, const Eigen::VectorXd& x0,
                           const Trajectory& traj, const Eigen::MatrixXd& u_seq,
                           double eps = 1e-6);

}  // namespace visilin
