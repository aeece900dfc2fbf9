#pragma once

#include "visilin/types.hpp"

namespace visilin {

enum class FitMethod { dmdc, stlsq };

/// One-step discrete model fitted from snapshot data, with the Frobenius
/// residual of the regression it solved.
struct FitResult {
    Eigen::MatrixXd ad_hat;
    Eigen::MatrixXd bd_hat;
    double residual = 0.0;
    FitMethod method = FitMethod::dmdc;
};

/// Least-squares fit of X1 = [Ad Bd] [X0; U0] via the pseudoinverse with
/// singular values below 1e-10 * sigma_max discarded.  On a rank-deficient
/// regressor this returns the minimum-norm solution, which on noise-free data
/// is experiment-consistent with the generator even when it is not equal to it.
FitResult dmdc_fit(const Trajectory& traj, const Eigen::MatrixXd& u_seq);

/// Subspace-style fit; in the full-state setting it reduces to the same
/// least-squares solution as dmdc_fit.
inline FitResult moesp_fit(const Trajectory& traj, const Eigen::MatrixXd& u_seq) {
    return dmdc_fit(traj, u_seq);
}

/// Sequentially thresholded least squares on the stacked coefficients
/// [Ad Bd]: alternate a per-row least-squares solve on the active columns
/// with hard-zeroing of entries below lambda.  Zeroed entries stay zero;
/// stops at the iteration cap or when the active sets reach a fixpoint.
/// lambda = 0 reproduces dmdc_fit.
FitResult stlsq_fit(const Trajectory& traj, const Eigen::MatrixXd& u_seq,
                    double lambda = 0.05, int iters = 8);

/// Relative estimation error of the full stacked system:
///   ||[Ahat Bhat] - [A B]||_F / ||[A B]||_F.
double ree_full(const Eigen::MatrixXd& a_true, const Eigen::MatrixXd& b_true,
                const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& b_hat);

/// Relative estimation error of the restriction to span(basis):
///   ||[P^T Ahat P, P^T Bhat] - [P^T A P, P^T B]||_F / ||[P^T A P, P^T B]||_F.
double ree_vis(const Eigen::MatrixXd& a_true, const Eigen::MatrixXd& b_true,
               const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& b_hat,
               const Eigen::MatrixXd& basis);

}  // namespace visilin
