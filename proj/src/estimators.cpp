#include "visilin/estimators.hpp"

#include <vector>

namespace visilin {

namespace {

constexpr double kPinvCutoff = 1e-10;

/// Min-norm least-squares solve of rhs = coeffs * mat for coeffs, i.e.
/// coeffs = rhs * pinv(mat), with relative singular-value cutoff.
Eigen::MatrixXd solve_min_norm(const Eigen::MatrixXd& rhs, const Eigen::MatrixXd& mat) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
    if (s.size() > 0 && s(0) > 0.0) {
        const double cutoff = kPinvCutoff * s(0);
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (s(i) > cutoff) inv(i) = 1.0 / s(i);
    }
    return rhs * svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

struct SnapshotData {
    Eigen::MatrixXd regressor;  // [X0; U0], (n+m) x T
    Eigen::MatrixXd targets;    // X1, n x T
};

SnapshotData snapshots(const Trajectory& traj, const Eigen::MatrixXd& u_seq) {
    const int pairs = traj.steps();
    if (pairs < 1) throw InvalidInput("fit: need at least one snapshot pair");
    if (u_seq.cols() != pairs)
        throw InvalidInput("fit: input sequence length must equal snapshot pairs");
    const int n = traj.n();
    const int m = static_cast<int>(u_seq.rows());
    SnapshotData data;
    data.regressor.resize(n + m, pairs);
    data.regressor.topRows(n) = traj.states.leftCols(pairs);
    if (m > 0) data.regressor.bottomRows(m) = u_seq;
    data.targets = traj.states.rightCols(pairs);
    return data;
}

}  // namespace

FitResult dmdc_fit(const Trajectory& traj, const Eigen::MatrixXd& u_seq) {
    const SnapshotData data = snapshots(traj, u_seq);
    const int n = traj.n();
    const Eigen::MatrixXd coeffs = solve_min_norm(data.targets, data.regressor);
    FitResult fit;
    fit.ad_hat = coeffs.leftCols(n);
    fit.bd_hat = coeffs.rightCols(coeffs.cols() - n);
    fit.residual = (data.targets - coeffs * data.regressor).norm();
    fit.method = FitMethod::dmdc;
    return fit;
}

FitResult stlsq_fit(const Trajectory& traj, const Eigen::MatrixXd& u_seq,
                    double lambda, int iters) {
    if (lambda < 0.0) throw InvalidInput("stlsq_fit: lambda must be nonnegative");
    if (iters < 1) throw InvalidInput("stlsq_fit: need at least one iteration");
    const SnapshotData data = snapshots(traj, u_seq);
    const int n = traj.n();
    const int q = static_cast<int>(data.regressor.rows());

    Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(n, q);
    std::vector<std::vector<bool>> active(n, std::vector<bool>(q, true));

    for (int round = 0; round < iters; ++round) {
        bool changed = false;
        for (int row = 0; row < n; ++row) {
            std::vector<int> cols;
            for (int c = 0; c < q; ++c)
                if (active[row][c]) cols.push_back(c);
            coeffs.row(row).setZero();
            if (cols.empty()) continue;

            Eigen::MatrixXd sub(cols.size(), data.regressor.cols());
            for (size_t i = 0; i < cols.size(); ++i) sub.row(i) = data.regressor.row(cols[i]);
            const Eigen::MatrixXd sol = solve_min_norm(data.targets.row(row), sub);
            for (size_t i = 0; i < cols.size(); ++i) {
                const double value = sol(0, i);
                if (std::abs(value) < lambda) {
                    active[row][cols[i]] = false;  // stays zero from here on
                    changed = true;
                } else {
                    coeffs(row, cols[i]) = value;
                }
            }
        }
        if (!changed) break;
    }

    FitResult fit;
    fit.ad_hat = coeffs.leftCols(n);
    fit.bd_hat = coeffs.rightCols(q - n);
    fit.residual = (data.targets - coeffs * data.regressor).norm();
    fit.method = FitMethod::stlsq;
    return fit;
}

double ree_full(const Eigen::MatrixXd& a_true, const Eigen::MatrixXd& b_true,
                const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& b_hat) {
    if (a_true.rows() != a_hat.rows() || a_true.cols() != a_hat.cols() ||
        b_true.rows() != b_hat.rows() || b_true.cols() != b_hat.cols())
        throw InvalidInput("ree_full: dimension mismatch");
    const double denom = std::sqrt(a_true.squaredNorm() + b_true.squaredNorm());
    if (!(denom > 0.0)) throw InvalidInput("ree_full: zero reference system");
    const double num =
        std::sqrt((a_hat - a_true).squaredNorm() + (b_hat - b_true).squaredNorm());
    return num / denom;
}

double ree_vis(const Eigen::MatrixXd& a_true, const Eigen::MatrixXd& b_true,
               const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& b_hat,
               const Eigen::MatrixXd& basis) {
    if (basis.rows() != a_true.rows())
        throw InvalidInput("ree_vis: basis dimension mismatch");
    const Eigen::MatrixXd av_true = basis.transpose() * a_true * basis;
    const Eigen::MatrixXd bv_true = basis.transpose() * b_true;
    const Eigen::MatrixXd av_hat = basis.transpose() * a_hat * basis;
    const Eigen::MatrixXd bv_hat = basis.transpose() * b_hat;
    return ree_full(av_true, bv_true, av_hat, bv_hat);
}

}  // namespace visilin
