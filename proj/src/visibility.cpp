#include "visilin/visibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace visilin {

namespace {

/// Orthonormal basis of the orthogonal complement of Im(P), from the full SVD.
Eigen::MatrixXd orthogonal_complement(const Eigen::MatrixXd& p, int n) {
    const int k = static_cast<int>(p.cols());
    if (k == 0) return Eigen::MatrixXd::Identity(n, n);
    if (k == n) return Eigen::MatrixXd(n, 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(p, Eigen::ComputeFullU);
    return svd.matrixU().rightCols(n - k);
}

int rank_from_singular_values(const Eigen::VectorXd& s, double rtol) {
    if (s.size() == 0 || s(0) <= 0.0) return 0;
    const double cutoff = rtol * s(0);
    int k = 0;
    while (k < s.size() && s(k) > cutoff) ++k;
    return k;
}

}  // namespace

Eigen::MatrixXd krylov_matrix(const LtiSystem& sys, const Eigen::VectorXd& x0) {
    const int n = sys.n();
    const int m = sys.m();
    if (x0.size() != n) throw InvalidInput("krylov_matrix: x0 dimension mismatch");
    const int w = m + 1;
    Eigen::MatrixXd seed(n, w);
    seed.col(0) = x0;
    if (m > 0) seed.rightCols(m) = sys.b;
    Eigen::MatrixXd krylov(n, n * w);
    Eigen::MatrixXd block = seed;
    for (int j = 0; j < n; ++j) {
        krylov.middleCols(j * w, w) = block;
        if (j + 1 < n) block = sys.a * block;
    }
    return krylov;
}

Subspace visible_subspace(const LtiSystem& sys, const Eigen::VectorXd& x0, double rtol) {
    if (!(rtol > 0.0)) throw InvalidInput("visible_subspace: rtol must be positive");
    const Eigen::MatrixXd krylov = krylov_matrix(sys, x0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(krylov, Eigen::ComputeThinU);
    Subspace sub;
    sub.singular_values = svd.singularValues();
    sub.rtol = rtol;
    sub.k = rank_from_singular_values(sub.singular_values, rtol);
    sub.basis = svd.matrixU().leftCols(sub.k);
    return sub;
}

BlockForm block_form(const LtiSystem& sys, const Eigen::VectorXd& x0, const Subspace& sub) {
    const int n = sys.n();
    const int k = sub.k;
    if (x0.size() != n) throw InvalidInput("block_form: x0 dimension mismatch");
    if (sub.basis.rows() != n || sub.basis.cols() != k)
        throw InvalidInput("block_form: subspace does not match system dimension");

    const Eigen::MatrixXd& p = sub.basis;
    const Eigen::MatrixXd q = orthogonal_complement(p, n);
    Eigen::MatrixXd t(n, n);
    t.leftCols(k) = p;
    t.rightCols(n - k) = q;

    // [P Q] is orthogonal by construction; the conditioning guard protects
    // against a caller-supplied basis that is not.
    {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(t);
        const double smin = svd.singularValues()(n - 1);
        const double smax = svd.singularValues()(0);
        if (!(smin > 0.0) || smax / smin > 1e12)
            throw NumericalDegeneracy("block_form: change of basis is ill-conditioned");
    }

    BlockForm bf;
    bf.t_matrix = t;
    bf.a_v = p.transpose() * sys.a * p;
    bf.a_star = p.transpose() * sys.a * q;
    bf.a_w = q.transpose() * sys.a * q;
    bf.b_v = p.transpose() * sys.b;
    bf.x0_v = p.transpose() * x0;
    bf.lower_left_residual = (q.transpose() * sys.a * p).norm();
    return bf;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> restrict_to(const LtiSystem& sys,
                                                        const Eigen::MatrixXd& basis) {
    if (basis.rows() != sys.n()) throw InvalidInput("restrict_to: basis dimension mismatch");
    return {basis.transpose() * sys.a * basis, basis.transpose() * sys.b};
}

namespace {

double angle_deg_from_bases(const Eigen::MatrixXd& p1, const Eigen::MatrixXd& p2) {
    const int q = static_cast<int>(std::min(p1.cols(), p2.cols()));
    if (q == 0) return 90.0;
    const Eigen::MatrixXd overlap = p1.transpose() * p2;
    Eigen::JacobiSVD<Eigen::MatrixXd> csvd(overlap);
    const double cos_t = std::clamp(csvd.singularValues()(q - 1), -1.0, 1.0);
    // Sine route: residual of p2 outside span(p1).  Accurate near zero angle,
    // where 1 - cos is below double precision.
    const Eigen::MatrixXd residual = p2 - p1 * overlap;
    Eigen::JacobiSVD<Eigen::MatrixXd> ssvd(residual);
    const double sin_t = std::clamp(ssvd.singularValues()(0), 0.0, 1.0);
    const double theta = (sin_t < 0.7) ? std::asin(sin_t) : std::acos(cos_t);
    return theta * 180.0 / M_PI;
}

}  // namespace

double principal_angle_deg(const Eigen::MatrixXd& p1, const Eigen::MatrixXd& p2) {
    if (p1.cols() != p2.cols())
        throw InvalidInput("principal_angle_deg: subspace dimensions differ");
    if (p1.rows() != p2.rows())
        throw InvalidInput("principal_angle_deg: ambient dimensions differ");
    if (p1.cols() == 0) return 0.0;
    return angle_deg_from_bases(p1, p2);
}

double max_principal_angle_deg(const Eigen::MatrixXd& p1, const Eigen::MatrixXd& p2) {
    if (p1.rows() != p2.rows())
        throw InvalidInput("max_principal_angle_deg: ambient dimensions differ");
    if (p1.cols() == 0 || p2.cols() == 0) return 90.0;
    return angle_deg_from_bases(p1, p2);
}

std::pair<Eigen::MatrixXd, int> empirical_visible_basis(const Trajectory& traj, double tau) {
    if (!(tau > 0.0)) throw InvalidInput("empirical_visible_basis: tau must be positive");
    const int n = traj.n();
    const int t_len = static_cast<int>(traj.states.cols());
    // Snapshot matrix excludes the final sample when more than one is present.
    const int cols = std::max(1, t_len - 1);
    const Eigen::MatrixXd snapshots = traj.states.leftCols(cols);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(snapshots, Eigen::ComputeThinU);
    const Eigen::VectorXd s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0.0) return {Eigen::MatrixXd(n, 0), 0};

    const double floor_val = tau * s(0);
    int best_j = -1;
    double best_ratio = -1.0;
    for (int j = 1; j < s.size(); ++j) {  // candidate dimension j (1-based index)
        if (!(s(j - 1) > floor_val)) continue;
        const double ratio = (s(j) > 0.0) ? s(j - 1) / s(j)
                                          : std::numeric_limits<double>::infinity();
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_j = j;
        }
    }
    int k_hat;
    if (best_j >= 0) {
        k_hat = best_j;
    } else {
        k_hat = rank_from_singular_values(s, tau);
    }
    return {svd.matrixU().leftCols(k_hat), k_hat};
}

}  // namespace visilin
