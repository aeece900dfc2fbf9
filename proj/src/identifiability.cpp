#include "visilin/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unsupported/Eigen/MatrixFunctions>

#include "visilin/visibility.hpp"

namespace visilin {

namespace {

int svd_rank(const Eigen::MatrixXd& mat, double rtol) {
    if (mat.rows() == 0 || mat.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
    const Eigen::VectorXd& s = svd.singularValues();
    if (s(0) <= 0.0) return 0;
    int r = 0;
    while (r < s.size() && s(r) > rtol * s(0)) ++r;
    return r;
}

/// Orthonormal basis of the hyperplane orthogonal to x0; identity when x0 = 0.
Eigen::MatrixXd perp_basis(const Eigen::VectorXd& x0) {
    const int n = static_cast<int>(x0.size());
    if (x0.norm() == 0.0) return Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x0, Eigen::ComputeFullU);
    return svd.matrixU().rightCols(n - 1);
}

double smallest_singular_value(const Eigen::MatrixXcd& mat) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(mat);
    const auto& s = svd.singularValues();
    return s(s.size() - 1);
}

}  // namespace

int controllability_rank(const LtiSystem& sys, double rtol) {
    if (sys.m() == 0) return 0;
    const int n = sys.n();
    const int m = sys.m();
    Eigen::MatrixXd kalman(n, n * m);
    Eigen::MatrixXd block = sys.b;
    for (int j = 0; j < n; ++j) {
        kalman.middleCols(j * m, m) = block;
        if (j + 1 < n) block = sys.a * block;
    }
    return svd_rank(kalman, rtol);
}

AlignmentMargins eig_alignment_margins(const LtiSystem& sys, const Eigen::VectorXd& x0) {
    const int n = sys.n();
    const int m = sys.m();
    if (x0.size() != n) throw InvalidInput("eig_alignment_margins: x0 dimension mismatch");

    Eigen::MatrixXd excitation(n, m + 1);
    excitation.col(0) = x0;
    if (m > 0) excitation.rightCols(m) = sys.b;
    Eigen::JacobiSVD<Eigen::MatrixXd> esvd(excitation);
    const double excitation_norm = esvd.singularValues()(0);
    if (excitation_norm == 0.0)
        throw InvalidInput("eig_alignment_margins: [x0 B] is zero");

    // Left eigenvectors of A are right eigenvectors of A^T (no conjugation).
    Eigen::EigenSolver<Eigen::MatrixXd> eig(sys.a.transpose());
    const Eigen::MatrixXcd w = eig.eigenvectors();
    const Eigen::VectorXcd lambdas = eig.eigenvalues();

    AlignmentMargins out;
    out.mu_values.reserve(n);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXcd wi = w.col(i);
        const Eigen::RowVectorXcd overlap = wi.transpose() * excitation.cast<std::complex<double>>();
        out.mu_values.push_back(overlap.norm() / (wi.norm() * excitation_norm));
    }
    out.mu_min = *std::min_element(out.mu_values.begin(), out.mu_values.end());

    const double gap_tol = 1e-8 * sys.a.norm();
    for (int i = 0; i < n && !out.degenerate; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(lambdas(i) - lambdas(j)) < gap_tol) {
                out.degenerate = true;
                break;
            }
    return out;
}

double pbh_margin(const LtiSystem& sys, const Eigen::VectorXd& x0, bool refine_grid) {
    const int n = sys.n();
    const int m = sys.m();
    if (x0.size() != n) throw InvalidInput("pbh_margin: x0 dimension mismatch");

    const Eigen::MatrixXd q = perp_basis(x0);
    if (q.cols() == 0) return std::numeric_limits<double>::infinity();

    const Eigen::VectorXcd lambdas = sys.a.eigenvalues();
    const Eigen::MatrixXcd a_c = sys.a.cast<std::complex<double>>();
    const Eigen::MatrixXcd b_c = sys.b.cast<std::complex<double>>();
    const Eigen::MatrixXcd q_c = q.cast<std::complex<double>>();

    auto margin_at = [&](std::complex<double> lambda) {
        Eigen::MatrixXcd pencil(n, n + m);
        pencil.leftCols(n) = lambda * Eigen::MatrixXcd::Identity(n, n) - a_c;
        if (m > 0) pencil.rightCols(m) = b_c;
        return smallest_singular_value(q_c.transpose() * pencil);
    };

    double d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) d = std::min(d, margin_at(lambdas(i)));

    if (refine_grid) {
        // Local rings around each eigenvalue; a cheap proxy for the infimum
        // over the whole plane (no global optimization attempted).
        for (int i = 0; i < n; ++i) {
            const double scale = std::max(1.0, std::abs(lambdas(i)));
            for (double radius : {1e-8, 1e-6, 1e-4, 1e-2}) {
                for (int q_idx = 0; q_idx < 8; ++q_idx) {
                    const double phi = 2.0 * M_PI * q_idx / 8.0;
                    const std::complex<double> shift(radius * scale * std::cos(phi),
                                                     radius * scale * std::sin(phi));
                    d = std::min(d, margin_at(lambdas(i) + shift));
                }
            }
        }
    }
    return d;
}

bool is_identifiable(const LtiSystem& sys, const Eigen::VectorXd& x0, double eps) {
    if (!(eps > 0.0)) throw InvalidInput("is_identifiable: eps must be positive");
    return pbh_margin(sys, x0) > eps;
}

GramianReport informativeness_gramian(const Eigen::MatrixXd& xi_seq,
                                      const Eigen::MatrixXd& u_seq, double dt) {
    if (!(dt > 0.0)) throw InvalidInput("informativeness_gramian: dt must be positive");
    if (xi_seq.cols() != u_seq.cols())
        throw InvalidInput("informativeness_gramian: sequence lengths differ");
    if (xi_seq.cols() == 0)
        throw InvalidInput("informativeness_gramian: empty sequences");

    const int k = static_cast<int>(xi_seq.rows());
    const int m = static_cast<int>(u_seq.rows());
    const int dim = k + m;
    if (dim == 0) throw InvalidInput("informativeness_gramian: regressor has dimension zero");

    Eigen::MatrixXd z(dim, xi_seq.cols());
    z.topRows(k) = xi_seq;
    z.bottomRows(m) = u_seq;

    GramianReport report;
    report.gramian = (z * z.transpose()) * dt;
    // Symmetrize away accumulation asymmetry before the eigensolve.
    report.gramian = 0.5 * (report.gramian + report.gramian.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(report.gramian);
    report.min_eig = eig.eigenvalues()(0);
    const double tol_pd = 1e-8 * report.gramian.trace() / dim;
    report.informative = report.min_eig > tol_pd;
    return report;
}

bool hankel_pe_order(const Eigen::MatrixXd& u_seq, int r, double rtol) {
    const int m = static_cast<int>(u_seq.rows());
    const int len = static_cast<int>(u_seq.cols());
    if (r < 1) throw InvalidInput("hankel_pe_order: order must be positive");
    if (len < r) throw InvalidInput("hankel_pe_order: sequence shorter than Hankel depth");
    if (m == 0) return false;
    const int cols = len - r + 1;
    Eigen::MatrixXd hankel(r * m, cols);
    for (int i = 0; i < r; ++i) hankel.middleRows(i * m, m) = u_seq.middleCols(i, cols);
    return svd_rank(hankel, rtol) == r * m;
}

double augmented_gramian_min_eig(const LtiSystem& sys, const Eigen::VectorXd& x0,
                                 int horizon_steps, double dt) {
    if (horizon_steps < 1)
        throw InvalidInput("augmented_gramian_min_eig: horizon must be at least 1");
    if (!(dt > 0.0)) throw InvalidInput("augmented_gramian_min_eig: dt must be positive");
    const int n = sys.n();
    if (x0.size() != n) throw InvalidInput("augmented_gramian_min_eig: x0 dimension mismatch");

    Eigen::MatrixXd seed(n, sys.m() + 1);
    seed.col(0) = x0;
    if (sys.m() > 0) seed.rightCols(sys.m()) = sys.b;

    const Eigen::MatrixXd step = (sys.a * dt).exp();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd propagated = seed;
    for (int j = 0; j < horizon_steps; ++j) {
        w += propagated * propagated.transpose() * dt;
        if (j + 1 < horizon_steps) propagated = step * propagated;
    }
    w = 0.5 * (w + w.transpose().eval());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
    return eig.eigenvalues()(0);
}

MarginReport margin_report(const LtiSystem& sys, const Eigen::VectorXd& x0, double eps) {
    MarginReport report;
    const AlignmentMargins margins = eig_alignment_margins(sys, x0);
    report.mu_values = margins.mu_values;
    report.mu_min = margins.mu_min;
    report.degenerate_spectrum = margins.degenerate;
    report.d_pbh = pbh_margin(sys, x0);
    report.ctrb_rank = controllability_rank(sys);
    report.visible_dim = visible_subspace(sys, x0).k;
    report.eps = eps;
    report.identifiable = report.d_pbh > eps;
    return report;
}

MarginReport margin_report(const LtiSystem& sys, const Eigen::VectorXd& x0,
                           const Trajectory& traj, const Eigen::MatrixXd& u_seq,
                           double eps) {
    MarginReport report = margin_report(sys, x0, eps);
    const Subspace sub = visible_subspace(sys, x0);
    const int t_len = static_cast<int>(u_seq.cols());
    if (traj.states.cols() < t_len)
        throw InvalidInput("margin_report: trajectory shorter than input sequence");
    const Eigen::MatrixXd xi = sub.basis.transpose() * traj.states.leftCols(t_len);
    report.gramian_min_eig =
        informativeness_gramian(xi, u_seq, traj.dt).min_eig;
    return report;
}

}  // namespace visilin
