#include "visilin/consistent_set.hpp"

#include <algorithm>

#include "visilin/lti.hpp"
#include "visilin/rng.hpp"
#include "visilin/visibility.hpp"

namespace visilin {

LtiSystem consistent_member(const LtiSystem& sys, const Eigen::VectorXd& x0,
                            const ConsistentParam& param) {
    const int n = sys.n();
    const Subspace sub = visible_subspace(sys, x0);
    const int k = sub.k;
    if (k == n) {
        if (param.theta.size() != 0 || param.psi.size() != 0)
            throw InvalidInput("consistent_member: fully visible system admits no free blocks");
        return sys;
    }
    if (param.theta.rows() != k || param.theta.cols() != n - k)
        throw InvalidInput("consistent_member: theta must be k x (n-k)");
    if (param.psi.rows() != n - k || param.psi.cols() != n - k)
        throw InvalidInput("consistent_member: psi must be (n-k) x (n-k)");

    const BlockForm bf = block_form(sys, x0, sub);
    Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(n, n);
    blocks.topLeftCorner(k, k) = bf.a_v;
    blocks.topRightCorner(k, n - k) = param.theta;
    blocks.bottomRightCorner(n - k, n - k) = param.psi;
    // T is orthogonal, so the inverse transform is the transpose.
    Eigen::MatrixXd a_tilde = bf.t_matrix * blocks * bf.t_matrix.transpose();
    return LtiSystem(std::move(a_tilde), sys.b);
}

LtiSystem sample_consistent(const LtiSystem& sys, const Eigen::VectorXd& x0,
                            double scale, std::uint64_t seed) {
    if (!(scale > 0.0)) throw InvalidInput("sample_consistent: scale must be positive");
    const int n = sys.n();
    const int k = visible_subspace(sys, x0).k;
    if (k == n) return sys;
    Rng rng(seed);
    ConsistentParam param{Eigen::MatrixXd(k, n - k), Eigen::MatrixXd(n - k, n - k)};
    for (Eigen::Index j = 0; j < param.theta.cols(); ++j)
        for (Eigen::Index i = 0; i < param.theta.rows(); ++i)
            param.theta(i, j) = scale * rng.normal();
    for (Eigen::Index j = 0; j < param.psi.cols(); ++j)
        for (Eigen::Index i = 0; i < param.psi.rows(); ++i)
            param.psi(i, j) = scale * rng.normal();
    return consistent_member(sys, x0, param);
}

double consistency_residual(const LtiSystem& sys1, const LtiSystem& sys2,
                            const Experiment& exp) {
    if (sys1.n() != sys2.n() || sys1.m() != sys2.m())
        throw InvalidInput("consistency_residual: system dimensions differ");
    if (exp.x0.size() != sys1.n() || exp.m() != sys1.m())
        throw InvalidInput("consistency_residual: experiment does not match systems");

    const Trajectory t1 = simulate_discrete(discretize_zoh(sys1, exp.dt), exp);
    const Trajectory t2 = simulate_discrete(discretize_zoh(sys2, exp.dt), exp);
    double max_gap = 0.0;
    double sup_norm = 1.0;
    for (Eigen::Index j = 0; j < t1.states.cols(); ++j) {
        max_gap = std::max(max_gap, (t1.states.col(j) - t2.states.col(j)).norm());
        sup_norm = std::max({sup_norm, t1.states.col(j).norm(), t2.states.col(j).norm()});
    }
    return max_gap / sup_norm;
}

bool is_singleton(const LtiSystem& sys, const Eigen::VectorXd& x0) {
    return visible_subspace(sys, x0).k == sys.n();
}

}  // namespace visilin
