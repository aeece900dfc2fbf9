#include "visilin/lti.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "visilin/rng.hpp"

namespace visilin {

DiscreteSystem discretize_zoh(const LtiSystem& sys, double dt) {
    if (!(dt > 0.0)) throw InvalidInput("discretize_zoh: dt must be positive");
    const int n = sys.n();
    const int m = sys.m();
    if (m == 0) {
        Eigen::MatrixXd ad = (sys.a * dt).exp();
        return DiscreteSystem(std::move(ad), Eigen::MatrixXd::Zero(n, 0), dt);
    }
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = sys.a * dt;
    aug.topRightCorner(n, m) = sys.b * dt;
    const Eigen::MatrixXd big = aug.exp();
    return DiscreteSystem(big.topLeftCorner(n, n), big.topRightCorner(n, m), dt);
}

Trajectory simulate_discrete(const DiscreteSystem& dsys, const Experiment& exp) {
    if (exp.x0.size() != dsys.n())
        throw InvalidInput("simulate_discrete: x0 dimension mismatch");
    if (exp.m() != dsys.m())
        throw InvalidInput("simulate_discrete: input dimension mismatch");
    if (std::abs(exp.dt - dsys.dt) > 1e-12 * std::max(exp.dt, dsys.dt))
        throw InvalidInput("simulate_discrete: experiment step differs from discretization step");
    const int t_len = exp.horizon();
    Eigen::MatrixXd states(dsys.n(), t_len + 1);
    states.col(0) = exp.x0;
    for (int j = 0; j < t_len; ++j)
        states.col(j + 1) = dsys.ad * states.col(j) + dsys.bd * exp.inputs.col(j);
    return Trajectory(std::move(states), dsys.dt);
}

Trajectory simulate_euler(const LtiSystem& sys, const Experiment& exp) {
    if (exp.x0.size() != sys.n())
        throw InvalidInput("simulate_euler: x0 dimension mismatch");
    if (exp.m() != sys.m())
        throw InvalidInput("simulate_euler: input dimension mismatch");
    const int t_len = exp.horizon();
    Eigen::MatrixXd states(sys.n(), t_len + 1);
    states.col(0) = exp.x0;
    for (int j = 0; j < t_len; ++j)
        states.col(j + 1) =
            states.col(j) + exp.dt * (sys.a * states.col(j) + sys.b * exp.inputs.col(j));
    return Trajectory(std::move(states), exp.dt);
}

Trajectory add_noise(const Trajectory& traj, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw InvalidInput("add_noise: sigma must be nonnegative");
    if (sigma == 0.0) return traj;
    Rng rng(seed);
    Eigen::MatrixXd noisy = traj.states;
    // Column-major draw order: sample j, then state index within the sample.
    for (Eigen::Index j = 0; j < noisy.cols(); ++j)
        for (Eigen::Index i = 0; i < noisy.rows(); ++i)
            noisy(i, j) += sigma * rng.normal();
    return Trajectory(std::move(noisy), traj.dt);
}

DiscreteSystem euler_pair(const LtiSystem& sys, double dt) {
    if (!(dt > 0.0)) throw InvalidInput("euler_pair: dt must be positive");
    Eigen::MatrixXd ad = Eigen::MatrixXd::Identity(sys.n(), sys.n()) + sys.a * dt;
    return DiscreteSystem(std::move(ad), sys.b * dt, dt);
}

}  // namespace visilin
