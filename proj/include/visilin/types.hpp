#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace visilin {

/// Thrown when inputs violate an operation's preconditions (dimension
/// mismatches, non-finite entries, malformed files or configs).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation cannot proceed for numerical reasons
/// (e.g. an ill-conditioned change of basis).
class NumericalDegeneracy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Continuous-time linear system  xdot = A x + B u.
///
/// A is n x n, B is n x m with m >= 0.  All entries must be finite; the
/// constructor rejects anything else so downstream code can assume a valid
/// system.  Instances are immutable values, safe to share across threads.
struct LtiSystem {
    Eigen::MatrixXd a;
    Eigen::MatrixXd b;

    LtiSystem(Eigen::MatrixXd a_matrix, Eigen::MatrixXd b_matrix)
        : a(std::move(a_matrix)), b(std::move(b_matrix)) {
        if (a.rows() != a.cols())
            throw InvalidInput("LtiSystem: A must be square");
        if (b.rows() != a.rows())
            throw InvalidInput("LtiSystem: B must have as many rows as A");
        if (!a.allFinite() || !b.allFinite())
            throw InvalidInput("LtiSystem: non-finite entries");
    }

    int n() const { return static_cast<int>(a.rows()); }
    int m() const { return static_cast<int>(b.cols()); }
};

/// Exact sampled-data pair: x[j+1] = Ad x[j] + Bd u[j] at step dt.
struct DiscreteSystem {
    Eigen::MatrixXd ad;
    Eigen::MatrixXd bd;
    double dt;

    DiscreteSystem(Eigen::MatrixXd ad_matrix, Eigen::MatrixXd bd_matrix, double step)
        : ad(std::move(ad_matrix)), bd(std::move(bd_matrix)), dt(step) {
        if (ad.rows() != ad.cols())
            throw InvalidInput("DiscreteSystem: Ad must be square");
        if (bd.rows() != ad.rows())
            throw InvalidInput("DiscreteSystem: Bd must have as many rows as Ad");
        if (!(dt > 0.0))
            throw InvalidInput("DiscreteSystem: dt must be positive");
        if (!ad.allFinite() || !bd.allFinite())
            throw InvalidInput("DiscreteSystem: non-finite entries");
    }

    int n() const { return static_cast<int>(ad.rows()); }
    int m() const { return static_cast<int>(bd.cols()); }
};

/// A realized experiment: initial state plus a sampled input sequence.
/// inputs is m x T, one column per step; T >= 1.
struct Experiment {
    Eigen::VectorXd x0;
    Eigen::MatrixXd inputs;
    double dt;

    Experiment(Eigen::VectorXd initial, Eigen::MatrixXd input_seq, double step)
        : x0(std::move(initial)), inputs(std::move(input_seq)), dt(step) {
        if (inputs.cols() < 1)
            throw InvalidInput("Experiment: need at least one input sample");
        if (!(dt > 0.0))
            throw InvalidInput("Experiment: dt must be positive");
        if (!x0.allFinite() || !inputs.allFinite())
            throw InvalidInput("Experiment: non-finite entries");
    }

    int horizon() const { return static_cast<int>(inputs.cols()); }
    int m() const { return static_cast<int>(inputs.rows()); }
};

/// Sampled state trajectory; states is n x (T+1), one column per sample time.
struct Trajectory {
    Eigen::MatrixXd states;
    double dt;

    Trajectory(Eigen::MatrixXd state_seq, double step)
        : states(std::move(state_seq)), dt(step) {
        if (states.cols() < 1)
            throw InvalidInput("Trajectory: empty state sequence");
        if (!(dt > 0.0))
            throw InvalidInput("Trajectory: dt must be positive");
    }

    int n() const { return static_cast<int>(states.rows()); }
    int steps() const { return static_cast<int>(states.cols()) - 1; }
};

}  // namespace visilin
