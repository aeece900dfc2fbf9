#pragma once

#include <cstdint>

#include "visilin/types.hpp"

namespace visilin {

/// Exact zero-order-hold discretization:
///   Ad = exp(A dt),  Bd = integral_0^dt exp(A s) B ds,
/// both read off from the exponential of the augmented matrix [[A, B], [0, 0]] dt.
/// The resulting pair reproduces the continuous flow exactly at the sample
/// times for piecewise-constant inputs.
DiscreteSystem discretize_zoh(const LtiSystem& sys, double dt);

/// Rolls out x[j+1] = Ad x[j] + Bd u[j] from the experiment's initial state.
/// The experiment step size must match the discretization step.
Trajectory simulate_discrete(const DiscreteSystem& dsys, const Experiment& exp);

/// Forward-Euler rollout x[j+1] = x[j] + dt (A x[j] + B u[j]).
Trajectory simulate_euler(const LtiSystem& sys, const Experiment& exp);

/// Adds i.i.d. N(0, sigma^2) observation noise to every state entry.
/// Deterministic for a fixed seed; sigma = 0 returns the input unchanged.
Trajectory add_noise(const Trajectory& traj, double sigma, std::uint64_t seed);

/// The one-step map realized by simulate_euler: (I + A dt, B dt).
DiscreteSystem euler_pair(const LtiSystem& sys, double dt);

}  // namespace visilin
