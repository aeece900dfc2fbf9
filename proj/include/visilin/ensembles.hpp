#pragma once

#include <cstdint>
#include <optional>

#include "visilin/types.hpp"

namespace visilin {

enum class EnsembleFamily { ginibre_sparse, trunc_gauss_sparse };

/// Recipe for one random (A, B) draw.  density_p is the Bernoulli keep
/// probability applied entrywise (diagonal included); rho_target caps the
/// spectral radius of A and is required for the truncated-Gaussian family.
struct EnsembleSpec {
    int n = 0;
    int m = 0;
    double density_p = 0.0;
    EnsembleFamily family = EnsembleFamily::ginibre_sparse;
    std::optional<double> rho_target;
    std::uint64_t seed = 0;
};

/// Entries X_ij M_ij with X ~ N(0, 1/n) and M ~ Ber(p), for A and B alike.
LtiSystem ginibre_sparse(const EnsembleSpec& spec);

/// Nonzero entries i.i.d. standard normal conditioned on |x| >= 0.1, masked at
/// density p; A is then rescaled so its spectral radius is at most rho_target.
LtiSystem trunc_gauss_sparse(const EnsembleSpec& spec);

/// Dispatches on spec.family.
LtiSystem draw_system(const EnsembleSpec& spec);

/// A * min(1, rho_target / rho(A)); the zero matrix passes through unchanged.
Eigen::MatrixXd stabilize(const Eigen::MatrixXd& a, double rho_target);

/// Unit-norm initial state: Gaussian direction, entrywise Bernoulli(p_x0)
/// mask, renormalized.  Draws whose masked vector has norm below 1e-14 are
/// rejected and redrawn.
Eigen::VectorXd sample_x0(int n, double p_x0, std::uint64_t seed);

/// Fraction of entries with magnitude above tau.
double realized_density(const Eigen::MatrixXd& x, double tau = 1e-12);

/// Persistently exciting input: i.i.d. Gaussian per channel, then each channel
/// scaled to unit empirical standard deviation.  m x horizon.
Eigen::MatrixXd pe_input(int m, int horizon, std::uint64_t seed);

}  // namespace visilin
