#include "visilin/ensembles.hpp"

#include <cmath>

#include "visilin/rng.hpp"

namespace visilin {

namespace {

void validate(const EnsembleSpec& spec) {
    if (spec.n < 1) throw InvalidInput("EnsembleSpec: n must be positive");
    if (spec.m < 0) throw InvalidInput("EnsembleSpec: m must be nonnegative");
    if (spec.density_p < 0.0 || spec.density_p > 1.0)
        throw InvalidInput("EnsembleSpec: density must be in [0, 1]");
    if (spec.rho_target && !(*spec.rho_target > 0.0))
        throw InvalidInput("EnsembleSpec: rho_target must be positive");
}

/// Row-major fill; per entry: one Gaussian draw, then the Bernoulli keep.
Eigen::MatrixXd masked_gaussian(int rows, int cols, double p, double scale, Rng& rng) {
    Eigen::MatrixXd out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const double g = rng.normal();
            out(i, j) = (rng.uniform() < p) ? scale * g : 0.0;
        }
    return out;
}

double trunc_normal(Rng& rng) {
    for (;;) {
        const double g = rng.normal();
        if (std::abs(g) >= 0.1) return g;
    }
}

Eigen::MatrixXd masked_trunc_gaussian(int rows, int cols, double p, Rng& rng) {
    Eigen::MatrixXd out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            const double g = trunc_normal(rng);
            out(i, j) = (rng.uniform() < p) ? g : 0.0;
        }
    return out;
}

}  // namespace

LtiSystem ginibre_sparse(const EnsembleSpec& spec) {
    validate(spec);
    Rng rng(spec.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(spec.n));
    Eigen::MatrixXd a = masked_gaussian(spec.n, spec.n, spec.density_p, scale, rng);
    Eigen::MatrixXd b = masked_gaussian(spec.n, spec.m, spec.density_p, scale, rng);
    if (spec.rho_target) a = stabilize(a, *spec.rho_target);
    return LtiSystem(std::move(a), std::move(b));
}

LtiSystem trunc_gauss_sparse(const EnsembleSpec& spec) {
    validate(spec);
    if (!spec.rho_target)
        throw InvalidInput("trunc_gauss_sparse: rho_target is required");
    Rng rng(spec.seed);
    Eigen::MatrixXd a = masked_trunc_gaussian(spec.n, spec.n, spec.density_p, rng);
    Eigen::MatrixXd b = masked_trunc_gaussian(spec.n, spec.m, spec.density_p, rng);
    a = stabilize(a, *spec.rho_target);
    return LtiSystem(std::move(a), std::move(b));
}

LtiSystem draw_system(const EnsembleSpec& spec) {
    return spec.family == EnsembleFamily::ginibre_sparse ? ginibre_sparse(spec)
                                                         : trunc_gauss_sparse(spec);
}

Eigen::MatrixXd stabilize(const Eigen::MatrixXd& a, double rho_target) {
    if (!(rho_target > 0.0)) throw InvalidInput("stabilize: rho_target must be positive");
    if (a.rows() == 0) return a;
    const double rho = a.eigenvalues().cwiseAbs().maxCoeff();
    if (rho <= rho_target) return a;
    return a * (rho_target / rho);
}

Eigen::VectorXd sample_x0(int n, double p_x0, std::uint64_t seed) {
    if (n < 1) throw InvalidInput("sample_x0: n must be positive");
    if (!(p_x0 > 0.0) || p_x0 > 1.0) throw InvalidInput("sample_x0: p_x0 must be in (0, 1]");
    Rng rng(seed);
    for (;;) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = rng.normal();
        if (v.norm() < 1e-14) continue;
        v /= v.norm();
        if (p_x0 < 1.0) {
            for (int i = 0; i < n; ++i)
                if (!(rng.uniform() < p_x0)) v(i) = 0.0;
            if (v.norm() < 1e-14) continue;
            v /= v.norm();
        }
        return v;
    }
}

double realized_density(const Eigen::MatrixXd& x, double tau) {
    if (x.size() == 0) return 0.0;
    const Eigen::Index hits = (x.cwiseAbs().array() > tau).count();
    return static_cast<double>(hits) / static_cast<double>(x.size());
}

Eigen::MatrixXd pe_input(int m, int horizon, std::uint64_t seed) {
    if (m < 1) throw InvalidInput("pe_input: m must be positive");
    if (horizon < 2) throw InvalidInput("pe_input: horizon must be at least 2");
    Rng rng(seed);
    Eigen::MatrixXd u(m, horizon);
    for (int ch = 0; ch < m; ++ch) {
        for (int j = 0; j < horizon; ++j) u(ch, j) = rng.normal();
        const double mean = u.row(ch).mean();
        const double sd =
            std::sqrt((u.row(ch).array() - mean).square().sum() / horizon);
        if (sd > 0.0) u.row(ch) /= sd;
    }
    return u;
}

}  // namespace visilin
