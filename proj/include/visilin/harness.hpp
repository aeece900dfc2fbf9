#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "visilin/types.hpp"

namespace visilin {

enum class ExperimentId {
    heatmap,
    x0_density,
    recovery_noise,
    recovery_k,
    dt_sweep,
    dim_sweep,
    empirical_vis,
};

std::string experiment_name(ExperimentId id);
ExperimentId experiment_from_name(const std::string& name);

/// Configuration of one batch experiment.  Every run is a pure function of
/// this struct: per-trial seeds are derived from base_seed and the cell's
/// coordinate values, so identical configs give byte-identical outputs, any
/// grid subset reproduces its rows exactly, and the worker count never
/// changes results.
struct RunConfig {
    ExperimentId experiment = ExperimentId::heatmap;
    std::uint64_t base_seed = 12345;
    int workers = 1;
    int trials = 0;  ///< per-cell count; meaning depends on the experiment

    int n = 10;
    int m = 2;
    double density = 0.1;
    double rho_target = 0.95;
    int horizon = 80;
    int x0_per_system = 5;   ///< x0 draws per accepted system (x0_density)
    int k_fixed = 5;         ///< planted visible dimension (dim_sweep, empirical_vis)

    std::vector<int> n_grid;
    std::vector<double> p_grid;
    std::vector<double> p_x0_grid;
    std::vector<double> sigma_grid;
    std::vector<double> dt_grid;
    std::vector<double> eta_grid;
    std::vector<int> k_grid;

    std::string out_dir;

    static RunConfig defaults_for(ExperimentId id);
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    void validate() const;
};

// ---- typed result rows -----------------------------------------------------

struct HeatmapRow {
    int n;
    double p;
    double frac_controllable;
    double se;
    int trials;
};

struct X0DensityRow {
    double p_x0;
    double tau;
    double se;
    int triples;
};

/// Lower-median / no-interpolation summary of one metric across trials.
struct MetricStats {
    double median = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
};

struct RecoveryRow {
    double sigma;
    int k;  ///< -1 when pooled across visibility strata
    std::string method;
    MetricStats ree_full;
    MetricStats ree_vis;
    double frac_vis_le_full;
    int trials;
};

struct DtSweepRow {
    double dt;
    MetricStats ree_full;
    MetricStats ree_vis;
    double frac_k_preserved;
    int trials;
};

struct DimSweepRow {
    int n;
    int k;
    double invisible_fraction;
    MetricStats ree_full;
    MetricStats ree_vis;
    int trials;
};

struct EmpiricalVisRow {
    double eta;
    MetricStats theta_max_deg;
    double theta_max_max;
    MetricStats ree_full;
    MetricStats ree_oracle_vis;
    MetricStats ree_emp_vis;
    double ree_emp_vis_max;
    double k_hat_median;
    int trials;
};

// ---- runners ----------------------------------------------------------------

std::vector<HeatmapRow> run_heatmap(const RunConfig& cfg);
std::vector<X0DensityRow> run_x0_density(const RunConfig& cfg);
std::vector<RecoveryRow> run_recovery(const RunConfig& cfg);  // noise or k mode
std::vector<DtSweepRow> run_dt_sweep(const RunConfig& cfg);
std::vector<DimSweepRow> run_dim_sweep(const RunConfig& cfg);
std::vector<EmpiricalVisRow> run_empirical_vis(const RunConfig& cfg);

std::string heatmap_csv(const std::vector<HeatmapRow>& rows);
std::string x0_density_csv(const std::vector<X0DensityRow>& rows);
std::string recovery_csv(const std::vector<RecoveryRow>& rows, bool by_k);
std::string dt_sweep_csv(const std::vector<DtSweepRow>& rows);
std::string dim_sweep_csv(const std::vector<DimSweepRow>& rows);
std::string empirical_vis_csv(const std::vector<EmpiricalVisRow>& rows);

/// In-memory result of a run: the CSV plus a metadata JSON echoing the config.
struct RunArtifacts {
    std::string csv_name;
    std::string csv;
    std::string meta_name;
    std::string meta;
};

RunArtifacts run_experiment(const RunConfig& cfg);

/// Runs and writes the artifacts into cfg.out_dir (created if missing).
void run_and_write(const RunConfig& cfg);

// ---- shared pipeline pieces (used by the acceptance suite as well) ----------

/// One curated triple of the subsystem-recovery ensemble.  `map` is the
/// one-step simulation matrix (spectral radius <= rho_target); the
/// continuous-time system is (map - I)/dt with dt = 1, so a unit-step Euler
/// rollout of it reproduces x[j+1] = map x[j] + B u[j].
struct RecoveryTriple {
    Eigen::MatrixXd map;
    Eigen::MatrixXd b;
    Eigen::VectorXd x0;
    Eigen::MatrixXd basis;  ///< oracle visible basis
    int k = 0;
    std::uint64_t seed = 0;  ///< per-triple stream for inputs and noise
};

/// Fills the visibility strata k_grid with `per_k` uncontrollable triples
/// each, by rejection from the sparse truncated-Gaussian ensemble.
std::vector<RecoveryTriple> stratified_recovery_triples(const RunConfig& cfg, int per_k);

/// Plants a triple with an exactly k-dimensional visible subspace in a random
/// orthogonal frame (sparse blocks, x0 and Im(B) inside the planted subspace).
RecoveryTriple planted_triple(int n, int k, int m, double density, double rho_target,
                              std::uint64_t seed);

/// Lower median: sorted[(N-1)/2], no interpolation.
double lower_median(std::vector<double> values);
MetricStats summarize(const std::vector<double>& values);

}  // namespace visilin
