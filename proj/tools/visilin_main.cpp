// Command-line front end: identifiability margins, consistent-set sampling,
// snapshot fitting, and batch experiment runs.
//
// Exit codes: 0 success, 2 invalid input or config, 3 numerical degeneracy.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "visilin/consistent_set.hpp"
#include "visilin/estimators.hpp"
#include "visilin/harness.hpp"
#include "visilin/identifiability.hpp"
#include "visilin/rng.hpp"
#include "visilin/serialization.hpp"
#include "visilin/visibility.hpp"

namespace {

using namespace visilin;

Eigen::VectorXd load_x0(const std::string& path) {
    const nlohmann::json j = read_json_file(path);
    if (j.is_array()) return vector_from_json(j, "x0");
    if (j.is_object() && j.contains("x0")) return vector_from_json(j["x0"], "x0");
    throw InvalidInput("x0 file must be an array or an object with field 'x0'");
}

int cmd_margins(const std::string& system_path, const std::string& x0_path,
                double eps, const std::string& traj_path, const std::string& inputs_path) {
    const LtiSystem sys = system_from_json(read_json_file(system_path));
    const Eigen::VectorXd x0 = load_x0(x0_path);
    MarginReport report;
    if (!traj_path.empty()) {
        if (inputs_path.empty())
            throw InvalidInput("margins: --traj requires --inputs");
        const Trajectory traj = trajectory_from_csv(read_text_file(traj_path));
        const auto [u, u_dt] = inputs_from_csv(read_text_file(inputs_path));
        (void)u_dt;
        report = margin_report(sys, x0, traj, u, eps);
    } else {
        report = margin_report(sys, x0, eps);
    }
    std::cout << margin_report_to_json(report).dump(2) << "\n";
    return 0;
}

int cmd_consistent(const std::string& system_path, const std::string& x0_path,
                   int samples, std::uint64_t seed, double scale,
                   const std::string& out_path) {
    const LtiSystem sys = system_from_json(read_json_file(system_path));
    const Eigen::VectorXd x0 = load_x0(x0_path);
    nlohmann::json out;
    out["singleton"] = is_singleton(sys, x0);
    out["visible_dim"] = visible_subspace(sys, x0).k;
    out["members"] = nlohmann::json::array();
    for (int i = 0; i < samples; ++i) {
        const LtiSystem member = sample_consistent(sys, x0, scale, derive_seed(seed, i));
        out["members"].push_back(system_to_json(member));
    }
    const std::string text = out.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
    return 0;
}

int cmd_fit(const std::string& method, const std::string& traj_path,
            const std::string& inputs_path, double lambda, int iters,
            const std::string& out_path) {
    const Trajectory traj = trajectory_from_csv(read_text_file(traj_path));
    const auto [u, u_dt] = inputs_from_csv(read_text_file(inputs_path));
    (void)u_dt;
    FitResult fit;
    if (method == "dmdc")
        fit = dmdc_fit(traj, u);
    else if (method == "moesp")
        fit = moesp_fit(traj, u);  // same least-squares solution as dmdc
    else if (method == "stlsq")
        fit = stlsq_fit(traj, u, lambda, iters);
    else
        throw InvalidInput("fit: unknown method '" + method + "'");
    const std::string text = fit_result_to_json(fit).dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int workers,
            std::int64_t seed_override) {
    RunConfig cfg = RunConfig::from_json(read_json_file(config_path));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (workers > 0) cfg.workers = workers;
    if (seed_override >= 0) cfg.base_seed = static_cast<std::uint64_t>(seed_override);
    run_and_write(cfg);
    std::cout << "wrote " << experiment_name(cfg.experiment) << ".csv to " << cfg.out_dir
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"visilin: experiment-conditional identifiability toolkit for LTI systems"};
    app.require_subcommand(1);

    std::string system_path, x0_path, traj_path, inputs_path, out_path;
    std::string method = "dmdc";
    std::string config_path, out_dir;
    double eps = 1e-6, scale = 1.0, lambda = 0.05;
    int samples = 10, iters = 8, workers = 0;
    std::uint64_t seed = 0;
    std::int64_t seed_override = -1;

    auto* margins = app.add_subcommand("margins", "identifiability margins for (system, x0)");
    margins->add_option("--system", system_path, "system JSON")->required();
    margins->add_option("--x0", x0_path, "initial state JSON")->required();
    margins->add_option("--eps", eps, "identifiability threshold");
    margins->add_option("--traj", traj_path, "trajectory CSV for the Gramian check");
    margins->add_option("--inputs", inputs_path, "input CSV for the Gramian check");

    auto* consistent =
        app.add_subcommand("consistent", "sample the experiment-consistent family");
    consistent->add_option("--system", system_path, "system JSON")->required();
    consistent->add_option("--x0", x0_path, "initial state JSON")->required();
    consistent->add_option("--samples", samples, "number of members");
    consistent->add_option("--seed", seed, "random seed");
    consistent->add_option("--scale", scale, "std of the free blocks");
    consistent->add_option("--out", out_path, "output JSON path (stdout if omitted)");

    auto* fit = app.add_subcommand("fit", "fit a one-step model from snapshots");
    fit->add_option("--method", method, "dmdc | stlsq | moesp");
    fit->add_option("--traj", traj_path, "trajectory CSV")->required();
    fit->add_option("--inputs", inputs_path, "input CSV")->required();
    fit->add_option("--lambda", lambda, "stlsq threshold");
    fit->add_option("--iters", iters, "stlsq iterations");
    fit->add_option("--out", out_path, "output JSON path (stdout if omitted)");

    auto* run = app.add_subcommand("run", "run a batch experiment from a config file");
    run->add_option("--config", config_path, "run config JSON")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--workers", workers, "worker threads");
    run->add_option("--seed", seed_override, "override base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (margins->parsed())
            return cmd_margins(system_path, x0_path, eps, traj_path, inputs_path);
        if (consistent->parsed())
            return cmd_consistent(system_path, x0_path, samples, seed, scale, out_path);
        if (fit->parsed())
            return cmd_fit(method, traj_path, inputs_path, lambda, iters, out_path);
        if (run->parsed()) return cmd_run(config_path, out_dir, workers, seed_override);
    } catch (const NumericalDegeneracy& e) {
        std::cerr << "numerical degeneracy: " << e.what() << "\n";
        return 3;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
