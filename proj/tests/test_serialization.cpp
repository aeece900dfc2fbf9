#include <doctest.h>

#include "test_helpers.hpp"
#include "visilin/ensembles.hpp"
#include "visilin/identifiability.hpp"
#include "visilin/lti.hpp"
#include "visilin/serialization.hpp"
#include "visilin/visibility.hpp"

using namespace visilin;

TEST_CASE("round trips preserve values exactly") {
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 2 + rep % 4;
        const int m = 1 + rep % 2;
        const LtiSystem sys = testing::random_stable(n, m, 0.7, 2.0, 1000 + rep);

        const LtiSystem sys2 = system_from_json(system_to_json(sys));
        CHECK(sys2.a == sys.a);
        CHECK(sys2.b == sys.b);

        const Experiment exp(sample_x0(n, 1.0, 2000 + rep), pe_input(m, 12, 3000 + rep),
                             0.25);
        const Experiment exp2 = experiment_from_json(experiment_to_json(exp));
        CHECK(exp2.x0 == exp.x0);
        CHECK(exp2.inputs == exp.inputs);
        CHECK(exp2.dt == exp.dt);

        const Subspace sub = visible_subspace(sys, exp.x0);
        const Subspace sub2 = subspace_from_json(subspace_to_json(sub));
        CHECK(sub2.basis == sub.basis);
        CHECK(sub2.k == sub.k);
        CHECK(sub2.singular_values == sub.singular_values);

        const Trajectory traj = simulate_euler(sys, exp);
        const Trajectory traj2 = trajectory_from_csv(trajectory_to_csv(traj));
        CHECK(traj2.states == traj.states);
        CHECK(traj2.dt == doctest::Approx(traj.dt).epsilon(1e-12));

        const auto [u2, u_dt] = inputs_from_csv(inputs_to_csv(exp.inputs, exp.dt));
        CHECK(u2 == exp.inputs);
        CHECK(u_dt == doctest::Approx(exp.dt).epsilon(1e-12));
    }
}

TEST_CASE("csv format") {
    Eigen::MatrixXd states(2, 3);
    states << 1, 2, 3, 4, 5, 6;
    const std::string csv = trajectory_to_csv(Trajectory(states, 0.5));
    CHECK(csv.rfind("t,x0,x1\n", 0) == 0);
    CHECK(csv.find("0.5,2,5") != std::string::npos);
}

TEST_CASE("malformed inputs raise invalid-input errors") {
    CHECK_THROWS_AS(system_from_json(nlohmann::json{{"A", {{1, 0}}}}), InvalidInput);
    CHECK_THROWS_AS(system_from_json(nlohmann::json{{"A", {{1, 0}, {0}}},
                                                    {"B", {{1}, {1}}}}),
                    InvalidInput);
    CHECK_THROWS_AS(trajectory_from_csv("t,x0\n"), InvalidInput);
    CHECK_THROWS_AS(trajectory_from_csv("t,x0\n0,1\nbad,2\n"), InvalidInput);
    CHECK_THROWS_AS(trajectory_from_csv("t,x0\n0,1\n0.1,2\n0.3,3\n"), InvalidInput);
}

TEST_CASE("margin report json carries every field") {
    const testing::WorkedExample ex;
    const nlohmann::json j = margin_report_to_json(margin_report(ex.sys, ex.x0_good));
    CHECK(j.contains("mu_values"));
    CHECK(j.contains("mu_min"));
    CHECK(j.contains("d_pbh"));
    CHECK(j.contains("ctrb_rank"));
    CHECK(j.contains("visible_dim"));
    CHECK(j.contains("identifiable"));
    CHECK(j["gramian_min_eig"].is_null());
    CHECK(j["identifiable"].get<bool>());
}

TEST_CASE("round-trippable double formatting") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, 0.0, -2.5e17}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}
