#include "visilin/serialization.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace visilin {

namespace {

double number_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_number()) throw InvalidInput(what + ": expected a number");
    return j.get<double>();
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, value);
        double parsed = 0.0;
        std::sscanf(buf, "%lf", &parsed);
        if (parsed == value) break;
    }
    return buf;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& mat) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput(what + ": expected nested arrays");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    if (!j[0].is_array()) throw InvalidInput(what + ": expected nested arrays");
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd mat(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols)
            throw InvalidInput(what + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c)
            mat(i, c) = number_from_json(j[i][c], what);
    }
    return mat;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array()) throw InvalidInput(what + ": expected an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = number_from_json(j[i], what);
    return v;
}

nlohmann::json system_to_json(const LtiSystem& sys) {
    return {{"A", matrix_to_json(sys.a)}, {"B", matrix_to_json(sys.b)}};
}

LtiSystem system_from_json(const nlohmann::json& j) {
    if (!j.contains("A") || !j.contains("B"))
        throw InvalidInput("system: missing A or B");
    return LtiSystem(matrix_from_json(j["A"], "A"), matrix_from_json(j["B"], "B"));
}

nlohmann::json experiment_to_json(const Experiment& exp) {
    nlohmann::json u = nlohmann::json::array();
    for (Eigen::Index j = 0; j < exp.inputs.cols(); ++j) {
        nlohmann::json step = nlohmann::json::array();
        for (Eigen::Index i = 0; i < exp.inputs.rows(); ++i)
            step.push_back(exp.inputs(i, j));
        u.push_back(std::move(step));
    }
    nlohmann::json x0 = nlohmann::json::array();
    for (Eigen::Index i = 0; i < exp.x0.size(); ++i) x0.push_back(exp.x0(i));
    return {{"x0", std::move(x0)}, {"u", std::move(u)}, {"dt", exp.dt}};
}

Experiment experiment_from_json(const nlohmann::json& j) {
    if (!j.contains("x0") || !j.contains("u") || !j.contains("dt"))
        throw InvalidInput("experiment: missing x0, u, or dt");
    const Eigen::VectorXd x0 = vector_from_json(j["x0"], "x0");
    const Eigen::MatrixXd u_rows = matrix_from_json(j["u"], "u");  // T x m
    return Experiment(x0, u_rows.transpose(), number_from_json(j["dt"], "dt"));
}

nlohmann::json subspace_to_json(const Subspace& sub) {
    nlohmann::json sv = nlohmann::json::array();
    for (Eigen::Index i = 0; i < sub.singular_values.size(); ++i)
        sv.push_back(sub.singular_values(i));
    return {{"basis", matrix_to_json(sub.basis)},
            {"k", sub.k},
            {"singular_values", std::move(sv)},
            {"rtol", sub.rtol}};
}

Subspace subspace_from_json(const nlohmann::json& j) {
    Subspace sub;
    sub.basis = matrix_from_json(j.at("basis"), "basis");
    sub.k = j.at("k").get<int>();
    sub.singular_values = vector_from_json(j.at("singular_values"), "singular_values");
    sub.rtol = number_from_json(j.at("rtol"), "rtol");
    return sub;
}

nlohmann::json margin_report_to_json(const MarginReport& report) {
    nlohmann::json j{{"mu_values", report.mu_values},
                     {"mu_min", report.mu_min},
                     {"d_pbh", report.d_pbh},
                     {"ctrb_rank", report.ctrb_rank},
                     {"visible_dim", report.visible_dim},
                     {"identifiable", report.identifiable},
                     {"eps", report.eps},
                     {"degenerate_spectrum", report.degenerate_spectrum}};
    if (report.gramian_min_eig)
        j["gramian_min_eig"] = *report.gramian_min_eig;
    else
        j["gramian_min_eig"] = nullptr;
    return j;
}

nlohmann::json fit_result_to_json(const FitResult& fit) {
    return {{"Ad", matrix_to_json(fit.ad_hat)},
            {"Bd", matrix_to_json(fit.bd_hat)},
            {"residual", fit.residual},
            {"method", fit.method == FitMethod::dmdc ? "dmdc" : "stlsq"}};
}

std::string trajectory_to_csv(const Trajectory& traj) {
    std::ostringstream out;
    out << "t";
    for (int i = 0; i < traj.n(); ++i) out << ",x" << i;
    out << "\n";
    for (Eigen::Index j = 0; j < traj.states.cols(); ++j) {
        out << format_double(static_cast<double>(j) * traj.dt);
        for (Eigen::Index i = 0; i < traj.states.rows(); ++i)
            out << "," << format_double(traj.states(i, j));
        out << "\n";
    }
    return out.str();
}

namespace {

std::vector<std::vector<double>> parse_csv_numbers(const std::string& text,
                                                   std::string* header) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput("csv: empty file");
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            const std::string cell = line.substr(pos, comma - pos);
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw InvalidInput("csv: non-numeric cell '" + cell + "'");
            }
            pos = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInput("csv: no data rows");
    for (const auto& r : rows)
        if (r.size() != rows[0].size()) throw InvalidInput("csv: ragged rows");
    return rows;
}

double infer_dt(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) return 1.0;
    const double dt = rows[1][0] - rows[0][0];
    if (!(dt > 0.0)) throw InvalidInput("csv: time column must be increasing");
    for (std::size_t j = 1; j < rows.size(); ++j) {
        const double step = rows[j][0] - rows[j - 1][0];
        if (std::abs(step - dt) > 1e-9 * std::max(1.0, std::abs(dt)))
            throw InvalidInput("csv: non-uniform time steps");
    }
    return dt;
}

}  // namespace

Trajectory trajectory_from_csv(const std::string& text) {
    std::string header;
    const auto rows = parse_csv_numbers(text, &header);
    const std::size_t n = rows[0].size() - 1;
    Eigen::MatrixXd states(n, rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (std::size_t i = 0; i < n; ++i) states(i, j) = rows[j][i + 1];
    return Trajectory(std::move(states), infer_dt(rows));
}

std::string inputs_to_csv(const Eigen::MatrixXd& u_seq, double dt) {
    std::ostringstream out;
    out << "t";
    for (Eigen::Index i = 0; i < u_seq.rows(); ++i) out << ",u" << i;
    out << "\n";
    for (Eigen::Index j = 0; j < u_seq.cols(); ++j) {
        out << format_double(static_cast<double>(j) * dt);
        for (Eigen::Index i = 0; i < u_seq.rows(); ++i)
            out << "," << format_double(u_seq(i, j));
        out << "\n";
    }
    return out.str();
}

std::pair<Eigen::MatrixXd, double> inputs_from_csv(const std::string& text) {
    std::string header;
    const auto rows = parse_csv_numbers(text, &header);
    const std::size_t m = rows[0].size() - 1;
    Eigen::MatrixXd u(m, rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j)
        for (std::size_t i = 0; i < m; ++i) u(i, j) = rows[j][i + 1];
    return {std::move(u), infer_dt(rows)};
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write file: " + path);
    out << content;
}

nlohmann::json read_json_file(const std::string& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("malformed JSON in " + path + ": " + e.what());
    }
}

}  // namespace visilin
