#ifndef NCOPT_IO_HPP
#define NCOPT_IO_HPP

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "asymptotics.hpp"
#include "optimize.hpp"
#include "simulate.hpp"

namespace ncopt {

/// Writes `content` to a sibling temp file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Full-precision CSV cell.
inline std::string csv_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

inline nlohmann::json to_json(const EfficiencyReport& r) {
    return {{"model", r.model}, {"theta", r.theta}, {"noise", r.noise},       {"nu", r.nu},
            {"T", r.T},         {"mse", r.mse},     {"kl", r.kl},             {"cramer_rao", r.cramer_rao},
            {"sigma", r.sigma}, {"m", r.m},         {"I", r.I}};
}

inline std::string efficiency_csv(const std::vector<EfficiencyReport>& rows) {
    std::ostringstream os;
    os << "model,theta,noise,nu,T,mse,kl,cramer_rao\n";
    for (const auto& r : rows) {
        os << r.model << ',' << csv_number(r.theta) << ',' << r.noise << ',' << csv_number(r.nu) << ','
           << csv_number(r.T) << ',' << csv_number(r.mse) << ',' << csv_number(r.kl) << ','
           << csv_number(r.cramer_rao) << '\n';
    }
    return os.str();
}

inline std::string sweep_csv(const SweepResult& r) {
    std::ostringstream os;
    os << "axis,value\n";
    for (std::size_t i = 0; i < r.axis.size(); ++i) os << csv_number(r.axis[i]) << ',' << csv_number(r.values[i]) << '\n';
    return os.str();
}

inline nlohmann::json to_json(const SweepResult& r) {
    nlohmann::json minima = nlohmann::json::array();
    for (const auto& lm : r.local_minima) minima.push_back({{"at", lm.at}, {"value", lm.value}});
    return {{"argmin", r.argmin}, {"min_value", r.min_value}, {"local_minima", minima}, {"failures", r.failures.size()}};
}

inline nlohmann::json to_json(const OptimizerTrace& t) {
    return {{"iterations", t.iterations},
            {"converged", t.converged},
            {"final_objective", t.objective_history.empty() ? 0.0 : t.objective_history.back()},
            {"final_gradient_norm", t.gradient_norm_history.empty() ? 0.0 : t.gradient_norm_history.back()}};
}

inline std::string trace_csv(const OptimizerTrace& t) {
    std::ostringstream os;
    os << "iteration,objective,gradient_norm\n";
    for (std::size_t i = 0; i < t.objective_history.size(); ++i)
        os << i << ',' << csv_number(t.objective_history[i]) << ',' << csv_number(t.gradient_norm_history[i]) << '\n';
    return os.str();
}

struct SimulationLabel {
    std::string model;
    double theta = 0.0;
    std::string noise;
    double nu = 1.0;
    std::size_t T = 0;
};

inline nlohmann::json to_json(const EmpiricalReport& r, const SimulationLabel& l) {
    return {{"model", l.model},
            {"theta", l.theta},
            {"noise", l.noise},
            {"nu", l.nu},
            {"T", l.T},
            {"T_d", r.T_d},
            {"T_n", r.T_n},
            {"replicates", r.replicates},
            {"failures", r.failures},
            {"mse", r.mean_sq_error},
            {"mse_se", r.std_error},
            {"kl", r.mean_kl},
            {"kl_se", r.kl_std_error},
            {"predicted_mse", r.asymptotic_prediction},
            {"predicted_kl", r.predicted_kl}};
}

inline std::string empirical_csv_header() {
    return "model,theta,noise,nu,T,replicates,mse,mse_se,kl,kl_se,predicted_mse,predicted_kl\n";
}

inline std::string empirical_csv_row(const EmpiricalReport& r, const SimulationLabel& l) {
    std::ostringstream os;
    os << l.model << ',' << csv_number(l.theta) << ',' << l.noise << ',' << csv_number(l.nu) << ',' << l.T << ','
       << r.replicates << ',' << csv_number(r.mean_sq_error) << ',' << csv_number(r.std_error) << ','
       << csv_number(r.mean_kl) << ',' << csv_number(r.kl_std_error) << ',' << csv_number(r.asymptotic_prediction)
       << ',' << csv_number(r.predicted_kl) << '\n';
    return os.str();
}

}  // namespace ncopt

#endif  // NCOPT_IO_HPP
