#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace agl {

inline constexpr int kReportFormatVersion = 1;

struct FoldReport {
    int fold = 0;
    double test_pcc = 0.0;
    double val_pcc = 0.0;
    std::size_t n_valid_genes = 0;
    int epochs = 0;
    double k_final = 0.0;
    std::size_t effective_k_final = 0;
    std::vector<double> k_history;
    std::vector<std::size_t> effective_k_history;
    std::vector<double> val_pcc_history;
};

struct RunReport {
    int format_version = kReportFormatVersion;
    std::string method;
    nlohmann::json config_echo;
    std::vector<FoldReport> folds;
    double mean_test_pcc = 0.0;
    std::optional<double> std_test_pcc;  // present with >= 2 folds (population std)
    double wall_clock_seconds = 0.0;
};

nlohmann::json to_json(const RunReport& report);
RunReport run_report_from_json(const nlohmann::json& j);

void write_run_report(const RunReport& report, const std::string& path);
// Reads and validates the structure but not the format version; callers that
// merge reports must check format_version themselves.
RunReport read_run_report(const std::string& path);

double mean_of(const std::vector<double>& xs);
double population_std(const std::vector<double>& xs);

}  // namespace agl
