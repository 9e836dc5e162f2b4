#include "agl/report.hpp"

#include <cmath>
#include <fstream>

#include "agl/errors.hpp"

namespace agl {

double mean_of(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

double population_std(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    const double m = mean_of(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

nlohmann::json to_json(const RunReport& report) {
    nlohmann::json folds = nlohmann::json::array();
    for (const FoldReport& f : report.folds) {
        nlohmann::json jf{{"fold", f.fold},
                          {"test_pcc", f.test_pcc},
                          {"val_pcc", f.val_pcc},
                          {"n_valid_genes", f.n_valid_genes},
                          {"epochs", f.epochs}};
        if (!f.k_history.empty()) {
            jf["k_final"] = f.k_final;
            jf["effective_k_final"] = f.effective_k_final;
            jf["k_history"] = f.k_history;
            jf["effective_k_history"] = f.effective_k_history;
            jf["val_pcc_history"] = f.val_pcc_history;
        }
        folds.push_back(std::move(jf));
    }
    nlohmann::json j{{"format_version", report.format_version},
                     {"method", report.method},
                     {"config", report.config_echo},
                     {"folds", std::move(folds)},
                     {"mean_test_pcc", report.mean_test_pcc},
                     {"wall_clock_seconds", report.wall_clock_seconds}};
    if (report.std_test_pcc.has_value()) j["std_test_pcc"] = *report.std_test_pcc;
    return j;
}

RunReport run_report_from_json(const nlohmann::json& j) {
    RunReport r;
    r.format_version = j.at("format_version").get<int>();
    r.method = j.at("method").get<std::string>();
    r.config_echo = j.at("config");
    r.mean_test_pcc = j.at("mean_test_pcc").get<double>();
    if (j.contains("std_test_pcc")) r.std_test_pcc = j.at("std_test_pcc").get<double>();
    r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    for (const auto& jf : j.at("folds")) {
        FoldReport f;
        f.fold = jf.at("fold").get<int>();
        f.test_pcc = jf.at("test_pcc").get<double>();
        f.val_pcc = jf.at("val_pcc").get<double>();
        f.n_valid_genes = jf.at("n_valid_genes").get<std::size_t>();
        f.epochs = jf.at("epochs").get<int>();
        if (jf.contains("k_history")) {
            f.k_final = jf.at("k_final").get<double>();
            f.effective_k_final = jf.at("effective_k_final").get<std::size_t>();
            f.k_history = jf.at("k_history").get<std::vector<double>>();
            f.effective_k_history = jf.at("effective_k_history").get<std::vector<std::size_t>>();
            f.val_pcc_history = jf.at("val_pcc_history").get<std::vector<double>>();
        }
        r.folds.push_back(std::move(f));
    }
    return r;
}

void write_run_report(const RunReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << to_json(report).dump(2) << '\n';
    if (!out) throw IoError("failed while writing " + path);
}

RunReport read_run_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid report JSON: " + e.what());
    }
    try {
        return run_report_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": malformed report: " + e.what());
    }
}

}  // namespace agl
