#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "agl/bilevel.hpp"
#include "agl/data.hpp"
#include "agl/report.hpp"
#include "agl/train.hpp"

namespace agl {

struct DatasetSource {
    enum class Kind { synthetic, csv };
    Kind kind = Kind::synthetic;
    SyntheticSpec synthetic;
    std::string expr_path;
    std::string features_path;
    bool apply_log_normalize = false;  // for CSVs holding raw counts
    std::size_t n_pri = 50;            // primary selection size for CSV inputs
};

struct RunConfig {
    std::string run_name = "run";
    std::string output_dir = ".";
    Method method = Method::agl_dkgsb;
    DatasetSource dataset;
    FoldMode fold_mode = FoldMode::intra_batch;
    int n_folds = 5;
    std::uint64_t fold_seed = 17;
    int only_fold = -1;  // non-negative trains that fold alone
    std::size_t subset_size = 0;    // agl_random and sweep selections
    std::uint64_t subset_seed = 99;
    BilevelConfig bilevel;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
// Missing keys keep their defaults, so partial config files are fine.
RunConfig run_config_from_json(const nlohmann::json& j);

ExpressionDataset build_dataset(const DatasetSource& source);
GeneRanking ranking_of_auxiliary(const ExpressionDataset& ds, int n_bins = 20);

// Trains every fold, writes <output_dir>/<run_name>/report.json plus per-fold
// CSV traces, and returns the report.
RunReport cmd_train(const RunConfig& cfg);

struct RankConfig {
    bool synthetic = false;
    SyntheticSpec synthetic_spec;
    std::string expr_path;
    bool apply_log_normalize = false;
    int n_bins = 20;
    std::string out_path = "ranking.csv";
};

// Ranks every gene of the input and writes gene,mean,dispersion,bin,score,rank
// rows in descending score order; byte-deterministic for identical inputs.
void cmd_rank(const RankConfig& cfg);

struct SweepEntryReport {
    std::string selector;  // "hvg" or "random"
    std::size_t size = 0;
    std::vector<double> fold_pcc;
    double mean_pcc = 0.0;
    std::vector<double> fold_delta;  // against the pgl baseline, per fold
    double mean_delta = 0.0;
};

struct SweepReport {
    int format_version = kReportFormatVersion;
    nlohmann::json config_echo;
    std::vector<double> baseline_fold_pcc;  // pgl
    double baseline_mean_pcc = 0.0;
    std::vector<SweepEntryReport> entries;
    double wall_clock_seconds = 0.0;
};

nlohmann::json to_json(const SweepReport& report);

// Auxiliary-subset sweep: for each size and selector, trains a hard-subset
// model on every fold and reports PCC deltas against the pgl baseline.
SweepReport cmd_sweep(const RunConfig& base, const std::vector<std::size_t>& sizes,
                      const std::vector<std::string>& selectors);

struct AggregateRow {
    std::string run_dir;
    std::string method;
    std::vector<double> fold_test_pcc;
    double mean_test_pcc = 0.0;
    double std_test_pcc = 0.0;
    bool has_std = false;
};

struct AggregateReport {
    std::vector<AggregateRow> rows;
};

// Merges run reports (each dir must hold a report.json of the current format
// version) into aggregate.json/aggregate.csv plus a plot-ready k-trajectory
// series.
AggregateReport cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace agl
