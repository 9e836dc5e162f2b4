#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "agl/commands.hpp"
#include "agl/csvio.hpp"
#include "agl/errors.hpp"

namespace {

using nlohmann::json;

struct ConfigFile {
    agl::RunConfig cfg;
    bool names_output_dir = false;
};

ConfigFile load_config_file(const std::string& path) {
    ConfigFile out;
    if (path.empty()) return out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw agl::IoError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw agl::ConfigError("config parse error in " + path + ": " + e.what());
    }
    out.cfg = agl::run_config_from_json(j);
    out.names_output_dir = j.contains("output_dir");
    return out;
}

// Precedence for the output directory: flag, then config file, then
// AGL_OUTPUT_DIR, then the current directory.
void resolve_output_dir(agl::RunConfig& cfg, const std::optional<std::string>& flag,
                        bool config_named_it) {
    if (flag) {
        cfg.output_dir = *flag;
        return;
    }
    if (config_named_it) return;
    if (const char* env = std::getenv("AGL_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
}

struct TrainFlags {
    std::string config_path;
    std::optional<std::string> run_name, output_dir, method, fold_mode, hypergrad, dataset_kind;
    std::optional<std::string> expr_path, features_path;
    std::optional<bool> log_normalize, normalize_loss, k_loop, adam_on_k, commit_lookahead;
    std::optional<int> n_folds, only_fold, max_epochs, h_steps, max_k_iters, max_outer_rounds, patience;
    std::optional<std::size_t> subset_size, mini_batch, hidden_dim, n_spots, n_pri, n_aux_informative,
        n_aux_noise, data_n_pri;
    std::optional<double> alpha, beta, tau, k_init, lookahead_alpha, hypergrad_fd_step, dropout_rate,
        noise_scale;
    std::optional<std::uint64_t> seed, fold_seed, subset_seed, data_seed;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON run configuration");
    cmd->add_option("--run-name", f.run_name, "run directory name");
    cmd->add_option("--output-dir", f.output_dir, "parent directory for run output");
    cmd->add_option("--method", f.method, "pgl | agl_all | agl_random | agl_dkgsb");
    cmd->add_option("--fold-mode", f.fold_mode, "intra_batch | leave_one_batch_out");
    cmd->add_option("--n-folds", f.n_folds);
    cmd->add_option("--fold-seed", f.fold_seed);
    cmd->add_option("--only-fold", f.only_fold, "train a single fold index");
    cmd->add_option("--subset-size", f.subset_size, "aux subset size for agl_random");
    cmd->add_option("--subset-seed", f.subset_seed);
    cmd->add_option("--seed", f.seed, "training seed");

    cmd->add_option("--dataset-kind", f.dataset_kind, "synthetic | csv");
    cmd->add_option("--expr", f.expr_path, "expression CSV (csv datasets)");
    cmd->add_option("--features", f.features_path, "feature CSV (csv datasets)");
    cmd->add_option("--log-normalize", f.log_normalize, "normalize raw CSV counts");
    cmd->add_option("--data-n-pri", f.data_n_pri, "primary gene count for csv datasets");
    cmd->add_option("--n-spots", f.n_spots);
    cmd->add_option("--n-pri", f.n_pri, "synthetic primary gene count");
    cmd->add_option("--n-aux-informative", f.n_aux_informative);
    cmd->add_option("--n-aux-noise", f.n_aux_noise);
    cmd->add_option("--dropout-rate", f.dropout_rate);
    cmd->add_option("--noise-scale", f.noise_scale);
    cmd->add_option("--data-seed", f.data_seed);

    cmd->add_option("--alpha", f.alpha, "inner learning rate");
    cmd->add_option("--beta", f.beta, "k step size");
    cmd->add_option("--tau", f.tau, "mask temperature");
    cmd->add_option("--h-steps", f.h_steps, "lookahead depth");
    cmd->add_option("--k-init", f.k_init);
    cmd->add_option("--mini-batch", f.mini_batch);
    cmd->add_option("--hidden-dim", f.hidden_dim);
    cmd->add_option("--max-epochs", f.max_epochs);
    cmd->add_option("--patience", f.patience);
    cmd->add_option("--max-k-iters", f.max_k_iters);
    cmd->add_option("--max-outer-rounds", f.max_outer_rounds);
    cmd->add_option("--hypergrad", f.hypergrad, "fd | analytic_h1");
    cmd->add_option("--hypergrad-fd-step", f.hypergrad_fd_step);
    cmd->add_option("--lookahead-alpha", f.lookahead_alpha);
    cmd->add_option("--normalize-loss", f.normalize_loss);
    cmd->add_option("--k-loop", f.k_loop, "false trains at a fixed hard mask");
    cmd->add_option("--adam-on-k", f.adam_on_k);
    cmd->add_option("--commit-lookahead", f.commit_lookahead);
}

agl::RunConfig resolve_run_config(const TrainFlags& f) {
    ConfigFile file = load_config_file(f.config_path);
    agl::RunConfig cfg = file.cfg;
    resolve_output_dir(cfg, f.output_dir, file.names_output_dir);

    if (f.run_name) cfg.run_name = *f.run_name;
    if (f.method) cfg.method = agl::method_from_name(*f.method);
    if (f.fold_mode) {
        json j = agl::run_config_to_json(cfg);
        j["folds"]["mode"] = *f.fold_mode;
        cfg = agl::run_config_from_json(j);  // reuse the string validation
        resolve_output_dir(cfg, f.output_dir, true);
    }
    if (f.n_folds) cfg.n_folds = *f.n_folds;
    if (f.fold_seed) cfg.fold_seed = *f.fold_seed;
    if (f.only_fold) cfg.only_fold = *f.only_fold;
    if (f.subset_size) cfg.subset_size = *f.subset_size;
    if (f.subset_seed) cfg.subset_seed = *f.subset_seed;
    if (f.seed) cfg.bilevel.seed = *f.seed;

    if (f.dataset_kind) {
        if (*f.dataset_kind == "synthetic")
            cfg.dataset.kind = agl::DatasetSource::Kind::synthetic;
        else if (*f.dataset_kind == "csv")
            cfg.dataset.kind = agl::DatasetSource::Kind::csv;
        else
            throw agl::ConfigError("unknown dataset kind: " + *f.dataset_kind);
    }
    if (f.expr_path) cfg.dataset.expr_path = *f.expr_path;
    if (f.features_path) cfg.dataset.features_path = *f.features_path;
    if (f.log_normalize) cfg.dataset.apply_log_normalize = *f.log_normalize;
    if (f.data_n_pri) cfg.dataset.n_pri = *f.data_n_pri;
    if (f.n_spots) cfg.dataset.synthetic.n_spots = *f.n_spots;
    if (f.n_pri) cfg.dataset.synthetic.n_pri = *f.n_pri;
    if (f.n_aux_informative) cfg.dataset.synthetic.n_aux_informative = *f.n_aux_informative;
    if (f.n_aux_noise) cfg.dataset.synthetic.n_aux_noise = *f.n_aux_noise;
    if (f.dropout_rate) cfg.dataset.synthetic.dropout_rate = *f.dropout_rate;
    if (f.noise_scale) cfg.dataset.synthetic.noise_scale = *f.noise_scale;
    if (f.data_seed) cfg.dataset.synthetic.seed = *f.data_seed;

    if (f.alpha) cfg.bilevel.alpha = *f.alpha;
    if (f.beta) cfg.bilevel.beta = *f.beta;
    if (f.tau) cfg.bilevel.tau = *f.tau;
    if (f.h_steps) cfg.bilevel.H = *f.h_steps;
    if (f.k_init) cfg.bilevel.k_init = *f.k_init;
    if (f.mini_batch) cfg.bilevel.mini_batch = *f.mini_batch;
    if (f.hidden_dim) cfg.bilevel.hidden_dim = *f.hidden_dim;
    if (f.max_epochs) cfg.bilevel.max_epochs = *f.max_epochs;
    if (f.patience) cfg.bilevel.early_stop_patience = *f.patience;
    if (f.max_k_iters) cfg.bilevel.max_k_iters = *f.max_k_iters;
    if (f.max_outer_rounds) cfg.bilevel.max_outer_rounds = *f.max_outer_rounds;
    if (f.hypergrad) {
        if (*f.hypergrad == "fd")
            cfg.bilevel.hypergrad_mode = agl::BilevelConfig::Hypergrad::fd;
        else if (*f.hypergrad == "analytic_h1")
            cfg.bilevel.hypergrad_mode = agl::BilevelConfig::Hypergrad::analytic_h1;
        else
            throw agl::ConfigError("unknown hypergrad mode: " + *f.hypergrad);
    }
    if (f.hypergrad_fd_step) cfg.bilevel.hypergrad_fd_step = *f.hypergrad_fd_step;
    if (f.lookahead_alpha) cfg.bilevel.lookahead_alpha = *f.lookahead_alpha;
    if (f.normalize_loss) cfg.bilevel.normalize_loss = *f.normalize_loss;
    if (f.k_loop) cfg.bilevel.k_loop_enabled = *f.k_loop;
    if (f.adam_on_k) cfg.bilevel.adam_on_k = *f.adam_on_k;
    if (f.commit_lookahead) cfg.bilevel.commit_lookahead = *f.commit_lookahead;
    return cfg;
}

int do_train(const TrainFlags& flags) {
    agl::RunConfig cfg = resolve_run_config(flags);
    agl::RunReport report = agl::cmd_train(cfg);
    for (const auto& fold : report.folds) {
        std::cout << "fold " << fold.fold << ": test_pcc=" << agl::format_double(fold.test_pcc)
                  << " val_pcc=" << agl::format_double(fold.val_pcc) << " epochs=" << fold.epochs;
        if (!fold.k_history.empty())
            std::cout << " k=" << agl::format_double(fold.k_final)
                      << " effective_k=" << fold.effective_k_final;
        std::cout << "\n";
    }
    std::cout << report.method << ": mean_test_pcc=" << agl::format_double(report.mean_test_pcc);
    if (report.std_test_pcc)
        std::cout << " std=" << agl::format_double(*report.std_test_pcc);
    std::cout << " (" << cfg.output_dir << "/" << cfg.run_name << "/report.json)\n";
    return 0;
}

int do_sweep(const TrainFlags& flags, const std::vector<std::size_t>& sizes,
             const std::vector<std::string>& selectors) {
    agl::RunConfig cfg = resolve_run_config(flags);
    agl::SweepReport report = agl::cmd_sweep(cfg, sizes, selectors);
    std::cout << "pgl baseline: mean_pcc=" << agl::format_double(report.baseline_mean_pcc) << "\n";
    for (const auto& e : report.entries)
        std::cout << e.selector << " size=" << e.size
                  << ": mean_pcc=" << agl::format_double(e.mean_pcc)
                  << " mean_delta=" << agl::format_double(e.mean_delta) << "\n";
    std::cout << "(" << cfg.output_dir << "/" << cfg.run_name << "/sweep.json)\n";
    return 0;
}

int do_rank(const agl::RankConfig& cfg) {
    agl::cmd_rank(cfg);
    std::cout << "wrote " << cfg.out_path << "\n";
    return 0;
}

int do_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    agl::AggregateReport agg = agl::cmd_report(run_dirs, out_dir);
    for (const auto& row : agg.rows) {
        std::cout << row.method << " (" << row.run_dir
                  << "): mean_test_pcc=" << agl::format_double(row.mean_test_pcc);
        if (row.has_std) std::cout << " std=" << agl::format_double(row.std_test_pcc);
        std::cout << " folds=" << row.fold_test_pcc.size() << "\n";
    }
    std::cout << "(" << out_dir << "/aggregate.json)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"auxiliary gene learning with differentiable top-k gene selection"};
    app.require_subcommand(1);

    TrainFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "train one method across folds");
    add_train_flags(train, train_flags);

    TrainFlags sweep_flags;
    std::vector<std::size_t> sweep_sizes;
    std::vector<std::string> sweep_selectors{"hvg", "random"};
    CLI::App* sweep = app.add_subcommand("sweep", "aux subset size sweep against the pgl baseline");
    add_train_flags(sweep, sweep_flags);
    sweep->add_option("--sizes", sweep_sizes, "subset sizes")->required()->delimiter(',');
    sweep->add_option("--selectors", sweep_selectors, "hvg and/or random")->delimiter(',');

    agl::RankConfig rank_cfg;
    CLI::App* rank = app.add_subcommand("rank", "rank genes by binned dispersion");
    rank->add_flag("--synthetic", rank_cfg.synthetic, "rank a synthetic dataset");
    rank->add_option("--expr", rank_cfg.expr_path, "expression CSV");
    rank->add_flag("--log-normalize", rank_cfg.apply_log_normalize, "normalize raw counts first");
    rank->add_option("--n-bins", rank_cfg.n_bins);
    rank->add_option("--out", rank_cfg.out_path, "output CSV path");
    rank->add_option("--n-spots", rank_cfg.synthetic_spec.n_spots);
    rank->add_option("--n-pri", rank_cfg.synthetic_spec.n_pri);
    rank->add_option("--n-aux-informative", rank_cfg.synthetic_spec.n_aux_informative);
    rank->add_option("--n-aux-noise", rank_cfg.synthetic_spec.n_aux_noise);
    rank->add_option("--dropout-rate", rank_cfg.synthetic_spec.dropout_rate);
    rank->add_option("--noise-scale", rank_cfg.synthetic_spec.noise_scale);
    rank->add_option("--data-seed", rank_cfg.synthetic_spec.seed);

    std::vector<std::string> report_dirs;
    std::string report_out = ".";
    CLI::App* report = app.add_subcommand("report", "merge run reports");
    report->add_option("--run-dirs", report_dirs, "run directories holding report.json")
        ->required()
        ->delimiter(',');
    report->add_option("--out-dir", report_out, "where to write the aggregate files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) return do_train(train_flags);
        if (sweep->parsed()) return do_sweep(sweep_flags, sweep_sizes, sweep_selectors);
        if (rank->parsed()) return do_rank(rank_cfg);
        if (report->parsed()) return do_report(report_dirs, report_out);
        throw agl::ConfigError("no subcommand given");
    } catch (const agl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const agl::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const agl::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return 4;
    } catch (const agl::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 5;
    } catch (const agl::EvalError& e) {
        std::cerr << "eval error: " << e.what() << "\n";
        return 6;
    } catch (const agl::OracleError& e) {
        std::cerr << "oracle error: " << e.what() << "\n";
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
