#include "agl/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <utility>

#include "agl/csvio.hpp"
#include "agl/errors.hpp"
#include "agl/rng.hpp"

namespace agl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kind_name(DatasetSource::Kind k) {
    switch (k) {
        case DatasetSource::Kind::synthetic: return "synthetic";
        case DatasetSource::Kind::csv: return "csv";
    }
    throw ConfigError("dataset kind out of range");
}

DatasetSource::Kind kind_from_name(const std::string& name) {
    if (name == "synthetic") return DatasetSource::Kind::synthetic;
    if (name == "csv") return DatasetSource::Kind::csv;
    throw ConfigError("unknown dataset kind: " + name);
}

const char* fold_mode_name(FoldMode m) {
    switch (m) {
        case FoldMode::intra_batch: return "intra_batch";
        case FoldMode::leave_one_batch_out: return "leave_one_batch_out";
    }
    throw ConfigError("fold mode out of range");
}

FoldMode fold_mode_from_name(const std::string& name) {
    if (name == "intra_batch") return FoldMode::intra_batch;
    if (name == "leave_one_batch_out") return FoldMode::leave_one_batch_out;
    throw ConfigError("unknown fold mode: " + name);
}

const char* hypergrad_name(BilevelConfig::Hypergrad h) {
    switch (h) {
        case BilevelConfig::Hypergrad::fd: return "fd";
        case BilevelConfig::Hypergrad::analytic_h1: return "analytic_h1";
    }
    throw ConfigError("hypergrad mode out of range");
}

BilevelConfig::Hypergrad hypergrad_from_name(const std::string& name) {
    if (name == "fd") return BilevelConfig::Hypergrad::fd;
    if (name == "analytic_h1") return BilevelConfig::Hypergrad::analytic_h1;
    throw ConfigError("unknown hypergrad mode: " + name);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + ": expected an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError(std::string("unknown config key in ") + where + ": " + item.key());
    }
}

json synthetic_to_json(const SyntheticSpec& s) {
    return json{{"n_spots", s.n_spots},
                {"feature_dim", s.feature_dim},
                {"latent_dim", s.latent_dim},
                {"n_pri", s.n_pri},
                {"n_aux_informative", s.n_aux_informative},
                {"n_aux_noise", s.n_aux_noise},
                {"dropout_rate", s.dropout_rate},
                {"noise_scale", s.noise_scale},
                {"n_batches", s.n_batches},
                {"seed", s.seed}};
}

SyntheticSpec synthetic_from_json(const json& j) {
    check_keys(j,
               {"n_spots", "feature_dim", "latent_dim", "n_pri", "n_aux_informative", "n_aux_noise",
                "dropout_rate", "noise_scale", "n_batches", "seed"},
               "dataset.synthetic");
    SyntheticSpec s;
    s.n_spots = j.value("n_spots", s.n_spots);
    s.feature_dim = j.value("feature_dim", s.feature_dim);
    s.latent_dim = j.value("latent_dim", s.latent_dim);
    s.n_pri = j.value("n_pri", s.n_pri);
    s.n_aux_informative = j.value("n_aux_informative", s.n_aux_informative);
    s.n_aux_noise = j.value("n_aux_noise", s.n_aux_noise);
    s.dropout_rate = j.value("dropout_rate", s.dropout_rate);
    s.noise_scale = j.value("noise_scale", s.noise_scale);
    s.n_batches = j.value("n_batches", s.n_batches);
    s.seed = j.value("seed", s.seed);
    return s;
}

json dataset_to_json(const DatasetSource& d) {
    return json{{"kind", kind_name(d.kind)},        {"synthetic", synthetic_to_json(d.synthetic)},
                {"expr_path", d.expr_path},         {"features_path", d.features_path},
                {"log_normalize", d.apply_log_normalize}, {"n_pri", d.n_pri}};
}

DatasetSource dataset_from_json(const json& j) {
    check_keys(j, {"kind", "synthetic", "expr_path", "features_path", "log_normalize", "n_pri"},
               "dataset");
    DatasetSource d;
    d.kind = kind_from_name(j.value("kind", std::string(kind_name(d.kind))));
    if (j.contains("synthetic")) d.synthetic = synthetic_from_json(j.at("synthetic"));
    d.expr_path = j.value("expr_path", d.expr_path);
    d.features_path = j.value("features_path", d.features_path);
    d.apply_log_normalize = j.value("log_normalize", d.apply_log_normalize);
    d.n_pri = j.value("n_pri", d.n_pri);
    return d;
}

json bilevel_to_json(const BilevelConfig& c) {
    json j;
    j["alpha"] = c.alpha;
    j["mini_batch"] = c.mini_batch;
    j["max_epochs"] = c.max_epochs;
    j["early_stop_patience"] = c.early_stop_patience;
    j["loss_ma_window"] = c.loss_ma_window;
    j["normalize_loss"] = c.normalize_loss;
    j["adam_beta1"] = c.adam_beta1;
    j["adam_beta2"] = c.adam_beta2;
    j["adam_eps"] = c.adam_eps;
    j["hidden_dim"] = c.hidden_dim;
    j["tau"] = c.tau;
    j["beta"] = c.beta;
    j["h_steps"] = c.H;
    j["k_init"] = c.k_init;
    j["k_converge_tol"] = c.k_converge_tol;
    j["k_converge_window"] = c.k_converge_window;
    j["max_k_iters"] = c.max_k_iters;
    j["max_outer_rounds"] = c.max_outer_rounds;
    j["k_loop_enabled"] = c.k_loop_enabled;
    j["hypergrad"] = hypergrad_name(c.hypergrad_mode);
    j["hypergrad_fd_step"] = c.hypergrad_fd_step;
    j["commit_lookahead"] = c.commit_lookahead;
    j["adam_lookahead"] = c.adam_lookahead;
    j["lookahead_alpha"] = c.lookahead_alpha;
    j["adam_on_k"] = c.adam_on_k;
    j["k_adam_beta1"] = c.k_adam_beta1;
    j["k_adam_beta2"] = c.k_adam_beta2;
    j["k_adam_eps"] = c.k_adam_eps;
    j["seed"] = c.seed;
    return j;
}

BilevelConfig bilevel_from_json(const json& j) {
    check_keys(j,
               {"alpha",          "mini_batch",      "max_epochs",      "early_stop_patience",
                "loss_ma_window", "normalize_loss",  "adam_beta1",      "adam_beta2",
                "adam_eps",       "hidden_dim",      "tau",             "beta",
                "h_steps",        "k_init",          "k_converge_tol",  "k_converge_window",
                "max_k_iters",    "max_outer_rounds", "k_loop_enabled", "hypergrad",
                "hypergrad_fd_step", "commit_lookahead", "adam_lookahead", "lookahead_alpha",
                "adam_on_k",      "k_adam_beta1",    "k_adam_beta2",    "k_adam_eps",
                "seed"},
               "bilevel");
    BilevelConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.mini_batch = j.value("mini_batch", c.mini_batch);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
    c.loss_ma_window = j.value("loss_ma_window", c.loss_ma_window);
    c.normalize_loss = j.value("normalize_loss", c.normalize_loss);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.tau = j.value("tau", c.tau);
    c.beta = j.value("beta", c.beta);
    c.H = j.value("h_steps", c.H);
    c.k_init = j.value("k_init", c.k_init);
    c.k_converge_tol = j.value("k_converge_tol", c.k_converge_tol);
    c.k_converge_window = j.value("k_converge_window", c.k_converge_window);
    c.max_k_iters = j.value("max_k_iters", c.max_k_iters);
    c.max_outer_rounds = j.value("max_outer_rounds", c.max_outer_rounds);
    c.k_loop_enabled = j.value("k_loop_enabled", c.k_loop_enabled);
    c.hypergrad_mode = hypergrad_from_name(j.value("hypergrad", std::string(hypergrad_name(c.hypergrad_mode))));
    c.hypergrad_fd_step = j.value("hypergrad_fd_step", c.hypergrad_fd_step);
    c.commit_lookahead = j.value("commit_lookahead", c.commit_lookahead);
    c.adam_lookahead = j.value("adam_lookahead", c.adam_lookahead);
    c.lookahead_alpha = j.value("lookahead_alpha", c.lookahead_alpha);
    c.adam_on_k = j.value("adam_on_k", c.adam_on_k);
    c.k_adam_beta1 = j.value("k_adam_beta1", c.k_adam_beta1);
    c.k_adam_beta2 = j.value("k_adam_beta2", c.k_adam_beta2);
    c.k_adam_eps = j.value("k_adam_eps", c.k_adam_eps);
    c.seed = j.value("seed", c.seed);
    return c;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

fs::path make_run_dir(const RunConfig& cfg) {
    fs::path dir = fs::path(cfg.output_dir) / cfg.run_name;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::uint64_t fold_stream_seed(const BilevelConfig& cfg, int fold) {
    return derive_seed(cfg.seed, "fold", static_cast<std::uint64_t>(fold));
}

FoldReport fold_report_from_outcome(int fold, const FoldOutcome& out) {
    FoldReport r;
    r.fold = fold;
    r.test_pcc = out.test_pcc;
    r.val_pcc = out.val_pcc;
    r.n_valid_genes = out.n_valid_genes;
    r.epochs = out.epochs;
    r.k_final = out.k_final;
    r.effective_k_final = out.effective_k_final;
    r.k_history = out.k_history;
    r.effective_k_history = out.effective_k_history;
    r.val_pcc_history = out.val_pcc_history;
    return r;
}

void write_fold_traces(const fs::path& dir, int fold, const FoldOutcome& out) {
    if (!out.epoch_losses.empty()) {
        std::string csv = "epoch,loss\n";
        for (std::size_t e = 0; e < out.epoch_losses.size(); ++e)
            csv += std::to_string(e + 1) + "," + format_double(out.epoch_losses[e]) + "\n";
        write_text_file(dir / ("fold" + std::to_string(fold) + "_train_trace.csv"), csv);
    }
    if (!out.k_history.empty()) {
        std::string csv = "step,k,effective_k\n";
        for (std::size_t s = 0; s < out.k_history.size(); ++s) {
            std::size_t eff = s < out.effective_k_history.size() ? out.effective_k_history[s] : 0;
            csv += std::to_string(s) + "," + format_double(out.k_history[s]) + "," +
                   std::to_string(eff) + "\n";
        }
        write_text_file(dir / ("fold" + std::to_string(fold) + "_k_trace.csv"), csv);
    }
    if (!out.val_pcc_history.empty()) {
        std::string csv = "phase,val_pcc\n";
        for (std::size_t p = 0; p < out.val_pcc_history.size(); ++p)
            csv += std::to_string(p) + "," + format_double(out.val_pcc_history[p]) + "\n";
        write_text_file(dir / ("fold" + std::to_string(fold) + "_val_trace.csv"), csv);
    }
}

std::vector<double> fold_test_pccs(const std::vector<FoldReport>& folds) {
    std::vector<double> xs;
    xs.reserve(folds.size());
    for (const auto& f : folds) xs.push_back(f.test_pcc);
    return xs;
}

}  // namespace

json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["run_name"] = cfg.run_name;
    j["output_dir"] = cfg.output_dir;
    j["method"] = method_name(cfg.method);
    j["dataset"] = dataset_to_json(cfg.dataset);
    j["folds"] = json{{"mode", fold_mode_name(cfg.fold_mode)},
                      {"n_folds", cfg.n_folds},
                      {"seed", cfg.fold_seed},
                      {"only_fold", cfg.only_fold}};
    j["subset"] = json{{"size", cfg.subset_size}, {"seed", cfg.subset_seed}};
    j["bilevel"] = bilevel_to_json(cfg.bilevel);
    return j;
}

RunConfig run_config_from_json(const json& j) {
    try {
        check_keys(j, {"run_name", "output_dir", "method", "dataset", "folds", "subset", "bilevel"},
                   "config");
        RunConfig cfg;
        cfg.run_name = j.value("run_name", cfg.run_name);
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.method = method_from_name(j.value("method", std::string(method_name(cfg.method))));
        if (j.contains("dataset")) cfg.dataset = dataset_from_json(j.at("dataset"));
        if (j.contains("folds")) {
            const json& f = j.at("folds");
            check_keys(f, {"mode", "n_folds", "seed", "only_fold"}, "folds");
            cfg.fold_mode = fold_mode_from_name(f.value("mode", std::string(fold_mode_name(cfg.fold_mode))));
            cfg.n_folds = f.value("n_folds", cfg.n_folds);
            cfg.fold_seed = f.value("seed", cfg.fold_seed);
            cfg.only_fold = f.value("only_fold", cfg.only_fold);
        }
        if (j.contains("subset")) {
            const json& s = j.at("subset");
            check_keys(s, {"size", "seed"}, "subset");
            cfg.subset_size = s.value("size", cfg.subset_size);
            cfg.subset_seed = s.value("seed", cfg.subset_seed);
        }
        if (j.contains("bilevel")) cfg.bilevel = bilevel_from_json(j.at("bilevel"));
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

ExpressionDataset build_dataset(const DatasetSource& source) {
    if (source.kind == DatasetSource::Kind::synthetic)
        return generate_synthetic(source.synthetic).data;

    if (source.expr_path.empty() || source.features_path.empty())
        throw ConfigError("csv dataset needs both expr_path and features_path");
    ExpressionDataset ds = load_csv(source.expr_path, source.features_path);
    if (source.apply_log_normalize) ds.expression = log_normalize(ds.expression);
    auto [primary, aux] = select_primary(ds.expression, source.n_pri);
    ds.primary_indices = std::move(primary);
    ds.auxiliary_indices = std::move(aux);
    return ds;
}

GeneRanking ranking_of_auxiliary(const ExpressionDataset& ds, int n_bins) {
    if (ds.auxiliary_indices.empty()) return {};
    std::vector<std::size_t> all_rows(ds.n_spots());
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    Matrix aux_expr = gather(ds.expression, all_rows, ds.auxiliary_indices);
    return rank_auxiliary(aux_expr, n_bins);
}

RunReport cmd_train(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::path dir = make_run_dir(cfg);

    ExpressionDataset ds = build_dataset(cfg.dataset);
    GeneRanking ranking = ranking_of_auxiliary(ds);
    FoldSplit splits = split_folds(ds, cfg.fold_mode, cfg.n_folds, cfg.fold_seed);

    RunReport report;
    report.method = method_name(cfg.method);
    report.config_echo = run_config_to_json(cfg);
    for (std::size_t f = 0; f < splits.folds.size(); ++f) {
        if (cfg.only_fold >= 0 && static_cast<std::size_t>(cfg.only_fold) != f) continue;
        MethodRunConfig mc;
        mc.method = cfg.method;
        mc.subset_size = cfg.subset_size;
        mc.subset_seed = cfg.subset_seed;
        mc.bilevel = cfg.bilevel;
        mc.bilevel.seed = fold_stream_seed(cfg.bilevel, static_cast<int>(f));
        FoldOutcome out = train_fold(ds, splits.folds[f], ranking, mc);
        write_fold_traces(dir, static_cast<int>(f), out);
        report.folds.push_back(fold_report_from_outcome(static_cast<int>(f), out));
    }

    std::vector<double> pccs = fold_test_pccs(report.folds);
    report.mean_test_pcc = mean_of(pccs);
    if (pccs.size() >= 2) report.std_test_pcc = population_std(pccs);
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_run_report(report, (dir / "report.json").string());
    return report;
}

void cmd_rank(const RankConfig& cfg) {
    std::vector<std::string> gene_names;
    Matrix expr;
    if (cfg.synthetic) {
        ExpressionDataset ds = generate_synthetic(cfg.synthetic_spec).data;
        gene_names = ds.gene_names;
        expr = std::move(ds.expression);
    } else {
        if (cfg.expr_path.empty()) throw ConfigError("rank: no expression input given");
        ExpressionTable table = load_expression_csv(cfg.expr_path);
        gene_names = table.gene_names;
        expr = std::move(table.values);
        if (cfg.apply_log_normalize) expr = log_normalize(expr);
    }
    if (expr.cols == 0) throw DataError("rank: the input has no genes");

    std::vector<HvgScore> scores = compute_hvg(expr, cfg.n_bins);
    std::vector<double> raw(scores.size());
    for (std::size_t g = 0; g < scores.size(); ++g) raw[g] = scores[g].score;
    GeneRanking ranking = rank_genes(raw);

    std::string csv = "gene,mean,dispersion,bin,score,rank\n";
    for (std::size_t r = 0; r < ranking.ordered_ids.size(); ++r) {
        const HvgScore& s = scores[ranking.ordered_ids[r]];
        csv += gene_names[s.gene_index] + "," + format_double(s.mean) + "," +
               format_double(s.dispersion) + "," + std::to_string(s.bin_index) + "," +
               format_double(s.score) + "," + std::to_string(r + 1) + "\n";
    }
    write_text_file(cfg.out_path, csv);
}

json to_json(const SweepReport& report) {
    json j;
    j["format_version"] = report.format_version;
    j["config_echo"] = report.config_echo;
    j["baseline_fold_pcc"] = report.baseline_fold_pcc;
    j["baseline_mean_pcc"] = report.baseline_mean_pcc;
    j["entries"] = json::array();
    for (const auto& e : report.entries) {
        j["entries"].push_back(json{{"selector", e.selector},
                                    {"size", e.size},
                                    {"fold_pcc", e.fold_pcc},
                                    {"mean_pcc", e.mean_pcc},
                                    {"fold_delta", e.fold_delta},
                                    {"mean_delta", e.mean_delta}});
    }
    j["wall_clock_seconds"] = report.wall_clock_seconds;
    return j;
}

SweepReport cmd_sweep(const RunConfig& base, const std::vector<std::size_t>& sizes,
                      const std::vector<std::string>& selectors) {
    const auto t0 = std::chrono::steady_clock::now();
    if (sizes.empty()) throw ConfigError("sweep: no subset sizes given");
    if (selectors.empty()) throw ConfigError("sweep: no selectors given");
    for (const auto& s : selectors)
        if (s != "hvg" && s != "random") throw ConfigError("sweep: unknown selector: " + s);

    fs::path dir = make_run_dir(base);
    ExpressionDataset ds = build_dataset(base.dataset);
    GeneRanking ranking = ranking_of_auxiliary(ds);
    const std::size_t n_aux = ds.auxiliary_indices.size();
    for (std::size_t size : sizes)
        if (size < 1 || size > n_aux)
            throw ConfigError("sweep: subset size " + std::to_string(size) +
                              " is outside [1, " + std::to_string(n_aux) + "]");
    FoldSplit splits = split_folds(ds, base.fold_mode, base.n_folds, base.fold_seed);

    auto fold_cfg = [&](std::size_t f) {
        BilevelConfig c = base.bilevel;
        c.seed = fold_stream_seed(base.bilevel, static_cast<int>(f));
        return c;
    };

    SweepReport report;
    report.config_echo = run_config_to_json(base);
    report.config_echo["sweep"] = json{{"sizes", sizes}, {"selectors", selectors}};

    for (std::size_t f = 0; f < splits.folds.size(); ++f) {
        ExpressionDataset pgl_ds = ds;
        pgl_ds.auxiliary_indices.clear();
        FoldOutcome out = train_fold_fixed(pgl_ds, splits.folds[f], {}, fold_cfg(f));
        report.baseline_fold_pcc.push_back(out.test_pcc);
    }
    report.baseline_mean_pcc = mean_of(report.baseline_fold_pcc);

    for (const auto& selector : selectors) {
        for (std::size_t size : sizes) {
            SweepEntryReport entry;
            entry.selector = selector;
            entry.size = size;
            std::vector<double> lambdas =
                selector == "hvg"
                    ? hvg_subset_lambdas(ranking, size)
                    : random_subset_lambdas(n_aux, size,
                                            derive_seed(base.subset_seed, "sweep_random", size));
            for (std::size_t f = 0; f < splits.folds.size(); ++f) {
                FoldOutcome out = train_fold_fixed(ds, splits.folds[f], lambdas, fold_cfg(f));
                entry.fold_pcc.push_back(out.test_pcc);
                entry.fold_delta.push_back(out.test_pcc - report.baseline_fold_pcc[f]);
            }
            entry.mean_pcc = mean_of(entry.fold_pcc);
            entry.mean_delta = mean_of(entry.fold_delta);
            report.entries.push_back(std::move(entry));
        }
    }
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_text_file(dir / "sweep.json", to_json(report).dump(2) + "\n");
    std::string csv = "selector,size,fold,pcc,delta\n";
    for (const auto& e : report.entries)
        for (std::size_t f = 0; f < e.fold_pcc.size(); ++f)
            csv += e.selector + "," + std::to_string(e.size) + "," + std::to_string(f) + "," +
                   format_double(e.fold_pcc[f]) + "," + format_double(e.fold_delta[f]) + "\n";
    write_text_file(dir / "sweep.csv", csv);
    return report;
}

AggregateReport cmd_report(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    if (run_dirs.empty()) throw ConfigError("report: no run directories given");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());

    AggregateReport agg;
    std::vector<RunReport> reports;
    for (const auto& rd : run_dirs) {
        fs::path path = fs::path(rd) / "report.json";
        RunReport rep = read_run_report(path.string());
        if (rep.format_version != kReportFormatVersion)
            throw ConfigError("report format version mismatch in " + path.string() + ": got " +
                              std::to_string(rep.format_version) + ", expected " +
                              std::to_string(kReportFormatVersion));
        AggregateRow row;
        row.run_dir = rd;
        row.method = rep.method;
        row.fold_test_pcc = fold_test_pccs(rep.folds);
        row.mean_test_pcc = rep.mean_test_pcc;
        if (rep.std_test_pcc) {
            row.std_test_pcc = *rep.std_test_pcc;
            row.has_std = true;
        }
        agg.rows.push_back(std::move(row));
        reports.push_back(std::move(rep));
    }

    json j;
    j["format_version"] = kReportFormatVersion;
    j["rows"] = json::array();
    for (const auto& row : agg.rows) {
        json r{{"run_dir", row.run_dir},
               {"method", row.method},
               {"fold_test_pcc", row.fold_test_pcc},
               {"mean_test_pcc", row.mean_test_pcc}};
        if (row.has_std) r["std_test_pcc"] = row.std_test_pcc;
        j["rows"].push_back(std::move(r));
    }
    write_text_file(fs::path(out_dir) / "aggregate.json", j.dump(2) + "\n");

    std::string csv = "run_dir,method,n_folds,mean_test_pcc,std_test_pcc\n";
    for (const auto& row : agg.rows)
        csv += row.run_dir + "," + row.method + "," + std::to_string(row.fold_test_pcc.size()) +
               "," + format_double(row.mean_test_pcc) + "," +
               (row.has_std ? format_double(row.std_test_pcc) : std::string()) + "\n";
    write_text_file(fs::path(out_dir) / "aggregate.csv", csv);

    std::string traj = "run_dir,method,fold,step,k,effective_k\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        for (const auto& fold : reports[i].folds) {
            for (std::size_t s = 0; s < fold.k_history.size(); ++s) {
                std::size_t eff =
                    s < fold.effective_k_history.size() ? fold.effective_k_history[s] : 0;
                traj += agg.rows[i].run_dir + "," + agg.rows[i].method + "," +
                        std::to_string(fold.fold) + "," + std::to_string(s) + "," +
                        format_double(fold.k_history[s]) + "," + std::to_string(eff) + "\n";
            }
        }
    }
    write_text_file(fs::path(out_dir) / "k_trajectories.csv", traj);
    return agg;
}

}  // namespace agl
