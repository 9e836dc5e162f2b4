#include "agl/train.hpp"

#include <algorithm>
#include <numeric>

#include "agl/errors.hpp"
#include "agl/loss.hpp"

namespace agl {

const char* method_name(Method m) {
    switch (m) {
        case Method::pgl: return "pgl";
        case Method::agl_all: return "agl_all";
        case Method::agl_random: return "agl_random";
        case Method::agl_dkgsb: return "agl_dkgsb";
    }
    return "unknown";
}

Method method_from_name(const std::string& name) {
    if (name == "pgl") return Method::pgl;
    if (name == "agl_all") return Method::agl_all;
    if (name == "agl_random") return Method::agl_random;
    if (name == "agl_dkgsb") return Method::agl_dkgsb;
    throw ConfigError("unknown method: " + name);
}

namespace {

FoldOutcome eval_outcome(const ModelParams& params, const ExpressionDataset& ds,
                         const FoldSplit::Fold& fold) {
    FoldOutcome out;
    const Matrix x = gather_rows(ds.features, fold.test);
    const Matrix y = gather(ds.expression, std::span<const std::size_t>(fold.test), ds.primary_indices);
    const PccReport rep = pcc_metric(mlp_forward(params, x).pred_pri, y);
    out.test_pcc = rep.mean;
    out.n_valid_genes = rep.n_valid;
    out.val_pcc = eval_primary_pcc(params, ds, fold.val);
    return out;
}

}  // namespace

FoldOutcome train_fold_fixed(const ExpressionDataset& ds, const FoldSplit::Fold& fold,
                             const std::vector<double>& lambdas, const BilevelConfig& cfg) {
    if (fold.train.size() < 2 || fold.val.size() < 2 || fold.test.size() < 2)
        throw DataError("train_fold_fixed: every split needs at least 2 spots");
    ModelParams params = ModelParams::init(ds.features.cols, cfg.hidden_dim, ds.primary_indices.size(),
                                           ds.auxiliary_indices.size(), derive_seed(cfg.seed, "init"));
    AdamState adam = AdamState::init(params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    const TrainStats stats =
        train_fixed_mask(params, adam, ds, fold.train, lambdas, cfg, derive_seed(cfg.seed, "inner", 0));
    FoldOutcome out = eval_outcome(params, ds, fold);
    out.epochs = stats.epochs;
    out.epoch_losses = stats.epoch_losses;
    return out;
}

FoldOutcome train_fold(const ExpressionDataset& ds, const FoldSplit::Fold& fold,
                       const GeneRanking& aux_ranking, const MethodRunConfig& cfg) {
    switch (cfg.method) {
        case Method::pgl: {
            ExpressionDataset view = ds;  // auxiliaries absent
            view.auxiliary_indices.clear();
            return train_fold_fixed(view, fold, {}, cfg.bilevel);
        }
        case Method::agl_all: {
            const std::vector<double> ones(ds.auxiliary_indices.size(), 1.0);
            return train_fold_fixed(ds, fold, ones, cfg.bilevel);
        }
        case Method::agl_random: {
            const std::vector<double> lambdas =
                random_subset_lambdas(ds.auxiliary_indices.size(), cfg.subset_size, cfg.subset_seed);
            return train_fold_fixed(ds, fold, lambdas, cfg.bilevel);
        }
        case Method::agl_dkgsb: {
            const RunResult res = run_bilevel(ds, fold, aux_ranking, cfg.bilevel);
            FoldOutcome out;
            out.test_pcc = res.test_pcc;
            out.val_pcc = res.final_val_pcc;
            {
                const Matrix x = gather_rows(ds.features, fold.test);
                const Matrix y = gather(ds.expression, std::span<const std::size_t>(fold.test),
                                        ds.primary_indices);
                out.n_valid_genes = pcc_metric(mlp_forward(res.state.params, x).pred_pri, y).n_valid;
            }
            out.epochs = res.state.epochs_total;
            out.k_final = res.state.k;
            out.effective_k_final = res.state.effective_k_history.back();
            out.k_history = res.state.k_history;
            out.effective_k_history = res.state.effective_k_history;
            out.val_pcc_history = res.state.val_pcc_history;
            return out;
        }
    }
    throw ConfigError("train_fold: unknown method");
}

std::vector<double> hvg_subset_lambdas(const GeneRanking& aux_ranking, std::size_t size) {
    if (size < 1 || size > aux_ranking.size())
        throw ConfigError("hvg_subset_lambdas: size must lie in [1, n_aux]");
    std::vector<double> lambdas(aux_ranking.size(), 0.0);
    for (std::size_t pos = 0; pos < size; ++pos) lambdas[aux_ranking.ordered_ids[pos]] = 1.0;
    return lambdas;
}

std::vector<double> random_subset_lambdas(std::size_t n_aux, std::size_t size, std::uint64_t seed) {
    if (size < 1 || size > n_aux) throw ConfigError("random_subset_lambdas: size must lie in [1, n_aux]");
    std::vector<std::size_t> order(n_aux);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "subset"));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> lambdas(n_aux, 0.0);
    for (std::size_t i = 0; i < size; ++i) lambdas[order[i]] = 1.0;
    return lambdas;
}

}  // namespace agl
