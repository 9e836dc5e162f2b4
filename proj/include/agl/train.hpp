#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agl/bilevel.hpp"
#include "agl/data.hpp"

namespace agl {

enum class Method { pgl, agl_all, agl_random, agl_dkgsb };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct MethodRunConfig {
    Method method = Method::agl_dkgsb;
    std::size_t subset_size = 0;    // agl_random only
    std::uint64_t subset_seed = 0;  // agl_random only
    BilevelConfig bilevel;
};

struct FoldOutcome {
    double test_pcc = 0.0;
    double val_pcc = 0.0;
    std::size_t n_valid_genes = 0;
    int epochs = 0;
    std::vector<double> epoch_losses;
    // Populated by agl_dkgsb only.
    double k_final = 0.0;
    std::size_t effective_k_final = 0;
    std::vector<double> k_history;
    std::vector<std::size_t> effective_k_history;
    std::vector<double> val_pcc_history;
};

// Trains one fold with a caller-supplied fixed per-auxiliary-gene mask.
FoldOutcome train_fold_fixed(const ExpressionDataset& ds, const FoldSplit::Fold& fold,
                             const std::vector<double>& lambdas, const BilevelConfig& cfg);

// Dispatches on the method: pgl drops the auxiliary genes entirely, agl_all
// trains with every lambda at 1, agl_random with a seeded hard subset, and
// agl_dkgsb runs the bi-level engine.
FoldOutcome train_fold(const ExpressionDataset& ds, const FoldSplit::Fold& fold,
                       const GeneRanking& aux_ranking, const MethodRunConfig& cfg);

// Hard top-`size` selection by auxiliary rank; used by the subset sweep.
std::vector<double> hvg_subset_lambdas(const GeneRanking& aux_ranking, std::size_t size);
std::vector<double> random_subset_lambdas(std::size_t n_aux, std::size_t size, std::uint64_t seed);

}  // namespace agl
