#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "agl/data.hpp"
#include "agl/hvg.hpp"
#include "agl/mask.hpp"
#include "agl/mlp.hpp"
#include "agl/rng.hpp"

namespace agl {

struct BilevelConfig {
    // Inner problem (model weights under a fixed mask).
    double alpha = 3e-5;  // Adam learning rate for the inner phase
    std::size_t mini_batch = 128;
    int max_epochs = 1000;
    int early_stop_patience = 20;  // epochs without improvement of the loss moving average
    int loss_ma_window = 5;
    bool normalize_loss = false;  // divide gene-summed losses by gene counts
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t hidden_dim = 32;

    // Mask temperature.
    double tau = 0.01;

    // Outer problem (scalar k from held-out primary loss).
    double beta = 3e-3;  // step size on k
    int H = 2;           // lookahead depth
    double k_init = 1.0;
    double k_converge_tol = 1e-3;
    int k_converge_window = 10;
    int max_k_iters = 200;    // per k refinement loop
    int max_outer_rounds = 8;
    bool k_loop_enabled = true;
    enum class Hypergrad { fd, analytic_h1 };
    Hypergrad hypergrad_mode = Hypergrad::fd;
    double hypergrad_fd_step = 0.0;  // <= 0 selects tau / 10
    bool commit_lookahead = false;   // keep the lookahead weights after each k update
    bool adam_lookahead = false;     // Adam instead of plain steps in the lookahead (fd mode only)
    double lookahead_alpha = 0.0;    // <= 0 selects alpha
    bool adam_on_k = false;
    double k_adam_beta1 = 0.9;
    double k_adam_beta2 = 0.999;
    double k_adam_eps = 1e-8;

    std::uint64_t seed = 1;
};

struct BilevelState {
    ModelParams params;
    AdamState adam;
    double k = 1.0;
    // Scalar Adam state for k (used when adam_on_k is set).
    double k_m = 0.0;
    double k_v = 0.0;
    long k_steps = 0;

    std::vector<double> k_history;                  // starts at the initial k
    std::vector<std::size_t> effective_k_history;   // aligned with k_history
    std::vector<double> val_pcc_history;            // one entry per inner phase
    std::uint64_t seed = 0;
    int epochs_total = 0;
    int rounds_run = 0;
};

using SpotSet = std::vector<std::size_t>;

// Deterministic mini-batch iterator over a spot pool. With reshuffle enabled
// the pool is re-permuted on every wrap; otherwise batches cycle round-robin
// through one fixed seeded permutation.
class BatchSampler {
public:
    BatchSampler(SpotSet pool, std::size_t batch_size, std::uint64_t seed, bool reshuffle_on_wrap);
    SpotSet next();

private:
    SpotSet pool_;
    std::size_t batch_size_;
    std::size_t pos_ = 0;
    Rng rng_;
    bool reshuffle_;
};

struct TrainStats {
    int epochs = 0;
    std::vector<double> epoch_losses;
};

using StepObserver = std::function<void(int step, const ModelParams&)>;

// Mini-batch Adam training of the weights under a fixed per-gene mask.
// Stops early once the moving average of the epoch training loss has not
// improved for early_stop_patience epochs.
TrainStats train_fixed_mask(ModelParams& params, AdamState& adam, const ExpressionDataset& ds,
                            const SpotSet& train, const std::vector<double>& lambdas,
                            const BilevelConfig& cfg, std::uint64_t stream_seed,
                            const StepObserver& on_step = {});

// Sum of primary-gene Pearson losses over the given spots (mean over genes
// when normalize is set).
double primary_loss_sum(const ModelParams& params, const ExpressionDataset& ds,
                        std::span<const std::size_t> spots, bool normalize);

double eval_primary_pcc(const ModelParams& params, const ExpressionDataset& ds,
                        std::span<const std::size_t> spots);

BilevelState init_bilevel_state(const ExpressionDataset& ds, const GeneRanking& ranking,
                                const BilevelConfig& cfg);

// One inner phase at the state's current k (soft mask held fixed).
TrainStats inner_phase(BilevelState& state, const ExpressionDataset& ds, const SpotSet& train,
                       const GeneRanking& ranking, const BilevelConfig& cfg, int phase_index);

// H chained gradient steps from `theta` under soft_mask(k); `theta` itself is
// never touched. Pass one mini-batch to reuse it for every step, or exactly H.
ModelParams lookahead(const ModelParams& theta, const AdamState& adam, const ExpressionDataset& ds,
                      const std::vector<SpotSet>& train_minibatches, const GeneRanking& ranking,
                      double k, const BilevelConfig& cfg);

// Central finite difference of the validation primary loss after a lookahead,
// with respect to k. Falls back to a one-sided, first-order difference when a
// probe would leave [1/n_aux, 1].
double hypergrad_fd(const BilevelState& state, const ExpressionDataset& ds,
                    const std::vector<SpotSet>& train_minibatches, const SpotSet& val_minibatch,
                    const GeneRanking& ranking, const BilevelConfig& cfg);

// Closed form for H = 1 with plain-gradient lookahead:
//   -alpha * sum_j dlambda_j/dk * <grad_theta L_aux_j(theta), grad_theta L_val(theta_plus)>.
double hypergrad_analytic_h1(const BilevelState& state, const ExpressionDataset& ds,
                             const SpotSet& train_minibatch, const SpotSet& val_minibatch,
                             const GeneRanking& ranking, const BilevelConfig& cfg);

// Gradient step on k (plain or scalar Adam), clamped to [1/n_aux, 1].
void k_step(BilevelState& state, double hypergradient, const BilevelConfig& cfg, std::size_t n_aux);

struct RunResult {
    BilevelState state;
    double test_pcc = 0.0;
    double final_val_pcc = 0.0;
};

// Alternates inner phases with k refinement loops until the k loop stops
// moving for two consecutive rounds (or max_outer_rounds), then refits the
// weights at the final k and evaluates on the test split. With the k loop
// disabled this degenerates to fixed hard-mask training at k_init.
RunResult run_bilevel(const ExpressionDataset& ds, const FoldSplit::Fold& fold,
                      const GeneRanking& ranking, const BilevelConfig& cfg);

}  // namespace agl
