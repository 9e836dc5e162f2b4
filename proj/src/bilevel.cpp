#include "agl/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "agl/errors.hpp"
#include "agl/loss.hpp"

namespace agl {

namespace {

void validate_config(const BilevelConfig& cfg) {
    if (!(cfg.alpha > 0.0)) throw ConfigError("bilevel: alpha must be > 0");
    if (!(cfg.beta > 0.0)) throw ConfigError("bilevel: beta must be > 0");
    if (!(cfg.tau > 0.0)) throw ConfigError("bilevel: tau must be > 0");
    if (cfg.H < 1) throw ConfigError("bilevel: H must be >= 1");
    if (cfg.mini_batch < 2) throw ConfigError("bilevel: mini_batch must be >= 2");
    if (cfg.max_epochs < 1) throw ConfigError("bilevel: max_epochs must be >= 1");
    if (cfg.early_stop_patience < 1) throw ConfigError("bilevel: early_stop_patience must be >= 1");
    if (cfg.loss_ma_window < 1) throw ConfigError("bilevel: loss_ma_window must be >= 1");
    if (!(cfg.k_init > 0.0 && cfg.k_init <= 1.0)) throw ConfigError("bilevel: k_init must lie in (0, 1]");
    if (!(cfg.k_converge_tol > 0.0)) throw ConfigError("bilevel: k_converge_tol must be > 0");
    if (cfg.k_converge_window < 1) throw ConfigError("bilevel: k_converge_window must be >= 1");
    if (cfg.max_k_iters < 1) throw ConfigError("bilevel: max_k_iters must be >= 1");
    if (cfg.max_outer_rounds < 1) throw ConfigError("bilevel: max_outer_rounds must be >= 1");
    if (cfg.hidden_dim < 1) throw ConfigError("bilevel: hidden_dim must be >= 1");
    if (cfg.adam_lookahead && cfg.hypergrad_mode == BilevelConfig::Hypergrad::analytic_h1)
        throw ConfigError("bilevel: analytic_h1 requires a plain-gradient lookahead");
}

struct Batch {
    Matrix x;
    Matrix y_pri;
    Matrix y_aux;
};

Batch gather_batch(const ExpressionDataset& ds, std::span<const std::size_t> spots) {
    Batch b;
    b.x = gather_rows(ds.features, spots);
    b.y_pri = gather(ds.expression, spots, ds.primary_indices);
    b.y_aux = gather(ds.expression, spots, ds.auxiliary_indices);
    return b;
}

void axpy_params(ModelParams& p, const ModelParams& g, double scale) {
    auto apply = [scale](std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += scale * b[i];
    };
    apply(p.trunk_w.v, g.trunk_w.v);
    apply(p.trunk_b, g.trunk_b);
    apply(p.pri_w.v, g.pri_w.v);
    apply(p.pri_b, g.pri_b);
    apply(p.aux_w.v, g.aux_w.v);
    apply(p.aux_b, g.aux_b);
}

double dot_params(const ModelParams& a, const ModelParams& b) {
    double s = 0.0;
    auto acc = [&s](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    };
    acc(a.trunk_w.v, b.trunk_w.v);
    acc(a.trunk_b, b.trunk_b);
    acc(a.pri_w.v, b.pri_w.v);
    acc(a.pri_b, b.pri_b);
    acc(a.aux_w.v, b.aux_w.v);
    acc(a.aux_b, b.aux_b);
    return s;
}

double lookahead_rate(const BilevelConfig& cfg) {
    return cfg.lookahead_alpha > 0.0 ? cfg.lookahead_alpha : cfg.alpha;
}

double k_lower_bound(std::size_t n_aux) { return 1.0 / static_cast<double>(n_aux); }

}  // namespace

BatchSampler::BatchSampler(SpotSet pool, std::size_t batch_size, std::uint64_t seed,
                           bool reshuffle_on_wrap)
    : pool_(std::move(pool)), batch_size_(batch_size), rng_(seed), reshuffle_(reshuffle_on_wrap) {
    if (pool_.size() < 2) throw DataError("BatchSampler: pool needs at least 2 spots");
    std::shuffle(pool_.begin(), pool_.end(), rng_);
}

SpotSet BatchSampler::next() {
    if (batch_size_ >= pool_.size()) return pool_;
    if (pos_ + batch_size_ > pool_.size()) {
        if (reshuffle_) std::shuffle(pool_.begin(), pool_.end(), rng_);
        pos_ = 0;
    }
    SpotSet batch(pool_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  pool_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch_size_));
    pos_ += batch_size_;
    return batch;
}

TrainStats train_fixed_mask(ModelParams& params, AdamState& adam, const ExpressionDataset& ds,
                            const SpotSet& train, const std::vector<double>& lambdas,
                            const BilevelConfig& cfg, std::uint64_t stream_seed,
                            const StepObserver& on_step) {
    validate_config(cfg);
    if (lambdas.size() != ds.auxiliary_indices.size())
        throw ConfigError("train_fixed_mask: one lambda per auxiliary gene required");
    if (train.size() < 2) throw DataError("train_fixed_mask: training split needs at least 2 spots");

    Rng rng(stream_seed);
    SpotSet order = train;
    TrainStats stats;
    std::deque<double> window;
    double best_ma = std::numeric_limits<double>::infinity();
    int since_improve = 0;
    int step = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        int n_batches = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += cfg.mini_batch) {
            const std::size_t end = std::min(order.size(), pos + cfg.mini_batch);
            if (end - pos < 2) continue;  // correlation needs at least 2 spots
            const std::span<const std::size_t> spots(order.data() + pos, end - pos);
            const Batch b = gather_batch(ds, spots);
            const Forward fwd = mlp_forward(params, b.x);
            const TotalLoss tl =
                total_loss(fwd.pred_pri, b.y_pri, fwd.pred_aux, b.y_aux, lambdas, cfg.normalize_loss);
            if (!std::isfinite(tl.value)) {
                throw TrainingError("train_fixed_mask: non-finite loss at epoch " +
                                    std::to_string(epoch) + " (stream seed " +
                                    std::to_string(stream_seed) + ")");
            }
            const ModelParams grads = mlp_backward(params, fwd.cache, tl.grad_pri, tl.grad_aux);
            adam_step(params, grads, adam, cfg.alpha);
            ++step;
            if (on_step) on_step(step, params);
            loss_sum += tl.value;
            ++n_batches;
        }
        const double epoch_loss = loss_sum / static_cast<double>(n_batches);
        stats.epoch_losses.push_back(epoch_loss);
        stats.epochs += 1;

        window.push_back(epoch_loss);
        if (static_cast<int>(window.size()) > cfg.loss_ma_window) window.pop_front();
        double ma = 0.0;
        for (double l : window) ma += l;
        ma /= static_cast<double>(window.size());
        if (ma + 1e-12 < best_ma) {
            best_ma = ma;
            since_improve = 0;
        } else if (++since_improve >= cfg.early_stop_patience) {
            break;
        }
    }
    return stats;
}

double primary_loss_sum(const ModelParams& params, const ExpressionDataset& ds,
                        std::span<const std::size_t> spots, bool normalize) {
    const Matrix x = gather_rows(ds.features, spots);
    const Matrix y = gather(ds.expression, spots, ds.primary_indices);
    const Forward fwd = mlp_forward(params, x);
    const double total = pearson_loss(fwd.pred_pri, y).total();
    return normalize ? total / static_cast<double>(ds.primary_indices.size()) : total;
}

double eval_primary_pcc(const ModelParams& params, const ExpressionDataset& ds,
                        std::span<const std::size_t> spots) {
    const Matrix x = gather_rows(ds.features, spots);
    const Matrix y = gather(ds.expression, spots, ds.primary_indices);
    const Forward fwd = mlp_forward(params, x);
    return pcc_metric(fwd.pred_pri, y).mean;
}

BilevelState init_bilevel_state(const ExpressionDataset& ds, const GeneRanking& ranking,
                                const BilevelConfig& cfg) {
    validate_config(cfg);
    const std::size_t n_aux = ds.auxiliary_indices.size();
    if (n_aux == 0) throw ConfigError("bilevel: needs at least one auxiliary gene");
    if (ranking.size() != n_aux) throw ConfigError("bilevel: ranking does not cover the auxiliary genes");
    BilevelState st;
    st.seed = cfg.seed;
    st.params = ModelParams::init(ds.features.cols, cfg.hidden_dim, ds.primary_indices.size(), n_aux,
                                  derive_seed(cfg.seed, "init"));
    st.adam = AdamState::init(st.params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    st.k = std::clamp(cfg.k_init, k_lower_bound(n_aux), 1.0);
    st.k_history = {st.k};
    st.effective_k_history = {effective_k(soft_mask(ranking, st.k, cfg.tau))};
    return st;
}

TrainStats inner_phase(BilevelState& state, const ExpressionDataset& ds, const SpotSet& train,
                       const GeneRanking& ranking, const BilevelConfig& cfg, int phase_index) {
    const std::vector<double> lambdas = soft_mask(ranking, state.k, cfg.tau).lambdas;
    TrainStats stats =
        train_fixed_mask(state.params, state.adam, ds, train, lambdas, cfg,
                         derive_seed(state.seed, "inner", static_cast<std::uint64_t>(phase_index)));
    state.epochs_total += stats.epochs;
    return stats;
}

ModelParams lookahead(const ModelParams& theta, const AdamState& adam, const ExpressionDataset& ds,
                      const std::vector<SpotSet>& train_minibatches, const GeneRanking& ranking,
                      double k, const BilevelConfig& cfg) {
    validate_config(cfg);
    if (train_minibatches.empty()) throw ConfigError("lookahead: no mini-batches given");
    if (train_minibatches.size() != 1 && train_minibatches.size() != static_cast<std::size_t>(cfg.H))
        throw ConfigError("lookahead: pass one mini-batch or exactly H");

    const std::vector<double> lambdas = soft_mask(ranking, k, cfg.tau).lambdas;
    const double rate = lookahead_rate(cfg);
    ModelParams th = theta;
    AdamState ad = adam;  // only consulted when adam_lookahead is set
    for (int h = 0; h < cfg.H; ++h) {
        const SpotSet& mb =
            train_minibatches[train_minibatches.size() == 1 ? 0 : static_cast<std::size_t>(h)];
        const Batch b = gather_batch(ds, mb);
        const Forward fwd = mlp_forward(th, b.x);
        const TotalLoss tl =
            total_loss(fwd.pred_pri, b.y_pri, fwd.pred_aux, b.y_aux, lambdas, cfg.normalize_loss);
        if (!std::isfinite(tl.value)) throw TrainingError("lookahead: non-finite loss");
        const ModelParams grads = mlp_backward(th, fwd.cache, tl.grad_pri, tl.grad_aux);
        if (cfg.adam_lookahead) {
            adam_step(th, grads, ad, rate);
        } else {
            axpy_params(th, grads, -rate);
        }
    }
    return th;
}

double hypergrad_fd(const BilevelState& state, const ExpressionDataset& ds,
                    const std::vector<SpotSet>& train_minibatches, const SpotSet& val_minibatch,
                    const GeneRanking& ranking, const BilevelConfig& cfg) {
    validate_config(cfg);
    const std::size_t n_aux = ds.auxiliary_indices.size();
    const double lo = k_lower_bound(n_aux);
    const double hi = 1.0;
    const double eps = cfg.hypergrad_fd_step > 0.0 ? cfg.hypergrad_fd_step : cfg.tau / 10.0;
    if (state.k + eps > hi && state.k - eps < lo)
        throw ConfigError("hypergrad_fd: fd step spans the whole k range");

    const auto val_loss_at = [&](double k_probe) {
        const ModelParams theta_plus =
            lookahead(state.params, state.adam, ds, train_minibatches, ranking, k_probe, cfg);
        return primary_loss_sum(theta_plus, ds, val_minibatch, cfg.normalize_loss);
    };
    // Both probes share mini-batches and all derived streams, so the
    // difference isolates the effect of k alone.
    if (state.k + eps <= hi && state.k - eps >= lo) {
        return (val_loss_at(state.k + eps) - val_loss_at(state.k - eps)) / (2.0 * eps);
    }
    if (state.k + eps > hi) {
        // One-sided backward difference: first-order accurate only.
        return (val_loss_at(state.k) - val_loss_at(state.k - eps)) / eps;
    }
    return (val_loss_at(state.k + eps) - val_loss_at(state.k)) / eps;
}

double hypergrad_analytic_h1(const BilevelState& state, const ExpressionDataset& ds,
                             const SpotSet& train_minibatch, const SpotSet& val_minibatch,
                             const GeneRanking& ranking, const BilevelConfig& cfg) {
    validate_config(cfg);
    if (cfg.H != 1) throw ConfigError("hypergrad_analytic_h1: requires H == 1");
    if (cfg.adam_lookahead) throw ConfigError("hypergrad_analytic_h1: requires a plain-gradient lookahead");
    const std::size_t n_aux = ds.auxiliary_indices.size();
    if (n_aux == 0) throw ConfigError("hypergrad_analytic_h1: no auxiliary genes");

    const SoftMask mask = soft_mask(ranking, state.k, cfg.tau);
    const std::vector<double> mgrad = mask_grad_k(mask);

    // u = grad_theta of sum_j (dlambda_j/dk) L_aux_j at theta; a single
    // backward pass with per-gene-scaled cotangents equals the per-gene sum
    // because backward is linear in its cotangents.
    const Batch tb = gather_batch(ds, train_minibatch);
    const Forward fwd = mlp_forward(state.params, tb.x);
    Matrix ga = pearson_loss_grad(fwd.pred_aux, tb.y_aux);
    const double aux_scale = cfg.normalize_loss ? 1.0 / static_cast<double>(n_aux) : 1.0;
    for (std::size_t g = 0; g < ga.cols; ++g) {
        const double w = mgrad[g] * aux_scale;
        for (std::size_t i = 0; i < ga.rows; ++i) ga(i, g) *= w;
    }
    const Matrix gp_zero(tb.x.rows, ds.primary_indices.size(), 0.0);
    const ModelParams u = mlp_backward(state.params, fwd.cache, gp_zero, ga);

    const ModelParams theta_plus =
        lookahead(state.params, state.adam, ds, {train_minibatch}, ranking, state.k, cfg);

    const Matrix vx = gather_rows(ds.features, val_minibatch);
    const Matrix vy = gather(ds.expression, std::span<const std::size_t>(val_minibatch),
                             ds.primary_indices);
    const Forward vfwd = mlp_forward(theta_plus, vx);
    Matrix gvp = pearson_loss_grad(vfwd.pred_pri, vy);
    if (cfg.normalize_loss) {
        const double s = 1.0 / static_cast<double>(ds.primary_indices.size());
        for (double& x : gvp.v) x *= s;
    }
    const Matrix gva_zero(vx.rows, n_aux, 0.0);
    const ModelParams v = mlp_backward(theta_plus, vfwd.cache, gvp, gva_zero);

    return -lookahead_rate(cfg) * dot_params(u, v);
}

void k_step(BilevelState& state, double hypergradient, const BilevelConfig& cfg, std::size_t n_aux) {
    if (!std::isfinite(hypergradient)) throw TrainingError("k_step: non-finite hypergradient");
    if (n_aux == 0) throw ConfigError("k_step: no auxiliary genes");
    double step;
    if (cfg.adam_on_k) {
        state.k_steps += 1;
        state.k_m = cfg.k_adam_beta1 * state.k_m + (1.0 - cfg.k_adam_beta1) * hypergradient;
        state.k_v = cfg.k_adam_beta2 * state.k_v + (1.0 - cfg.k_adam_beta2) * hypergradient * hypergradient;
        const double mhat = state.k_m / (1.0 - std::pow(cfg.k_adam_beta1, static_cast<double>(state.k_steps)));
        const double vhat = state.k_v / (1.0 - std::pow(cfg.k_adam_beta2, static_cast<double>(state.k_steps)));
        step = cfg.beta * mhat / (std::sqrt(vhat) + cfg.k_adam_eps);
    } else {
        step = cfg.beta * hypergradient;
    }
    state.k = std::clamp(state.k - step, k_lower_bound(n_aux), 1.0);
    state.k_history.push_back(state.k);
}

RunResult run_bilevel(const ExpressionDataset& ds, const FoldSplit::Fold& fold,
                      const GeneRanking& ranking, const BilevelConfig& cfg) {
    validate_config(cfg);
    if (fold.train.size() < 2 || fold.val.size() < 2 || fold.test.size() < 2)
        throw DataError("run_bilevel: every split needs at least 2 spots");
    const std::size_t n_aux = ds.auxiliary_indices.size();

    BilevelState st = init_bilevel_state(ds, ranking, cfg);

    if (!cfg.k_loop_enabled) {
        // Fixed selection at k_init; the hard mask keeps this path identical
        // to plain fixed-subset training (all-ones at k = 1).
        const std::vector<double> lambdas = hard_mask(ranking, st.k);
        const TrainStats stats = train_fixed_mask(st.params, st.adam, ds, fold.train, lambdas, cfg,
                                                  derive_seed(st.seed, "inner", 0));
        st.epochs_total += stats.epochs;
        st.rounds_run = 1;
        st.val_pcc_history.push_back(eval_primary_pcc(st.params, ds, fold.val));
        RunResult res;
        res.test_pcc = eval_primary_pcc(st.params, ds, fold.test);
        res.final_val_pcc = st.val_pcc_history.back();
        res.state = std::move(st);
        return res;
    }

    int phase = 0;
    bool prev_round_converged = false;
    for (int round = 0; round < cfg.max_outer_rounds; ++round) {
        inner_phase(st, ds, fold.train, ranking, cfg, phase++);
        st.val_pcc_history.push_back(eval_primary_pcc(st.params, ds, fold.val));
        st.rounds_run = round + 1;

        const double k_start = st.k;
        // One fixed lookahead sample per round keeps the hypergradient a
        // smooth function of k for the whole k-loop; a fresh mini-batch per
        // iteration would turn the descent into a random walk whose steps
        // drown the selection signal.
        BatchSampler look_sampler(fold.train, cfg.mini_batch, derive_seed(st.seed, "klook", 0),
                                  /*reshuffle_on_wrap=*/true);
        std::vector<SpotSet> mbs;
        mbs.reserve(static_cast<std::size_t>(cfg.H));
        for (int h = 0; h < cfg.H; ++h) mbs.push_back(look_sampler.next());
        const std::size_t base = st.k_history.size();
        for (int t = 0; t < cfg.max_k_iters; ++t) {
            // The outer objective is the validation loss itself, so both probes
            // of the finite difference see the whole validation fold.
            const SpotSet& vmb = fold.val;
            const double g = cfg.hypergrad_mode == BilevelConfig::Hypergrad::fd
                                 ? hypergrad_fd(st, ds, mbs, vmb, ranking, cfg)
                                 : hypergrad_analytic_h1(st, ds, mbs[0], vmb, ranking, cfg);
            if (cfg.commit_lookahead) {
                st.params = lookahead(st.params, st.adam, ds, mbs, ranking, st.k, cfg);
            }
            const double k_before = st.k;
            k_step(st, g, cfg, n_aux);
            if (st.k > k_before) {
                // A hypergradient taken at weights fitted under a larger mask
                // understates the masked-out genes, so upward moves would only
                // relitigate the previous round; k ratchets downward instead,
                // and the next inner phase decides whether the cut survives.
                st.k = k_before;
                st.k_history.back() = k_before;
            }
            st.effective_k_history.push_back(effective_k(soft_mask(ranking, st.k, cfg.tau)));
            const std::size_t m = st.k_history.size();
            if (m - base > static_cast<std::size_t>(cfg.k_converge_window) &&
                std::fabs(st.k_history[m - 1] -
                          st.k_history[m - 1 - static_cast<std::size_t>(cfg.k_converge_window)]) <
                    cfg.k_converge_tol) {
                break;
            }
        }
        const bool round_converged = std::fabs(st.k - k_start) < cfg.k_converge_tol;
        if (round_converged && prev_round_converged) break;
        prev_round_converged = round_converged;
    }

    // Refit the weights at the final k before measuring anything.
    inner_phase(st, ds, fold.train, ranking, cfg, phase++);
    st.val_pcc_history.push_back(eval_primary_pcc(st.params, ds, fold.val));

    RunResult res;
    res.test_pcc = eval_primary_pcc(st.params, ds, fold.test);
    res.final_val_pcc = st.val_pcc_history.back();
    res.state = std::move(st);
    return res;
}

}  // namespace agl
