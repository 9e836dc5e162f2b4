// Acceptance suite: one line per criterion, nonzero exit when any fail.
//
// Criteria 7-9 share one set of benchmark runs (subset sweep, agl_all, and
// the dkgsb benchmark run); criterion 10 replays the trajectory run from its
// own echoed config. Budgets and frozen margins live in acceptance_fixture.hpp.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "agl/bilevel.hpp"
#include "agl/commands.hpp"
#include "agl/errors.hpp"
#include "agl/loss.hpp"
#include "agl/mask.hpp"
#include "agl/mlp.hpp"
#include "acceptance_fixture.hpp"
#include "hvg_oracle.hpp"
#include "test_util.hpp"

using namespace agl;
namespace fs = std::filesystem;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

struct Ctx {
    fs::path out;
    int registered_criteria = 0;
    std::optional<SweepReport> sweep;
    std::optional<RunReport> all_run;
    std::optional<RunReport> dkgsb_run;
    std::optional<RunReport> traj_run;
};

const SweepReport& ensure_sweep(Ctx& ctx) {
    if (!ctx.sweep) {
        RunConfig base = accept::benchmark_base("acc_sweep", ctx.out.string());
        base.method = Method::pgl;
        ctx.sweep = cmd_sweep(base, {accept::kSubsetSize}, {"hvg", "random"});
    }
    return *ctx.sweep;
}

const RunReport& ensure_traj(Ctx& ctx) {
    if (!ctx.traj_run) {
        RunConfig cfg = accept::benchmark_base("acc_traj", ctx.out.string());
        cfg.method = Method::agl_dkgsb;
        cfg.only_fold = accept::kTrajectoryFold;
        accept::apply_dkgsb_trajectory(cfg.bilevel);
        ctx.traj_run = cmd_train(cfg);
    }
    return *ctx.traj_run;
}

const SweepEntryReport& sweep_entry(const SweepReport& rep, const std::string& selector) {
    for (const auto& e : rep.entries)
        if (e.selector == selector && e.size == accept::kSubsetSize) return e;
    throw OracleError("sweep report lacks selector " + selector);
}

std::vector<double> moving_average5(const std::vector<double>& xs) {
    std::vector<double> ma(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t lo = i >= 4 ? i - 4 : 0;
        double sum = 0.0;
        for (std::size_t j = lo; j <= i; ++j) sum += xs[j];
        ma[i] = sum / static_cast<double>(i - lo + 1);
    }
    return ma;
}

std::string fmt(double v) {
    char buf[32];
    if (v != 0.0 && std::fabs(v) < 1e-3)
        std::snprintf(buf, sizeof buf, "%.2e", v);
    else
        std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

// --------------------------------------------------------------------------
// 1. Scope: absolute figures from full-scale published experiments are out of
// reach at this data size, so the suite checks properties and scaled analogs.
// --------------------------------------------------------------------------
bool criterion_scope(Ctx& ctx, std::string& note) {
    note = "property-based suite; full-scale benchmark values out of scope at this size";
    return ctx.registered_criteria == 10;
}

// --------------------------------------------------------------------------
// 2. Gradient oracles against central finite differences.
// --------------------------------------------------------------------------
bool criterion_gradients(Ctx&, std::string& note) {
    Timer timer;
    double worst_mlp = 0.0, worst_pearson = 0.0, worst_mask_rel = 0.0, worst_mask_abs = 0.0;

    for (std::uint64_t t = 0; t < 20; ++t) {
        Rng rng(derive_seed(9000, "acc-mlp", t));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::size_t batch = 5 + t % 3;
        ModelParams params = ModelParams::init(7, 9, 3, 4, derive_seed(9000, "acc-init", t));
        Matrix x(batch, 7), y_pri(batch, 3), y_aux(batch, 4);
        for (double& e : x.v) e = gauss(rng);
        for (double& e : y_pri.v) e = gauss(rng);
        for (double& e : y_aux.v) e = gauss(rng);
        std::vector<double> lambdas(4);
        for (double& l : lambdas) l = unit(rng);

        auto loss_fn = [&](const std::vector<double>& flat) {
            ModelParams p = params;
            p.unflatten(flat);
            const Forward fwd = mlp_forward(p, x);
            return total_loss(fwd.pred_pri, y_pri, fwd.pred_aux, y_aux, lambdas).value;
        };
        const Forward fwd = mlp_forward(params, x);
        const TotalLoss tl = total_loss(fwd.pred_pri, y_pri, fwd.pred_aux, y_aux, lambdas);
        const std::vector<double> an = mlp_backward(params, fwd.cache, tl.grad_pri, tl.grad_aux).flatten();
        // The loss is O(10), so central differences carry ~1e-10 of rounding
        // noise per coordinate at this step; the floor keeps coordinates whose
        // true gradient sits below it on an absolute scale instead.
        const std::vector<double> fd = finite_diff_grad(loss_fn, params.flatten(), 1e-5);
        worst_mlp = std::max(worst_mlp, aglt::max_rel_err(an, fd, 1e-5));
    }

    for (std::uint64_t t = 0; t < 20; ++t) {
        Rng rng(derive_seed(9100, "acc-pearson", t));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Matrix pred(12, 6), truth(12, 6);
        for (double& e : pred.v) e = gauss(rng);
        for (double& e : truth.v) e = gauss(rng);
        auto loss_fn = [&](const std::vector<double>& flat) {
            Matrix p = pred;
            p.v = flat;
            return pearson_loss(p, truth).total();
        };
        const std::vector<double> an = pearson_loss_grad(pred, truth).v;
        const std::vector<double> fd = finite_diff_grad(loss_fn, pred.v, 1e-6);
        worst_pearson = std::max(worst_pearson, aglt::max_rel_err(an, fd, 1e-8));
    }

    for (std::uint64_t t = 0; t < 20; ++t) {
        Rng rng(derive_seed(9200, "acc-mask", t));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> kdist(0.05, 0.95);
        std::vector<double> scores(40);
        for (double& s : scores) s = gauss(rng);
        const GeneRanking ranking = rank_genes(scores);
        const double tau = t % 2 == 0 ? 0.01 : 0.1;
        const double k = kdist(rng);
        const double eps = tau / 2000.0;
        const SoftMask mask = soft_mask(ranking, k, tau);
        const std::vector<double> an = mask_grad_k(mask);
        const SoftMask up = soft_mask(ranking, k + eps, tau);
        const SoftMask dn = soft_mask(ranking, k - eps, tau);
        for (std::size_t j = 0; j < an.size(); ++j) {
            const double fd = (up.lambdas[j] - dn.lambdas[j]) / (2.0 * eps);
            const double sat = std::min(mask.lambdas[j], 1.0 - mask.lambdas[j]);
            if (sat > 1e-5)
                worst_mask_rel = std::max(worst_mask_rel, aglt::rel_err(an[j], fd, 1e-12));
            else
                worst_mask_abs = std::max(worst_mask_abs, std::fabs(an[j] - fd));
        }
    }

    const double elapsed = timer.seconds();
    note = "mlp " + fmt(worst_mlp) + ", pearson " + fmt(worst_pearson) + ", mask rel " +
           fmt(worst_mask_rel) + " abs " + fmt(worst_mask_abs) + " (" + fmt(elapsed) + " s)";
    return worst_mlp < 1e-4 && worst_pearson < 1e-4 && worst_mask_rel < 1e-6 &&
           worst_mask_abs < 1e-8 && elapsed < accept::kBudgetGradientSuite;
}

// --------------------------------------------------------------------------
// 3. Hypergradient cross-oracle: analytic H = 1 against finite differences.
// --------------------------------------------------------------------------
bool criterion_hypergradient(Ctx&, std::string& note) {
    Timer timer;
    BilevelConfig cfg;
    cfg.alpha = 2e-3;
    cfg.mini_batch = 32;
    cfg.max_epochs = 40;
    cfg.early_stop_patience = 8;
    cfg.hidden_dim = 8;
    cfg.H = 1;
    cfg.lookahead_alpha = 2e-3;
    cfg.hypergrad_fd_step = cfg.tau / 300.0;

    double worst = 0.0;
    for (std::uint64_t t = 0; t < 20; ++t) {
        SyntheticSpec spec;
        spec.n_spots = 60;
        spec.feature_dim = 8;
        spec.latent_dim = 4;
        spec.n_pri = 3;
        spec.n_aux_informative = 6;
        spec.n_aux_noise = 6;
        spec.seed = 500 + t;
        const ExpressionDataset ds = generate_synthetic(spec).data;
        const GeneRanking ranking = ranking_of_auxiliary(ds);
        const FoldSplit::Fold fold = split_folds(ds, FoldMode::intra_batch, 5, 3).folds[0];

        cfg.seed = 4000 + t;
        BilevelState st = init_bilevel_state(ds, ranking, cfg);
        inner_phase(st, ds, fold.train, ranking, cfg, 0);
        st.k = 0.25 + 0.65 * static_cast<double>(t) / 19.0;

        const SpotSet mb(fold.train.begin(), fold.train.begin() + 24);
        const double an = hypergrad_analytic_h1(st, ds, mb, fold.val, ranking, cfg);
        const double fd = hypergrad_fd(st, ds, {mb}, fold.val, ranking, cfg);
        worst = std::max(worst, aglt::rel_err(an, fd, 1e-8));
    }

    const double elapsed = timer.seconds();
    note = "worst rel err " + fmt(worst) + " over 20 toys (" + fmt(elapsed) + " s)";
    return worst < 1e-4 && elapsed < accept::kBudgetHypergradOracle;
}

// --------------------------------------------------------------------------
// 4. Ranking pipeline against the brute-force oracle, ties included.
// --------------------------------------------------------------------------
bool criterion_hvg(Ctx&, std::string& note) {
    Timer timer;
    int mismatches = 0;
    for (std::uint64_t t = 0; t < 50; ++t) {
        Rng rng(derive_seed(9300, "acc-hvg", t));
        std::uniform_real_distribution<double> value(0.0, 5.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> pick(0, 199);
        Matrix m(50, 200);
        for (double& e : m.v) e = unit(rng) < 0.25 ? 0.0 : value(rng);
        if (t % 2 == 0) {  // quantized entries produce dispersion ties
            for (double& e : m.v) e = std::round(e * 4.0) / 4.0;
        }
        for (int d = 0; d < 6; ++d) {  // duplicated columns: exact score ties
            const std::size_t from = pick(rng), to = pick(rng);
            for (std::size_t s = 0; s < m.rows; ++s) m(s, to) = m(s, from);
        }
        for (int d = 0; d < 3; ++d) {  // constant and all-zero columns
            const std::size_t g = pick(rng);
            const double v = d == 0 ? 0.0 : 2.5;
            for (std::size_t s = 0; s < m.rows; ++s) m(s, g) = v;
        }

        const GeneRanking got = rank_auxiliary(m, 20);
        const aglt::OracleRanking want = aglt::oracle_rank(m, 20);
        if (got.ordered_ids != want.ordered_ids) ++mismatches;
    }
    const double elapsed = timer.seconds();
    note = std::to_string(mismatches) + " mismatches over 50 matrices (" + fmt(elapsed) + " s)";
    return mismatches == 0 && elapsed < accept::kBudgetHvgOracle;
}

// --------------------------------------------------------------------------
// 5. Mask identities.
// --------------------------------------------------------------------------
bool criterion_mask(Ctx&, std::string& note) {
    Rng rng(derive_seed(9400, "acc-mask-id"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> scores(200);
    for (double& s : scores) s = gauss(rng);
    const GeneRanking ranking = rank_genes(scores);

    bool half_exact = true;
    for (std::size_t g : {std::size_t{0}, std::size_t{37}, std::size_t{199}}) {
        const SoftMask m = soft_mask(ranking, ranking.normalized_rank[g], 0.02);
        half_exact = half_exact && m.lambdas[g] == 0.5;
    }

    bool monotone_rank = true;
    std::uniform_real_distribution<double> kdist(0.05, 0.95);
    for (int rep = 0; rep < 10; ++rep) {
        const SoftMask m = soft_mask(ranking, kdist(rng), rep % 2 == 0 ? 0.01 : 0.2);
        for (std::size_t i = 0; i + 1 < ranking.size(); ++i)
            monotone_rank =
                monotone_rank && m.lambdas[ranking.ordered_ids[i]] >= m.lambdas[ranking.ordered_ids[i + 1]];
    }

    bool monotone_k = true;
    std::vector<double> prev;
    for (int i = 0; i <= 60; ++i) {
        const double k = 0.005 + (1.0 - 0.005) * static_cast<double>(i) / 60.0;
        const SoftMask m = soft_mask(ranking, k, 0.05);
        if (!prev.empty())
            for (std::size_t j = 0; j < m.lambdas.size(); ++j)
                monotone_k = monotone_k && m.lambdas[j] >= prev[j];
        prev = m.lambdas;
    }

    // Ranks sit on a 1/200 grid, so k midway between two ranks stays 50
    // temperatures away from every boundary at tau = 1e-6.
    bool hard_soft = true;
    const double k_mid = 0.5 + 0.0025;
    const SoftMask tight = soft_mask(ranking, k_mid, 1e-6);
    const std::vector<double> hard = hard_mask(ranking, k_mid);
    for (std::size_t j = 0; j < tight.lambdas.size(); ++j)
        hard_soft = hard_soft && std::fabs(tight.lambdas[j] - hard[j]) <= 1e-9;

    bool finite = true;
    for (const double tau : {1e-6, 1e-7}) {
        for (const double k : {0.005, 1.0}) {
            const SoftMask m = soft_mask(ranking, k, tau);  // |k - r| / tau up to 1e7
            for (const double l : m.lambdas) finite = finite && std::isfinite(l);
            for (const double g : mask_grad_k(m)) finite = finite && std::isfinite(g);
        }
    }

    note = std::string("half ") + (half_exact ? "exact" : "off") + ", monotone " +
           (monotone_rank && monotone_k ? "yes" : "no") + ", hard/soft " +
           (hard_soft ? "1e-9" : "off") + ", finite " + (finite ? "yes" : "no");
    return half_exact && monotone_rank && monotone_k && hard_soft && finite;
}

// --------------------------------------------------------------------------
// 6. Reductions: zero mask is the primary-only trainer; disabled k loop is
// the all-auxiliary trainer.
// --------------------------------------------------------------------------
bool criterion_reduction(Ctx&, std::string& note) {
    SyntheticSpec spec;
    spec.n_spots = 240;
    spec.feature_dim = 16;
    spec.latent_dim = 6;
    spec.n_pri = 5;
    spec.n_aux_informative = 10;
    spec.n_aux_noise = 20;
    spec.seed = 21;
    const ExpressionDataset ds = generate_synthetic(spec).data;
    const GeneRanking ranking = ranking_of_auxiliary(ds);
    const FoldSplit::Fold fold = split_folds(ds, FoldMode::intra_batch, 5, 11).folds[0];

    BilevelConfig cfg;
    cfg.alpha = 1e-3;
    cfg.mini_batch = 32;
    cfg.max_epochs = 30;
    cfg.early_stop_patience = 6;
    cfg.hidden_dim = 16;
    cfg.seed = 77;

    const FoldOutcome zero =
        train_fold_fixed(ds, fold, std::vector<double>(ds.auxiliary_indices.size(), 0.0), cfg);
    MethodRunConfig pgl_cfg;
    pgl_cfg.method = Method::pgl;
    pgl_cfg.bilevel = cfg;
    const FoldOutcome pgl = train_fold(ds, fold, ranking, pgl_cfg);

    bool step_match = zero.epochs == pgl.epochs && zero.epoch_losses.size() == pgl.epoch_losses.size();
    double worst_step = 0.0;
    if (step_match)
        for (std::size_t e = 0; e < zero.epoch_losses.size(); ++e)
            worst_step = std::max(worst_step, std::fabs(zero.epoch_losses[e] - pgl.epoch_losses[e]));
    step_match = step_match && worst_step <= 1e-9 && std::fabs(zero.test_pcc - pgl.test_pcc) <= 1e-9 &&
                 std::fabs(zero.val_pcc - pgl.val_pcc) <= 1e-9;

    MethodRunConfig all_cfg;
    all_cfg.method = Method::agl_all;
    all_cfg.bilevel = cfg;
    const FoldOutcome all = train_fold(ds, fold, ranking, all_cfg);
    MethodRunConfig dk_cfg;
    dk_cfg.method = Method::agl_dkgsb;
    dk_cfg.bilevel = cfg;
    dk_cfg.bilevel.k_loop_enabled = false;
    dk_cfg.bilevel.k_init = 1.0;
    const FoldOutcome dk = train_fold(ds, fold, ranking, dk_cfg);
    const bool all_match =
        dk.test_pcc == all.test_pcc && dk.val_pcc == all.val_pcc && dk.epochs == all.epochs;

    note = "zero-mask worst step gap " + fmt(worst_step) + "; disabled k loop " +
           (all_match ? "bitwise equal" : "differs");
    return step_match && all_match;
}

// --------------------------------------------------------------------------
// 7. Subset selection: ranked subsets beat random ones, and random selection
// hurts on some folds.
// --------------------------------------------------------------------------
bool criterion_selection(Ctx& ctx, std::string& note) {
    Timer timer;
    const SweepReport& rep = ensure_sweep(ctx);
    const double elapsed = timer.seconds();
    const SweepEntryReport& hvg = sweep_entry(rep, "hvg");
    const SweepEntryReport& random = sweep_entry(rep, "random");

    int hvg_wins = 0, random_nonpos = 0;
    for (std::size_t f = 0; f < hvg.fold_delta.size(); ++f) {
        if (hvg.fold_delta[f] > random.fold_delta[f]) ++hvg_wins;
        if (random.fold_delta[f] <= 0.0) ++random_nonpos;
    }
    note = "hvg beats random " + std::to_string(hvg_wins) + "/5, random non-positive " +
           std::to_string(random_nonpos) + "/5 (" + fmt(elapsed) + " s)";
    return hvg_wins >= accept::kHvgBeatsRandomFolds &&
           random_nonpos >= accept::kRandomNonPositiveFolds &&
           elapsed < accept::kBudgetSubsetComparison;
}

// --------------------------------------------------------------------------
// 8. k trajectory: starts at 1.0, non-increasing under a 5-point moving
// average, ends inside the planted band, and the final validation PCC is at
// least the full-pool starting value.
// --------------------------------------------------------------------------
bool criterion_trajectory(Ctx& ctx, std::string& note) {
    Timer timer;
    const RunReport& rep = ensure_traj(ctx);
    const double elapsed = timer.seconds();
    if (rep.folds.size() != 1) {
        note = "expected one fold";
        return false;
    }
    const FoldReport& f = rep.folds.front();
    const bool starts_full = !f.k_history.empty() && f.k_history.front() == 1.0;

    const std::vector<double> ma = moving_average5(f.k_history);
    bool non_increasing = true;
    for (std::size_t i = 1; i < ma.size(); ++i)
        non_increasing = non_increasing && ma[i] <= ma[i - 1] + 1e-12;

    const bool in_band = f.effective_k_final >= accept::kEffectiveKLo &&
                         f.effective_k_final <= accept::kEffectiveKHi;
    const bool val_ok = f.val_pcc_history.size() >= 2 &&
                        f.val_pcc_history.back() >= f.val_pcc_history.front();

    note = "k " + fmt(f.k_history.front()) + " -> " + fmt(f.k_final) + ", effective_k " +
           std::to_string(f.effective_k_final) + ", val " + fmt(f.val_pcc_history.front()) + " -> " +
           fmt(f.val_pcc_history.back()) + " (" + fmt(elapsed) + " s)";
    return starts_full && non_increasing && in_band && val_ok &&
           elapsed < accept::kBudgetTrajectory;
}

// --------------------------------------------------------------------------
// 9. Method ordering on the shared benchmark.
// --------------------------------------------------------------------------
bool criterion_ordering(Ctx& ctx, std::string& note) {
    const SweepReport& sweep = ensure_sweep(ctx);
    if (!ctx.all_run) {
        RunConfig cfg = accept::benchmark_base("acc_all", ctx.out.string());
        cfg.method = Method::agl_all;
        ctx.all_run = cmd_train(cfg);
    }
    if (!ctx.dkgsb_run) {
        RunConfig cfg = accept::benchmark_base("acc_dkgsb", ctx.out.string());
        cfg.method = Method::agl_dkgsb;
        accept::apply_dkgsb_benchmark(cfg.bilevel);
        ctx.dkgsb_run = cmd_train(cfg);
    }
    const double pgl = sweep.baseline_mean_pcc;
    const double all = ctx.all_run->mean_test_pcc;
    const double dk = ctx.dkgsb_run->mean_test_pcc;

    note = "dkgsb " + fmt(dk) + " >= agl_all " + fmt(all) + " >= pgl " + fmt(pgl) + ", margin " +
           fmt(dk - pgl) + " > " + fmt(accept::kOrderingMargin);
    return dk >= all && all >= pgl && dk - pgl > accept::kOrderingMargin;
}

// --------------------------------------------------------------------------
// 10. Determinism: replaying a run from its echoed config reproduces every
// metric bit for bit, and the ranking command writes identical bytes.
// --------------------------------------------------------------------------
bool criterion_determinism(Ctx& ctx, std::string& note) {
    const RunReport& first = ensure_traj(ctx);
    RunConfig replay = run_config_from_json(first.config_echo);
    replay.run_name = "acc_traj_replay";
    const RunReport second = cmd_train(replay);

    bool equal = first.folds.size() == second.folds.size();
    if (equal) {
        const FoldReport& a = first.folds.front();
        const FoldReport& b = second.folds.front();
        equal = a.test_pcc == b.test_pcc && a.val_pcc == b.val_pcc && a.epochs == b.epochs &&
                a.k_final == b.k_final && a.effective_k_final == b.effective_k_final &&
                a.k_history == b.k_history && a.effective_k_history == b.effective_k_history &&
                a.val_pcc_history == b.val_pcc_history;
    }

    RankConfig rank;
    rank.synthetic = true;
    rank.synthetic_spec = SyntheticSpec{};
    rank.out_path = (ctx.out / "rank_a.csv").string();
    cmd_rank(rank);
    rank.out_path = (ctx.out / "rank_b.csv").string();
    cmd_rank(rank);
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const bool rank_equal = slurp(ctx.out / "rank_a.csv") == slurp(ctx.out / "rank_b.csv");

    note = std::string("train replay ") + (equal ? "bitwise equal" : "differs") + ", rank rerun " +
           (rank_equal ? "bitwise equal" : "differs");
    return equal && rank_equal;
}

}  // namespace

int main() {
    Ctx ctx;
    ctx.out = fs::temp_directory_path() / "agl_acceptance";
    std::error_code ec;
    fs::remove_all(ctx.out, ec);
    fs::create_directories(ctx.out);

    struct Criterion {
        int id;
        const char* label;
        std::function<bool(Ctx&, std::string&)> body;
    };
    const std::vector<Criterion> criteria{
        {1, "scope: properties and scaled analogs", criterion_scope},
        {2, "gradient oracles vs finite differences", criterion_gradients},
        {3, "hypergradient cross-oracle (analytic vs fd)", criterion_hypergradient},
        {4, "ranking pipeline vs brute-force oracle", criterion_hvg},
        {5, "mask identities", criterion_mask},
        {6, "reductions (zero mask = pgl, no k loop = agl_all)", criterion_reduction},
        {7, "subset selection beats random at size 50", criterion_selection},
        {8, "k trajectory descends into the planted band", criterion_trajectory},
        {9, "method ordering dkgsb >= agl_all >= pgl", criterion_ordering},
        {10, "bitwise determinism under replay", criterion_determinism},
    };
    ctx.registered_criteria = static_cast<int>(criteria.size());

    int failures = 0;
    Timer total;
    for (const auto& c : criteria) {
        std::string note;
        bool ok = false;
        try {
            ok = c.body(ctx, note);
        } catch (const std::exception& e) {
            note = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::printf("[%s] criterion %2d: %s -- %s\n", ok ? "PASS" : "FAIL", c.id, c.label,
                    note.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failures,
                criteria.size(), total.seconds());

    fs::remove_all(ctx.out, ec);
    return failures;
}
