#include "agl/hvg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agl/errors.hpp"

namespace agl {

std::vector<std::pair<double, double>> mean_dispersion(const Matrix& expr) {
    if (expr.rows < 2) throw DataError("mean_dispersion: need at least 2 spots");
    for (double x : expr.v) {
        if (!std::isfinite(x) || x < 0.0)
            throw DataError("mean_dispersion: expression entries must be finite and non-negative");
    }
    const double n = static_cast<double>(expr.rows);
    std::vector<std::pair<double, double>> out(expr.cols);
    for (std::size_t g = 0; g < expr.cols; ++g) {
        double sum = 0.0;
        for (std::size_t i = 0; i < expr.rows; ++i) sum += expr(i, g);
        const double mean = sum / n;
        double ss = 0.0;
        for (std::size_t i = 0; i < expr.rows; ++i) {
            const double d = expr(i, g) - mean;
            ss += d * d;
        }
        const double var = ss / n;
        out[g] = {mean, mean > 0.0 ? var / mean : 0.0};
    }
    return out;
}

std::vector<int> assign_bins(const std::vector<double>& means, int n_bins) {
    if (n_bins < 1) throw ConfigError("assign_bins: n_bins must be >= 1");
    if (means.empty()) throw DataError("assign_bins: no genes");
    const std::size_t n = means.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&means](std::size_t a, std::size_t b) {
        if (means[a] != means[b]) return means[a] < means[b];
        return a < b;
    });
    std::vector<int> bins(n, 0);
    const std::size_t base = n / static_cast<std::size_t>(n_bins);
    const std::size_t extra = n % static_cast<std::size_t>(n_bins);
    std::size_t pos = 0;
    for (int b = 0; b < n_bins && pos < n; ++b) {
        const std::size_t size = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) bins[order[pos++]] = b;
    }
    return bins;
}

std::vector<double> zscore_bins(const std::vector<double>& dispersions, const std::vector<int>& bins) {
    if (dispersions.size() != bins.size()) throw ConfigError("zscore_bins: size mismatch");
    std::vector<double> scores(dispersions.size(), 0.0);
    if (bins.empty()) return scores;
    const int n_bins = *std::max_element(bins.begin(), bins.end()) + 1;
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_bins));
    for (std::size_t g = 0; g < bins.size(); ++g) {
        if (bins[g] < 0) throw ConfigError("zscore_bins: negative bin index");
        members[static_cast<std::size_t>(bins[g])].push_back(g);
    }
    for (const auto& bin : members) {
        if (bin.size() < 2) continue;  // singleton bins keep score 0
        double lo = dispersions[bin[0]], hi = lo, sum = 0.0;
        for (std::size_t g : bin) {
            lo = std::min(lo, dispersions[g]);
            hi = std::max(hi, dispersions[g]);
            sum += dispersions[g];
        }
        if (lo == hi) continue;  // no variation in the bin
        const double mean = sum / static_cast<double>(bin.size());
        double ss = 0.0;
        for (std::size_t g : bin) {
            const double d = dispersions[g] - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / static_cast<double>(bin.size()));
        if (sd == 0.0) continue;
        for (std::size_t g : bin) scores[g] = (dispersions[g] - mean) / sd;
    }
    return scores;
}

GeneRanking rank_genes(const std::vector<double>& scores) {
    GeneRanking rk;
    const std::size_t n = scores.size();
    rk.ordered_ids.resize(n);
    std::iota(rk.ordered_ids.begin(), rk.ordered_ids.end(), 0);
    std::sort(rk.ordered_ids.begin(), rk.ordered_ids.end(), [&scores](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    rk.rank_of.assign(n, 0);
    rk.normalized_rank.assign(n, 0.0);
    for (std::size_t pos = 0; pos < n; ++pos) {
        const std::size_t gene = rk.ordered_ids[pos];
        rk.rank_of[gene] = pos + 1;
        rk.normalized_rank[gene] = static_cast<double>(pos + 1) / static_cast<double>(n);
    }
    return rk;
}

std::vector<HvgScore> compute_hvg(const Matrix& expr, int n_bins) {
    const auto md = mean_dispersion(expr);
    std::vector<double> means(md.size()), disps(md.size());
    for (std::size_t g = 0; g < md.size(); ++g) {
        means[g] = md[g].first;
        disps[g] = md[g].second;
    }
    const auto bins = assign_bins(means, n_bins);
    const auto scores = zscore_bins(disps, bins);
    std::vector<HvgScore> out(md.size());
    for (std::size_t g = 0; g < md.size(); ++g) {
        out[g] = {g, means[g], disps[g], bins[g], scores[g]};
    }
    return out;
}

GeneRanking rank_auxiliary(const Matrix& expr_aux, int n_bins) {
    const auto hvg = compute_hvg(expr_aux, n_bins);
    std::vector<double> scores(hvg.size());
    for (std::size_t g = 0; g < hvg.size(); ++g) scores[g] = hvg[g].score;
    return rank_genes(scores);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> select_primary(const Matrix& expr_all,
                                                                             std::size_t n_pri,
                                                                             int n_bins) {
    if (n_pri < 1) throw ConfigError("select_primary: n_pri must be >= 1");
    if (n_pri >= expr_all.cols) throw ConfigError("select_primary: n_pri must be smaller than the gene count");
    const GeneRanking rk = rank_auxiliary(expr_all, n_bins);
    std::vector<std::size_t> primary(rk.ordered_ids.begin(),
                                     rk.ordered_ids.begin() + static_cast<std::ptrdiff_t>(n_pri));
    std::vector<std::size_t> aux(rk.ordered_ids.begin() + static_cast<std::ptrdiff_t>(n_pri),
                                 rk.ordered_ids.end());
    std::sort(primary.begin(), primary.end());
    std::sort(aux.begin(), aux.end());
    return {std::move(primary), std::move(aux)};
}

}  // namespace agl
