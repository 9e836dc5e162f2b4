#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "agl/matrix.hpp"

namespace agl {

struct HvgScore {
    std::size_t gene_index = 0;
    double mean = 0.0;
    double dispersion = 0.0;  // population variance / mean; 0 when mean == 0
    int bin_index = 0;        // equal-frequency mean bin, ascending mean
    double score = 0.0;       // within-bin z-scored dispersion
};

// Dense 1-based ranks; rank 1 is the most variable gene. Ties in score are
// broken by ascending gene index, so the ranking is a permutation.
struct GeneRanking {
    std::vector<std::size_t> ordered_ids;     // position r-1 holds the gene with rank r
    std::vector<std::size_t> rank_of;         // gene index -> rank in [1, n]
    std::vector<double> normalized_rank;      // gene index -> rank / n, in (0, 1]

    std::size_t size() const { return ordered_ids.size(); }
};

// Per-gene (mean, dispersion) over spots. Variance is the population variance
// (divide by N). Expression must hold >= 2 spots of finite, non-negative values.
std::vector<std::pair<double, double>> mean_dispersion(const Matrix& expr);

// Equal-frequency binning of genes by mean. Genes are ordered by (mean, index)
// and split into n_bins contiguous chunks whose sizes differ by at most one;
// lower bin indices hold smaller means.
std::vector<int> assign_bins(const std::vector<double>& means, int n_bins = 20);

// Z-score of dispersion within each bin, using the population standard
// deviation. Bins with no variation (singletons, equal dispersions, or zero
// std) score 0 for every member.
std::vector<double> zscore_bins(const std::vector<double>& dispersions, const std::vector<int>& bins);

GeneRanking rank_genes(const std::vector<double>& scores);

std::vector<HvgScore> compute_hvg(const Matrix& expr, int n_bins = 20);
GeneRanking rank_auxiliary(const Matrix& expr_aux, int n_bins = 20);

// Full pipeline over all genes; the top n_pri become primary, the rest
// auxiliary. Both index lists are returned in ascending order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> select_primary(const Matrix& expr_all,
                                                                             std::size_t n_pri,
                                                                             int n_bins = 20);

}  // namespace agl
