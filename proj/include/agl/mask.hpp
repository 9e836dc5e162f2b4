#pragma once

#include <cstddef>
#include <vector>

#include "agl/hvg.hpp"

namespace agl {

// Soft top-k selection weights over the auxiliary ranking. lambdas[j] belongs
// to auxiliary gene j (same order as the ranking input, not rank order).
struct SoftMask {
    double k = 1.0;
    double tau = 0.01;
    std::vector<double> lambdas;
};

// lambda_j = logistic((k - normalized_rank_j) / tau). Overflow-safe for
// |k - r| / tau at least up to 1e6; tails may saturate to exactly 0 or 1 in
// double precision.
SoftMask soft_mask(const GeneRanking& ranking, double k, double tau);

// d lambda_j / dk = lambda_j (1 - lambda_j) / tau.
std::vector<double> mask_grad_k(const SoftMask& mask);

// Binary selection: 1 iff normalized_rank_j <= k.
std::vector<double> hard_mask(const GeneRanking& ranking, double k);

// Count of genes with lambda_j > 0.5, i.e. genes strictly inside the cutoff.
std::size_t effective_k(const SoftMask& mask);

}  // namespace agl
