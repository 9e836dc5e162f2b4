#include "agl/mask.hpp"

#include <cmath>

#include "agl/errors.hpp"

namespace agl {

namespace {

// Evaluates 1 / (1 + exp(-z)) without overflowing for large |z|.
double logistic(double z) {
    if (z >= 0.0) {
        const double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_k_tau(double k, double tau) {
    if (!(k > 0.0 && k <= 1.0)) throw ConfigError("mask: k must lie in (0, 1]");
    if (!(tau > 0.0)) throw ConfigError("mask: tau must be > 0");
}

}  // namespace

SoftMask soft_mask(const GeneRanking& ranking, double k, double tau) {
    check_k_tau(k, tau);
    SoftMask m;
    m.k = k;
    m.tau = tau;
    m.lambdas.resize(ranking.size());
    for (std::size_t j = 0; j < ranking.size(); ++j) {
        m.lambdas[j] = logistic((k - ranking.normalized_rank[j]) / tau);
    }
    return m;
}

std::vector<double> mask_grad_k(const SoftMask& mask) {
    check_k_tau(mask.k, mask.tau);
    std::vector<double> g(mask.lambdas.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        g[j] = mask.lambdas[j] * (1.0 - mask.lambdas[j]) / mask.tau;
    }
    return g;
}

std::vector<double> hard_mask(const GeneRanking& ranking, double k) {
    if (!(k > 0.0 && k <= 1.0)) throw ConfigError("mask: k must lie in (0, 1]");
    std::vector<double> m(ranking.size(), 0.0);
    for (std::size_t j = 0; j < ranking.size(); ++j) {
        m[j] = ranking.normalized_rank[j] <= k ? 1.0 : 0.0;
    }
    return m;
}

std::size_t effective_k(const SoftMask& mask) {
    std::size_t n = 0;
    for (double l : mask.lambdas) {
        if (l > 0.5) ++n;
    }
    return n;
}

}  // namespace agl
