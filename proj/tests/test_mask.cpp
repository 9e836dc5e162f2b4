#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "agl/errors.hpp"
#include "agl/mask.hpp"
#include "agl/rng.hpp"
#include "test_util.hpp"

using namespace agl;

namespace {

// Ranking over n genes whose scores decrease with index, so gene j has rank
// j + 1 and normalized rank (j + 1) / n.
GeneRanking identity_ranking(std::size_t n) {
    std::vector<double> scores(n);
    for (std::size_t j = 0; j < n; ++j) scores[j] = static_cast<double>(n - j);
    return rank_genes(scores);
}

}  // namespace

TEST_CASE("soft mask hand value at (k - r) / tau = -10") {
    GeneRanking rk = identity_ranking(5);  // gene 2 has normalized rank 0.6
    SoftMask m = soft_mask(rk, 0.5, 0.01);
    CHECK(aglt::rel_err(m.lambdas[2], 4.539786870243442e-05) < 1e-12);
    // gene 0 (rank 0.2) sits far inside the cutoff
    CHECK(m.lambdas[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("boundary gene gets exactly one half and gradient 25 at tau 0.01") {
    GeneRanking rk = identity_ranking(2);  // normalized ranks 0.5 and 1.0
    SoftMask m = soft_mask(rk, 0.5, 0.01);
    CHECK(m.lambdas[0] == 0.5);  // z is exactly 0
    auto g = mask_grad_k(m);
    CHECK(g[0] == 25.0);  // 0.25 / tau
}

TEST_CASE("mask gradient matches central differences in k") {
    const double tau = 0.01;
    GeneRanking rk = identity_ranking(40);
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> kdist(0.05, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const double k = kdist(rng);
        SoftMask m = soft_mask(rk, k, tau);
        auto grad = mask_grad_k(m);

        SUBCASE("") {}  // keep per-trial reporting flat
        const double eps_fine = tau / 1000.0;
        const double eps_coarse = tau / 10.0;
        for (std::size_t j = 0; j < rk.size(); ++j) {
            auto lam = [&](double kk) { return soft_mask(rk, kk, tau).lambdas[j]; };
            if (k - eps_coarse <= 0.0 || k + eps_coarse > 1.0) continue;
            const double fd_fine = (lam(k + eps_fine) - lam(k - eps_fine)) / (2.0 * eps_fine);
            const double fd_coarse = (lam(k + eps_coarse) - lam(k - eps_coarse)) / (2.0 * eps_coarse);
            const double sat = std::min(m.lambdas[j], 1.0 - m.lambdas[j]);
            if (sat > 1e-6) {
                // FD is trustworthy here; truncation at eps = tau/1000 is ~2e-7.
                CHECK(aglt::rel_err(grad[j], fd_fine) < 1e-6);
                CHECK(aglt::rel_err(grad[j], fd_coarse) < 3e-3);  // second-order truncation floor
            } else {
                // Near saturation the probe difference falls under the spacing
                // of doubles around 1, so only an absolute check is meaningful
                // (gradient scale at tau = 0.01 is 25).
                CHECK(std::fabs(grad[j] - fd_fine) < 1e-3);
                CHECK(std::fabs(grad[j] - fd_coarse) < 1e-3);
            }
        }
    }
}

TEST_CASE("soft mask approaches the hard mask as tau shrinks") {
    GeneRanking rk = identity_ranking(100);
    const double k = 0.505;  // at least 0.005 away from every normalized rank
    SoftMask soft = soft_mask(rk, k, 1e-6);
    auto hard = hard_mask(rk, k);
    REQUIRE(soft.lambdas.size() == hard.size());
    for (std::size_t j = 0; j < hard.size(); ++j)
        CHECK(std::fabs(soft.lambdas[j] - hard[j]) < 1e-9);
}

TEST_CASE("soft mask stays finite and saturates exactly at extreme arguments") {
    GeneRanking rk = identity_ranking(2);  // ranks 0.5, 1.0
    // tau 5e-10 puts |k - r| / tau at 1e6 for the second gene when k differs
    // from 1.0 by 5e-4.
    SoftMask low = soft_mask(rk, 1.0 - 5e-4, 5e-10);
    CHECK(std::isfinite(low.lambdas[1]));
    CHECK(low.lambdas[1] == 0.0);   // exp(-1e6) underflows
    CHECK(low.lambdas[0] == 1.0);   // z = +999000000-ish, saturates to 1
    auto g = mask_grad_k(low);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
}

TEST_CASE("hard mask selects exactly the top ranks") {
    GeneRanking rk = identity_ranking(10);
    auto m = hard_mask(rk, 0.35);  // ranks 1..3 have normalized rank <= 0.35
    std::vector<double> expect{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    CHECK(m == expect);
    auto all = hard_mask(rk, 1.0);
    CHECK(std::count(all.begin(), all.end(), 1.0) == 10);
}

TEST_CASE("effective_k counts lambdas strictly above one half") {
    GeneRanking rk = identity_ranking(10);
    SUBCASE("k = 1 excludes the boundary gene") {
        SoftMask m = soft_mask(rk, 1.0, 0.01);
        CHECK(effective_k(m) == 9);
    }
    SUBCASE("k just past 0.5 includes five genes") {
        SoftMask m = soft_mask(rk, 0.5 + 1e-3, 0.01);
        CHECK(effective_k(m) == 5);
    }
}

TEST_CASE("lambdas follow the auxiliary input order, not rank order") {
    // scores [1, 5, 3] -> ranks: gene1 first, gene2 second, gene0 third
    GeneRanking rk = rank_genes({1.0, 5.0, 3.0});
    SoftMask m = soft_mask(rk, 0.4, 0.01);
    CHECK(m.lambdas[1] > 0.99);  // normalized rank 1/3, inside the cutoff
    CHECK(m.lambdas[2] < 0.01);  // rank 2/3, outside
    CHECK(m.lambdas[0] < 0.01);  // rank 3/3, outside
}

TEST_CASE("mask parameter validation") {
    GeneRanking rk = identity_ranking(4);
    CHECK_THROWS_AS(soft_mask(rk, 0.0, 0.01), ConfigError);
    CHECK_THROWS_AS(soft_mask(rk, 1.0 + 1e-9, 0.01), ConfigError);
    CHECK_THROWS_AS(soft_mask(rk, 0.5, 0.0), ConfigError);
    CHECK_THROWS_AS(soft_mask(rk, 0.5, -1.0), ConfigError);
    CHECK_THROWS_AS(hard_mask(rk, 0.0), ConfigError);
    CHECK_NOTHROW(soft_mask(rk, 0.25, 0.01));  // k = 1/n is legal
}
