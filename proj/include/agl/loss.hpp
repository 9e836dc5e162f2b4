#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "agl/matrix.hpp"

namespace agl {

// Guards for degenerate Pearson terms: a gene whose centered prediction or
// target norm falls below kEpsVar within the batch is invalid; it contributes
// loss 1 and a zero gradient. kEpsGuard keeps valid denominators away from 0.
inline constexpr double kEpsVar = 1e-8;
inline constexpr double kEpsGuard = 1e-12;

struct GeneLossReport {
    std::vector<double> per_gene_loss;  // 1 - r per gene; 1.0 for invalid genes
    std::vector<double> mean_pred;
    std::vector<double> mean_true;
    std::vector<std::uint8_t> valid;  // 0 when a degeneracy guard fired

    double total() const;  // sum over genes, invalid genes included at loss 1
};

// Per-gene correlation loss 1 - r within the given batch (rows = spots).
GeneLossReport pearson_loss(const Matrix& pred, const Matrix& truth);

// d(sum of per-gene losses)/d(pred); columns of invalid genes are zero.
Matrix pearson_loss_grad(const Matrix& pred, const Matrix& truth);

struct TotalLoss {
    double value = 0.0;
    Matrix grad_pri;
    Matrix grad_aux;  // column j scaled by lambdas[j]
};

// Primary losses plus lambda-weighted auxiliary losses, summed over genes.
// With normalize=true each block is divided by its gene count instead.
TotalLoss total_loss(const Matrix& pred_pri, const Matrix& true_pri, const Matrix& pred_aux,
                     const Matrix& true_aux, const std::vector<double>& lambdas,
                     bool normalize = false);

struct PccReport {
    double mean = 0.0;                // over valid genes
    std::size_t n_valid = 0;
    std::vector<double> per_gene;     // r per gene; 0 placeholder for invalid genes
    std::vector<std::uint8_t> valid;
};

// Mean per-gene Pearson correlation; zero-variance genes are excluded and
// reported. Intended for full-split evaluation, not mini-batches.
PccReport pcc_metric(const Matrix& pred, const Matrix& truth);

}  // namespace agl
