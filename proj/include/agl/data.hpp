#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "agl/matrix.hpp"

namespace agl {

// Spots x features plus spots x genes in log-normalized units, with the
// primary/auxiliary split over gene columns.
struct ExpressionDataset {
    Matrix features;
    Matrix expression;
    std::vector<std::string> spot_ids;
    std::vector<std::string> gene_names;
    std::vector<std::string> batch_labels;  // one per spot
    std::vector<std::size_t> primary_indices;
    std::vector<std::size_t> auxiliary_indices;

    std::size_t n_spots() const { return expression.rows; }
    std::size_t n_genes() const { return expression.cols; }
};

struct SyntheticSpec {
    std::size_t n_spots = 2000;
    std::size_t feature_dim = 64;
    std::size_t latent_dim = 24;
    std::size_t n_pri = 10;
    std::size_t n_aux_informative = 50;
    std::size_t n_aux_noise = 150;
    double dropout_rate = 0.3;   // zero-inflation applied to noise genes
    double noise_scale = 0.37;   // observation noise on features and signal genes
    std::size_t n_batches = 1;
    std::uint64_t seed = 1;
};

struct SyntheticDataset {
    ExpressionDataset data;
    // Truth labels for the auxiliary genes, kept out of ExpressionDataset so
    // the training engine never sees them; tests only.
    std::vector<std::uint8_t> aux_is_informative;
};

// Latent-factor generator: features and signal genes are driven by a shared
// latent state (informative auxiliaries with amplitudes decaying in index),
// noise genes are independent log-normal draws with zero-inflation. All
// expressions pass through log_normalize.
SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// Scales each spot to `target` total counts, then applies log1p. Raw counts
// must be finite and non-negative; spots with zero totals are an error.
Matrix log_normalize(const Matrix& raw_counts, double target = 10000.0);

ExpressionDataset load_csv(const std::string& expr_path, const std::string& features_path);
void write_csv(const ExpressionDataset& ds, const std::string& expr_path,
               const std::string& features_path);

// Lower-level loaders used by load_csv and by ranking-only commands.
struct ExpressionTable {
    std::vector<std::string> spot_ids;
    std::vector<std::string> batch_labels;
    std::vector<std::string> gene_names;
    Matrix values;
};
ExpressionTable load_expression_csv(const std::string& path);

struct FeatureTable {
    std::vector<std::string> spot_ids;
    Matrix values;
};
FeatureTable load_features_csv(const std::string& path);

enum class FoldMode { intra_batch, leave_one_batch_out };

struct FoldSplit {
    struct Fold {
        std::vector<std::size_t> train;
        std::vector<std::size_t> val;
        std::vector<std::size_t> test;
    };
    FoldMode mode = FoldMode::intra_batch;
    std::vector<Fold> folds;
};

// intra_batch: a seeded permutation is cut into n_folds near-equal chunks;
// fold f tests on chunk f, validates on the next chunk, trains on the rest
// (3:1:1 at n_folds = 5). leave_one_batch_out: one fold per batch label, the
// held-out batch is the test set and the remainder splits 3:1 train/val.
FoldSplit split_folds(const ExpressionDataset& ds, FoldMode mode, int n_folds = 5,
                      std::uint64_t seed = 0);

}  // namespace agl
