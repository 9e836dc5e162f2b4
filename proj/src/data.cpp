#include "agl/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "agl/csvio.hpp"
#include "agl/errors.hpp"
#include "agl/rng.hpp"

namespace agl {

namespace {

constexpr double kAmpPrimary = 1.0;
constexpr double kAmpInformativeHigh = 3.0;
constexpr double kAmpInformativeLow = 1.8;
constexpr double kNoiseGeneSigma = 0.5;
// Per-gene noise baselines span the informative genes' mean-expression band so
// that every dispersion bin mixes the two populations; a bin containing only
// noise genes would z-score them against each other and promote its tail.
constexpr double kNoiseBaseLow = 1.3;
constexpr double kNoiseBaseHigh = 2.3;
constexpr double kLogCountClamp = 12.0;

std::string padded(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
    return std::string(buf);
}

Matrix standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& x : m.v) x = n(rng);
    return m;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_spots < 2) throw ConfigError("generate_synthetic: need at least 2 spots");
    if (spec.feature_dim < 1 || spec.latent_dim < 1)
        throw ConfigError("generate_synthetic: feature_dim and latent_dim must be >= 1");
    if (spec.n_pri < 1) throw ConfigError("generate_synthetic: need at least one primary gene");
    if (!(spec.dropout_rate >= 0.0 && spec.dropout_rate < 1.0))
        throw ConfigError("generate_synthetic: dropout_rate must lie in [0, 1)");
    if (!(spec.noise_scale >= 0.0)) throw ConfigError("generate_synthetic: noise_scale must be >= 0");
    if (spec.n_batches < 1 || spec.n_batches > spec.n_spots)
        throw ConfigError("generate_synthetic: n_batches must lie in [1, n_spots]");

    const std::size_t S = spec.n_spots;
    const std::size_t L = spec.latent_dim;
    const std::size_t F = spec.feature_dim;
    const std::size_t P = spec.n_pri;
    const std::size_t I = spec.n_aux_informative;
    const std::size_t J = spec.n_aux_noise;
    const std::size_t n_genes = P + I + J;

    Rng z_rng(derive_seed(spec.seed, "latent"));
    const Matrix z = standard_normal(S, L, z_rng);

    Rng a_rng(derive_seed(spec.seed, "feature_map"));
    Matrix A = standard_normal(L, F, a_rng);
    const double a_scale = 1.0 / std::sqrt(static_cast<double>(L));
    for (double& x : A.v) x *= a_scale;

    Matrix features = matmul(z, A);
    if (spec.noise_scale > 0.0) {
        Rng f_rng(derive_seed(spec.seed, "feature_noise"));
        std::normal_distribution<double> n(0.0, 1.0);
        for (double& x : features.v) x += spec.noise_scale * n(f_rng);
    }

    // Unit latent loadings for every signal gene (primary first, then the
    // informative auxiliaries).
    Rng w_rng(derive_seed(spec.seed, "loadings"));
    std::normal_distribution<double> wn(0.0, 1.0);
    Matrix loadings(P + I, L);
    for (std::size_t g = 0; g < P + I; ++g) {
        double norm2 = 0.0;
        for (std::size_t l = 0; l < L; ++l) {
            const double x = wn(w_rng);
            loadings(g, l) = x;
            norm2 += x * x;
        }
        const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
        for (std::size_t l = 0; l < L; ++l) loadings(g, l) *= inv;
    }

    std::vector<double> amplitude(P + I, kAmpPrimary);
    for (std::size_t j = 0; j < I; ++j) {
        const double frac = I > 1 ? static_cast<double>(j) / static_cast<double>(I - 1) : 0.0;
        amplitude[P + j] = kAmpInformativeHigh - (kAmpInformativeHigh - kAmpInformativeLow) * frac;
    }

    Matrix counts(S, n_genes);
    Rng e_rng(derive_seed(spec.seed, "expression_noise"));
    std::normal_distribution<double> en(0.0, 1.0);
    for (std::size_t g = 0; g < P + I; ++g) {
        for (std::size_t i = 0; i < S; ++i) {
            double t = 0.0;
            for (std::size_t l = 0; l < L; ++l) t += z(i, l) * loadings(g, l);
            double logc = amplitude[g] * t;
            if (spec.noise_scale > 0.0) logc += spec.noise_scale * en(e_rng);
            counts(i, g) = std::exp(std::clamp(logc, -kLogCountClamp, kLogCountClamp));
        }
    }
    Rng n_rng(derive_seed(spec.seed, "noise_genes"));
    std::uniform_real_distribution<double> bn(kNoiseBaseLow, kNoiseBaseHigh);
    for (std::size_t g = P + I; g < n_genes; ++g) {
        const double base = bn(n_rng);
        for (std::size_t i = 0; i < S; ++i) {
            counts(i, g) = std::exp(base + kNoiseGeneSigma * en(n_rng));
        }
    }
    if (spec.dropout_rate > 0.0 && J > 0) {
        Rng d_rng(derive_seed(spec.seed, "dropout"));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t g = P + I; g < n_genes; ++g) {
            for (std::size_t i = 0; i < S; ++i) {
                if (u(d_rng) < spec.dropout_rate) counts(i, g) = 0.0;
            }
        }
    }

    SyntheticDataset out;
    out.data.features = std::move(features);
    // Normalize to the gene count rather than counts-per-10k: synthetic totals
    // are O(n_genes), and a target near the total keeps scaled counts O(1),
    // the same log1p operating point real count matrices land on.
    out.data.expression = log_normalize(counts, static_cast<double>(n_genes));
    out.data.spot_ids.reserve(S);
    out.data.batch_labels.reserve(S);
    for (std::size_t i = 0; i < S; ++i) {
        out.data.spot_ids.push_back(padded("s", i));
        out.data.batch_labels.push_back("b" + std::to_string(i * spec.n_batches / S));
    }
    out.data.gene_names.reserve(n_genes);
    for (std::size_t g = 0; g < n_genes; ++g) out.data.gene_names.push_back(padded("g", g));
    out.data.primary_indices.resize(P);
    std::iota(out.data.primary_indices.begin(), out.data.primary_indices.end(), 0);
    out.data.auxiliary_indices.resize(I + J);
    std::iota(out.data.auxiliary_indices.begin(), out.data.auxiliary_indices.end(), P);
    out.aux_is_informative.assign(I + J, 0);
    for (std::size_t j = 0; j < I; ++j) out.aux_is_informative[j] = 1;
    return out;
}

Matrix log_normalize(const Matrix& raw_counts, double target) {
    if (!(target > 0.0)) throw ConfigError("log_normalize: target must be > 0");
    for (double x : raw_counts.v) {
        if (!std::isfinite(x) || x < 0.0)
            throw DataError("log_normalize: counts must be finite and non-negative");
    }
    std::vector<std::size_t> empty_spots;
    Matrix out(raw_counts.rows, raw_counts.cols);
    for (std::size_t i = 0; i < raw_counts.rows; ++i) {
        double total = 0.0;
        for (std::size_t g = 0; g < raw_counts.cols; ++g) total += raw_counts(i, g);
        if (total <= 0.0) {
            empty_spots.push_back(i);
            continue;
        }
        const double scale = target / total;
        for (std::size_t g = 0; g < raw_counts.cols; ++g) {
            out(i, g) = std::log1p(raw_counts(i, g) * scale);
        }
    }
    if (!empty_spots.empty()) {
        std::string msg = "log_normalize: spots with zero total counts:";
        for (std::size_t i : empty_spots) msg += " " + std::to_string(i);
        throw DataError(msg);
    }
    return out;
}

ExpressionTable load_expression_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) throw DataError(path + ": expected a header line and at least one spot row");
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 2) throw DataError(path + ": header must name a spot column and at least one gene");
    const bool has_batch = header.size() >= 2 && header[1] == "batch";
    const std::size_t first_gene = has_batch ? 2 : 1;
    if (header.size() <= first_gene) throw DataError(path + ": header names no genes");

    ExpressionTable table;
    table.gene_names.assign(header.begin() + static_cast<std::ptrdiff_t>(first_gene), header.end());
    {
        std::set<std::string> seen;
        for (const auto& g : table.gene_names) {
            if (g.empty()) throw DataError(path + ": empty gene name in header");
            if (!seen.insert(g).second) throw DataError(path + ": duplicate gene name " + g);
        }
    }
    const std::size_t n_rows = lines.size() - 1;
    table.values = Matrix(n_rows, table.gene_names.size());
    std::set<std::string> seen_spots;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t lineno = r + 2;
        const auto fields = split_csv_line(lines[r + 1]);
        if (fields.size() != header.size()) {
            throw DataError(path + ": row " + std::to_string(lineno) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        if (fields[0].empty()) throw DataError(path + ": row " + std::to_string(lineno) + ": empty spot id");
        if (!seen_spots.insert(fields[0]).second)
            throw DataError(path + ": duplicate spot id " + fields[0]);
        table.spot_ids.push_back(fields[0]);
        table.batch_labels.push_back(has_batch ? fields[1] : "b0");
        for (std::size_t g = 0; g < table.gene_names.size(); ++g) {
            table.values(r, g) =
                parse_double_field(fields[first_gene + g], path, lineno, first_gene + g + 1);
        }
    }
    return table;
}

FeatureTable load_features_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 2) throw DataError(path + ": expected a header line and at least one spot row");
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 2) throw DataError(path + ": header must name a spot column and at least one feature");

    FeatureTable table;
    const std::size_t n_rows = lines.size() - 1;
    table.values = Matrix(n_rows, header.size() - 1);
    std::set<std::string> seen_spots;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t lineno = r + 2;
        const auto fields = split_csv_line(lines[r + 1]);
        if (fields.size() != header.size()) {
            throw DataError(path + ": row " + std::to_string(lineno) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        if (fields[0].empty()) throw DataError(path + ": row " + std::to_string(lineno) + ": empty spot id");
        if (!seen_spots.insert(fields[0]).second)
            throw DataError(path + ": duplicate spot id " + fields[0]);
        table.spot_ids.push_back(fields[0]);
        for (std::size_t f = 0; f + 1 < header.size(); ++f) {
            table.values(r, f) = parse_double_field(fields[f + 1], path, lineno, f + 2);
        }
    }
    return table;
}

ExpressionDataset load_csv(const std::string& expr_path, const std::string& features_path) {
    ExpressionTable expr = load_expression_csv(expr_path);
    FeatureTable feat = load_features_csv(features_path);

    std::map<std::string, std::size_t> feat_rows;
    for (std::size_t i = 0; i < feat.spot_ids.size(); ++i) feat_rows[feat.spot_ids[i]] = i;
    for (const auto& id : expr.spot_ids) {
        if (!feat_rows.count(id)) throw DataError(features_path + ": missing spot " + id);
    }
    {
        std::set<std::string> expr_ids(expr.spot_ids.begin(), expr.spot_ids.end());
        for (const auto& id : feat.spot_ids) {
            if (!expr_ids.count(id)) throw DataError(expr_path + ": missing spot " + id);
        }
    }

    // Canonical spot order: ascending spot id.
    std::vector<std::size_t> order(expr.spot_ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&expr](std::size_t a, std::size_t b) {
        return expr.spot_ids[a] < expr.spot_ids[b];
    });

    ExpressionDataset ds;
    ds.gene_names = expr.gene_names;
    ds.expression = Matrix(order.size(), expr.values.cols);
    ds.features = Matrix(order.size(), feat.values.cols);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t e = order[i];
        ds.spot_ids.push_back(expr.spot_ids[e]);
        ds.batch_labels.push_back(expr.batch_labels[e]);
        for (std::size_t g = 0; g < expr.values.cols; ++g) ds.expression(i, g) = expr.values(e, g);
        const std::size_t f = feat_rows[expr.spot_ids[e]];
        for (std::size_t c = 0; c < feat.values.cols; ++c) ds.features(i, c) = feat.values(f, c);
    }
    return ds;
}

void write_csv(const ExpressionDataset& ds, const std::string& expr_path,
               const std::string& features_path) {
    {
        std::ofstream out(expr_path);
        if (!out) throw IoError("cannot write " + expr_path);
        out << "spot,batch";
        for (const auto& g : ds.gene_names) out << ',' << g;
        out << '\n';
        for (std::size_t i = 0; i < ds.n_spots(); ++i) {
            out << ds.spot_ids[i] << ',' << ds.batch_labels[i];
            for (std::size_t g = 0; g < ds.n_genes(); ++g)
                out << ',' << format_double(ds.expression(i, g));
            out << '\n';
        }
        if (!out) throw IoError("failed while writing " + expr_path);
    }
    {
        std::ofstream out(features_path);
        if (!out) throw IoError("cannot write " + features_path);
        out << "spot";
        for (std::size_t f = 0; f < ds.features.cols; ++f) out << ",f" << f;
        out << '\n';
        for (std::size_t i = 0; i < ds.n_spots(); ++i) {
            out << ds.spot_ids[i];
            for (std::size_t f = 0; f < ds.features.cols; ++f)
                out << ',' << format_double(ds.features(i, f));
            out << '\n';
        }
        if (!out) throw IoError("failed while writing " + features_path);
    }
}

FoldSplit split_folds(const ExpressionDataset& ds, FoldMode mode, int n_folds, std::uint64_t seed) {
    FoldSplit split;
    split.mode = mode;
    const std::size_t S = ds.n_spots();
    if (mode == FoldMode::intra_batch) {
        if (n_folds < 3) throw ConfigError("split_folds: intra_batch needs at least 3 folds");
        if (S < static_cast<std::size_t>(n_folds))
            throw ConfigError("split_folds: more folds than spots");
        std::vector<std::size_t> perm(S);
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(derive_seed(seed, "fold_perm"));
        std::shuffle(perm.begin(), perm.end(), rng);

        std::vector<std::vector<std::size_t>> chunks(static_cast<std::size_t>(n_folds));
        const std::size_t base = S / static_cast<std::size_t>(n_folds);
        const std::size_t extra = S % static_cast<std::size_t>(n_folds);
        std::size_t pos = 0;
        for (std::size_t c = 0; c < chunks.size(); ++c) {
            const std::size_t size = base + (c < extra ? 1 : 0);
            chunks[c].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                             perm.begin() + static_cast<std::ptrdiff_t>(pos + size));
            pos += size;
        }
        for (int f = 0; f < n_folds; ++f) {
            FoldSplit::Fold fold;
            fold.test = chunks[static_cast<std::size_t>(f)];
            fold.val = chunks[static_cast<std::size_t>((f + 1) % n_folds)];
            for (int c = 0; c < n_folds; ++c) {
                if (c == f || c == (f + 1) % n_folds) continue;
                fold.train.insert(fold.train.end(), chunks[static_cast<std::size_t>(c)].begin(),
                                  chunks[static_cast<std::size_t>(c)].end());
            }
            split.folds.push_back(std::move(fold));
        }
        return split;
    }

    // leave_one_batch_out
    std::map<std::string, std::vector<std::size_t>> by_batch;
    for (std::size_t i = 0; i < S; ++i) by_batch[ds.batch_labels[i]].push_back(i);
    if (by_batch.size() < 2) throw ConfigError("split_folds: leave_one_batch_out needs at least 2 batches");
    std::size_t fold_index = 0;
    for (const auto& [label, test_spots] : by_batch) {
        FoldSplit::Fold fold;
        fold.test = test_spots;
        std::vector<std::size_t> rest;
        for (const auto& [other, spots] : by_batch) {
            if (other == label) continue;
            rest.insert(rest.end(), spots.begin(), spots.end());
        }
        Rng rng(derive_seed(seed, "batch_fold", fold_index));
        std::shuffle(rest.begin(), rest.end(), rng);
        std::size_t n_val = rest.size() / 4;  // 3:1 train/val
        if (n_val == 0 && rest.size() >= 2) n_val = 1;
        fold.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
        fold.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
        split.folds.push_back(std::move(fold));
        ++fold_index;
    }
    return split;
}

}  // namespace agl
