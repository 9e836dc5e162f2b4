#include "agl/loss.hpp"

#include <algorithm>
#include <cmath>

#include "agl/errors.hpp"

namespace agl {

namespace {

struct GeneStats {
    double mean_pred = 0.0;
    double mean_true = 0.0;
    double sp = 0.0;  // <centered pred, centered true>
    double np = 0.0;  // ||centered pred||
    double nt = 0.0;  // ||centered true||
    bool valid = false;
};

GeneStats gene_stats(const Matrix& pred, const Matrix& truth, std::size_t g) {
    const std::size_t n = pred.rows;
    GeneStats s;
    double sum_p = 0.0, sum_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sum_p += pred(i, g);
        sum_t += truth(i, g);
    }
    s.mean_pred = sum_p / static_cast<double>(n);
    s.mean_true = sum_t / static_cast<double>(n);
    double spp = 0.0, stt = 0.0, spt = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cp = pred(i, g) - s.mean_pred;
        const double ct = truth(i, g) - s.mean_true;
        spp += cp * cp;
        stt += ct * ct;
        spt += cp * ct;
    }
    s.sp = spt;
    s.np = std::sqrt(spp);
    s.nt = std::sqrt(stt);
    s.valid = s.np >= kEpsVar && s.nt >= kEpsVar;
    return s;
}

void check_pair(const Matrix& pred, const Matrix& truth) {
    if (!pred.same_shape(truth)) throw ConfigError("pearson: pred and truth shapes differ");
    if (pred.rows < 2) throw DataError("pearson: need at least 2 spots in the batch");
}

}  // namespace

double GeneLossReport::total() const {
    double s = 0.0;
    for (double l : per_gene_loss) s += l;
    return s;
}

GeneLossReport pearson_loss(const Matrix& pred, const Matrix& truth) {
    check_pair(pred, truth);
    GeneLossReport rep;
    rep.per_gene_loss.resize(pred.cols);
    rep.mean_pred.resize(pred.cols);
    rep.mean_true.resize(pred.cols);
    rep.valid.resize(pred.cols);
    for (std::size_t g = 0; g < pred.cols; ++g) {
        const GeneStats s = gene_stats(pred, truth, g);
        rep.mean_pred[g] = s.mean_pred;
        rep.mean_true[g] = s.mean_true;
        rep.valid[g] = s.valid ? 1 : 0;
        rep.per_gene_loss[g] = s.valid ? 1.0 - s.sp / (s.np * s.nt + kEpsGuard) : 1.0;
    }
    return rep;
}

Matrix pearson_loss_grad(const Matrix& pred, const Matrix& truth) {
    check_pair(pred, truth);
    Matrix grad(pred.rows, pred.cols, 0.0);
    for (std::size_t g = 0; g < pred.cols; ++g) {
        const GeneStats s = gene_stats(pred, truth, g);
        if (!s.valid) continue;  // degenerate gene: loss pinned at 1, no gradient
        const double denom = s.np * s.nt + kEpsGuard;
        const double a = -1.0 / denom;
        const double b = s.sp * s.nt / (s.np * denom * denom);
        for (std::size_t i = 0; i < pred.rows; ++i) {
            const double cp = pred(i, g) - s.mean_pred;
            const double ct = truth(i, g) - s.mean_true;
            grad(i, g) = a * ct + b * cp;
        }
    }
    return grad;
}

TotalLoss total_loss(const Matrix& pred_pri, const Matrix& true_pri, const Matrix& pred_aux,
                     const Matrix& true_aux, const std::vector<double>& lambdas, bool normalize) {
    if (pred_pri.cols < 1) throw ConfigError("total_loss: need at least one primary gene");
    if (lambdas.size() != pred_aux.cols)
        throw ConfigError("total_loss: lambda count does not match auxiliary genes");
    if (pred_pri.rows != pred_aux.rows && pred_aux.cols > 0)
        throw ConfigError("total_loss: primary and auxiliary batches differ");

    TotalLoss out;
    const GeneLossReport pri = pearson_loss(pred_pri, true_pri);
    out.grad_pri = pearson_loss_grad(pred_pri, true_pri);
    const double pri_scale = normalize ? 1.0 / static_cast<double>(pred_pri.cols) : 1.0;
    out.value = pri.total() * pri_scale;
    if (pri_scale != 1.0) {
        for (double& x : out.grad_pri.v) x *= pri_scale;
    }

    out.grad_aux = Matrix(pred_pri.rows, pred_aux.cols, 0.0);
    if (pred_aux.cols > 0) {
        const GeneLossReport aux = pearson_loss(pred_aux, true_aux);
        Matrix ga = pearson_loss_grad(pred_aux, true_aux);
        const double aux_scale = normalize ? 1.0 / static_cast<double>(pred_aux.cols) : 1.0;
        double aux_value = 0.0;
        for (std::size_t g = 0; g < pred_aux.cols; ++g) {
            aux_value += lambdas[g] * aux.per_gene_loss[g];
            const double w = lambdas[g] * aux_scale;
            for (std::size_t i = 0; i < ga.rows; ++i) ga(i, g) *= w;
        }
        out.value += aux_value * aux_scale;
        out.grad_aux = std::move(ga);
    }
    return out;
}

PccReport pcc_metric(const Matrix& pred, const Matrix& truth) {
    check_pair(pred, truth);
    if (pred.cols < 1) throw ConfigError("pcc_metric: need at least one gene");
    PccReport rep;
    rep.per_gene.resize(pred.cols, 0.0);
    rep.valid.resize(pred.cols, 0);
    double sum = 0.0;
    for (std::size_t g = 0; g < pred.cols; ++g) {
        const GeneStats s = gene_stats(pred, truth, g);
        if (!s.valid) continue;
        const double r = std::clamp(s.sp / (s.np * s.nt), -1.0, 1.0);
        rep.per_gene[g] = r;
        rep.valid[g] = 1;
        rep.n_valid += 1;
        sum += r;
    }
    if (rep.n_valid == 0) throw EvalError("pcc_metric: every gene is degenerate on this split");
    rep.mean = sum / static_cast<double>(rep.n_valid);
    return rep;
}

}  // namespace agl
