#include "agl/mlp.hpp"

#include <cmath>
#include <string>

#include "agl/errors.hpp"
#include "agl/rng.hpp"

namespace agl {

ModelParams ModelParams::zeros(std::size_t feature_dim, std::size_t hidden_dim, std::size_t n_pri,
                               std::size_t n_aux, Activation act) {
    if (feature_dim < 1 || hidden_dim < 1 || n_pri < 1) {
        throw ConfigError("ModelParams: feature_dim, hidden_dim and n_pri must be >= 1");
    }
    ModelParams p;
    p.feature_dim = feature_dim;
    p.hidden_dim = hidden_dim;
    p.n_pri = n_pri;
    p.n_aux = n_aux;
    p.activation = act;
    p.trunk_w = Matrix(feature_dim, hidden_dim);
    p.trunk_b.assign(hidden_dim, 0.0);
    p.pri_w = Matrix(hidden_dim, n_pri);
    p.pri_b.assign(n_pri, 0.0);
    p.aux_w = Matrix(hidden_dim, n_aux);
    p.aux_b.assign(n_aux, 0.0);
    return p;
}

ModelParams ModelParams::init(std::size_t feature_dim, std::size_t hidden_dim, std::size_t n_pri,
                              std::size_t n_aux, std::uint64_t seed, Activation act) {
    ModelParams p = zeros(feature_dim, hidden_dim, n_pri, n_aux, act);
    Rng rng(seed);
    auto fill = [&rng](Matrix& w, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& x : w.v) x = u(rng);
    };
    fill(p.trunk_w, feature_dim);
    fill(p.pri_w, hidden_dim);
    fill(p.aux_w, hidden_dim);
    return p;
}

std::size_t ModelParams::n_values() const {
    return trunk_w.v.size() + trunk_b.size() + pri_w.v.size() + pri_b.size() + aux_w.v.size() +
           aux_b.size();
}

std::vector<double> ModelParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(n_values());
    for_each_block(*this, [&flat](const char*, const std::vector<double>& block) {
        flat.insert(flat.end(), block.begin(), block.end());
    });
    return flat;
}

void ModelParams::unflatten(std::span<const double> flat) {
    if (flat.size() != n_values()) throw ConfigError("unflatten: size mismatch");
    std::size_t pos = 0;
    for_each_block(*this, [&flat, &pos](const char*, std::vector<double>& block) {
        for (double& x : block) x = flat[pos++];
    });
}

Forward mlp_forward(const ModelParams& params, const Matrix& features) {
    if (features.rows < 1) throw ConfigError("mlp_forward: empty batch");
    if (features.cols != params.feature_dim) throw ConfigError("mlp_forward: feature dimension mismatch");

    Matrix hidden = matmul(features, params.trunk_w);
    for (std::size_t i = 0; i < hidden.rows; ++i) {
        double* row = hidden.v.data() + i * hidden.cols;
        for (std::size_t j = 0; j < hidden.cols; ++j) {
            const double pre = row[j] + params.trunk_b[j];
            row[j] = params.activation == Activation::tanh_smooth ? std::tanh(pre) : pre;
        }
    }

    Forward out;
    out.pred_pri = matmul(hidden, params.pri_w);
    for (std::size_t i = 0; i < out.pred_pri.rows; ++i)
        for (std::size_t j = 0; j < out.pred_pri.cols; ++j) out.pred_pri(i, j) += params.pri_b[j];
    out.pred_aux = matmul(hidden, params.aux_w);
    for (std::size_t i = 0; i < out.pred_aux.rows; ++i)
        for (std::size_t j = 0; j < out.pred_aux.cols; ++j) out.pred_aux(i, j) += params.aux_b[j];
    out.cache.input = features;
    out.cache.hidden = std::move(hidden);
    out.cache.activation = params.activation;
    return out;
}

ModelParams mlp_backward(const ModelParams& params, const ForwardCache& cache,
                         const Matrix& grad_pri, const Matrix& grad_aux) {
    const std::size_t batch = cache.hidden.rows;
    if (grad_pri.rows != batch || grad_pri.cols != params.n_pri)
        throw ConfigError("mlp_backward: primary cotangent shape mismatch");
    if (grad_aux.rows != batch || grad_aux.cols != params.n_aux)
        throw ConfigError("mlp_backward: auxiliary cotangent shape mismatch");
    if (cache.input.rows != batch || cache.input.cols != params.feature_dim)
        throw ConfigError("mlp_backward: cache does not match params");

    ModelParams g = ModelParams::zeros(params.feature_dim, params.hidden_dim, params.n_pri,
                                       params.n_aux, params.activation);
    g.pri_w = matmul_tn(cache.hidden, grad_pri);
    g.pri_b = column_sums(grad_pri);
    g.aux_w = matmul_tn(cache.hidden, grad_aux);
    g.aux_b = column_sums(grad_aux);

    Matrix grad_hidden = matmul_nt(grad_pri, params.pri_w);
    if (params.n_aux > 0) {
        const Matrix ga = matmul_nt(grad_aux, params.aux_w);
        for (std::size_t i = 0; i < grad_hidden.v.size(); ++i) grad_hidden.v[i] += ga.v[i];
    }
    if (cache.activation == Activation::tanh_smooth) {
        // d tanh(z)/dz recovered from the post-activation value: 1 - h^2.
        for (std::size_t i = 0; i < grad_hidden.v.size(); ++i) {
            const double h = cache.hidden.v[i];
            grad_hidden.v[i] *= 1.0 - h * h;
        }
    }
    g.trunk_w = matmul_tn(cache.input, grad_hidden);
    g.trunk_b = column_sums(grad_hidden);
    return g;
}

AdamState AdamState::init(const ModelParams& like, double beta1, double beta2, double eps) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0))
        throw ConfigError("AdamState: invalid moment decay or epsilon");
    AdamState s;
    s.m = ModelParams::zeros(like.feature_dim, like.hidden_dim, like.n_pri, like.n_aux, like.activation);
    s.v = s.m;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
    if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be > 0");
    if (grads.n_values() != params.n_values() || state.m.n_values() != params.n_values())
        throw ConfigError("adam_step: shape mismatch between params, grads and state");
    for_each_block(grads, [](const char* name, const std::vector<double>& block) {
        for (double x : block) {
            if (!std::isfinite(x))
                throw TrainingError(std::string("adam_step: non-finite gradient in block ") + name);
        }
    });

    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));

    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    };
    update(params.trunk_w.v, grads.trunk_w.v, state.m.trunk_w.v, state.v.trunk_w.v);
    update(params.trunk_b, grads.trunk_b, state.m.trunk_b, state.v.trunk_b);
    update(params.pri_w.v, grads.pri_w.v, state.m.pri_w.v, state.v.pri_w.v);
    update(params.pri_b, grads.pri_b, state.m.pri_b, state.v.pri_b);
    update(params.aux_w.v, grads.aux_w.v, state.m.aux_w.v, state.v.aux_w.v);
    update(params.aux_b, grads.aux_b, state.m.aux_b, state.v.aux_b);
}

std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& loss_fn,
                                     const std::vector<double>& point, double step) {
    if (!(step > 0.0)) throw ConfigError("finite_diff_grad: step must be > 0");
    std::vector<double> g(point.size(), 0.0);
    std::vector<double> x = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        x[i] = point[i] + step;
        const double fp = loss_fn(x);
        x[i] = point[i] - step;
        const double fm = loss_fn(x);
        x[i] = point[i];
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw OracleError("finite_diff_grad: loss is non-finite near the probe point");
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

}  // namespace agl
