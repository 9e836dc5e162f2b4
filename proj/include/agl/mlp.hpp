#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "agl/matrix.hpp"

namespace agl {

// Identity mode exists for tests that need an exactly linear network.
enum class Activation { tanh_smooth, identity };

// Shared-trunk regressor with a primary head and an optional auxiliary head
// (n_aux may be 0). Gradients are carried in the same shape as the weights.
struct ModelParams {
    std::size_t feature_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t n_pri = 0;
    std::size_t n_aux = 0;
    Activation activation = Activation::tanh_smooth;

    Matrix trunk_w;               // feature_dim x hidden_dim
    std::vector<double> trunk_b;  // hidden_dim
    Matrix pri_w;                 // hidden_dim x n_pri
    std::vector<double> pri_b;    // n_pri
    Matrix aux_w;                 // hidden_dim x n_aux
    std::vector<double> aux_b;    // n_aux

    static ModelParams zeros(std::size_t feature_dim, std::size_t hidden_dim, std::size_t n_pri,
                             std::size_t n_aux, Activation act = Activation::tanh_smooth);
    // Fan-in-scaled symmetric uniform weights, zero biases. The auxiliary head
    // is drawn last so models that differ only in n_aux share trunk and
    // primary-head initialization exactly.
    static ModelParams init(std::size_t feature_dim, std::size_t hidden_dim, std::size_t n_pri,
                            std::size_t n_aux, std::uint64_t seed,
                            Activation act = Activation::tanh_smooth);

    std::size_t n_values() const;
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);
};

// Applies f(block_name, values) to each parameter block in a fixed order.
template <class Params, class F>
void for_each_block(Params& p, F f) {
    f("trunk_w", p.trunk_w.v);
    f("trunk_b", p.trunk_b);
    f("pri_w", p.pri_w.v);
    f("pri_b", p.pri_b);
    f("aux_w", p.aux_w.v);
    f("aux_b", p.aux_b);
}

struct ForwardCache {
    Matrix input;   // batch x feature_dim
    Matrix hidden;  // batch x hidden_dim, post-activation
    Activation activation = Activation::tanh_smooth;
};

struct Forward {
    Matrix pred_pri;  // batch x n_pri
    Matrix pred_aux;  // batch x n_aux
    ForwardCache cache;
};

Forward mlp_forward(const ModelParams& params, const Matrix& features);

// Returns d(loss)/d(params) for loss with the given output cotangents.
ModelParams mlp_backward(const ModelParams& params, const ForwardCache& cache,
                         const Matrix& grad_pri, const Matrix& grad_aux);

struct AdamState {
    ModelParams m;  // first moments, parameter-shaped
    ModelParams v;  // second moments
    long step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState init(const ModelParams& like, double beta1 = 0.9, double beta2 = 0.999,
                          double eps = 1e-8);
};

// Bias-corrected Adam update, in place.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr);

// Central-difference gradient oracle used by the gradient tests in this repo.
std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& loss_fn,
                                     const std::vector<double>& point, double step);

}  // namespace agl
