#pragma once

#include <optional>

#include "agrlab/model.hpp"

namespace agrlab {

// Per-parameter accumulated squared gradients. Entries never decrease.
struct AdaGradState {
    ModelParams accum;
    double epsilon = 1e-8;

    explicit AdaGradState(const ModelConfig& cfg) : accum(ModelParams::zeros(cfg)) {}
};

struct AdaGradOptions {
    double learning_rate = 0.05;
    std::optional<double> grad_clip;  // global max norm, off by default
    bool freeze_embeddings = false;
};

// G += g^2; theta -= lr * g / (sqrt(G) + epsilon), elementwise. A non-finite
// gradient aborts the step before touching params or state.
void adagrad_step(ModelParams& params, const ModelConfig& cfg, const ModelParams& grads,
                  AdaGradState& state, const AdaGradOptions& opts);

}  // namespace agrlab
