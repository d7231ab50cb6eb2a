#include "agrlab/adagrad.hpp"

#include <cmath>

#include "agrlab/errors.hpp"

namespace agrlab {

void adagrad_step(ModelParams& params, const ModelConfig& cfg, const ModelParams& grads,
                  AdaGradState& state, const AdaGradOptions& opts) {
    bool finite = true;
    double sq_norm = 0.0;
    for_each_tensor(
        cfg,
        [&](std::string_view, const auto& g) {
            if (!all_finite(g)) finite = false;
            sq_norm += g.squaredNorm();
        },
        grads);
    if (!finite || !std::isfinite(sq_norm)) {
        throw NumericError("adagrad_step: non-finite gradient, step aborted");
    }

    double scale = 1.0;
    if (opts.grad_clip && sq_norm > (*opts.grad_clip) * (*opts.grad_clip)) {
        scale = *opts.grad_clip / std::sqrt(sq_norm);
    }

    const double lr = opts.learning_rate;
    const double eps = state.epsilon;
    for_each_tensor(
        cfg,
        [&](std::string_view name, auto& theta, const auto& g, auto& accum) {
            if (opts.freeze_embeddings && name == "embedding") return;
            if (scale == 1.0) {
                accum.array() += g.array().square();
                theta.array() -= lr * g.array() / (accum.array().sqrt() + eps);
            } else {
                const auto gs = (g.array() * scale).eval();
                accum.array() += gs.square();
                theta.array() -= lr * gs / (accum.array().sqrt() + eps);
            }
        },
        params, grads, state.accum);
}

}  // namespace agrlab
