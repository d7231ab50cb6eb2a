#pragma once

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agrlab/numeric.hpp"
#include "agrlab/rng.hpp"

namespace agrlab {

enum class Head { agreement, supertag, lm };

std::string head_name(Head h);
Head head_from_name(std::string_view name);

// Architecture description: one embedding layer and one LSTM layer, both of
// width d, plus a subset of task heads.
struct ModelConfig {
    int d = 0;
    int vocab_size = 0;
    int n_supertags = 0;  // 0 when the supertag head is absent
    std::set<Head> heads;

    bool has(Head h) const { return heads.count(h) != 0; }
    void validate() const;  // throws ConfigError
};

struct LstmParams {
    // Gate pre-activation z_k = w_kx * x_t + w_kh * h_{t-1} + b_k,
    // k in {i, f, o, g}. All weight blocks are d x d.
    Matrix w_ix, w_fx, w_ox, w_gx;
    Matrix w_ih, w_fh, w_oh, w_gh;
    Vector b_i, b_f, b_o, b_g;
};

// All trainable tensors. Also reused, shape-for-shape, as the container for
// gradients and for AdaGrad accumulators.
struct ModelParams {
    Matrix embedding;  // vocab_size x d
    LstmParams lstm;
    Vector head_agr_w;  // d
    Vector head_agr_b;  // 1
    Matrix head_st_w;   // d x n_supertags
    Vector head_st_b;
    Matrix head_lm_w;  // d x vocab_size
    Vector head_lm_b;

    static ModelParams zeros(const ModelConfig& cfg);
};

// Applies f(name, tensor...) to every tensor present under cfg, in a fixed
// order. Accepts any number of ModelParams in lockstep, so the same walk
// serves initialization, optimizer updates, and gradient combination.
template <class F, class... Params>
void for_each_tensor(const ModelConfig& cfg, F&& f, Params&... p) {
    f("embedding", p.embedding...);
    f("lstm.w_ix", p.lstm.w_ix...);
    f("lstm.w_fx", p.lstm.w_fx...);
    f("lstm.w_ox", p.lstm.w_ox...);
    f("lstm.w_gx", p.lstm.w_gx...);
    f("lstm.w_ih", p.lstm.w_ih...);
    f("lstm.w_fh", p.lstm.w_fh...);
    f("lstm.w_oh", p.lstm.w_oh...);
    f("lstm.w_gh", p.lstm.w_gh...);
    f("lstm.b_i", p.lstm.b_i...);
    f("lstm.b_f", p.lstm.b_f...);
    f("lstm.b_o", p.lstm.b_o...);
    f("lstm.b_g", p.lstm.b_g...);
    if (cfg.has(Head::agreement)) {
        f("head_agr.w", p.head_agr_w...);
        f("head_agr.b", p.head_agr_b...);
    }
    if (cfg.has(Head::supertag)) {
        f("head_st.w", p.head_st_w...);
        f("head_st.b", p.head_st_b...);
    }
    if (cfg.has(Head::lm)) {
        f("head_lm.w", p.head_lm_w...);
        f("head_lm.b", p.head_lm_b...);
    }
}

template <class Params, class F>
void for_each_scalar(const ModelConfig& cfg, Params& p, F&& f) {
    for_each_tensor(
        cfg,
        [&](std::string_view name, auto& t) {
            auto* data = t.data();
            for (Eigen::Index i = 0; i < t.size(); ++i) f(name, i, data[i]);
        },
        p);
}

// Everything the exact backward pass needs, recorded during the forward
// pass: embedded inputs, gate pre-activations and activations, and states.
struct ForwardTrace {
    std::vector<int> token_ids;
    std::vector<Vector> x;                   // embedded inputs
    std::vector<Vector> z_i, z_f, z_o, z_g;  // gate pre-activations
    std::vector<Vector> i, f, o, g;          // gate activations
    std::vector<Vector> c, h;                // cell and hidden states

    int length() const { return static_cast<int>(h.size()); }
};

// Glorot-uniform weights, zero biases, forget-gate bias 1.0. Each tensor is
// filled from its own stream forked off `rng` by tensor name, so the draw
// for one tensor never depends on which other tensors exist.
ModelParams init_params(const ModelConfig& cfg, const Rng& rng);

// Runs the LSTM over the token sequence. h_0 = c_0 = 0.
ForwardTrace encode(const ModelParams& params, const ModelConfig& cfg,
                    std::span<const int> token_ids);

// P(plural) from the final hidden state of a preamble.
double head_agreement(const ModelParams& params, const Vector& h_last);

// Pre-softmax logits / distribution over supertags or the vocabulary.
Vector head_logits(const ModelParams& params, const ModelConfig& cfg, const Vector& h,
                   Head which);
Vector head_softmax(const ModelParams& params, const ModelConfig& cfg, const Vector& h,
                    Head which);

// Exact backpropagation through time. `output_grads[t]` is dL/dh_t; the
// embedding and LSTM gradients are accumulated (+=) into `grads`. Head
// gradients are the caller's business (the loss layer owns the heads).
void backward(const ModelParams& params, const ModelConfig& cfg, const ForwardTrace& trace,
              std::span<const Vector> output_grads, ModelParams& grads);

// Copies embedding + LSTM tensors from `from` into a copy of `to`; `to`'s
// head tensors are left untouched. d and vocab_size must match.
ModelParams transfer_encoder(const ModelParams& from, const ModelParams& to);

}  // namespace agrlab
