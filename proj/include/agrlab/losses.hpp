#pragma once

#include "agrlab/batch.hpp"
#include "agrlab/model.hpp"

namespace agrlab {

struct LossResult {
    double loss = 0.0;       // natural log
    double loss_bits = 0.0;  // base-2 variant (loss / ln 2), used for perplexity
    long denom = 0;          // sentences (agreement) or tokens (tagging, LM)
    ModelParams grads;       // exact gradients of `loss`
};

// Mean binary cross-entropy over the sentences of the batch, evaluated at
// the final preamble position. Labels: plural = 1, singular = 0.
LossResult loss_agreement(const ModelParams& params, const ModelConfig& cfg,
                          const TaskBatch& batch);

// Mean per-token cross-entropy over all (unpadded) positions of the batch;
// the tag of each word is predicted from the words up to and including it.
// Serves both the supertag task and the number-stripped POS task.
LossResult loss_supertag(const ModelParams& params, const ModelConfig& cfg,
                         const TaskBatch& batch);

// Token-averaged negative log-likelihood of next tokens, with an
// end-of-sentence target after the last word. Denominator is the total
// number of predicted tokens across the batch.
LossResult loss_lm(const ModelParams& params, const ModelConfig& cfg, const TaskBatch& batch);

LossResult compute_loss(Task task, const ModelParams& params, const ModelConfig& cfg,
                        const TaskBatch& batch);

// L = 1/(1+r) * l1 + r/(1+r) * l2. r = 0 returns l1 exactly.
double combine_losses(double l1, double l2, double r);

// The same convex combination applied tensor-wise to two gradient sets.
// Zero-weight terms are skipped so the r = 0 case reproduces g1 bit for bit.
ModelParams combine_gradients(const ModelConfig& cfg, const ModelParams& g1,
                              const ModelParams& g2, double r);

// Worker count for per-sentence parallelism inside a batch, from the
// AGRLAB_THREADS environment variable (default 1). Gradients are reduced
// in sentence-index order, so results do not depend on this value.
int thread_count();

}  // namespace agrlab
