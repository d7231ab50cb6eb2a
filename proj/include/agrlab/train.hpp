#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agrlab/adagrad.hpp"
#include "agrlab/batch.hpp"
#include "agrlab/model.hpp"

namespace agrlab {

struct TrainConfig {
    Task task = Task::agreement;
    std::optional<Task> task2;  // joint training only
    double r = 0.0;             // Weight ratio of task 2 relative to task 1.
    int epochs = 1;
    int batch_size = 32;
    double learning_rate = 0.05;
    uint64_t seed = 1;
    bool shuffle = true;
    std::optional<double> grad_clip;
    bool freeze_embeddings = false;
    int pad_id = 0;
    int eos_id = 1;

    void validate() const;
};

struct EpochMetric {
    int epoch = 0;
    std::string task;
    double train_loss = 0.0;
    double val_metric = 0.0;  // accuracy (agreement/tagging) or perplexity (lm); NaN if no val set
    double wall_seconds = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochMetric> metrics;
};

// One task, `epochs` passes of shuffled batches, one AdaGrad step per batch.
// Deterministic given (seed, config, corpus); the shuffle stream is forked
// from the seed by task name, so schedules are stable across regimes.
TrainResult train_single(const ModelConfig& cfg, ModelParams params,
                         const std::vector<TrainInstance>& train,
                         const std::vector<TrainInstance>& val, const TrainConfig& tcfg);

// Two tasks against a shared encoder. Each step draws one batch per task,
// combines the sample-averaged losses with ratio r and applies a single
// AdaGrad step to the combined gradient. An epoch ends when the larger
// corpus is exhausted; the smaller one is recycled (reshuffled).
TrainResult train_joint(const ModelConfig& cfg, ModelParams params,
                        const std::vector<TrainInstance>& train1,
                        const std::vector<TrainInstance>& train2,
                        const std::vector<TrainInstance>& val1,
                        const std::vector<TrainInstance>& val2, const TrainConfig& tcfg);

struct PretrainResult {
    TrainResult phase_a;
    TrainResult phase_b;
};

// Trains on task A, then re-uses the learned embedding + LSTM weights as
// the initial encoder of a fresh task-B model (heads freshly initialized).
// Phase B with 0 epochs returns the transferred model untrained.
PretrainResult pretrain_then_train(const ModelConfig& cfg_a, const std::vector<TrainInstance>& train_a,
                                   const std::vector<TrainInstance>& val_a, const TrainConfig& tcfg_a,
                                   const ModelConfig& cfg_b, const std::vector<TrainInstance>& train_b,
                                   const std::vector<TrainInstance>& val_b, const TrainConfig& tcfg_b);

// Forward-only metric on held-out instances: accuracy for agreement and
// tagging tasks, perplexity for the LM. NaN when `val` is empty.
double validation_metric(Task task, const ModelParams& params, const ModelConfig& cfg,
                         const std::vector<TrainInstance>& val, int eos_id);

void write_metrics_csv(const std::string& path, const std::vector<EpochMetric>& rows);

}  // namespace agrlab
