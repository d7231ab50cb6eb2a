#include "agrlab/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "agrlab/checkpoint.hpp"
#include "agrlab/errors.hpp"
#include "agrlab/losses.hpp"

namespace agrlab {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1, got " + std::to_string(epochs));
    if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    if (r < 0.0) throw ConfigError("TrainConfig: r must be >= 0");
    if (!(learning_rate > 0.0)) throw ConfigError("TrainConfig: learning_rate must be > 0");
    if (task2 && *task2 == task) throw ConfigError("TrainConfig: joint tasks must differ");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Endless batch source; reshuffles (from its own stream) each time the
// instance list is exhausted.
class Feeder {
public:
    Feeder(Task task, const std::vector<TrainInstance>& data, const TrainConfig& tcfg, Rng stream)
        : task_(task), data_(&data), tcfg_(&tcfg), stream_(stream) {}

    const TaskBatch& draw() {
        if (next_ >= batches_.size()) {
            batches_ = make_batches(task_, *data_, tcfg_->batch_size, tcfg_->pad_id,
                                    tcfg_->eos_id, &stream_, tcfg_->shuffle);
            next_ = 0;
        }
        return batches_[next_++];
    }

    size_t batches_per_pass() const {
        return (data_->size() + tcfg_->batch_size - 1) / tcfg_->batch_size;
    }

private:
    Task task_;
    const std::vector<TrainInstance>* data_;
    const TrainConfig* tcfg_;
    Rng stream_;
    std::vector<TaskBatch> batches_;
    size_t next_ = 0;
};

struct LossTally {
    double weighted_sum = 0.0;
    long denom = 0;

    void add(const LossResult& r) {
        weighted_sum += r.loss * static_cast<double>(r.denom);
        denom += r.denom;
    }
    double mean() const { return denom > 0 ? weighted_sum / static_cast<double>(denom) : 0.0; }
};

}  // namespace

double validation_metric(Task task, const ModelParams& params, const ModelConfig& cfg,
                         const std::vector<TrainInstance>& val, int eos_id) {
    if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
    switch (task) {
        case Task::agreement: {
            long correct = 0;
            for (const TrainInstance& inst : val) {
                const ForwardTrace tr = encode(params, cfg, inst.tokens);
                const double p = head_agreement(params, tr.h.back());
                const int pred = p >= 0.5 ? 1 : 0;
                if (pred == inst.agr_label) ++correct;
            }
            return static_cast<double>(correct) / static_cast<double>(val.size());
        }
        case Task::supertag:
        case Task::pos: {
            long correct = 0, total = 0;
            for (const TrainInstance& inst : val) {
                const ForwardTrace tr = encode(params, cfg, inst.tokens);
                for (size_t t = 0; t < inst.tokens.size(); ++t) {
                    const Vector logits = head_logits(params, cfg, tr.h[t], Head::supertag);
                    Eigen::Index argmax;
                    logits.maxCoeff(&argmax);
                    if (static_cast<int>(argmax) == inst.tags[t]) ++correct;
                    ++total;
                }
            }
            return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
        }
        case Task::lm: {
            double bits = 0.0;
            long total = 0;
            constexpr double kLog2e = 1.4426950408889634;  // 1 / ln 2
            for (const TrainInstance& inst : val) {
                const ForwardTrace tr = encode(params, cfg, inst.tokens);
                for (size_t t = 0; t < inst.tokens.size(); ++t) {
                    const int target =
                        t + 1 < inst.tokens.size() ? inst.tokens[t + 1] : eos_id;
                    const Vector ls = log_softmax(Vector(head_logits(params, cfg, tr.h[t], Head::lm)));
                    bits -= ls(target) * kLog2e;
                    ++total;
                }
            }
            return std::exp2(bits / static_cast<double>(total));
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

TrainResult train_single(const ModelConfig& cfg, ModelParams params,
                         const std::vector<TrainInstance>& train,
                         const std::vector<TrainInstance>& val, const TrainConfig& tcfg) {
    tcfg.validate();
    cfg.validate();
    if (train.empty()) throw DataError("train_single: empty training corpus");
    if (!cfg.has(head_for(tcfg.task))) {
        throw ConfigError("train_single: model lacks the '" + task_name(tcfg.task) + "' head");
    }

    const Rng base(tcfg.seed);
    Feeder feeder(tcfg.task, train, tcfg, base.fork("shuffle/" + task_name(tcfg.task)));
    AdaGradState state(cfg);
    const AdaGradOptions opts{tcfg.learning_rate, tcfg.grad_clip, tcfg.freeze_embeddings};

    TrainResult result;
    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        const auto t0 = Clock::now();
        LossTally tally;
        const size_t steps = feeder.batches_per_pass();
        for (size_t step = 0; step < steps; ++step) {
            try {
                const LossResult lr = compute_loss(tcfg.task, params, cfg, feeder.draw());
                if (!std::isfinite(lr.loss)) throw NumericError("non-finite loss");
                adagrad_step(params, cfg, lr.grads, state, opts);
                tally.add(lr);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(step + 1) + ": " + e.what());
            }
        }
        EpochMetric m;
        m.epoch = epoch;
        m.task = task_name(tcfg.task);
        m.train_loss = tally.mean();
        m.val_metric = validation_metric(tcfg.task, params, cfg, val, tcfg.eos_id);
        m.wall_seconds = seconds_since(t0);
        result.metrics.push_back(m);
    }
    result.params = std::move(params);
    return result;
}

TrainResult train_joint(const ModelConfig& cfg, ModelParams params,
                        const std::vector<TrainInstance>& train1,
                        const std::vector<TrainInstance>& train2,
                        const std::vector<TrainInstance>& val1,
                        const std::vector<TrainInstance>& val2, const TrainConfig& tcfg) {
    tcfg.validate();
    cfg.validate();
    if (!tcfg.task2) throw ConfigError("train_joint: task2 missing");
    if (train1.empty() || train2.empty()) throw DataError("train_joint: empty training corpus");
    const Task task2 = *tcfg.task2;
    for (Task t : {tcfg.task, task2}) {
        if (!cfg.has(head_for(t))) {
            throw ConfigError("train_joint: model lacks the '" + task_name(t) + "' head");
        }
    }

    const Rng base(tcfg.seed);
    Feeder feeder1(tcfg.task, train1, tcfg, base.fork("shuffle/" + task_name(tcfg.task)));
    Feeder feeder2(task2, train2, tcfg, base.fork("shuffle/" + task_name(task2)));
    AdaGradState state(cfg);
    const AdaGradOptions opts{tcfg.learning_rate, tcfg.grad_clip, tcfg.freeze_embeddings};

    // One combined step per paired batch; the epoch tracks the larger task.
    const size_t steps = std::max(feeder1.batches_per_pass(), feeder2.batches_per_pass());

    TrainResult result;
    for (int epoch = 1; epoch <= tcfg.epochs; ++epoch) {
        const auto t0 = Clock::now();
        LossTally tally1, tally2;
        for (size_t step = 0; step < steps; ++step) {
            try {
                const LossResult l1 = compute_loss(tcfg.task, params, cfg, feeder1.draw());
                const LossResult l2 = compute_loss(task2, params, cfg, feeder2.draw());
                if (!std::isfinite(l1.loss) || !std::isfinite(l2.loss)) {
                    throw NumericError("non-finite loss");
                }
                const ModelParams combined = combine_gradients(cfg, l1.grads, l2.grads, tcfg.r);
                adagrad_step(params, cfg, combined, state, opts);
                tally1.add(l1);
                tally2.add(l2);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(step + 1) + ": " + e.what());
            }
        }
        const auto secs = seconds_since(t0);
        for (const auto& [task, tally, val] :
             {std::tuple{tcfg.task, &tally1, &val1}, std::tuple{task2, &tally2, &val2}}) {
            EpochMetric m;
            m.epoch = epoch;
            m.task = task_name(task);
            m.train_loss = tally->mean();
            m.val_metric = validation_metric(task, params, cfg, *val, tcfg.eos_id);
            m.wall_seconds = secs;
            result.metrics.push_back(m);
        }
    }
    result.params = std::move(params);
    return result;
}

PretrainResult pretrain_then_train(const ModelConfig& cfg_a, const std::vector<TrainInstance>& train_a,
                                   const std::vector<TrainInstance>& val_a, const TrainConfig& tcfg_a,
                                   const ModelConfig& cfg_b, const std::vector<TrainInstance>& train_b,
                                   const std::vector<TrainInstance>& val_b, const TrainConfig& tcfg_b) {
    PretrainResult result;
    result.phase_a =
        train_single(cfg_a, init_params(cfg_a, Rng(tcfg_a.seed)), train_a, val_a, tcfg_a);

    const ModelParams fresh = init_params(cfg_b, Rng(tcfg_b.seed));
    ModelParams transferred = transfer_encoder(result.phase_a.params, fresh);

    if (tcfg_b.epochs == 0) {
        result.phase_b.params = std::move(transferred);
        return result;
    }
    result.phase_b = train_single(cfg_b, std::move(transferred), train_b, val_b, tcfg_b);
    return result;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetric>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_metrics_csv: cannot open '" + path + "'");
    f << "epoch,task,train_loss,val_metric,wall_seconds\n";
    char secs[32];
    for (const EpochMetric& m : rows) {
        std::snprintf(secs, sizeof(secs), "%.3f", m.wall_seconds);
        f << m.epoch << ',' << m.task << ',' << format_g17(m.train_loss) << ','
          << format_g17(m.val_metric) << ',' << secs << '\n';
    }
    if (!f.good()) throw DataError("write_metrics_csv: write to '" + path + "' failed");
}

}  // namespace agrlab
