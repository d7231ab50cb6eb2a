#include "agrlab/losses.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "agrlab/errors.hpp"

namespace agrlab {

namespace {

constexpr double kLn2 = 0.6931471805599453;

void check_batch_mask(const TaskBatch& batch) {
    for (int r = 0; r < batch.size(); ++r) {
        for (int t = 0; t < batch.max_len(); ++t) {
            const double expected = t < batch.lengths[r] ? 1.0 : 0.0;
            if (batch.mask(r, t) != expected) {
                throw ShapeError("batch mask inconsistent with lengths at row " +
                                 std::to_string(r) + ", position " + std::to_string(t));
            }
        }
    }
}

std::vector<int> row_tokens(const TaskBatch& batch, int r) {
    std::vector<int> ids(batch.lengths[r]);
    for (int t = 0; t < batch.lengths[r]; ++t) ids[t] = batch.tokens(r, t);
    return ids;
}

// Runs `per_row(row, grads, loss_sum)` for every row, accumulating each
// row's contribution into a private zeroed buffer first and folding buffers
// into the shared result in row order. The fold order is fixed, so the
// result is bit-identical for any worker count.
template <class PerRow>
void accumulate_rows(const ModelConfig& cfg, int n_rows, ModelParams& grads, double& loss_sum,
                     PerRow&& per_row) {
    const int workers = std::min(thread_count(), n_rows);
    std::vector<ModelParams> buffers;
    std::vector<double> row_loss;
    for (int start = 0; start < n_rows; start += workers) {
        const int flight = std::min(workers, n_rows - start);
        buffers.assign(flight, ModelParams::zeros(cfg));
        row_loss.assign(flight, 0.0);
        if (flight == 1) {
            per_row(start, buffers[0], row_loss[0]);
        } else {
            std::vector<std::exception_ptr> errors(flight);
            std::vector<std::thread> pool;
            pool.reserve(flight);
            for (int j = 0; j < flight; ++j) {
                pool.emplace_back([&, j] {
                    try {
                        per_row(start + j, buffers[j], row_loss[j]);
                    } catch (...) {
                        errors[j] = std::current_exception();
                    }
                });
            }
            for (auto& th : pool) th.join();
            for (auto& e : errors) {
                if (e) std::rethrow_exception(e);
            }
        }
        for (int j = 0; j < flight; ++j) {
            loss_sum += row_loss[j];
            for_each_tensor(
                cfg, [](std::string_view, auto& acc, const auto& part) { acc += part; }, grads,
                buffers[j]);
        }
    }
}

}  // namespace

int thread_count() {
    static const int n = [] {
        const char* env = std::getenv("AGRLAB_THREADS");
        if (env == nullptr) return 1;
        const int v = std::atoi(env);
        if (v < 1) return 1;
        return std::min(v, 64);
    }();
    return n;
}

LossResult loss_agreement(const ModelParams& params, const ModelConfig& cfg,
                          const TaskBatch& batch) {
    if (!cfg.has(Head::agreement)) throw ConfigError("loss_agreement: agreement head absent");
    if (batch.size() == 0 || batch.agr_labels.empty()) {
        throw DataError("loss_agreement: batch carries no agreement labels");
    }
    check_batch_mask(batch);

    const int B = batch.size();
    LossResult res;
    res.denom = B;
    res.grads = ModelParams::zeros(cfg);
    const double scale = 1.0 / B;

    accumulate_rows(cfg, B, res.grads, res.loss,
                    [&](int r, ModelParams& grads, double& loss_sum) {
                        const auto ids = row_tokens(batch, r);
                        const int last = batch.lengths[r] - 1;
                        if (batch.mask(r, last) != 1.0) {
                            throw ShapeError("loss_agreement: final preamble position masked out");
                        }
                        const ForwardTrace tr = encode(params, cfg, ids);
                        const Vector& h = tr.h[last];
                        const double z = params.head_agr_w.dot(h) + params.head_agr_b(0);
                        const int y = batch.agr_labels[r];
                        // -log q(label): stable in both tails of the sigmoid.
                        loss_sum += scale * (y == 1 ? softplus(-z) : softplus(z));

                        const double dz = scale * (sigmoid(z) - y);
                        grads.head_agr_w += dz * h;
                        grads.head_agr_b(0) += dz;
                        std::vector<Vector> dh(ids.size(), Vector::Zero(cfg.d));
                        dh[last] = dz * params.head_agr_w;
                        backward(params, cfg, tr, dh, grads);
                    });
    res.loss_bits = res.loss / kLn2;
    return res;
}

namespace {

// Shared core of the supertag / POS / LM losses: per-position softmax
// cross-entropy with target ids from `labels`, averaged over all unpadded
// positions of the batch.
LossResult sequence_ce_loss(const ModelParams& params, const ModelConfig& cfg,
                            const TaskBatch& batch, const IntMatrix& labels, Head head,
                            int n_classes, const char* what) {
    check_batch_mask(batch);
    const int B = batch.size();
    long total_tokens = 0;
    for (int len : batch.lengths) total_tokens += len;

    LossResult res;
    res.denom = total_tokens;
    res.grads = ModelParams::zeros(cfg);
    const double scale = 1.0 / static_cast<double>(total_tokens);
    const Matrix& w = head == Head::supertag ? params.head_st_w : params.head_lm_w;

    accumulate_rows(
        cfg, B, res.grads, res.loss, [&](int r, ModelParams& grads, double& loss_sum) {
            const auto ids = row_tokens(batch, r);
            const ForwardTrace tr = encode(params, cfg, ids);
            Matrix& gw = head == Head::supertag ? grads.head_st_w : grads.head_lm_w;
            Vector& gb = head == Head::supertag ? grads.head_st_b : grads.head_lm_b;
            std::vector<Vector> dh(ids.size(), Vector::Zero(cfg.d));
            for (size_t t = 0; t < ids.size(); ++t) {
                const int y = labels(r, static_cast<int>(t));
                if (y < 0 || y >= n_classes) {
                    throw LabelError(std::string(what) + ": label id " + std::to_string(y) +
                                     " outside [0, " + std::to_string(n_classes) + ") at row " +
                                     std::to_string(r) + ", position " + std::to_string(t));
                }
                const Vector logits = head_logits(params, cfg, tr.h[t], head);
                const Vector ls = log_softmax(logits);
                loss_sum += -scale * ls(y);
                Vector dlogits = ls.array().exp().matrix() * scale;
                dlogits(y) -= scale;
                gw.noalias() += tr.h[t] * dlogits.transpose();
                gb += dlogits;
                dh[t] = w * dlogits;
            }
            backward(params, cfg, tr, dh, grads);
        });
    res.loss_bits = res.loss / kLn2;
    return res;
}

}  // namespace

LossResult loss_supertag(const ModelParams& params, const ModelConfig& cfg,
                         const TaskBatch& batch) {
    if (!cfg.has(Head::supertag)) throw ConfigError("loss_supertag: supertag head absent");
    if (batch.tag_labels.size() == 0) {
        throw DataError("loss_supertag: batch carries no tag labels");
    }
    return sequence_ce_loss(params, cfg, batch, batch.tag_labels, Head::supertag,
                            cfg.n_supertags, "loss_supertag");
}

LossResult loss_lm(const ModelParams& params, const ModelConfig& cfg, const TaskBatch& batch) {
    if (!cfg.has(Head::lm)) throw ConfigError("loss_lm: lm head absent");
    if (batch.lm_labels.size() == 0) throw DataError("loss_lm: batch carries no next-token labels");
    return sequence_ce_loss(params, cfg, batch, batch.lm_labels, Head::lm, cfg.vocab_size,
                            "loss_lm");
}

LossResult compute_loss(Task task, const ModelParams& params, const ModelConfig& cfg,
                        const TaskBatch& batch) {
    switch (task) {
        case Task::agreement: return loss_agreement(params, cfg, batch);
        case Task::supertag:
        case Task::pos: return loss_supertag(params, cfg, batch);
        case Task::lm: return loss_lm(params, cfg, batch);
    }
    throw ConfigError("compute_loss: unknown task");
}

double combine_losses(double l1, double l2, double r) {
    if (r < 0.0) throw ConfigError("combine_losses: ratio r must be >= 0, got " + std::to_string(r));
    if (r == 0.0) return l1;
    const double w1 = 1.0 / (1.0 + r);
    const double w2 = r / (1.0 + r);
    return w1 * l1 + w2 * l2;
}

ModelParams combine_gradients(const ModelConfig& cfg, const ModelParams& g1,
                              const ModelParams& g2, double r) {
    if (r < 0.0) {
        throw ConfigError("combine_gradients: ratio r must be >= 0, got " + std::to_string(r));
    }
    const double w1 = 1.0 / (1.0 + r);
    const double w2 = r / (1.0 + r);
    ModelParams out = ModelParams::zeros(cfg);
    for_each_tensor(
        cfg,
        [&](std::string_view, auto& o, const auto& a, const auto& b) {
            o = w1 * a;
            if (w2 != 0.0) o += w2 * b;
        },
        out, g1, g2);
    return out;
}

}  // namespace agrlab
