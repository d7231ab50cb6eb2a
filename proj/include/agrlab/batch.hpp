#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agrlab/model.hpp"
#include "agrlab/numeric.hpp"
#include "agrlab/rng.hpp"

namespace agrlab {

// Trainable tasks. `pos` is sequence tagging over number-stripped POS tags;
// it shares the supertag head, only the label inventory differs.
enum class Task { agreement, supertag, lm, pos };

std::string task_name(Task t);
Task task_from_name(std::string_view name);
Head head_for(Task t);

// One training example, already mapped to token ids. For agreement the
// tokens are the preamble (everything before the verb) and `agr_label`
// holds the verb number; for tagging tasks `tags` is parallel to `tokens`;
// for LM only `tokens` is used (targets are derived by shifting).
struct TrainInstance {
    std::vector<int> tokens;
    int agr_label = -1;  // 0 = singular, 1 = plural
    std::vector<int> tags;
};

// Padded batch. `mask(b, t)` is 1 where token (b, t) is real and 0 at
// padding; labels are meaningful only where the mask is 1 (for agreement,
// only at the final preamble position).
struct TaskBatch {
    Task task = Task::agreement;
    IntMatrix tokens;   // B x L, pad_id at padding
    std::vector<int> lengths;
    Matrix mask;        // B x L in {0, 1}
    std::vector<int> agr_labels;  // B, agreement only
    IntMatrix tag_labels;         // B x L, tagging tasks only
    IntMatrix lm_labels;          // B x L, next-token ids, eos at sentence end
    int pad_id = 0;

    int size() const { return static_cast<int>(lengths.size()); }
    int max_len() const { return static_cast<int>(tokens.cols()); }
};

// Splits instances into batches of `batch_size` (the last one may be
// smaller). Every instance appears exactly once. With `shuffle`, the order
// is drawn from `rng`; otherwise input order is kept. `eos_id` is used to
// terminate LM target sequences.
std::vector<TaskBatch> make_batches(Task task, const std::vector<TrainInstance>& instances,
                                    int batch_size, int pad_id, int eos_id, Rng* rng,
                                    bool shuffle);

}  // namespace agrlab
