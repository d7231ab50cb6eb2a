#include "agrlab/batch.hpp"

#include <algorithm>
#include <numeric>

#include "agrlab/errors.hpp"

namespace agrlab {

std::string task_name(Task t) {
    switch (t) {
        case Task::agreement: return "agreement";
        case Task::supertag: return "supertag";
        case Task::lm: return "lm";
        case Task::pos: return "pos";
    }
    return "?";
}

Task task_from_name(std::string_view name) {
    if (name == "agreement") return Task::agreement;
    if (name == "supertag") return Task::supertag;
    if (name == "lm") return Task::lm;
    if (name == "pos") return Task::pos;
    throw ConfigError("unknown task name: " + std::string(name));
}

Head head_for(Task t) {
    switch (t) {
        case Task::agreement: return Head::agreement;
        case Task::supertag:
        case Task::pos: return Head::supertag;
        case Task::lm: return Head::lm;
    }
    return Head::agreement;
}

std::vector<TaskBatch> make_batches(Task task, const std::vector<TrainInstance>& instances,
                                    int batch_size, int pad_id, int eos_id, Rng* rng,
                                    bool shuffle) {
    if (instances.empty()) throw DataError("make_batches: no instances");
    if (batch_size < 1) throw ConfigError("make_batches: batch_size must be >= 1");

    std::vector<size_t> order(instances.size());
    std::iota(order.begin(), order.end(), size_t{0});
    if (shuffle) {
        if (rng == nullptr) throw ConfigError("make_batches: shuffle requested without rng");
        rng->shuffle(order);
    }

    const bool tagging = task == Task::supertag || task == Task::pos;
    std::vector<TaskBatch> batches;
    for (size_t start = 0; start < order.size(); start += batch_size) {
        const size_t end = std::min(order.size(), start + batch_size);
        const int b = static_cast<int>(end - start);
        int max_len = 0;
        for (size_t k = start; k < end; ++k) {
            max_len = std::max(max_len, static_cast<int>(instances[order[k]].tokens.size()));
        }

        TaskBatch batch;
        batch.task = task;
        batch.pad_id = pad_id;
        batch.tokens = IntMatrix::Constant(b, max_len, pad_id);
        batch.mask = Matrix::Zero(b, max_len);
        batch.lengths.resize(b);
        if (task == Task::agreement) batch.agr_labels.assign(b, -1);
        if (tagging) batch.tag_labels = IntMatrix::Constant(b, max_len, -1);
        if (task == Task::lm) batch.lm_labels = IntMatrix::Constant(b, max_len, -1);

        for (int row = 0; row < b; ++row) {
            const TrainInstance& inst = instances[order[start + row]];
            const int len = static_cast<int>(inst.tokens.size());
            if (len == 0) throw DataError("make_batches: empty instance");
            batch.lengths[row] = len;
            for (int t = 0; t < len; ++t) {
                batch.tokens(row, t) = inst.tokens[t];
                batch.mask(row, t) = 1.0;
            }
            if (task == Task::agreement) {
                if (inst.agr_label != 0 && inst.agr_label != 1) {
                    throw DataError("make_batches: agreement instance without a 0/1 label");
                }
                batch.agr_labels[row] = inst.agr_label;
            } else if (tagging) {
                if (static_cast<int>(inst.tags.size()) != len) {
                    throw ShapeError("make_batches: tag sequence length " +
                                     std::to_string(inst.tags.size()) + " vs " +
                                     std::to_string(len) + " tokens");
                }
                for (int t = 0; t < len; ++t) batch.tag_labels(row, t) = inst.tags[t];
            } else if (task == Task::lm) {
                for (int t = 0; t + 1 < len; ++t) batch.lm_labels(row, t) = inst.tokens[t + 1];
                batch.lm_labels(row, len - 1) = eos_id;
            }
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

}  // namespace agrlab
