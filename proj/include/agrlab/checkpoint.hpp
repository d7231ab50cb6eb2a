#pragma once

#include <string>

#include "agrlab/model.hpp"

namespace agrlab {

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
};

// Formats a double with 17 significant digits; round-trips bit-exactly
// through strtod. Shared by the checkpoint writer, CSV emitters and SVG
// data attributes so that "same number" always means "same text".
std::string format_g17(double v);

// Versioned structured-text checkpoint: format_version, config (d,
// vocab_size, n_supertags, heads, label_convention) and one named record
// per tensor with shape and row-major decimal data.
void save_checkpoint(const ModelParams& params, const ModelConfig& cfg, const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace agrlab
