#pragma once

#include <map>
#include <string>
#include <vector>

#include "agrlab/checkpoint.hpp"
#include "agrlab/corpus.hpp"
#include "agrlab/model.hpp"

namespace agrlab {

// One lexical frame of a psycholinguistic suite. `frame_text` contains the
// slots {subject} and {attractor}; an embedded verb that must agree with
// the attractor is written {attr_verb:sg_form/pl_form}. The subject slot is
// always the word whose number the probe must predict.
struct TemplateFrame {
    std::string subject_sg, subject_pl;
    std::string attractor_sg, attractor_pl;
    std::string modifier_type;  // prepositional | relative | embedded_verb | main_clause_verb
    std::string frame_text;
    std::string note;
};

// A frame expanded into one of the four number conditions. First letter of
// `condition` is the subject number, second the attractor number.
struct ExpandedPreamble {
    std::string suite;
    std::string condition;  // SS, SP, PS, PP
    int frame_index = 0;
    std::vector<std::string> tokens;
    std::vector<std::string> pos;  // used for OOV fallback resolution
    Number subject_number = Number::SG;
    Number attractor_number = Number::SG;
};

// JSONL, one frame per line; lines starting with '#' are comments.
std::vector<TemplateFrame> read_template_file(const std::string& path);

// Four expansions per frame, relativizers normalized to "that".
std::vector<ExpandedPreamble> expand_templates(const std::vector<TemplateFrame>& frames);

// Token ids under a vocabulary, replacing out-of-vocabulary words by their
// POS entries.
std::vector<int> preamble_token_ids(const ExpandedPreamble& preamble, const Vocab& vocab);

struct ConditionStat {
    double mean = 0.0;  // accuracy, averaged across checkpoints
    double stddev = 0.0;
    long n_items = 0;  // preambles per checkpoint
};

// Agreement-head accuracy per (suite, condition), aggregated across the
// given checkpoints of one training regime. Keys look like "relative/SP".
std::map<std::string, ConditionStat> eval_psycholinguistic(
    const std::vector<Checkpoint>& checkpoints, const std::vector<ExpandedPreamble>& preambles,
    const Vocab& vocab);

}  // namespace agrlab
