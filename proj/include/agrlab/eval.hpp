#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agrlab/corpus.hpp"
#include "agrlab/model.hpp"

namespace agrlab {

struct BucketStat {
    long n = 0;
    long correct = 0;

    double accuracy() const {
        return n > 0 ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
    }
    void tally(bool ok) {
        ++n;
        if (ok) ++correct;
    }
};

// Counts are kept alongside accuracies so that per-bucket numbers recombine
// to the overall figure exactly.
struct EvalReport {
    BucketStat overall;
    std::map<int, BucketStat> by_attractor;  // keys 0..4; 4 holds "4+"
    BucketStat mixed;
    std::map<std::string, double> baselines;  // "last_noun", "majority"
    long last_noun_abstained = 0;
    std::optional<double> perplexity;
    std::optional<double> probe_accuracy_lexical;
    std::optional<double> probe_accuracy_pos;
    long probe_excluded = 0;
    std::map<std::string, BucketStat> per_condition;  // "suite/CONDITION"
};

void write_report_json(const std::string& path, const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);

// A present-tense verb in both numbers; the POS pair is always (VBZ, VBP).
struct VerbPair {
    std::string sg, pl;
};

// Number of the nearest noun before the verb; abstains (nullopt) when no
// noun precedes it.
std::optional<Number> baseline_last_noun(const Sentence& sentence);

// Majority label of the training set; exact ties resolve to SG.
Number baseline_majority(const std::vector<AgreementInstance>& train);

// Attractor reporting caps at this bucket ("4+").
constexpr int kMaxAttractorBucket = 4;

// Accuracy overall, per attractor bucket and for mixed instances.
// Prediction is PLURAL iff p_plural >= 0.5.
EvalReport eval_agreement(const ModelParams& params, const ModelConfig& cfg,
                          const std::vector<AgreementInstance>& instances);

// Accuracy of the two agreement baselines over annotated sentences.
void add_baselines(EvalReport& report, const std::vector<Sentence>& test,
                   Number majority_label);

// Per-token accuracy (dummy-tagged tokens included).
double eval_supertag(const ModelParams& params, const ModelConfig& cfg,
                     const std::vector<Sentence>& sentences, const TagInventory& inventory,
                     const Vocab& vocab);

// Per-word majority-tag baseline: each word predicts its most frequent
// training tag; unseen words fall back to the globally most frequent tag.
double baseline_supertag_majority(const std::vector<Sentence>& train,
                                  const std::vector<Sentence>& test,
                                  const TagInventory& inventory, const Vocab& vocab);

// 2 to the token-averaged negative log2-likelihood (next tokens plus an
// end-of-sentence event per sentence).
double eval_perplexity(const ModelParams& params, const ModelConfig& cfg,
                       const std::vector<std::vector<int>>& token_seqs, int eos_id);

// p(correct form) / (p(correct form) + p(incorrect form)) under the LM at
// the end of the preamble. nullopt when both forms resolve to the same id.
std::optional<double> probe_lexical(const ModelParams& params, const ModelConfig& cfg,
                                    std::span<const int> preamble, int correct_id,
                                    int incorrect_id);

// Same ratio over the VBZ/VBP POS-fallback tokens; VBP is correct iff the
// subject is plural.
double probe_pos(const ModelParams& params, const ModelConfig& cfg, std::span<const int> preamble,
                 Number subject_number, const Vocab& vocab);

// Resolves a verb pair to (correct_id, incorrect_id) for a given label,
// using POS fallbacks (VBZ/VBP) for out-of-vocabulary forms.
std::pair<int, int> resolve_verb_pair(const VerbPair& pair, Number label, const Vocab& vocab);

}  // namespace agrlab
