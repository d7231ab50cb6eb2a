#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agrlab/batch.hpp"
#include "agrlab/corpus.hpp"
#include "agrlab/eval.hpp"
#include "agrlab/model.hpp"
#include "agrlab/synth.hpp"

namespace agrlab {

// Typed view of the experiment config file (JSON, schema_version 1).
// Unknown keys anywhere are rejected so typos fail loudly.

struct DataSection {
    std::string train, val, test;  // JSONL paths; may be empty if unused
    VocabRule vocab_rule;          // default min_count(1)
    bool filter_intervening_noun = false;
};

struct GenSection {
    int n_train = 0, n_val = 0, n_test = 0;
    GrammarConfig grammar;  // defaults with config overrides applied
};

struct ModelSection {
    int d = 0;
    std::set<Head> heads;
};

enum class Regime { single, joint, pretrain };

struct TrainSection {
    Regime regime = Regime::single;
    Task task = Task::agreement;
    std::optional<Task> task2;
    double r = 0.0;
    int epochs = 1;
    int batch_size = 32;
    double learning_rate = 0.05;
    bool shuffle = true;
    std::optional<double> grad_clip;
    bool freeze_embeddings = false;
    std::optional<long> limit;  // cap on task-1 training instances
    std::optional<long> limit2;  // cap on task-2 instances (joint)
    int supertag_min_count = 10;

    struct Pretrain {
        Task task = Task::supertag;
        int epochs = 1;
        std::optional<long> limit;
        std::optional<int> batch_size;  // defaults to the main batch_size
    };
    std::optional<Pretrain> pretrain;
};

struct EvalGroup {
    std::string label;
    std::vector<std::string> checkpoints;
};

struct EvalSection {
    std::vector<EvalGroup> groups;
    std::string vocab;                    // vocab.json written by `train`
    std::optional<std::string> inventory;  // tags.json, for supertag accuracy
    std::vector<std::string> suites;      // template files
    bool probes = true;
    std::vector<VerbPair> verb_pairs;     // defaults to the built-in grammar's verbs
};

struct TraceSection {
    std::string checkpoint, vocab, template_file;
    int frame_index = 0;
    std::vector<int> units;
};

struct ExperimentConfig {
    std::string out_dir;
    std::vector<uint64_t> seeds = {1};
    std::optional<DataSection> data;
    std::optional<GenSection> gen;
    std::optional<ModelSection> model;
    std::optional<TrainSection> train;
    std::optional<EvalSection> eval;
    std::optional<TraceSection> trace;
};

struct CliOverrides {
    std::optional<std::string> out_dir;
    std::optional<std::vector<uint64_t>> seeds;
};

ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig apply_overrides(ExperimentConfig cfg, const CliOverrides& overrides);

// gen: synthesize train/val/test JSONL files plus stats.json.
void cmd_gen(const ExperimentConfig& cfg);

// train: one checkpoint per seed plus per-seed metrics CSV, vocab.json,
// tags.json (tagging tasks) and run_meta.json in the output directory.
void cmd_train(const ExperimentConfig& cfg);

// eval: per-(group, seed) reports, cross-seed eval_summary.csv, and SVG
// plots whose values equal the summary rows exactly.
void cmd_eval(const ExperimentConfig& cfg);

// trace: word-by-word p(plural) and selected hidden units over the four
// number conditions of one template frame; CSV plus SVGs.
void cmd_trace(const ExperimentConfig& cfg);

}  // namespace agrlab
