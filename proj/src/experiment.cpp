#include "agrlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <nlohmann/json.hpp>

#include "agrlab/checkpoint.hpp"
#include "agrlab/svg.hpp"
#include "agrlab/templates.hpp"
#include "agrlab/train.hpp"

namespace agrlab {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// ------------------------------------------------------------- parsing --

namespace {

void require_keys(const json& j, std::initializer_list<const char*> allowed,
                  const std::string& ctx) {
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end()) {
            throw ConfigError("config: unknown key '" + key + "' in " + ctx);
        }
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
    }
}

template <class T>
T get_req(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || j[key].is_null()) {
        throw ConfigError("config: missing '" + std::string(key) + "' in " + ctx);
    }
    try {
        return j[key].get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
    }
}

VocabRule parse_vocab_rule(const json& j) {
    require_keys(j, {"kind", "value"}, "data.vocab_rule");
    VocabRule rule;
    const std::string kind = get_req<std::string>(j, "kind", "data.vocab_rule");
    if (kind == "top_k") {
        rule.kind = VocabRule::Kind::top_k;
    } else if (kind == "min_count") {
        rule.kind = VocabRule::Kind::min_count;
    } else {
        throw ConfigError("config: vocab_rule.kind must be top_k or min_count");
    }
    rule.value = get_req<int>(j, "value", "data.vocab_rule");
    return rule;
}

DataSection parse_data(const json& j) {
    require_keys(j, {"train", "val", "test", "vocab_rule", "filter_intervening_noun"}, "data");
    DataSection d;
    d.train = get_or<std::string>(j, "train", "");
    d.val = get_or<std::string>(j, "val", "");
    d.test = get_or<std::string>(j, "test", "");
    if (j.contains("vocab_rule")) d.vocab_rule = parse_vocab_rule(j["vocab_rule"]);
    d.filter_intervening_noun = get_or<bool>(j, "filter_intervening_noun", false);
    return d;
}

std::vector<NounEntry> parse_noun_pairs(const json& j, const std::string& ctx) {
    std::vector<NounEntry> out;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2) {
            throw ConfigError("config: " + ctx + " entries must be [sg, pl] pairs");
        }
        out.push_back({pair[0].get<std::string>(), pair[1].get<std::string>()});
    }
    return out;
}

GenSection parse_gen(const json& j) {
    require_keys(j,
                 {"n_train", "n_val", "n_test", "attractor_weights", "construction_weights",
                  "mixed_fraction", "plural_subject_prob", "grammar"},
                 "gen");
    GenSection g;
    g.n_train = get_or<int>(j, "n_train", 0);
    g.n_val = get_or<int>(j, "n_val", 0);
    g.n_test = get_or<int>(j, "n_test", 0);
    g.grammar = GrammarConfig::defaults();
    if (j.contains("attractor_weights")) {
        g.grammar.attractor_weights = j["attractor_weights"].get<std::vector<double>>();
    }
    if (j.contains("construction_weights")) {
        const json& w = j["construction_weights"];
        require_keys(w, {"pp", "relative", "object_relative"}, "gen.construction_weights");
        g.grammar.pp_weight = get_or<double>(w, "pp", 1.0);
        g.grammar.relative_weight = get_or<double>(w, "relative", 1.0);
        g.grammar.object_relative_weight = get_or<double>(w, "object_relative", 1.0);
    }
    g.grammar.mixed_fraction = get_or<double>(j, "mixed_fraction", g.grammar.mixed_fraction);
    g.grammar.plural_subject_prob =
        get_or<double>(j, "plural_subject_prob", g.grammar.plural_subject_prob);
    if (j.contains("grammar")) {
        const json& gr = j["grammar"];
        require_keys(gr,
                     {"nouns", "relational_nouns", "proper_sg", "proper_pl", "rc_verbs",
                      "vbg_verbs", "adjectives", "prepositions", "adjective_prob",
                      "relational_prob", "proper_prob", "coord_prob", "reduced_relative_prob",
                      "that_object_prob", "possessive_prob", "embedded_clause_prob"},
                     "gen.grammar");
        if (gr.contains("nouns")) g.grammar.nouns = parse_noun_pairs(gr["nouns"], "gen.grammar.nouns");
        if (gr.contains("relational_nouns")) {
            g.grammar.relational_nouns =
                parse_noun_pairs(gr["relational_nouns"], "gen.grammar.relational_nouns");
        }
        for (auto [key, field] : std::initializer_list<std::pair<const char*, std::vector<std::string>*>>{
                 {"proper_sg", &g.grammar.proper_sg},
                 {"proper_pl", &g.grammar.proper_pl},
                 {"rc_verbs", &g.grammar.rc_verbs},
                 {"vbg_verbs", &g.grammar.vbg_verbs},
                 {"adjectives", &g.grammar.adjectives},
                 {"prepositions", &g.grammar.prepositions}}) {
            if (gr.contains(key)) *field = gr[key].get<std::vector<std::string>>();
        }
        g.grammar.adjective_prob = get_or<double>(gr, "adjective_prob", g.grammar.adjective_prob);
        g.grammar.relational_prob =
            get_or<double>(gr, "relational_prob", g.grammar.relational_prob);
        g.grammar.proper_prob = get_or<double>(gr, "proper_prob", g.grammar.proper_prob);
        g.grammar.coord_prob = get_or<double>(gr, "coord_prob", g.grammar.coord_prob);
        g.grammar.reduced_relative_prob =
            get_or<double>(gr, "reduced_relative_prob", g.grammar.reduced_relative_prob);
        g.grammar.that_object_prob =
            get_or<double>(gr, "that_object_prob", g.grammar.that_object_prob);
        g.grammar.possessive_prob =
            get_or<double>(gr, "possessive_prob", g.grammar.possessive_prob);
        g.grammar.embedded_clause_prob =
            get_or<double>(gr, "embedded_clause_prob", g.grammar.embedded_clause_prob);
    }
    return g;
}

ModelSection parse_model(const json& j) {
    require_keys(j, {"d", "heads"}, "model");
    ModelSection m;
    m.d = get_req<int>(j, "d", "model");
    for (const auto& h : get_req<std::vector<std::string>>(j, "heads", "model")) {
        m.heads.insert(head_from_name(h));
    }
    return m;
}

TrainSection parse_train(const json& j) {
    require_keys(j,
                 {"regime", "task", "task2", "r", "epochs", "batch_size", "learning_rate",
                  "shuffle", "grad_clip", "freeze_embeddings", "limit", "limit2",
                  "supertag_min_count", "pretrain"},
                 "train");
    TrainSection t;
    const std::string regime = get_or<std::string>(j, "regime", "single");
    if (regime == "single") {
        t.regime = Regime::single;
    } else if (regime == "joint") {
        t.regime = Regime::joint;
    } else if (regime == "pretrain") {
        t.regime = Regime::pretrain;
    } else {
        throw ConfigError("config: train.regime must be single, joint or pretrain");
    }
    t.task = task_from_name(get_req<std::string>(j, "task", "train"));
    if (j.contains("task2") && !j["task2"].is_null()) {
        t.task2 = task_from_name(j["task2"].get<std::string>());
    }
    if (j.contains("r") && !j["r"].is_null()) t.r = j["r"].get<double>();
    else if (t.regime == Regime::joint) throw ConfigError("config: joint regime requires train.r");
    t.epochs = get_req<int>(j, "epochs", "train");
    t.batch_size = get_or<int>(j, "batch_size", 32);
    t.learning_rate = get_or<double>(j, "learning_rate", 0.05);
    t.shuffle = get_or<bool>(j, "shuffle", true);
    if (j.contains("grad_clip") && !j["grad_clip"].is_null()) {
        t.grad_clip = j["grad_clip"].get<double>();
    }
    t.freeze_embeddings = get_or<bool>(j, "freeze_embeddings", false);
    if (j.contains("limit") && !j["limit"].is_null()) t.limit = j["limit"].get<long>();
    if (j.contains("limit2") && !j["limit2"].is_null()) t.limit2 = j["limit2"].get<long>();
    t.supertag_min_count = get_or<int>(j, "supertag_min_count", 10);
    if (t.regime == Regime::joint && !t.task2) {
        throw ConfigError("config: joint regime requires train.task2");
    }
    if (j.contains("pretrain") && !j["pretrain"].is_null()) {
        const json& p = j["pretrain"];
        require_keys(p, {"task", "epochs", "limit", "batch_size"}, "train.pretrain");
        TrainSection::Pretrain pre;
        pre.task = task_from_name(get_req<std::string>(p, "task", "train.pretrain"));
        pre.epochs = get_req<int>(p, "epochs", "train.pretrain");
        if (p.contains("limit") && !p["limit"].is_null()) pre.limit = p["limit"].get<long>();
        if (p.contains("batch_size") && !p["batch_size"].is_null()) {
            pre.batch_size = p["batch_size"].get<int>();
        }
        t.pretrain = pre;
    }
    if (t.regime == Regime::pretrain && !t.pretrain) {
        throw ConfigError("config: pretrain regime requires a train.pretrain block");
    }
    return t;
}

EvalSection parse_eval(const json& j) {
    require_keys(j, {"groups", "vocab", "inventory", "suites", "probes", "verb_pairs"}, "eval");
    EvalSection e;
    if (!j.contains("groups") || !j["groups"].is_array() || j["groups"].empty()) {
        throw ConfigError("config: eval.groups must list at least one checkpoint group");
    }
    for (const json& g : j["groups"]) {
        require_keys(g, {"label", "checkpoints"}, "eval.groups[]");
        EvalGroup group;
        group.label = get_req<std::string>(g, "label", "eval.groups[]");
        group.checkpoints = get_req<std::vector<std::string>>(g, "checkpoints", "eval.groups[]");
        if (group.checkpoints.empty()) {
            throw ConfigError("config: eval group '" + group.label + "' lists no checkpoints");
        }
        e.groups.push_back(std::move(group));
    }
    e.vocab = get_req<std::string>(j, "vocab", "eval");
    if (j.contains("inventory") && !j["inventory"].is_null()) {
        e.inventory = j["inventory"].get<std::string>();
    }
    e.suites = get_or<std::vector<std::string>>(j, "suites", {});
    e.probes = get_or<bool>(j, "probes", true);
    if (j.contains("verb_pairs") && !j["verb_pairs"].is_null()) {
        for (const auto& p : j["verb_pairs"]) {
            if (!p.is_array() || p.size() != 2) {
                throw ConfigError("config: eval.verb_pairs entries must be [sg, pl] pairs");
            }
            e.verb_pairs.push_back({p[0].get<std::string>(), p[1].get<std::string>()});
        }
    } else {
        for (const VerbFrame& f : GrammarConfig::defaults().verb_frames) {
            e.verb_pairs.push_back({f.sg, f.pl});
        }
    }
    return e;
}

TraceSection parse_trace(const json& j) {
    require_keys(j, {"checkpoint", "vocab", "template_file", "frame_index", "units"}, "trace");
    TraceSection t;
    t.checkpoint = get_req<std::string>(j, "checkpoint", "trace");
    t.vocab = get_req<std::string>(j, "vocab", "trace");
    t.template_file = get_req<std::string>(j, "template_file", "trace");
    t.frame_index = get_or<int>(j, "frame_index", 0);
    t.units = get_or<std::vector<int>>(j, "units", {});
    return t;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    require_keys(j, {"schema_version", "out_dir", "seeds", "data", "gen", "model", "train",
                     "eval", "trace"},
                 "top level");
    if (get_req<int>(j, "schema_version", "top level") != 1) {
        throw ConfigError("config: unsupported schema_version");
    }
    ExperimentConfig cfg;
    cfg.out_dir = get_req<std::string>(j, "out_dir", "top level");
    cfg.seeds = get_or<std::vector<uint64_t>>(j, "seeds", {1});
    if (cfg.seeds.empty()) throw ConfigError("config: seeds must not be empty");
    if (j.contains("data")) cfg.data = parse_data(j["data"]);
    if (j.contains("gen")) cfg.gen = parse_gen(j["gen"]);
    if (j.contains("model")) cfg.model = parse_model(j["model"]);
    if (j.contains("train")) cfg.train = parse_train(j["train"]);
    if (j.contains("eval")) cfg.eval = parse_eval(j["eval"]);
    if (j.contains("trace")) cfg.trace = parse_trace(j["trace"]);
    return cfg;
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const CliOverrides& overrides) {
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (overrides.seeds) {
        if (overrides.seeds->empty()) throw ConfigError("--seed list must not be empty");
        cfg.seeds = *overrides.seeds;
    }
    return cfg;
}

// ----------------------------------------------------------------- gen --

namespace {

ordered_json split_stats(const std::vector<Sentence>& sentences) {
    std::map<std::string, long> attractors;
    long sg = 0, pl = 0, tokens = 0, intervening = 0;
    for (const Sentence& s : sentences) {
        tokens += static_cast<long>(s.tokens.size());
        if (!s.has_agreement()) continue;
        (*s.verb_number == Number::SG ? sg : pl)++;
        const auto count = count_attractors(s);
        if (!count) {
            ++attractors["mixed"];
        } else {
            ++attractors[std::to_string(std::min(*count, kMaxAttractorBucket)) +
                         (*count >= kMaxAttractorBucket ? "+" : "")];
        }
        bool has_noun = false;
        for (int i = *s.subject_index + 1; i < *s.verb_index && !has_noun; ++i) {
            has_noun = is_noun_tag(s.pos[i]);
        }
        if (has_noun) ++intervening;
    }
    ordered_json st;
    st["n_sentences"] = sentences.size();
    st["n_tokens"] = tokens;
    st["label_balance"] = {{"SG", sg}, {"PL", pl}};
    st["attractor_histogram"] = attractors;
    st["with_intervening_noun"] = intervening;
    return st;
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw DataError("cannot create output directory '" + out_dir + "': " + ec.message());
}

}  // namespace

void cmd_gen(const ExperimentConfig& cfg) {
    if (!cfg.gen) throw ConfigError("gen: config has no gen section");
    ensure_out_dir(cfg.out_dir);
    const GenSection& g = *cfg.gen;
    g.grammar.validate();

    const Rng base(cfg.seeds.front());
    ordered_json stats;
    stats["seed"] = cfg.seeds.front();
    for (const auto& [split, n] : std::initializer_list<std::pair<const char*, int>>{
             {"train", g.n_train}, {"val", g.n_val}, {"test", g.n_test}}) {
        Rng rng = base.fork(std::string("gen/") + split);
        const std::vector<Sentence> sentences = generate_synthetic(g.grammar, n, rng);
        write_jsonl((fs::path(cfg.out_dir) / (std::string(split) + ".jsonl")).string(), sentences);
        stats[split] = split_stats(sentences);
    }
    std::ofstream f(fs::path(cfg.out_dir) / "stats.json", std::ios::binary);
    if (!f) throw DataError("gen: cannot write stats.json");
    f << stats.dump(1) << '\n';
}

// --------------------------------------------------------------- train --

namespace {

std::vector<Sentence> load_sentences(const std::string& path, bool filter) {
    ReadResult rr = read_jsonl(path);
    for (const std::string& d : rr.diagnostics) std::cerr << path << ": " << d << '\n';
    if (rr.sentences.empty()) throw DataError("no valid sentences in '" + path + "'");
    if (filter) return filter_intervening_noun(rr.sentences);
    return rr.sentences;
}

std::vector<TrainInstance> task_instances(Task task, const std::vector<Sentence>& sentences,
                                          const Vocab& vocab, const TagInventory* inventory) {
    std::vector<TrainInstance> out;
    for (const Sentence& s : sentences) {
        TrainInstance inst;
        switch (task) {
            case Task::agreement: {
                const auto ai = extract_agreement(s, vocab);
                if (!ai) continue;
                inst.tokens = ai->preamble;
                inst.agr_label = ai->label == Number::PL ? 1 : 0;
                break;
            }
            case Task::supertag:
            case Task::pos:
                if (inventory == nullptr) throw ConfigError("tagging task without inventory");
                if (task == Task::supertag && !s.supertags) continue;
                inst.tokens = replace_rare(s, vocab);
                inst.tags = inventory->tag_ids(s);
                break;
            case Task::lm:
                inst.tokens = replace_rare(s, vocab);
                break;
        }
        out.push_back(std::move(inst));
    }
    if (out.empty()) throw DataError("no usable instances for task " + task_name(task));
    return out;
}

std::vector<TrainInstance> capped(std::vector<TrainInstance> v, std::optional<long> limit) {
    if (limit && static_cast<long>(v.size()) > *limit) v.resize(*limit);
    return v;
}

TrainConfig base_train_config(const TrainSection& t, const Vocab& vocab, uint64_t seed) {
    TrainConfig tc;
    tc.task = t.task;
    tc.task2 = t.task2;
    tc.r = t.r;
    tc.epochs = t.epochs;
    tc.batch_size = t.batch_size;
    tc.learning_rate = t.learning_rate;
    tc.seed = seed;
    tc.shuffle = t.shuffle;
    tc.grad_clip = t.grad_clip;
    tc.freeze_embeddings = t.freeze_embeddings;
    tc.pad_id = vocab.pad_id();
    tc.eos_id = vocab.eos_id();
    return tc;
}

}  // namespace

void cmd_train(const ExperimentConfig& cfg) {
    if (!cfg.data || !cfg.model || !cfg.train) {
        throw ConfigError("train: config needs data, model and train sections");
    }
    ensure_out_dir(cfg.out_dir);
    const DataSection& data = *cfg.data;
    const TrainSection& tsec = *cfg.train;
    if (data.train.empty()) throw ConfigError("train: data.train path missing");

    const std::vector<Sentence> train_sents =
        load_sentences(data.train, data.filter_intervening_noun);
    const std::vector<Sentence> val_sents =
        data.val.empty() ? std::vector<Sentence>{}
                         : load_sentences(data.val, data.filter_intervening_noun);

    const Vocab vocab = Vocab::build(train_sents, data.vocab_rule);
    vocab.save((fs::path(cfg.out_dir) / "vocab.json").string());

    std::vector<Task> tasks = {tsec.task};
    if (tsec.task2) tasks.push_back(*tsec.task2);
    if (tsec.pretrain) tasks.push_back(tsec.pretrain->task);

    // The tagging head is shared between the supertag task and the
    // number-stripped POS task; one run can use only one label inventory.
    const bool wants_supertag = std::count(tasks.begin(), tasks.end(), Task::supertag) > 0;
    const bool wants_pos = std::count(tasks.begin(), tasks.end(), Task::pos) > 0;
    if (wants_supertag && wants_pos) {
        throw ConfigError("train: supertag and pos tasks share one head; pick one per run");
    }
    std::optional<TagInventory> inventory;
    if (wants_pos) {
        inventory = TagInventory::build_pos(train_sents);
    } else if (wants_supertag || cfg.model->heads.count(Head::supertag)) {
        inventory = TagInventory::build(train_sents, tsec.supertag_min_count);
    }
    if (inventory) inventory->save((fs::path(cfg.out_dir) / "tags.json").string());

    ModelConfig mc;
    mc.d = cfg.model->d;
    mc.vocab_size = vocab.size();
    mc.n_supertags = inventory ? inventory->size() : 0;
    mc.heads = cfg.model->heads;
    mc.validate();
    for (Task t : tasks) {
        if (!mc.has(head_for(t))) {
            throw ConfigError("train: model.heads lacks the '" + head_name(head_for(t)) +
                              "' head needed by task " + task_name(t));
        }
    }

    const TagInventory* inv = inventory ? &*inventory : nullptr;
    auto instances = [&](Task t, const std::vector<Sentence>& sents) {
        return task_instances(t, sents, vocab, inv);
    };

    ordered_json meta;
    meta["vocab_fingerprint"] = vocab.fingerprint();
    meta["d"] = mc.d;
    meta["vocab_size"] = mc.vocab_size;
    meta["n_supertags"] = mc.n_supertags;
    meta["regime"] = tsec.regime == Regime::single   ? "single"
                     : tsec.regime == Regime::joint ? "joint"
                                                    : "pretrain";
    {
        std::ofstream f(fs::path(cfg.out_dir) / "run_meta.json", std::ios::binary);
        if (!f) throw DataError("train: cannot write run_meta.json");
        f << meta.dump(1) << '\n';
    }

    for (uint64_t seed : cfg.seeds) {
        const TrainConfig tc = base_train_config(tsec, vocab, seed);
        const std::string tag = "_seed" + std::to_string(seed);
        TrainResult result;
        std::vector<EpochMetric> metrics;

        switch (tsec.regime) {
            case Regime::single: {
                result = train_single(mc, init_params(mc, Rng(seed)),
                                      capped(instances(tc.task, train_sents), tsec.limit),
                                      val_sents.empty() ? std::vector<TrainInstance>{}
                                                        : instances(tc.task, val_sents),
                                      tc);
                metrics = result.metrics;
                break;
            }
            case Regime::joint: {
                result = train_joint(mc, init_params(mc, Rng(seed)),
                                     capped(instances(tc.task, train_sents), tsec.limit),
                                     capped(instances(*tc.task2, train_sents), tsec.limit2),
                                     val_sents.empty() ? std::vector<TrainInstance>{}
                                                       : instances(tc.task, val_sents),
                                     val_sents.empty() ? std::vector<TrainInstance>{}
                                                       : instances(*tc.task2, val_sents),
                                     tc);
                metrics = result.metrics;
                break;
            }
            case Regime::pretrain: {
                TrainConfig tc_a = tc;
                tc_a.task = tsec.pretrain->task;
                tc_a.task2.reset();
                tc_a.epochs = tsec.pretrain->epochs;
                if (tsec.pretrain->batch_size) tc_a.batch_size = *tsec.pretrain->batch_size;
                const PretrainResult pr = pretrain_then_train(
                    mc, capped(instances(tc_a.task, train_sents), tsec.pretrain->limit),
                    val_sents.empty() ? std::vector<TrainInstance>{}
                                      : instances(tc_a.task, val_sents),
                    tc_a, mc, capped(instances(tc.task, train_sents), tsec.limit),
                    val_sents.empty() ? std::vector<TrainInstance>{}
                                      : instances(tc.task, val_sents),
                    tc);
                save_checkpoint(pr.phase_a.params, mc,
                                (fs::path(cfg.out_dir) / ("checkpoint" + tag + "_phase_a.json"))
                                    .string());
                metrics = pr.phase_a.metrics;
                metrics.insert(metrics.end(), pr.phase_b.metrics.begin(),
                               pr.phase_b.metrics.end());
                result.params = pr.phase_b.params;
                break;
            }
        }
        save_checkpoint(result.params, mc,
                        (fs::path(cfg.out_dir) / ("checkpoint" + tag + ".json")).string());
        write_metrics_csv((fs::path(cfg.out_dir) / ("metrics" + tag + ".csv")).string(), metrics);
    }
}

// ---------------------------------------------------------------- eval --

namespace {

struct GroupSummary {
    // metric -> key -> per-seed values (mean/std derived at write time)
    std::map<std::string, std::map<std::string, std::vector<double>>> values;

    void add(const std::string& metric, const std::string& key, double v) {
        values[metric][key].push_back(v);
    }
};

double mean_of(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    return v.empty() ? 0.0 : m / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double var = 0.0;
    for (double x : v) var += (x - m) * (x - m);
    return v.empty() ? 0.0 : std::sqrt(var / static_cast<double>(v.size()));
}

void check_compatibility(const Checkpoint& ck, const Vocab& vocab, const std::string& path) {
    if (ck.config.vocab_size != vocab.size()) {
        throw CompatibilityError("eval: checkpoint '" + path + "' was trained with vocab size " +
                                 std::to_string(ck.config.vocab_size) +
                                 " but the supplied vocabulary has " +
                                 std::to_string(vocab.size()) + " entries");
    }
    const fs::path meta_path = fs::path(path).parent_path() / "run_meta.json";
    if (fs::exists(meta_path)) {
        std::ifstream f(meta_path);
        json meta;
        try {
            meta = json::parse(f);
        } catch (const json::parse_error&) {
            return;  // unreadable sidecar: size check above is all we can do
        }
        if (meta.contains("vocab_fingerprint") &&
            meta["vocab_fingerprint"].get<uint64_t>() != vocab.fingerprint()) {
            throw CompatibilityError("eval: vocabulary fingerprint mismatch for checkpoint '" +
                                     path + "'");
        }
    }
}

}  // namespace

void cmd_eval(const ExperimentConfig& cfg) {
    if (!cfg.eval || !cfg.data) throw ConfigError("eval: config needs data and eval sections");
    if (cfg.data->test.empty()) throw ConfigError("eval: data.test path missing");
    ensure_out_dir(cfg.out_dir);
    const EvalSection& ev = *cfg.eval;

    const Vocab vocab = Vocab::load(ev.vocab);
    const std::vector<Sentence> test = load_sentences(cfg.data->test, false);
    const ExtractStats extracted = extract_agreement_all(test, vocab);
    std::optional<TagInventory> inventory;
    if (ev.inventory) inventory = TagInventory::load(*ev.inventory);

    // Majority label from the training split when available, else the test
    // split (reported either way).
    Number majority_label = Number::SG;
    std::optional<std::vector<Sentence>> train_sents;
    if (!cfg.data->train.empty() && fs::exists(cfg.data->train)) {
        train_sents = load_sentences(cfg.data->train, false);
        majority_label = baseline_majority(extract_agreement_all(*train_sents, vocab).instances);
    } else if (!extracted.instances.empty()) {
        majority_label = baseline_majority(extracted.instances);
    }

    // Template suites (shared across groups).
    std::vector<ExpandedPreamble> preambles;
    std::vector<std::string> suite_names;
    for (const std::string& path : ev.suites) {
        const auto frames = read_template_file(path);
        const auto expanded = expand_templates(frames);
        for (const auto& p : expanded) {
            if (std::find(suite_names.begin(), suite_names.end(), p.suite) == suite_names.end()) {
                suite_names.push_back(p.suite);
            }
        }
        preambles.insert(preambles.end(), expanded.begin(), expanded.end());
    }

    std::map<std::string, GroupSummary> summaries;  // label -> summary
    std::vector<std::string> group_order;

    for (const EvalGroup& group : ev.groups) {
        group_order.push_back(group.label);
        GroupSummary& summary = summaries[group.label];
        std::vector<Checkpoint> checkpoints;
        for (const std::string& path : group.checkpoints) {
            Checkpoint ck = load_checkpoint(path);
            check_compatibility(ck, vocab, path);
            checkpoints.push_back(std::move(ck));
        }

        for (size_t i = 0; i < checkpoints.size(); ++i) {
            const Checkpoint& ck = checkpoints[i];
            EvalReport report;
            if (ck.config.has(Head::agreement) && !extracted.instances.empty()) {
                report = eval_agreement(ck.params, ck.config, extracted.instances);
                summary.add("overall", "", report.overall.accuracy());
                for (const auto& [bucket, stat] : report.by_attractor) {
                    if (stat.n > 0) {
                        summary.add("attractor",
                                    bucket >= kMaxAttractorBucket
                                        ? std::to_string(kMaxAttractorBucket) + "+"
                                        : std::to_string(bucket),
                                    stat.accuracy());
                    }
                }
            }
            add_baselines(report, test, majority_label);

            if (ck.config.has(Head::lm)) {
                std::vector<std::vector<int>> seqs;
                for (const Sentence& s : test) seqs.push_back(replace_rare(s, vocab));
                report.perplexity =
                    eval_perplexity(ck.params, ck.config, seqs, vocab.eos_id());
                summary.add("perplexity", "", *report.perplexity);

                if (ev.probes) {
                    BucketStat lex, pos, agr;
                    long excluded = 0;
                    for (const Sentence& s : test) {
                        if (!s.has_agreement()) continue;
                        const std::string& form = s.tokens[*s.verb_index];
                        const VerbPair* pair = nullptr;
                        for (const VerbPair& vp : ev.verb_pairs) {
                            if (vp.sg == form || vp.pl == form) {
                                pair = &vp;
                                break;
                            }
                        }
                        if (pair == nullptr) {
                            ++excluded;
                            continue;
                        }
                        const std::vector<int> ids = replace_rare(s, vocab);
                        const std::vector<int> preamble(ids.begin(),
                                                        ids.begin() + *s.verb_index);
                        const auto [correct, incorrect] =
                            resolve_verb_pair(*pair, *s.verb_number, vocab);
                        const auto p = probe_lexical(ck.params, ck.config, preamble, correct,
                                                     incorrect);
                        if (!p) {
                            ++excluded;
                            continue;
                        }
                        lex.tally(*p >= 0.5);
                        pos.tally(probe_pos(ck.params, ck.config, preamble, *s.verb_number,
                                            vocab) >= 0.5);
                        if (ck.config.has(Head::agreement)) {
                            const ForwardTrace tr = encode(ck.params, ck.config, preamble);
                            const Number pred =
                                head_agreement(ck.params, tr.h.back()) >= 0.5 ? Number::PL
                                                                              : Number::SG;
                            agr.tally(pred == *s.verb_number);
                        }
                    }
                    report.probe_accuracy_lexical = lex.accuracy();
                    report.probe_accuracy_pos = pos.accuracy();
                    report.probe_excluded = excluded;
                    summary.add("probe", "lexical", lex.accuracy());
                    summary.add("probe", "pos", pos.accuracy());
                    if (agr.n > 0) summary.add("probe", "agreement_head", agr.accuracy());
                }
            }

            if (ck.config.has(Head::supertag) && inventory) {
                const double acc = eval_supertag(ck.params, ck.config, test, *inventory, vocab);
                summary.add("supertag", "", acc);
                if (train_sents) {
                    report.baselines["supertag_majority"] =
                        baseline_supertag_majority(*train_sents, test, *inventory, vocab);
                }
            }

            if (!preambles.empty() && ck.config.has(Head::agreement)) {
                const auto cond = eval_psycholinguistic({ck}, preambles, vocab);
                for (const auto& [key, stat] : cond) {
                    report.per_condition[key].n = stat.n_items;
                    report.per_condition[key].correct =
                        static_cast<long>(std::llround(stat.mean * stat.n_items));
                    summary.add("condition", key, stat.mean);
                }
            }

            const std::string stem = "report_" + group.label + "_" + std::to_string(i);
            write_report_json((fs::path(cfg.out_dir) / (stem + ".json")).string(), report);
            write_report_csv((fs::path(cfg.out_dir) / (stem + ".csv")).string(), report);
        }
    }

    // Cross-seed summary CSV: exactly the numbers the plots show.
    {
        std::ofstream f(fs::path(cfg.out_dir) / "eval_summary.csv", std::ios::binary);
        if (!f) throw DataError("eval: cannot write eval_summary.csv");
        f << "group,metric,key,mean,std,n_runs\n";
        for (const std::string& label : group_order) {
            for (const auto& [metric, keys] : summaries[label].values) {
                for (const auto& [key, vals] : keys) {
                    f << label << ',' << metric << ',' << key << ',' << format_g17(mean_of(vals))
                      << ',' << format_g17(std_of(vals)) << ',' << vals.size() << '\n';
                }
            }
        }
    }

    // Accuracy as a function of attractor count.
    {
        std::vector<std::string> categories;
        for (int b = 0; b <= kMaxAttractorBucket; ++b) {
            categories.push_back(b == kMaxAttractorBucket ? std::to_string(b) + "+"
                                                          : std::to_string(b));
        }
        std::vector<svg::Series> series;
        for (const std::string& label : group_order) {
            const auto& attr = summaries[label].values["attractor"];
            if (attr.empty()) continue;
            svg::Series s;
            s.label = label;
            for (const std::string& cat : categories) {
                const auto it = attr.find(cat);
                s.values.push_back(it == attr.end() ? 0.0 : mean_of(it->second));
                s.errors.push_back(it == attr.end() ? 0.0 : std_of(it->second));
            }
            series.push_back(std::move(s));
        }
        if (!series.empty()) {
            svg::write_file((fs::path(cfg.out_dir) / "attractor_accuracy.svg").string(),
                            svg::line_chart("agreement accuracy by attractor count", categories,
                                            series));
        }
    }

    // One grouped-bar chart per template suite.
    for (const std::string& suite : suite_names) {
        const std::vector<std::string> conditions = {"SS", "SP", "PS", "PP"};
        std::vector<svg::Series> series;
        for (const std::string& label : group_order) {
            const auto& cond = summaries[label].values["condition"];
            svg::Series s;
            s.label = label;
            bool any = false;
            for (const std::string& c : conditions) {
                const auto it = cond.find(suite + "/" + c);
                s.values.push_back(it == cond.end() ? 0.0 : mean_of(it->second));
                s.errors.push_back(it == cond.end() ? 0.0 : std_of(it->second));
                any = any || it != cond.end();
            }
            if (any) series.push_back(std::move(s));
        }
        if (!series.empty()) {
            svg::write_file((fs::path(cfg.out_dir) / ("suite_" + suite + ".svg")).string(),
                            svg::bar_chart("accuracy: " + suite, conditions, series));
        }
    }

    // Probe comparison.
    {
        const std::vector<std::string> kinds = {"lexical", "pos", "agreement_head"};
        std::vector<svg::Series> series;
        for (const std::string& label : group_order) {
            const auto& probe = summaries[label].values["probe"];
            if (probe.empty()) continue;
            svg::Series s;
            s.label = label;
            for (const std::string& k : kinds) {
                const auto it = probe.find(k);
                s.values.push_back(it == probe.end() ? 0.0 : mean_of(it->second));
                s.errors.push_back(it == probe.end() ? 0.0 : std_of(it->second));
            }
            series.push_back(std::move(s));
        }
        if (!series.empty()) {
            svg::write_file((fs::path(cfg.out_dir) / "probes.svg").string(),
                            svg::bar_chart("grammaticality probes vs agreement head", kinds,
                                           series));
        }
    }
}

// --------------------------------------------------------------- trace --

void cmd_trace(const ExperimentConfig& cfg) {
    if (!cfg.trace) throw ConfigError("trace: config has no trace section");
    ensure_out_dir(cfg.out_dir);
    const TraceSection& tr = *cfg.trace;

    const Checkpoint ck = load_checkpoint(tr.checkpoint);
    if (!ck.config.has(Head::agreement)) {
        throw ConfigError("trace: checkpoint has no agreement head");
    }
    const Vocab vocab = Vocab::load(tr.vocab);
    check_compatibility(ck, vocab, tr.checkpoint);
    for (int u : tr.units) {
        if (u < 0 || u >= ck.config.d) {
            throw RangeError("trace: unit index " + std::to_string(u) + " outside [0, " +
                             std::to_string(ck.config.d) + ")");
        }
    }

    const auto frames = read_template_file(tr.template_file);
    if (tr.frame_index < 0 || tr.frame_index >= static_cast<int>(frames.size())) {
        throw RangeError("trace: frame_index " + std::to_string(tr.frame_index) +
                         " outside [0, " + std::to_string(frames.size()) + ")");
    }
    const auto preambles = expand_templates({frames[tr.frame_index]});

    struct Traced {
        const ExpandedPreamble* preamble;
        std::vector<double> p_plural;
        std::vector<Vector> h;
    };
    std::vector<Traced> traced;
    for (const ExpandedPreamble& p : preambles) {
        const std::vector<int> ids = preamble_token_ids(p, vocab);
        const ForwardTrace ft = encode(ck.params, ck.config, ids);
        Traced t;
        t.preamble = &p;
        for (int pos = 0; pos < ft.length(); ++pos) {
            t.p_plural.push_back(head_agreement(ck.params, ft.h[pos]));
            t.h.push_back(ft.h[pos]);
        }
        traced.push_back(std::move(t));
    }

    // CSV: one row per (condition, position).
    {
        std::ofstream f(fs::path(cfg.out_dir) / "trace.csv", std::ios::binary);
        if (!f) throw DataError("trace: cannot write trace.csv");
        f << "suite,condition,position,token,ground_truth_plural,p_plural";
        for (int u : tr.units) f << ",unit_" << u;
        f << '\n';
        for (const Traced& t : traced) {
            for (size_t pos = 0; pos < t.p_plural.size(); ++pos) {
                f << t.preamble->suite << ',' << t.preamble->condition << ',' << pos << ','
                  << t.preamble->tokens[pos] << ','
                  << (t.preamble->subject_number == Number::PL ? 1 : 0) << ','
                  << format_g17(t.p_plural[pos]);
                for (int u : tr.units) f << ',' << format_g17(t.h[pos](u));
                f << '\n';
            }
        }
    }

    // p(plural) trajectories for the four conditions.
    {
        std::vector<std::string> x_labels;
        for (size_t pos = 0; pos < traced.front().p_plural.size(); ++pos) {
            x_labels.push_back(std::to_string(pos) + ":" + traced.front().preamble->tokens[pos]);
        }
        std::vector<svg::Series> series;
        for (const Traced& t : traced) {
            series.push_back({t.preamble->condition + " (gt " +
                                  (t.preamble->subject_number == Number::PL ? "PL" : "SG") + ")",
                              t.p_plural,
                              {}});
        }
        svg::write_file(
            (fs::path(cfg.out_dir) / "trace_p_plural.svg").string(),
            svg::line_chart("p(plural) after each word", x_labels, series, 0.0, 1.0,
                            {{"ground truth SG", 0.0}, {"ground truth PL", 1.0}}));
    }

    // Per-unit activation curves.
    for (int u : tr.units) {
        std::vector<std::string> x_labels;
        for (size_t pos = 0; pos < traced.front().p_plural.size(); ++pos) {
            x_labels.push_back(std::to_string(pos) + ":" + traced.front().preamble->tokens[pos]);
        }
        std::vector<svg::Series> series;
        for (const Traced& t : traced) {
            svg::Series s;
            s.label = t.preamble->condition;
            for (const Vector& h : t.h) s.values.push_back(h(u));
            series.push_back(std::move(s));
        }
        svg::write_file((fs::path(cfg.out_dir) / ("trace_unit_" + std::to_string(u) + ".svg"))
                            .string(),
                        svg::line_chart("unit " + std::to_string(u) + " activation", x_labels,
                                        series, 0.0, 0.0));
    }
}

}  // namespace agrlab
