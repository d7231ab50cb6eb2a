#include "agrlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "agrlab/checkpoint.hpp"

namespace agrlab {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json bucket_json(const BucketStat& b) {
    ordered_json j;
    j["n"] = b.n;
    j["correct"] = b.correct;
    j["accuracy"] = b.accuracy();
    return j;
}

std::string attractor_key(int bucket) {
    return bucket >= kMaxAttractorBucket ? std::to_string(kMaxAttractorBucket) + "+"
                                         : std::to_string(bucket);
}

}  // namespace

void write_report_json(const std::string& path, const EvalReport& report) {
    ordered_json j;
    j["overall"] = bucket_json(report.overall);
    ordered_json by_attr;
    for (const auto& [bucket, stat] : report.by_attractor) {
        by_attr[attractor_key(bucket)] = bucket_json(stat);
    }
    j["by_attractor"] = std::move(by_attr);
    j["mixed"] = bucket_json(report.mixed);
    j["baselines"] = report.baselines;
    j["last_noun_abstained"] = report.last_noun_abstained;
    if (report.perplexity) j["perplexity"] = *report.perplexity;
    if (report.probe_accuracy_lexical) j["probe_accuracy_lexical"] = *report.probe_accuracy_lexical;
    if (report.probe_accuracy_pos) j["probe_accuracy_pos"] = *report.probe_accuracy_pos;
    j["probe_excluded"] = report.probe_excluded;
    ordered_json cond;
    for (const auto& [key, stat] : report.per_condition) cond[key] = bucket_json(stat);
    j["per_condition"] = std::move(cond);

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_report_json: cannot open '" + path + "'");
    f << j.dump(1) << '\n';
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_report_csv: cannot open '" + path + "'");
    f << "section,key,n,value\n";
    f << "overall,," << report.overall.n << ',' << format_g17(report.overall.accuracy()) << '\n';
    for (const auto& [bucket, stat] : report.by_attractor) {
        f << "attractor," << attractor_key(bucket) << ',' << stat.n << ','
          << format_g17(stat.accuracy()) << '\n';
    }
    f << "mixed,," << report.mixed.n << ',' << format_g17(report.mixed.accuracy()) << '\n';
    for (const auto& [name, acc] : report.baselines) {
        f << "baseline," << name << ",," << format_g17(acc) << '\n';
    }
    f << "last_noun_abstained,," << report.last_noun_abstained << ",\n";
    if (report.perplexity) f << "perplexity,,," << format_g17(*report.perplexity) << '\n';
    if (report.probe_accuracy_lexical) {
        f << "probe,lexical,," << format_g17(*report.probe_accuracy_lexical) << '\n';
    }
    if (report.probe_accuracy_pos) {
        f << "probe,pos,," << format_g17(*report.probe_accuracy_pos) << '\n';
    }
    if (report.probe_excluded > 0) f << "probe,excluded," << report.probe_excluded << ",\n";
    for (const auto& [key, stat] : report.per_condition) {
        f << "condition," << key << ',' << stat.n << ',' << format_g17(stat.accuracy()) << '\n';
    }
    if (!f.good()) throw DataError("write_report_csv: write to '" + path + "' failed");
}

std::optional<Number> baseline_last_noun(const Sentence& sentence) {
    if (!sentence.verb_index) {
        throw AnnotationError("baseline_last_noun: sentence lacks a verb index");
    }
    for (int i = *sentence.verb_index - 1; i >= 0; --i) {
        if (const auto num = noun_number(sentence.pos[i])) return num;
    }
    return std::nullopt;
}

Number baseline_majority(const std::vector<AgreementInstance>& train) {
    if (train.empty()) throw DataError("baseline_majority: empty training set");
    long plural = 0;
    for (const auto& inst : train) {
        if (inst.label == Number::PL) ++plural;
    }
    const long singular = static_cast<long>(train.size()) - plural;
    return plural > singular ? Number::PL : Number::SG;
}

EvalReport eval_agreement(const ModelParams& params, const ModelConfig& cfg,
                          const std::vector<AgreementInstance>& instances) {
    EvalReport report;
    for (int b = 0; b <= kMaxAttractorBucket; ++b) report.by_attractor[b];
    for (const AgreementInstance& inst : instances) {
        const ForwardTrace tr = encode(params, cfg, inst.preamble);
        const double p = head_agreement(params, tr.h.back());
        const Number pred = p >= 0.5 ? Number::PL : Number::SG;
        const bool ok = pred == inst.label;
        report.overall.tally(ok);
        if (inst.attractor_count) {
            report.by_attractor[std::min(*inst.attractor_count, kMaxAttractorBucket)].tally(ok);
        } else {
            report.mixed.tally(ok);
        }
    }
    return report;
}

void add_baselines(EvalReport& report, const std::vector<Sentence>& test, Number majority_label) {
    BucketStat last_noun, majority;
    long abstained = 0;
    for (const Sentence& s : test) {
        if (!s.has_agreement()) continue;
        majority.tally(majority_label == *s.verb_number);
        if (const auto pred = baseline_last_noun(s)) {
            last_noun.tally(*pred == *s.verb_number);
        } else {
            ++abstained;
        }
    }
    report.baselines["last_noun"] = last_noun.accuracy();
    report.baselines["majority"] = majority.accuracy();
    report.last_noun_abstained = abstained;
}

double eval_supertag(const ModelParams& params, const ModelConfig& cfg,
                     const std::vector<Sentence>& sentences, const TagInventory& inventory,
                     const Vocab& vocab) {
    if (inventory.size() != cfg.n_supertags) {
        throw ConfigError("eval_supertag: inventory size " + std::to_string(inventory.size()) +
                          " does not match model n_supertags " + std::to_string(cfg.n_supertags));
    }
    BucketStat tokens;
    for (const Sentence& s : sentences) {
        const std::vector<int> ids = replace_rare(s, vocab);
        const std::vector<int> gold = inventory.tag_ids(s);
        const ForwardTrace tr = encode(params, cfg, ids);
        for (size_t t = 0; t < ids.size(); ++t) {
            const Vector logits = head_logits(params, cfg, tr.h[t], Head::supertag);
            Eigen::Index argmax;
            logits.maxCoeff(&argmax);
            tokens.tally(static_cast<int>(argmax) == gold[t]);
        }
    }
    return tokens.accuracy();
}

double baseline_supertag_majority(const std::vector<Sentence>& train,
                                  const std::vector<Sentence>& test,
                                  const TagInventory& inventory, const Vocab& vocab) {
    // word id -> tag id -> count, plus a global tag histogram.
    std::unordered_map<int, std::unordered_map<int, long>> per_word;
    std::vector<long> global(inventory.size(), 0);
    for (const Sentence& s : train) {
        const std::vector<int> ids = replace_rare(s, vocab);
        const std::vector<int> tags = inventory.tag_ids(s);
        for (size_t t = 0; t < ids.size(); ++t) {
            ++per_word[ids[t]][tags[t]];
            ++global[tags[t]];
        }
    }
    auto best = [](const std::unordered_map<int, long>& counts) {
        int best_tag = 0;
        long best_count = -1;
        for (const auto& [tag, count] : counts) {
            if (count > best_count || (count == best_count && tag < best_tag)) {
                best_tag = tag;
                best_count = count;
            }
        }
        return best_tag;
    };
    const int global_best =
        static_cast<int>(std::max_element(global.begin(), global.end()) - global.begin());

    BucketStat tokens;
    for (const Sentence& s : test) {
        const std::vector<int> ids = replace_rare(s, vocab);
        const std::vector<int> gold = inventory.tag_ids(s);
        for (size_t t = 0; t < ids.size(); ++t) {
            const auto it = per_word.find(ids[t]);
            const int pred = it == per_word.end() ? global_best : best(it->second);
            tokens.tally(pred == gold[t]);
        }
    }
    return tokens.accuracy();
}

double eval_perplexity(const ModelParams& params, const ModelConfig& cfg,
                       const std::vector<std::vector<int>>& token_seqs, int eos_id) {
    constexpr double kLog2e = 1.4426950408889634;
    double bits = 0.0;
    long total = 0;
    for (const std::vector<int>& seq : token_seqs) {
        if (seq.empty()) continue;
        const ForwardTrace tr = encode(params, cfg, seq);
        for (size_t t = 0; t < seq.size(); ++t) {
            const int target = t + 1 < seq.size() ? seq[t + 1] : eos_id;
            const Vector ls = log_softmax(Vector(head_logits(params, cfg, tr.h[t], Head::lm)));
            bits -= ls(target) * kLog2e;
            ++total;
        }
    }
    if (total == 0) throw DataError("eval_perplexity: no tokens");
    return std::exp2(bits / static_cast<double>(total));
}

std::optional<double> probe_lexical(const ModelParams& params, const ModelConfig& cfg,
                                    std::span<const int> preamble, int correct_id,
                                    int incorrect_id) {
    if (correct_id == incorrect_id) return std::nullopt;
    const ForwardTrace tr = encode(params, cfg, preamble);
    const Vector ls = log_softmax(Vector(head_logits(params, cfg, tr.h.back(), Head::lm)));
    // Ratio of the two probabilities, computed from log space.
    const double a = ls(correct_id);
    const double b = ls(incorrect_id);
    return 1.0 / (1.0 + std::exp(b - a));
}

double probe_pos(const ModelParams& params, const ModelConfig& cfg, std::span<const int> preamble,
                 Number subject_number, const Vocab& vocab) {
    const int vbp = vocab.pos_fallback_id("VBP");
    const int vbz = vocab.pos_fallback_id("VBZ");
    const int correct = subject_number == Number::PL ? vbp : vbz;
    const int incorrect = subject_number == Number::PL ? vbz : vbp;
    return *probe_lexical(params, cfg, preamble, correct, incorrect);
}

std::pair<int, int> resolve_verb_pair(const VerbPair& pair, Number label, const Vocab& vocab) {
    const int sg_id = vocab.resolve(pair.sg, "VBZ");
    const int pl_id = vocab.resolve(pair.pl, "VBP");
    return label == Number::SG ? std::make_pair(sg_id, pl_id) : std::make_pair(pl_id, sg_id);
}

}  // namespace agrlab
