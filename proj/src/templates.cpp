#include "agrlab/templates.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "agrlab/eval.hpp"

namespace agrlab {

using nlohmann::json;

namespace {

const std::set<std::string>& known_suites() {
    static const std::set<std::string> s = {"prepositional", "relative", "embedded_verb",
                                            "main_clause_verb"};
    return s;
}

// POS hints for template filler words that may be out of vocabulary.
// Slot words get number-aware noun tags; everything else defaults to NN.
const std::string& builtin_pos(const std::string& word) {
    static const std::unordered_map<std::string, std::string> map = {
        {"the", "DT"},       {"a", "DT"},         {"that", "WDT"},    {"from", "IN"},
        {"near", "IN"},      {"behind", "IN"},    {"beside", "IN"},   {"above", "IN"},
        {"below", "IN"},     {"of", "IN"},        {"with", "IN"},     {"by", "IN"},
        {"and", "CC"},       {"best", "JJS"},     {"popular", "JJ"},  {"old", "JJ"},
        {"small", "JJ"},     {"bright", "JJ"},    {"noisy", "JJ"},    {"quiet", "JJ"},
        {"famous", "JJ"},    {"heavy", "JJ"},     {"narrow", "JJ"},   {"gentle", "JJ"},
        {"promoted", "VBD"}, {"criticized", "VBD"}, {"admired", "VBD"}, {"chose", "VBD"},
        {"followed", "VBD"}, {"praised", "VBD"},  {"trusted", "VBD"}, {"noticed", "VBD"},
        {"hired", "VBD"},    {"described", "VBD"}, {"liked", "VBD"},
    };
    static const std::string nn = "NN";
    const auto it = map.find(word);
    return it == map.end() ? nn : it->second;
}

std::vector<std::string> split_ws(const std::string& text) {
    std::istringstream in(text);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace

std::vector<TemplateFrame> read_template_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("read_template_file: cannot open '" + path + "'");
    std::vector<TemplateFrame> frames;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("read_template_file: line " + std::to_string(line_no) + ": " +
                            e.what());
        }
        static const std::set<std::string> allowed = {
            "subject_sg", "subject_pl", "attractor_sg", "attractor_pl",
            "modifier_type", "frame_text", "note"};
        for (const auto& [key, _] : j.items()) {
            if (!allowed.count(key)) {
                throw DataError("read_template_file: line " + std::to_string(line_no) +
                                ": unknown field '" + key + "'");
            }
        }
        TemplateFrame frame;
        try {
            frame.subject_sg = j.at("subject_sg").get<std::string>();
            frame.subject_pl = j.at("subject_pl").get<std::string>();
            frame.attractor_sg = j.at("attractor_sg").get<std::string>();
            frame.attractor_pl = j.at("attractor_pl").get<std::string>();
            frame.modifier_type = j.at("modifier_type").get<std::string>();
            frame.frame_text = j.at("frame_text").get<std::string>();
            if (j.contains("note")) frame.note = j["note"].get<std::string>();
        } catch (const json::exception& e) {
            throw DataError("read_template_file: line " + std::to_string(line_no) + ": " +
                            e.what());
        }
        if (!known_suites().count(frame.modifier_type)) {
            throw DataError("read_template_file: line " + std::to_string(line_no) +
                            ": unknown modifier_type '" + frame.modifier_type + "'");
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

std::vector<ExpandedPreamble> expand_templates(const std::vector<TemplateFrame>& frames) {
    std::vector<ExpandedPreamble> out;
    int index = 0;
    for (const TemplateFrame& frame : frames) {
        const std::vector<std::string> words = split_ws(frame.frame_text);
        bool has_subject = false, has_attractor = false;
        for (const std::string& w : words) {
            if (w == "{subject}") has_subject = true;
            if (w == "{attractor}" || w.rfind("{attr_verb:", 0) == 0) has_attractor = true;
        }
        if (!has_subject || !has_attractor) {
            throw TemplateError("expand_templates: frame '" + frame.frame_text +
                                "' is missing a number-markable slot");
        }

        for (const Number subj : {Number::SG, Number::PL}) {
            for (const Number attr : {Number::SG, Number::PL}) {
                ExpandedPreamble p;
                p.suite = frame.modifier_type;
                p.condition = std::string(subj == Number::SG ? "S" : "P") +
                              (attr == Number::SG ? "S" : "P");
                p.frame_index = index;
                p.subject_number = subj;
                p.attractor_number = attr;
                for (const std::string& w : words) {
                    if (w == "{subject}") {
                        p.tokens.push_back(subj == Number::SG ? frame.subject_sg
                                                              : frame.subject_pl);
                        p.pos.push_back(subj == Number::SG ? "NN" : "NNS");
                    } else if (w == "{attractor}") {
                        p.tokens.push_back(attr == Number::SG ? frame.attractor_sg
                                                              : frame.attractor_pl);
                        p.pos.push_back(attr == Number::SG ? "NN" : "NNS");
                    } else if (w.rfind("{attr_verb:", 0) == 0) {
                        const auto slash = w.find('/');
                        const auto close = w.find('}');
                        if (slash == std::string::npos || close == std::string::npos ||
                            slash > close) {
                            throw TemplateError("expand_templates: malformed slot '" + w + "'");
                        }
                        const std::string sg_form = w.substr(11, slash - 11);
                        const std::string pl_form = w.substr(slash + 1, close - slash - 1);
                        p.tokens.push_back(attr == Number::SG ? sg_form : pl_form);
                        p.pos.push_back(attr == Number::SG ? "VBZ" : "VBP");
                    } else if (w == "which" || w == "who" || w == "whom") {
                        // Materials are streamlined to a single relativizer.
                        p.tokens.push_back("that");
                        p.pos.push_back("WDT");
                    } else {
                        p.tokens.push_back(w);
                        p.pos.push_back(builtin_pos(w));
                    }
                }
                out.push_back(std::move(p));
            }
        }
        ++index;
    }
    return out;
}

std::vector<int> preamble_token_ids(const ExpandedPreamble& preamble, const Vocab& vocab) {
    std::vector<int> ids;
    ids.reserve(preamble.tokens.size());
    for (size_t i = 0; i < preamble.tokens.size(); ++i) {
        ids.push_back(vocab.resolve(preamble.tokens[i], preamble.pos[i]));
    }
    return ids;
}

std::map<std::string, ConditionStat> eval_psycholinguistic(
    const std::vector<Checkpoint>& checkpoints, const std::vector<ExpandedPreamble>& preambles,
    const Vocab& vocab) {
    if (checkpoints.empty()) throw ConfigError("eval_psycholinguistic: no checkpoints");

    // Accuracy per key for each checkpoint, then mean / population std.
    std::map<std::string, std::vector<double>> per_run;
    std::map<std::string, long> items;
    for (const Checkpoint& ck : checkpoints) {
        std::map<std::string, BucketStat> stats;
        for (const ExpandedPreamble& p : preambles) {
            const std::vector<int> ids = preamble_token_ids(p, vocab);
            const ForwardTrace tr = encode(ck.params, ck.config, ids);
            const double prob = head_agreement(ck.params, tr.h.back());
            const Number pred = prob >= 0.5 ? Number::PL : Number::SG;
            stats[p.suite + "/" + p.condition].tally(pred == p.subject_number);
        }
        for (const auto& [key, stat] : stats) {
            per_run[key].push_back(stat.accuracy());
            items[key] = stat.n;
        }
    }

    std::map<std::string, ConditionStat> out;
    for (const auto& [key, accs] : per_run) {
        ConditionStat cs;
        cs.n_items = items[key];
        for (double a : accs) cs.mean += a;
        cs.mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - cs.mean) * (a - cs.mean);
        cs.stddev = std::sqrt(var / static_cast<double>(accs.size()));
        out[key] = cs;
    }
    return out;
}

}  // namespace agrlab
