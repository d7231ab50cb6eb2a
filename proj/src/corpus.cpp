#include "agrlab/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace agrlab {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string number_name(Number n) { return n == Number::SG ? "SG" : "PL"; }

Number number_from_name(const std::string& s) {
    if (s == "SG") return Number::SG;
    if (s == "PL") return Number::PL;
    throw DataError("invalid number '" + s + "' (expected SG or PL)");
}

const std::vector<std::string>& penn_tags() {
    static const std::vector<std::string> tags = {
        "CC",  "CD",  "DT",   "EX",   "FW", "IN",  "JJ",  "JJR", "JJS", "LS",  "MD",  "NN",
        "NNP", "NNPS", "NNS", "PDT",  "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",  "SYM",
        "TO",  "UH",  "VB",   "VBD",  "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",  "WP$", "WRB",
        ".",   ",",   ":",    "(",    ")",   "``",  "''",  "#",   "$"};
    return tags;
}

bool is_penn_tag(const std::string& tag) {
    static const std::set<std::string> all(penn_tags().begin(), penn_tags().end());
    return all.count(tag) != 0;
}

bool is_noun_tag(const std::string& tag) {
    return tag == "NN" || tag == "NNS" || tag == "NNP" || tag == "NNPS";
}

std::optional<Number> noun_number(const std::string& tag) {
    if (tag == "NN" || tag == "NNP") return Number::SG;
    if (tag == "NNS" || tag == "NNPS") return Number::PL;
    return std::nullopt;
}

void Sentence::validate() const {
    if (tokens.empty()) throw DataError("sentence has no tokens");
    if (pos.size() != tokens.size()) {
        throw DataError("tokens/pos length mismatch: " + std::to_string(tokens.size()) + " vs " +
                        std::to_string(pos.size()));
    }
    if (supertags && supertags->size() != tokens.size()) {
        throw DataError("tokens/supertags length mismatch: " + std::to_string(tokens.size()) +
                        " vs " + std::to_string(supertags->size()));
    }
    const int n = static_cast<int>(tokens.size());
    const bool any = subject_index || verb_index || verb_number;
    if (any) {
        if (!(subject_index && verb_index && verb_number)) {
            throw DataError("partial agreement annotation (need subject_index, verb_index and "
                            "verb_number together)");
        }
        if (*subject_index < 0 || *subject_index >= n || *verb_index < 0 || *verb_index >= n) {
            throw DataError("subject/verb index out of range");
        }
        if (*subject_index >= *verb_index) {
            throw DataError("subject_index must precede verb_index");
        }
        const std::string& vtag = pos[*verb_index];
        if (vtag != "VBZ" && vtag != "VBP") {
            throw DataError("verb at index " + std::to_string(*verb_index) + " tagged '" + vtag +
                            "' (expected VBZ or VBP)");
        }
        const Number tag_number = vtag == "VBZ" ? Number::SG : Number::PL;
        if (tag_number != *verb_number) {
            throw DataError("verb_number " + number_name(*verb_number) +
                            " inconsistent with verb tag " + vtag);
        }
    }
}

// ---------------------------------------------------------------- JSONL --

namespace {

Sentence sentence_from_json(const json& j) {
    if (!j.is_object()) throw DataError("expected a JSON object");
    static const std::set<std::string> allowed = {"tokens",        "pos",        "supertags",
                                                  "subject_index", "verb_index", "verb_number"};
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) throw DataError("unknown field '" + key + "'");
    }
    Sentence s;
    try {
        s.tokens = j.at("tokens").get<std::vector<std::string>>();
        s.pos = j.at("pos").get<std::vector<std::string>>();
        if (j.contains("supertags") && !j["supertags"].is_null()) {
            s.supertags = j["supertags"].get<std::vector<std::string>>();
        }
        if (j.contains("subject_index") && !j["subject_index"].is_null()) {
            s.subject_index = j["subject_index"].get<int>();
        }
        if (j.contains("verb_index") && !j["verb_index"].is_null()) {
            s.verb_index = j["verb_index"].get<int>();
        }
        if (j.contains("verb_number") && !j["verb_number"].is_null()) {
            s.verb_number = number_from_name(j["verb_number"].get<std::string>());
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("bad field type: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace

ReadResult read_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("read_jsonl: cannot open '" + path + "'");
    ReadResult result;
    std::string line;
    long line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            result.sentences.push_back(sentence_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            result.diagnostics.push_back("line " + std::to_string(line_no) +
                                         ": parse error: " + e.what());
        } catch (const DataError& e) {
            result.diagnostics.push_back("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return result;
}

void write_jsonl(const std::string& path, const std::vector<Sentence>& sentences) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("write_jsonl: cannot open '" + path + "' for writing");
    for (const Sentence& s : sentences) {
        ordered_json j;
        j["tokens"] = s.tokens;
        j["pos"] = s.pos;
        j["supertags"] = s.supertags ? json(*s.supertags) : json(nullptr);
        j["subject_index"] = s.subject_index ? json(*s.subject_index) : json(nullptr);
        j["verb_index"] = s.verb_index ? json(*s.verb_index) : json(nullptr);
        j["verb_number"] = s.verb_number ? json(number_name(*s.verb_number)) : json(nullptr);
        f << j.dump() << '\n';
    }
    if (!f.good()) throw DataError("write_jsonl: write to '" + path + "' failed");
}

// ---------------------------------------------------------------- Vocab --

std::string VocabRule::describe() const {
    return (kind == Kind::top_k ? "top_k(" : "min_count(") + std::to_string(value) + ")";
}

Vocab Vocab::build(const std::vector<Sentence>& sentences, VocabRule rule) {
    if (sentences.empty()) throw DataError("Vocab::build: empty corpus");
    std::map<std::string, long> counts;
    for (const Sentence& s : sentences) {
        for (const std::string& w : s.tokens) ++counts[w];
    }

    // Sort by descending frequency, ties broken lexicographically; the rule
    // then keeps a prefix (top_k) or a count threshold (min_count).
    std::vector<std::pair<std::string, long>> by_freq(counts.begin(), counts.end());
    std::sort(by_freq.begin(), by_freq.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocab v;
    v.rule_ = rule;
    auto add = [&v](const std::string& w) {
        if (v.word_to_id_.count(w)) return;
        v.word_to_id_[w] = static_cast<int>(v.id_to_word_.size());
        v.id_to_word_.push_back(w);
    };
    add("<pad>");
    add("<eos>");
    v.pad_id_ = 0;
    v.eos_id_ = 1;
    for (const std::string& tag : penn_tags()) add(tag);

    if (rule.kind == VocabRule::Kind::top_k) {
        const size_t k = rule.value < 0 ? 0 : static_cast<size_t>(rule.value);
        for (size_t i = 0; i < by_freq.size() && i < k; ++i) add(by_freq[i].first);
    } else {
        for (const auto& [word, count] : by_freq) {
            if (count >= rule.value) add(word);
        }
    }
    return v;
}

std::optional<int> Vocab::word_id(const std::string& word) const {
    const auto it = word_to_id_.find(word);
    if (it == word_to_id_.end()) return std::nullopt;
    return it->second;
}

int Vocab::pos_fallback_id(const std::string& tag) const {
    if (!is_penn_tag(tag)) throw AnnotationError("unknown POS tag '" + tag + "'");
    return word_to_id_.at(tag);
}

int Vocab::resolve(const std::string& word, const std::string& pos_tag) const {
    if (const auto id = word_id(word)) return *id;
    return pos_fallback_id(pos_tag);
}

uint64_t Vocab::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](const std::string& s) {
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ull;
        }
        h ^= 0xff;
        h *= 0x100000001b3ull;
    };
    for (const std::string& w : id_to_word_) mix(w);
    mix(rule_.describe());
    return h;
}

void Vocab::save(const std::string& path) const {
    ordered_json j;
    j["rule"] = rule_.describe();
    j["pad_id"] = pad_id_;
    j["eos_id"] = eos_id_;
    j["fingerprint"] = fingerprint();
    j["words"] = id_to_word_;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("Vocab::save: cannot open '" + path + "'");
    f << j.dump(1) << '\n';
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("Vocab::load: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw DataError("Vocab::load: malformed '" + path + "': " + e.what());
    }
    Vocab v;
    try {
        const std::string rule = j.at("rule").get<std::string>();
        const auto open = rule.find('(');
        v.rule_.kind =
            rule.substr(0, open) == "top_k" ? VocabRule::Kind::top_k : VocabRule::Kind::min_count;
        v.rule_.value = std::stoi(rule.substr(open + 1));
        v.pad_id_ = j.at("pad_id").get<int>();
        v.eos_id_ = j.at("eos_id").get<int>();
        v.id_to_word_ = j.at("words").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("Vocab::load: bad field: ") + e.what());
    }
    for (size_t i = 0; i < v.id_to_word_.size(); ++i) {
        v.word_to_id_[v.id_to_word_[i]] = static_cast<int>(i);
    }
    if (j.contains("fingerprint") && j["fingerprint"].get<uint64_t>() != v.fingerprint()) {
        throw DataError("Vocab::load: fingerprint mismatch in '" + path + "'");
    }
    return v;
}

Vocab build_vocab(const std::vector<Sentence>& sentences, VocabRule rule) {
    return Vocab::build(sentences, rule);
}

// ------------------------------------------------------------ agreement --

std::vector<int> replace_rare(const Sentence& sentence, const Vocab& vocab) {
    if (sentence.pos.size() != sentence.tokens.size()) {
        throw AnnotationError("replace_rare: sentence lacks a POS tag per token");
    }
    std::vector<int> ids;
    ids.reserve(sentence.tokens.size());
    for (size_t i = 0; i < sentence.tokens.size(); ++i) {
        ids.push_back(vocab.resolve(sentence.tokens[i], sentence.pos[i]));
    }
    return ids;
}

std::optional<int> count_attractors(const Sentence& sentence) {
    if (!sentence.has_agreement()) {
        throw AnnotationError("count_attractors: sentence lacks agreement annotation");
    }
    const Number subject = *sentence.verb_number;
    int count = 0;
    bool all_opposite = true;
    for (int i = *sentence.subject_index + 1; i < *sentence.verb_index; ++i) {
        const auto num = noun_number(sentence.pos[i]);
        if (!num) continue;
        ++count;
        if (*num != opposite(subject)) all_opposite = false;
    }
    if (count == 0) return 0;
    if (!all_opposite) return std::nullopt;
    return count;
}

std::optional<AgreementInstance> extract_agreement(const Sentence& sentence, const Vocab& vocab) {
    if (!sentence.has_agreement()) return std::nullopt;
    AgreementInstance inst;
    const std::vector<int> ids = replace_rare(sentence, vocab);
    inst.preamble.assign(ids.begin(), ids.begin() + *sentence.verb_index);
    inst.label = *sentence.verb_number;
    inst.attractor_count = count_attractors(sentence);
    for (int i = *sentence.subject_index + 1; i < *sentence.verb_index; ++i) {
        if (is_noun_tag(sentence.pos[i])) {
            inst.has_intervening_noun = true;
            break;
        }
    }
    return inst;
}

ExtractStats extract_agreement_all(const std::vector<Sentence>& sentences, const Vocab& vocab) {
    ExtractStats stats;
    for (const Sentence& s : sentences) {
        if (auto inst = extract_agreement(s, vocab)) {
            stats.instances.push_back(std::move(*inst));
        } else {
            ++stats.skipped;
        }
    }
    return stats;
}

// ------------------------------------------------------------ supertags --

TagInventory TagInventory::from_counts(const std::map<std::string, long>& counts, long total,
                                       int min_count, bool from_pos) {
    TagInventory inv;
    inv.min_count_ = min_count;
    inv.from_pos_ = from_pos;
    inv.id_to_tag_.push_back("<dummy>");
    inv.dummy_id_ = 0;
    long dummy_tokens = 0;
    for (const auto& [tag, count] : counts) {  // std::map: lexicographic, deterministic
        if (count >= min_count) {
            inv.tag_to_id_[tag] = static_cast<int>(inv.id_to_tag_.size());
            inv.id_to_tag_.push_back(tag);
        } else {
            dummy_tokens += count;
        }
    }
    inv.dummy_fraction_ = total > 0 ? static_cast<double>(dummy_tokens) / total : 0.0;
    return inv;
}

TagInventory TagInventory::build(const std::vector<Sentence>& sentences, int min_count) {
    std::map<std::string, long> counts;
    long total = 0;
    for (const Sentence& s : sentences) {
        if (!s.supertags) continue;
        for (const std::string& tag : *s.supertags) {
            ++counts[tag];
            ++total;
        }
    }
    if (total == 0) throw AnnotationError("TagInventory::build: no supertags in corpus");
    return from_counts(counts, total, min_count, false);
}

TagInventory TagInventory::build_pos(const std::vector<Sentence>& sentences, int min_count) {
    std::map<std::string, long> counts;
    long total = 0;
    for (const Sentence& s : sentences) {
        for (const std::string& tag : s.pos) {
            ++counts[strip_pos_number(tag)];
            ++total;
        }
    }
    if (total == 0) throw AnnotationError("TagInventory::build_pos: empty corpus");
    return from_counts(counts, total, min_count, true);
}

int TagInventory::tag_id(const std::string& tag) const {
    const auto it = tag_to_id_.find(tag);
    return it == tag_to_id_.end() ? dummy_id_ : it->second;
}

std::vector<int> TagInventory::tag_ids(const Sentence& sentence) const {
    std::vector<int> ids;
    ids.reserve(sentence.tokens.size());
    if (from_pos_) {
        for (const std::string& tag : sentence.pos) ids.push_back(tag_id(strip_pos_number(tag)));
        return ids;
    }
    if (!sentence.supertags) {
        throw AnnotationError("TagInventory::tag_ids: sentence has no supertags");
    }
    for (const std::string& tag : *sentence.supertags) ids.push_back(tag_id(tag));
    return ids;
}

void TagInventory::save(const std::string& path) const {
    ordered_json j;
    j["min_count"] = min_count_;
    j["from_pos"] = from_pos_;
    j["dummy_fraction"] = dummy_fraction_;
    j["tags"] = id_to_tag_;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("TagInventory::save: cannot open '" + path + "'");
    f << j.dump(1) << '\n';
}

TagInventory TagInventory::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("TagInventory::load: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(f);
    } catch (const json::parse_error& e) {
        throw DataError("TagInventory::load: malformed '" + path + "': " + e.what());
    }
    TagInventory inv;
    try {
        inv.min_count_ = j.at("min_count").get<int>();
        inv.from_pos_ = j.at("from_pos").get<bool>();
        inv.dummy_fraction_ = j.at("dummy_fraction").get<double>();
        inv.id_to_tag_ = j.at("tags").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw DataError(std::string("TagInventory::load: bad field: ") + e.what());
    }
    if (inv.id_to_tag_.empty() || inv.id_to_tag_[0] != "<dummy>") {
        throw DataError("TagInventory::load: dummy entry missing");
    }
    for (size_t i = 1; i < inv.id_to_tag_.size(); ++i) {
        inv.tag_to_id_[inv.id_to_tag_[i]] = static_cast<int>(i);
    }
    return inv;
}

std::string strip_pos_number(const std::string& pos_tag) {
    if (pos_tag == "NNS") return "NN";
    if (pos_tag == "NNPS") return "NNP";
    if (pos_tag == "VBZ" || pos_tag == "VBP") return "VBPRES";
    return pos_tag;
}

std::vector<Sentence> filter_intervening_noun(const std::vector<Sentence>& sentences) {
    std::vector<Sentence> kept;
    for (const Sentence& s : sentences) {
        if (!s.has_agreement()) continue;
        bool found = false;
        for (int i = *s.subject_index + 1; i < *s.verb_index && !found; ++i) {
            found = is_noun_tag(s.pos[i]);
        }
        if (found) kept.push_back(s);
    }
    return kept;
}

}  // namespace agrlab
