#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "agrlab/errors.hpp"

namespace agrlab {

enum class Number { SG, PL };

inline Number opposite(Number n) { return n == Number::SG ? Number::PL : Number::SG; }
std::string number_name(Number n);
Number number_from_name(const std::string& s);

// Annotated sentence. `pos` uses the Penn Treebank tag set; agreement
// annotations (subject/verb indices, verb number) are optional and, when
// present, must be mutually consistent: the verb is tagged VBZ or VBP and
// the number matches (VBZ = SG, VBP = PL).
struct Sentence {
    std::vector<std::string> tokens;
    std::vector<std::string> pos;
    std::optional<std::vector<std::string>> supertags;
    std::optional<int> subject_index;
    std::optional<int> verb_index;
    std::optional<Number> verb_number;

    bool has_agreement() const {
        return subject_index && verb_index && verb_number;
    }
    void validate() const;  // throws DataError
};

// Penn Treebank tag set (word-level tags plus punctuation). Every tag is
// also a vocabulary entry, so out-of-vocabulary words can fall back to it.
const std::vector<std::string>& penn_tags();
bool is_penn_tag(const std::string& tag);
bool is_noun_tag(const std::string& tag);
std::optional<Number> noun_number(const std::string& tag);  // NN/NNP=SG, NNS/NNPS=PL

struct VocabRule {
    enum class Kind { top_k, min_count };
    Kind kind = Kind::min_count;
    int value = 1;

    std::string describe() const;
};

// Word <-> id map. Layout: <pad>, <eos>, every Penn tag (fallback entries),
// then the words retained by the frequency rule, ordered by descending
// count with lexicographic tie-breaking.
class Vocab {
public:
    static Vocab build(const std::vector<Sentence>& sentences, VocabRule rule);

    int size() const { return static_cast<int>(id_to_word_.size()); }
    int pad_id() const { return pad_id_; }
    int eos_id() const { return eos_id_; }
    std::optional<int> word_id(const std::string& word) const;
    int pos_fallback_id(const std::string& tag) const;  // AnnotationError if not a Penn tag
    const std::string& word(int id) const { return id_to_word_.at(id); }
    const std::vector<std::string>& id_to_word() const { return id_to_word_; }
    const VocabRule& rule() const { return rule_; }

    // Token id for `word` under the rare-word rule: the word itself when
    // in-vocabulary, otherwise its POS tag's entry.
    int resolve(const std::string& word, const std::string& pos_tag) const;

    uint64_t fingerprint() const;  // FNV-1a over the full entry list

    // Round-trips through a small JSON document (used by the CLI so that
    // training and evaluation agree on the mapping).
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

private:
    std::vector<std::string> id_to_word_;
    std::unordered_map<std::string, int> word_to_id_;
    int pad_id_ = 0;
    int eos_id_ = 1;
    VocabRule rule_;
};

// Agreement training/evaluation instance. `attractor_count` is the number
// of nouns between subject and verb when they are all of the opposite
// number from the subject; std::nullopt marks the mixed case (intervening
// nouns present but not all opposite).
struct AgreementInstance {
    std::vector<int> preamble;  // token ids, everything before the verb
    Number label = Number::SG;
    std::optional<int> attractor_count;
    bool has_intervening_noun = false;
};

struct ReadResult {
    std::vector<Sentence> sentences;
    std::vector<std::string> diagnostics;  // "line N: reason" per rejected line
};

// One JSON object per line:
//   {"tokens":[...], "pos":[...], "supertags":[...]|null,
//    "subject_index":int|null, "verb_index":int|null, "verb_number":"SG"|"PL"|null}
// Invalid lines are rejected individually and reported with line numbers.
ReadResult read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<Sentence>& sentences);

Vocab build_vocab(const std::vector<Sentence>& sentences, VocabRule rule);

// Maps every token to its id, falling back to the POS entry for
// out-of-vocabulary words.
std::vector<int> replace_rare(const Sentence& sentence, const Vocab& vocab);

// Nouns strictly between subject and verb; see AgreementInstance.
std::optional<int> count_attractors(const Sentence& sentence);

std::optional<AgreementInstance> extract_agreement(const Sentence& sentence, const Vocab& vocab);

struct ExtractStats {
    std::vector<AgreementInstance> instances;
    int skipped = 0;
};
ExtractStats extract_agreement_all(const std::vector<Sentence>& sentences, const Vocab& vocab);

// Retained supertags with their ids plus a dummy id for everything rarer
// than `min_count` in the (training) data the inventory was built from.
class TagInventory {
public:
    static TagInventory build(const std::vector<Sentence>& sentences, int min_count = 10);
    // Same pruning applied to number-stripped POS tags (auxiliary task).
    static TagInventory build_pos(const std::vector<Sentence>& sentences, int min_count = 1);

    int size() const { return static_cast<int>(id_to_tag_.size()); }
    int dummy_id() const { return dummy_id_; }
    int min_count() const { return min_count_; }
    int tag_id(const std::string& tag) const;
    const std::string& tag(int id) const { return id_to_tag_.at(id); }
    double dummy_fraction() const { return dummy_fraction_; }
    bool from_pos() const { return from_pos_; }

    std::vector<int> tag_ids(const Sentence& sentence) const;  // AnnotationError if tags missing

    void save(const std::string& path) const;
    static TagInventory load(const std::string& path);

private:
    static TagInventory from_counts(const std::map<std::string, long>& counts, long total,
                                    int min_count, bool from_pos);

    std::vector<std::string> id_to_tag_;
    std::unordered_map<std::string, int> tag_to_id_;
    int dummy_id_ = 0;
    int min_count_ = 10;
    double dummy_fraction_ = 0.0;
    bool from_pos_ = false;
};

// NNS -> NN, NNPS -> NNP, VBZ/VBP -> VBPRES; other tags unchanged.
std::string strip_pos_number(const std::string& pos_tag);

// Keeps sentences with at least one noun (of any number) strictly between
// the subject and the verb.
std::vector<Sentence> filter_intervening_noun(const std::vector<Sentence>& sentences);

}  // namespace agrlab
