#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agrlab/corpus.hpp"
#include "agrlab/rng.hpp"

namespace agrlab {

// Template grammar for fully annotated synthetic sentences. Every sentence
// has one present-tense agreement dependency; modifiers between the subject
// and the verb introduce a controlled number of attractors.

struct NounEntry {
    std::string sg, pl;
    const std::string& form(Number n) const { return n == Number::SG ? sg : pl; }
};

// Fixed word with POS and supertag, used in verb-frame continuations.
// word == "{noun}" samples a random noun of random number at generation.
struct TokenSpec {
    std::string word, pos, supertag;
};

// A main-verb frame: the agreeing verb (VBZ/VBP forms), its supertag, and
// the fixed material that follows it.
struct VerbFrame {
    std::string sg, pl;
    std::string supertag;
    std::vector<TokenSpec> continuation;
    const std::string& form(Number n) const { return n == Number::SG ? sg : pl; }
};

struct GrammarConfig {
    std::vector<NounEntry> nouns;
    std::vector<NounEntry> relational_nouns;  // take an of-complement ("number of ...")
    std::vector<std::string> proper_sg;       // bare NNP ("Paris")
    std::vector<std::string> proper_pl;       // det + NNPS ("the Alps")
    std::vector<VerbFrame> verb_frames;
    std::vector<std::string> rc_verbs;  // past-tense transitives inside relatives
    std::vector<std::string> vbg_verbs;  // participles for reduced relatives
    std::vector<std::string> adjectives;
    std::vector<std::string> prepositions;

    std::vector<double> attractor_weights = {1, 1, 1, 1, 1};  // k = 0..4
    double pp_weight = 1.0;
    double relative_weight = 1.0;
    double object_relative_weight = 1.0;

    double mixed_fraction = 0.0;      // chance an intervening noun matches the subject
    double plural_subject_prob = 0.5;
    // Object-relative sentences whose annotated verb agrees with the
    // embedded subject ("the player the coaches like is ..."): the
    // agreement target is not the first noun, so positional shortcuts fail.
    double embedded_clause_prob = 0.25;
    double adjective_prob = 0.3;
    double relational_prob = 0.5;     // relational subject for PP sentences
    double proper_prob = 0.08;        // proper noun as a PP object
    double coord_prob = 0.2;          // "and the N" continuation links in PP chains
    double reduced_relative_prob = 0.3;  // participle relative instead of "that" + VBD
    double that_object_prob = 0.5;    // "that"-marked vs bare object relative
    double possessive_prob = 0.06;

    static GrammarConfig defaults();
    void validate() const;  // throws ConfigError

    // Both surface forms of a main verb, looked up by either form.
    std::optional<std::pair<std::string, std::string>> verb_pair(const std::string& form) const;
};

// The 30 CCG-style categories the generator assigns. Rule-derived: the tag
// of a word depends on the construction it appears in, not just the word.
const std::vector<std::string>& toy_supertag_inventory();

std::vector<Sentence> generate_synthetic(const GrammarConfig& cfg, int n, Rng& rng);

}  // namespace agrlab
