#include "agrlab/synth.hpp"

#include <stdexcept>

namespace agrlab {

// Supertag strings, assigned by construction.
namespace tag {
constexpr const char* det = "NP[nb]/N";
constexpr const char* noun = "N";
constexpr const char* adj = "N/N";
constexpr const char* prep_nmod = "(NP\\NP)/NP";
constexpr const char* prep_comp = "PP/NP";
constexpr const char* rel_subj = "(NP\\NP)/(S[dcl]\\NP)";
constexpr const char* rel_obj = "(NP\\NP)/(S[dcl]/NP)";
constexpr const char* verb_trans = "(S[dcl]\\NP)/NP";
constexpr const char* cop_adj = "(S[dcl]\\NP)/(S[adj]\\NP)";
constexpr const char* cop_pp = "(S[dcl]\\NP)/PP";
constexpr const char* cop_pss = "(S[dcl]\\NP)/(S[pss]\\NP)";
constexpr const char* cop_ng = "(S[dcl]\\NP)/(S[ng]\\NP)";
constexpr const char* raise = "(S[dcl]\\NP)/(S[to]\\NP)";
constexpr const char* to_inf = "(S[to]\\NP)/(S[b]\\NP)";
constexpr const char* base_intrans = "S[b]\\NP";
constexpr const char* base_trans = "(S[b]\\NP)/NP";
constexpr const char* intrans = "S[dcl]\\NP";
constexpr const char* pred_adj = "S[adj]\\NP";
constexpr const char* pred_adj_pp = "(S[adj]\\NP)/PP";
constexpr const char* pss = "S[pss]\\NP";
constexpr const char* ng_trans = "(S[ng]\\NP)/NP";
constexpr const char* adv = "(S\\NP)\\(S\\NP)";
constexpr const char* neg = "(S\\NP)/(S\\NP)";
constexpr const char* conj = "conj";
constexpr const char* period = ".";
constexpr const char* poss = "(NP[nb]/N)\\NP";
constexpr const char* rel_noun = "N/PP";
constexpr const char* np = "NP";
constexpr const char* prep_vmod = "((S\\NP)\\(S\\NP))/NP";
constexpr const char* rel_ng = "(NP\\NP)/(S[ng]\\NP)";
}  // namespace tag

const std::vector<std::string>& toy_supertag_inventory() {
    static const std::vector<std::string> inv = {
        tag::det,       tag::noun,     tag::adj,       tag::prep_nmod, tag::prep_comp,
        tag::rel_subj,  tag::rel_obj,  tag::verb_trans, tag::cop_adj,  tag::cop_pp,
        tag::cop_pss,   tag::cop_ng,   tag::raise,     tag::to_inf,    tag::base_intrans,
        tag::base_trans, tag::intrans, tag::pred_adj,  tag::pred_adj_pp, tag::pss,
        tag::ng_trans,  tag::adv,      tag::neg,       tag::conj,      tag::period,
        tag::poss,      tag::rel_noun, tag::np,        tag::prep_vmod, tag::rel_ng};
    return inv;
}

GrammarConfig GrammarConfig::defaults() {
    GrammarConfig g;
    g.nouns = {{"tape", "tapes"},       {"singer", "singers"},   {"player", "players"},
               {"coach", "coaches"},    {"key", "keys"},         {"cabinet", "cabinets"},
               {"label", "labels"},     {"bottle", "bottles"},   {"farmer", "farmers"},
               {"pilot", "pilots"},     {"teacher", "teachers"}, {"student", "students"},
               {"author", "authors"},   {"book", "books"},       {"picture", "pictures"},
               {"garden", "gardens"},   {"tree", "trees"},       {"bird", "birds"},
               {"song", "songs"},       {"letter", "letters"},   {"friend", "friends"},
               {"door", "doors"},       {"box", "boxes"},        {"dog", "dogs"},
               {"cat", "cats"},         {"man", "men"},          {"woman", "women"},
               {"child", "children"},   {"house", "houses"},     {"road", "roads"}};
    g.relational_nouns = {{"number", "numbers"}, {"ratio", "ratios"}, {"group", "groups"},
                          {"set", "sets"},       {"pair", "pairs"},   {"list", "lists"}};
    g.proper_sg = {"Paris", "Rome"};
    g.proper_pl = {"Alps", "Netherlands"};
    g.rc_verbs = {"promoted", "criticized", "admired", "chose",  "followed",
                  "praised",  "trusted",    "noticed", "hired",  "described"};
    g.vbg_verbs = {"promoting", "carrying", "describing", "following"};
    g.adjectives = {"popular", "old",   "small",  "bright", "noisy",
                    "quiet",   "famous", "heavy", "narrow", "gentle"};
    g.prepositions = {"from", "near", "behind", "beside", "above", "below"};
    g.verb_frames = {
        {"is", "are", tag::cop_adj, {{"not", "RB", tag::neg}, {"clear", "JJ", tag::pred_adj}}},
        {"is", "are", tag::cop_pp,
         {{"near", "IN", tag::prep_comp}, {"the", "DT", tag::det}, {"{noun}", "", ""}}},
        {"is", "are", tag::cop_pss, {{"admired", "VBN", tag::pss}}},
        {"is", "are", tag::cop_ng,
         {{"promoting", "VBG", tag::ng_trans}, {"the", "DT", tag::det}, {"{noun}", "", ""}}},
        {"seems", "seem", tag::raise,
         {{"to", "TO", tag::to_inf}, {"smile", "VB", tag::base_intrans}}},
        {"seems", "seem", tag::raise,
         {{"to", "TO", tag::to_inf},
          {"like", "VB", tag::base_trans},
          {"the", "DT", tag::det},
          {"{noun}", "", ""}}},
        {"runs", "run", tag::intrans, {{"quickly", "RB", tag::adv}}},
        {"smiles", "smile", tag::intrans, {}},
        {"sees", "see", tag::verb_trans, {{"the", "DT", tag::det}, {"{noun}", "", ""}}},
        {"likes", "like", tag::verb_trans, {{"the", "DT", tag::det}, {"{noun}", "", ""}}},
        {"stands", "stand", tag::intrans,
         {{"behind", "IN", tag::prep_vmod}, {"the", "DT", tag::det}, {"{noun}", "", ""}}},
        {"is", "are", tag::cop_adj,
         {{"full", "JJ", tag::pred_adj_pp},
          {"of", "IN", tag::prep_comp},
          {"the", "DT", tag::det},
          {"{noun}", "", ""}}},
    };
    return g;
}

void GrammarConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("GrammarConfig: ") + what);
    };
    require(!nouns.empty(), "empty noun lexicon");
    require(!verb_frames.empty(), "empty verb lexicon");
    require(!rc_verbs.empty(), "empty relative-clause verb lexicon");
    require(!adjectives.empty(), "empty adjective lexicon");
    require(!prepositions.empty(), "empty preposition lexicon");
    require(!attractor_weights.empty(), "empty attractor-count distribution");
    double total = 0.0;
    for (double w : attractor_weights) {
        require(w >= 0.0, "negative attractor weight");
        total += w;
    }
    require(total > 0.0, "attractor-count distribution sums to zero");
    require(pp_weight >= 0 && relative_weight >= 0 && object_relative_weight >= 0,
            "negative construction weight");
    require(pp_weight + relative_weight + object_relative_weight > 0.0,
            "construction weights sum to zero");
    for (double p : {mixed_fraction, plural_subject_prob, embedded_clause_prob, adjective_prob,
                     relational_prob, proper_prob, coord_prob, reduced_relative_prob,
                     that_object_prob, possessive_prob}) {
        require(p >= 0.0 && p <= 1.0, "probability outside [0, 1]");
    }
}

std::optional<std::pair<std::string, std::string>> GrammarConfig::verb_pair(
    const std::string& form) const {
    for (const VerbFrame& f : verb_frames) {
        if (f.sg == form || f.pl == form) return std::make_pair(f.sg, f.pl);
    }
    return std::nullopt;
}

namespace {

struct Builder {
    Sentence s;

    Builder() { s.supertags.emplace(); }

    int add(const std::string& word, const std::string& pos, const std::string& supertag) {
        s.tokens.push_back(word);
        s.pos.push_back(pos);
        s.supertags->push_back(supertag);
        return static_cast<int>(s.tokens.size()) - 1;
    }
};

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    return v[rng.below(v.size())];
}

// det [adj] noun; returns the head-noun index.
int add_common_np(Builder& b, const GrammarConfig& g, Number num, bool allow_adj, Rng& rng) {
    b.add("the", "DT", tag::det);
    if (allow_adj && rng.uniform() < g.adjective_prob) {
        b.add(pick(g.adjectives, rng), "JJ", tag::adj);
    }
    const NounEntry& n = pick(g.nouns, rng);
    return b.add(n.form(num), num == Number::SG ? "NN" : "NNS", tag::noun);
}

// PP object: common NP, or occasionally a proper noun.
void add_pp_object(Builder& b, const GrammarConfig& g, Number num, Rng& rng) {
    if (rng.uniform() < g.proper_prob) {
        if (num == Number::SG && !g.proper_sg.empty()) {
            b.add(pick(g.proper_sg, rng), "NNP", tag::np);
            return;
        }
        if (num == Number::PL && !g.proper_pl.empty()) {
            b.add("the", "DT", tag::det);
            b.add(pick(g.proper_pl, rng), "NNPS", tag::noun);
            return;
        }
    }
    add_common_np(b, g, num, true, rng);
}

// Attaches PP links carrying numbers[start..]; each link adds one noun.
void add_pp_chain(Builder& b, const GrammarConfig& g, const std::vector<Number>& numbers,
                  size_t start, bool first_is_of, Rng& rng) {
    for (size_t i = start; i < numbers.size(); ++i) {
        const bool coord = i > start && rng.uniform() < g.coord_prob;
        if (coord) {
            b.add("and", "CC", tag::conj);
            add_common_np(b, g, numbers[i], false, rng);
        } else if (i == start && first_is_of) {
            b.add("of", "IN", tag::prep_comp);
            add_pp_object(b, g, numbers[i], rng);
        } else {
            b.add(pick(g.prepositions, rng), "IN", tag::prep_nmod);
            add_pp_object(b, g, numbers[i], rng);
        }
    }
}

// Present-tense transitive pairs usable as embedded-clause verbs.
std::vector<const VerbFrame*> transitive_frames(const GrammarConfig& g) {
    std::vector<const VerbFrame*> out;
    for (const VerbFrame& f : g.verb_frames) {
        if (f.supertag == tag::verb_trans) out.push_back(&f);
    }
    return out;
}

// "the N1 (that) the N2 [PP chain] V-embedded <main verb> ." where the
// annotated dependency is N2 with the embedded verb. The first noun of the
// sentence is not the agreement target here.
Sentence generate_embedded(const GrammarConfig& g, Number subj_num, std::vector<Number> inter,
                           const VerbFrame& embedded, Rng& rng) {
    Builder b;
    const Number n1_num = rng.uniform() < 0.5 ? Number::SG : Number::PL;
    b.add("the", "DT", tag::det);
    if (rng.uniform() < g.adjective_prob) b.add(pick(g.adjectives, rng), "JJ", tag::adj);
    const NounEntry& n1 = pick(g.nouns, rng);
    b.add(n1.form(n1_num), n1_num == Number::SG ? "NN" : "NNS", tag::noun);

    if (rng.uniform() < g.that_object_prob) b.add("that", "WDT", tag::rel_obj);
    const int subject_index = add_common_np(b, g, subj_num, true, rng);
    add_pp_chain(b, g, inter, 0, false, rng);
    const int verb_index =
        b.add(embedded.form(subj_num), subj_num == Number::SG ? "VBZ" : "VBP", tag::verb_trans);

    // Main clause verb agrees with N1; it is not part of the annotation.
    const VerbFrame& main = pick(g.verb_frames, rng);
    b.add(main.form(n1_num), n1_num == Number::SG ? "VBZ" : "VBP", main.supertag);
    for (const TokenSpec& t : main.continuation) {
        if (t.word == "{noun}") {
            const Number n2 = rng.uniform() < 0.5 ? Number::SG : Number::PL;
            const NounEntry& ne = pick(g.nouns, rng);
            b.add(ne.form(n2), n2 == Number::SG ? "NN" : "NNS", tag::noun);
        } else {
            b.add(t.word, t.pos, t.supertag);
        }
    }
    b.add(".", ".", tag::period);

    Sentence s = std::move(b.s);
    s.subject_index = subject_index;
    s.verb_index = verb_index;
    s.verb_number = subj_num;
    s.validate();
    return s;
}

Sentence generate_one(const GrammarConfig& g, Rng& rng) {
    const Number subj_num = rng.uniform() < g.plural_subject_prob ? Number::PL : Number::SG;
    const int k = static_cast<int>(rng.weighted(g.attractor_weights));

    std::vector<Number> inter(k, opposite(subj_num));
    bool mixed = false;
    if (k > 0 && rng.uniform() < g.mixed_fraction) {
        inter[rng.below(k)] = subj_num;
        mixed = true;
    }

    const auto embedded_verbs = transitive_frames(g);
    if (!embedded_verbs.empty() && rng.uniform() < g.embedded_clause_prob) {
        Sentence s = generate_embedded(g, subj_num, inter,
                                       *embedded_verbs[rng.below(embedded_verbs.size())], rng);
        const auto counted = count_attractors(s);
        const bool ok = mixed ? !counted.has_value() : (counted.has_value() && *counted == k);
        if (!ok) throw std::logic_error("generate_synthetic: embedded self-check failed");
        return s;
    }

    enum class Cons { plain, pp, relative, object_relative };
    Cons cons = Cons::plain;
    if (k > 0) {
        switch (rng.weighted({g.pp_weight, g.relative_weight, g.object_relative_weight})) {
            case 0: cons = Cons::pp; break;
            case 1: cons = Cons::relative; break;
            default: cons = Cons::object_relative; break;
        }
    }

    Builder b;
    const bool relational = cons == Cons::pp && !g.relational_nouns.empty() &&
                            rng.uniform() < g.relational_prob;
    b.add("the", "DT", tag::det);
    if (!relational && rng.uniform() < g.possessive_prob) {
        const Number pn = rng.uniform() < 0.5 ? Number::SG : Number::PL;
        const NounEntry& possessor = pick(g.nouns, rng);
        b.add(possessor.form(pn), pn == Number::SG ? "NN" : "NNS", tag::noun);
        b.add("'s", "POS", tag::poss);
    }
    if (rng.uniform() < g.adjective_prob) b.add(pick(g.adjectives, rng), "JJ", tag::adj);
    const NounEntry& subj = relational ? pick(g.relational_nouns, rng) : pick(g.nouns, rng);
    const int subject_index = b.add(subj.form(subj_num), subj_num == Number::SG ? "NN" : "NNS",
                                    relational ? tag::rel_noun : tag::noun);

    switch (cons) {
        case Cons::plain: break;
        case Cons::pp:
            add_pp_chain(b, g, inter, 0, relational, rng);
            break;
        case Cons::relative:
            // "that VBD the N ..." or a participle relative "VBG the N ..."
            if (!g.vbg_verbs.empty() && rng.uniform() < g.reduced_relative_prob) {
                b.add(pick(g.vbg_verbs, rng), "VBG", tag::rel_ng);
            } else {
                b.add("that", "WDT", tag::rel_subj);
                b.add(pick(g.rc_verbs, rng), "VBD", tag::verb_trans);
            }
            add_common_np(b, g, inter[0], true, rng);
            add_pp_chain(b, g, inter, 1, false, rng);
            break;
        case Cons::object_relative:
            // "(that) the N ... VBD", verb agreeing with the outer subject
            if (rng.uniform() < g.that_object_prob) b.add("that", "WDT", tag::rel_obj);
            add_common_np(b, g, inter[0], true, rng);
            add_pp_chain(b, g, inter, 1, false, rng);
            b.add(pick(g.rc_verbs, rng), "VBD", tag::verb_trans);
            break;
    }

    const VerbFrame& frame = pick(g.verb_frames, rng);
    const int verb_index =
        b.add(frame.form(subj_num), subj_num == Number::SG ? "VBZ" : "VBP", frame.supertag);
    for (const TokenSpec& t : frame.continuation) {
        if (t.word == "{noun}") {
            const Number n2 = rng.uniform() < 0.5 ? Number::SG : Number::PL;
            const NounEntry& ne = pick(g.nouns, rng);
            b.add(ne.form(n2), n2 == Number::SG ? "NN" : "NNS", tag::noun);
        } else {
            b.add(t.word, t.pos, t.supertag);
        }
    }
    b.add(".", ".", tag::period);

    Sentence s = std::move(b.s);
    s.subject_index = subject_index;
    s.verb_index = verb_index;
    s.verb_number = subj_num;
    s.validate();

    // Self-check against the independent attractor counter.
    const auto counted = count_attractors(s);
    const bool ok = mixed ? !counted.has_value() : (counted.has_value() && *counted == k);
    if (!ok) {
        throw std::logic_error("generate_synthetic: attractor self-check failed for: " +
                               [&] {
                                   std::string t;
                                   for (const auto& w : s.tokens) t += w + " ";
                                   return t;
                               }());
    }
    return s;
}

}  // namespace

std::vector<Sentence> generate_synthetic(const GrammarConfig& cfg, int n, Rng& rng) {
    cfg.validate();
    if (n < 0) throw ConfigError("generate_synthetic: n must be >= 0");
    std::vector<Sentence> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(generate_one(cfg, rng));
    return out;
}

}  // namespace agrlab
