#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "termshift/corpus.hpp"
#include "termshift/dictionary.hpp"
#include "termshift/frequency.hpp"
#include "termshift/matcher.hpp"
#include "termshift/stemmer.hpp"
#include "termshift/strings.hpp"

namespace termshift {

inline constexpr const char* STOP_LIST_VERSION = "1";

/// Bundled domain-general function-word list (version 1), overridable by
/// file. Includes the conversational fillers that show up in draft text.
inline const std::unordered_set<std::string>& default_stop_words() {
    static const std::unordered_set<std::string> words = {
        "a", "about", "above", "after", "again", "against", "all", "almost", "also",
        "although", "always", "am", "among", "an", "and", "another", "any", "anyone",
        "anything", "are", "around", "as", "at", "be", "because", "been", "before",
        "being", "below", "between", "both", "but", "by", "can", "cannot", "could",
        "did", "do", "does", "doing", "done", "down", "during", "each", "either",
        "enough", "even", "ever", "every", "few", "for", "from", "further", "get",
        "got", "had", "has", "have", "having", "he", "her", "here", "hers", "herself",
        "him", "himself", "his", "how", "however", "i", "if", "in", "into", "is", "it",
        "its", "itself", "just", "like", "many", "may", "maybe", "me", "might", "more",
        "most", "much", "must", "my", "myself", "neither", "no", "nor", "not", "now",
        "of", "off", "often", "on", "once", "only", "or", "other", "our", "ours",
        "ourselves", "out", "over", "own", "per", "perhaps", "quite", "rather",
        "really", "same", "she", "should", "since", "so", "some", "something",
        "sometimes", "still", "such", "than", "that", "the", "their", "theirs",
        "them", "themselves", "then", "there", "these", "they", "this", "those",
        "through", "to", "too", "under", "until", "up", "upon", "us", "very", "was",
        "we", "well", "were", "what", "when", "where", "whether", "which", "while",
        "who", "whom", "why", "will", "with", "within", "without", "would", "yet",
        "you", "your", "yours", "yourself",
    };
    return words;
}

inline std::unordered_set<std::string> load_stop_words(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read stop list: " + path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = collapse_ws_lower(line);
        if (!t.empty()) words.insert(t);
    }
    return words;
}

/// Candidate filter shared by event detection and the post-hoc pair filter.
/// min_term_chars counts characters of the whole normalized term and
/// applies to the consumer side; min_length_both_sides extends it to the
/// clinical side. The stop list applies to either side.
struct TransformFilterConfig {
    int min_term_chars = 4;
    bool min_length_both_sides = false;
    std::unordered_set<std::string> stop_words = default_stop_words();

    bool passes(const std::string& consumer, const std::string& clinical) const {
        if (static_cast<int>(consumer.size()) < min_term_chars) return false;
        if (min_length_both_sides && static_cast<int>(clinical.size()) < min_term_chars) return false;
        if (stop_words.count(consumer) || stop_words.count(clinical)) return false;
        return true;
    }
};

/// A dictionary-confirmed substitution within one note-section:
/// consumer_term present in draft and absent in final, while its mapped
/// clinical_term is absent in draft and newly present in final.
struct TransformationEvent {
    std::string note_id;
    SectionLabel section = SectionLabel::OTHER;
    std::string consumer_term;
    std::string clinical_term;

    friend bool operator==(const TransformationEvent&, const TransformationEvent&) = default;
    friend bool operator<(const TransformationEvent& a, const TransformationEvent& b) {
        return std::tie(a.note_id, a.section, a.consumer_term, a.clinical_term) <
               std::tie(b.note_id, b.section, b.consumer_term, b.clinical_term);
    }
};

inline std::vector<TransformationEvent> detect_events(const NoteSection& ns,
                                                      const TermDictionary& dict,
                                                      const SideMatchers& matchers,
                                                      const TransformFilterConfig& cfg) {
    std::set<std::string> cons_draft = matchers.consumer.term_presence(ns.draft_text);
    if (cons_draft.empty()) return {};
    std::set<std::string> cons_final = matchers.consumer.term_presence(ns.final_text);
    std::set<std::string> clin_draft = matchers.clinical.term_presence(ns.draft_text);
    std::set<std::string> clin_final = matchers.clinical.term_presence(ns.final_text);

    std::vector<TransformationEvent> events;
    for (const auto& c : cons_draft) {
        if (cons_final.count(c)) continue;  // not removed
        const auto* targets = dict.clinical_for(c);
        if (!targets) continue;
        for (const auto& k : *targets) {
            if (!cfg.passes(c, k)) continue;
            if (clin_draft.count(k)) continue;   // not newly present
            if (!clin_final.count(k)) continue;  // not added
            events.push_back(TransformationEvent{ns.note_id, ns.section, c, k});
        }
    }
    // presence semantics make duplicates impossible; sorted for determinism
    std::sort(events.begin(), events.end());
    return events;
}

inline std::vector<TransformationEvent> detect_events(const NoteSection& ns,
                                                      const TermDictionary& dict,
                                                      const TransformFilterConfig& cfg = {}) {
    return detect_events(ns, dict, SideMatchers(dict), cfg);
}

inline std::vector<TransformationEvent> detect_all_events(const Corpus& corpus,
                                                          const TermDictionary& dict,
                                                          const TransformFilterConfig& cfg = {}) {
    SideMatchers matchers(dict, corpus_token_frequencies(corpus));
    std::vector<TransformationEvent> events;
    for (const auto& ns : corpus.sections) {
        auto e = detect_events(ns, dict, matchers, cfg);
        events.insert(events.end(), e.begin(), e.end());
    }
    std::sort(events.begin(), events.end());
    return events;
}

using TermPair = std::pair<std::string, std::string>;  // (consumer, clinical)

/// Post-hoc linguistic filter over pairs. A pair is removed when:
///  (a) both terms are single tokens with equal stems;
///  (b) both terms have the same token count > 1 and all aligned token
///      stems are equal;
///  (c) a term is below min length (side policy per config);
///  (d) either term is in the stop list.
inline bool pair_survives_linguistic_filter(const TermPair& pair, const TransformFilterConfig& cfg) {
    const auto& [consumer, clinical] = pair;
    if (!cfg.passes(consumer, clinical)) return false;  // rules (c) and (d)
    auto ctoks = split(consumer, ' ');
    auto ktoks = split(clinical, ' ');
    if (ctoks.size() == ktoks.size()) {
        bool all_same_stem = true;
        for (size_t i = 0; i < ctoks.size(); ++i) {
            if (porter_stem(ctoks[i]) != porter_stem(ktoks[i])) {
                all_same_stem = false;
                break;
            }
        }
        if (all_same_stem) return false;  // rules (a) and (b)
    }
    return true;
}

inline std::vector<TermPair> linguistic_filter(const std::vector<TermPair>& pairs,
                                               const TransformFilterConfig& cfg = {}) {
    std::vector<TermPair> out;
    for (const auto& p : pairs)
        if (pair_survives_linguistic_filter(p, cfg)) out.push_back(p);
    return out;
}

struct PairSummary {
    TermPair pair;
    int64_t event_count = 0;
    int64_t distinct_sections = 0;
    bool survived_linguistic_filter = false;
    bool meets_relevance_threshold = false;
};

/// Rolls events up per (consumer, clinical) pair. distinct_sections counts
/// distinct (note_id, section) units; with at most one event per section
/// and pair it equals event_count. meets_relevance_threshold is strict
/// (> threshold). Sorted by event_count descending, pair ascending.
inline std::vector<PairSummary> summarize_pairs(const std::vector<TransformationEvent>& events,
                                                const TransformFilterConfig& cfg = {},
                                                int64_t threshold = 10) {
    std::map<TermPair, std::set<std::pair<std::string, SectionLabel>>> sections_by_pair;
    std::map<TermPair, int64_t> count_by_pair;
    for (const auto& e : events) {
        TermPair p{e.consumer_term, e.clinical_term};
        ++count_by_pair[p];
        sections_by_pair[p].insert({e.note_id, e.section});
    }
    std::vector<PairSummary> out;
    for (const auto& [pair, count] : count_by_pair) {
        PairSummary s;
        s.pair = pair;
        s.event_count = count;
        s.distinct_sections = static_cast<int64_t>(sections_by_pair[pair].size());
        // presence semantics allow at most one event per (note-section, pair)
        if (s.distinct_sections != s.event_count)
            throw std::logic_error("summarize_pairs: duplicate event for pair '" + pair.first +
                                   "' -> '" + pair.second + "'");
        s.survived_linguistic_filter = pair_survives_linguistic_filter(pair, cfg);
        s.meets_relevance_threshold = s.distinct_sections > threshold;
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(), [](const PairSummary& a, const PairSummary& b) {
        if (a.event_count != b.event_count) return a.event_count > b.event_count;
        return a.pair < b.pair;
    });
    return out;
}

/// Confirmed events as a fraction of all consumer-term deletions.
/// Zero denominator -> undefined (reported "n/a").
inline std::optional<double> substitution_share(const std::vector<TransformationEvent>& events,
                                                const std::vector<SectionDelta>& deltas) {
    int64_t deletions = 0;
    for (const auto& d : deltas) deletions += d.consumer.deleted;
    if (deletions == 0) return std::nullopt;
    return static_cast<double>(events.size()) / static_cast<double>(deletions);
}

}  // namespace termshift
