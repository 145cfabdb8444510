#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "termshift/csv.hpp"
#include "termshift/matcher.hpp"
#include "termshift/strings.hpp"

namespace termshift {

struct EmptyPhraseError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Lowercases, collapses whitespace runs to single spaces and trims.
/// Throws EmptyPhraseError when nothing remains.
inline std::string normalize_phrase(std::string_view raw) {
    std::string out = collapse_ws_lower(raw);
    if (out.empty()) throw EmptyPhraseError("phrase is empty after normalization");
    return out;
}

inline int phrase_token_count(const std::string& normalized) {
    if (normalized.empty()) return 0;
    int n = 1;
    for (char c : normalized)
        if (c == ' ') ++n;
    return n;
}

struct MappingEntry {
    std::string consumer_term;  // normalized
    std::string clinical_term;  // normalized
    std::string concept_id;     // may be empty
    std::string source;         // source tag, may be empty

    friend bool operator==(const MappingEntry&, const MappingEntry&) = default;
};

struct DictionaryConfig {
    int min_tokens = 1;
    int max_tokens = 6;
};

/// Per-filter drop accounting for one build. Filters are applied in the
/// order of the fields below; dedup runs last.
struct DictBuildReport {
    int64_t rows_read = 0;
    int64_t dropped_empty = 0;       // either phrase empty after normalization
    int64_t dropped_identity = 0;    // consumer == clinical after normalization
    int64_t dropped_length = 0;      // token count outside [min_tokens, max_tokens]
    int64_t dropped_excluded = 0;    // matched the exclusion list
    int64_t dropped_vocabulary = 0;  // some token missing from the corpus vocabulary
    int64_t dropped_duplicate = 0;   // duplicate normalized (consumer, clinical) pair
    int64_t retained = 0;

    int64_t dropped_total() const {
        return dropped_empty + dropped_identity + dropped_length + dropped_excluded +
               dropped_vocabulary + dropped_duplicate;
    }

    nlohmann::ordered_json to_json() const {
        return nlohmann::ordered_json{
            {"rows_read", rows_read},
            {"retained", retained},
            {"dropped", {{"empty_phrase", dropped_empty},
                         {"identity", dropped_identity},
                         {"length", dropped_length},
                         {"excluded", dropped_excluded},
                         {"vocabulary", dropped_vocabulary},
                         {"duplicate", dropped_duplicate}}},
        };
    }
};

/// Exclusion list: one entry per line, '#' starts a comment. A row is
/// dropped when its concept_id equals an entry verbatim or either
/// normalized term equals a normalized entry.
struct ExclusionList {
    std::unordered_set<std::string> concept_ids;
    std::unordered_set<std::string> terms;  // normalized

    bool matches(const std::string& concept_id, const std::string& consumer,
                 const std::string& clinical) const {
        if (!concept_id.empty() && concept_ids.count(concept_id)) return true;
        return terms.count(consumer) > 0 || terms.count(clinical) > 0;
    }

    static ExclusionList load(std::istream& in) {
        ExclusionList out;
        std::string line;
        while (std::getline(in, line)) {
            auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string t = trim(line);
            if (t.empty()) continue;
            out.concept_ids.insert(t);
            out.terms.insert(collapse_ws_lower(t));
        }
        return out;
    }

    static ExclusionList load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read exclusion list: " + path);
        return load(in);
    }
};

/// Immutable consumer-to-clinical mapping dictionary.
/// Entries are kept sorted by (consumer_term, clinical_term) so rebuilds
/// from identical sources serialize byte-identically.
class TermDictionary {
  public:
    TermDictionary() = default;

    /// entries need not be sorted or unique; duplicates are collapsed
    /// (callers that care about drop counts dedup before constructing).
    explicit TermDictionary(std::vector<MappingEntry> entries) {
        std::sort(entries.begin(), entries.end(), [](const MappingEntry& a, const MappingEntry& b) {
            if (a.consumer_term != b.consumer_term) return a.consumer_term < b.consumer_term;
            return a.clinical_term < b.clinical_term;
        });
        for (auto& e : entries) {
            if (!entries_.empty() && entries_.back().consumer_term == e.consumer_term &&
                entries_.back().clinical_term == e.clinical_term)
                continue;
            entries_.push_back(std::move(e));
        }
        for (const auto& e : entries_) {
            consumer_index_[e.consumer_term].push_back(e.clinical_term);
            consumer_terms_.insert(e.consumer_term);
            clinical_terms_.insert(e.clinical_term);
        }
        rebuild_rare_token_index();
    }

    const std::vector<MappingEntry>& entries() const { return entries_; }
    const std::set<std::string>& consumer_terms() const { return consumer_terms_; }
    const std::set<std::string>& clinical_terms() const { return clinical_terms_; }

    const std::vector<std::string>* clinical_for(const std::string& consumer) const {
        auto it = consumer_index_.find(consumer);
        return it == consumer_index_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, std::vector<std::string>>& consumer_index() const {
        return consumer_index_;
    }

    /// token -> multi-word phrases (both sides) anchored at that token.
    /// Each multi-word phrase appears under exactly one key.
    const std::map<std::string, std::vector<std::string>>& rare_token_index() const {
        return rare_token_index_;
    }

    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    void save_jsonl(std::ostream& out) const {
        for (const auto& e : entries_) {
            nlohmann::ordered_json j{{"consumer_term", e.consumer_term},
                                     {"clinical_term", e.clinical_term}};
            if (!e.concept_id.empty()) j["concept_id"] = e.concept_id;
            if (!e.source.empty()) j["source"] = e.source;
            out << j.dump() << '\n';
        }
    }

    void save_jsonl_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write dictionary: " + path);
        save_jsonl(out);
    }

    static TermDictionary load_jsonl(std::istream& in) {
        std::vector<MappingEntry> entries;
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw SchemaError("dictionary line " + std::to_string(lineno) + ": " + e.what());
            }
            if (!j.contains("consumer_term") || !j.contains("clinical_term"))
                throw SchemaError("dictionary line " + std::to_string(lineno) +
                                  ": missing consumer_term/clinical_term");
            MappingEntry e;
            e.consumer_term = j.at("consumer_term").get<std::string>();
            e.clinical_term = j.at("clinical_term").get<std::string>();
            e.concept_id = j.value("concept_id", std::string());
            e.source = j.value("source", std::string());
            entries.push_back(std::move(e));
        }
        return TermDictionary(std::move(entries));
    }

    static TermDictionary load_jsonl_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read dictionary: " + path);
        return load_jsonl(in);
    }

  private:
    void rebuild_rare_token_index() {
        std::set<std::string> multiword;
        for (const auto& e : entries_) {
            if (phrase_token_count(e.consumer_term) > 1) multiword.insert(e.consumer_term);
            if (phrase_token_count(e.clinical_term) > 1) multiword.insert(e.clinical_term);
        }
        if (multiword.empty()) return;
        TermMatcher m(multiword);
        rare_token_index_ = m.anchor_index();
    }

    std::vector<MappingEntry> entries_;
    std::map<std::string, std::vector<std::string>> consumer_index_;
    std::set<std::string> consumer_terms_;
    std::set<std::string> clinical_terms_;
    std::map<std::string, std::vector<std::string>> rare_token_index_;
};

namespace detail {

inline void build_add_row(std::vector<MappingEntry>& kept,
                          std::set<std::pair<std::string, std::string>>& seen,
                          DictBuildReport& report, const ExclusionList& exclusions,
                          const std::optional<std::unordered_set<std::string>>& corpus_vocab,
                          const DictionaryConfig& cfg, const std::string& raw_consumer,
                          const std::string& raw_clinical, const std::string& concept_id,
                          const std::string& source) {
    ++report.rows_read;
    std::string consumer = collapse_ws_lower(raw_consumer);
    std::string clinical = collapse_ws_lower(raw_clinical);
    if (consumer.empty() || clinical.empty()) {
        ++report.dropped_empty;
        return;
    }
    if (consumer == clinical) {
        ++report.dropped_identity;
        return;
    }
    int ctok = phrase_token_count(consumer);
    int ktok = phrase_token_count(clinical);
    if (ctok < cfg.min_tokens || ctok > cfg.max_tokens || ktok < cfg.min_tokens ||
        ktok > cfg.max_tokens) {
        ++report.dropped_length;
        return;
    }
    if (exclusions.matches(trim(concept_id), consumer, clinical)) {
        ++report.dropped_excluded;
        return;
    }
    if (corpus_vocab) {
        auto all_in_vocab = [&](const std::string& phrase) {
            for (const auto& ts : tokenize(phrase))
                if (!corpus_vocab->count(ts.token)) return false;
            return true;
        };
        if (!all_in_vocab(consumer) || !all_in_vocab(clinical)) {
            ++report.dropped_vocabulary;
            return;
        }
    }
    if (!seen.emplace(consumer, clinical).second) {
        ++report.dropped_duplicate;
        return;
    }
    ++report.retained;
    kept.push_back(MappingEntry{consumer, clinical, trim(concept_id), trim(source)});
}

}  // namespace detail

/// Reads one CSV mapping source into the build. Expected header:
/// consumer_term,clinical_term,concept_id,source (concept_id/source may be
/// empty per row). Schema violations carry the file and row number.
inline void build_dictionary_from_csv(std::istream& in, const std::string& name,
                                      std::vector<MappingEntry>& kept,
                                      std::set<std::pair<std::string, std::string>>& seen,
                                      DictBuildReport& report, const ExclusionList& exclusions,
                                      const std::optional<std::unordered_set<std::string>>& corpus_vocab,
                                      const DictionaryConfig& cfg) {
    CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next_row(fields))
        throw SchemaError(name + ": empty mapping file");
    if (fields.size() < 2 || collapse_ws_lower(fields[0]) != "consumer_term" ||
        collapse_ws_lower(fields[1]) != "clinical_term")
        throw SchemaError(name + ": row 1: expected header consumer_term,clinical_term,concept_id,source");
    while (reader.next_row(fields)) {
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
        if (fields.size() < 2 || fields.size() > 4)
            throw SchemaError(name + ": row " + std::to_string(reader.row()) + ": expected 2-4 columns, got " +
                              std::to_string(fields.size()));
        detail::build_add_row(kept, seen, report, exclusions, corpus_vocab, cfg, fields[0], fields[1],
                              fields.size() > 2 ? fields[2] : "", fields.size() > 3 ? fields[3] : "");
    }
}

/// Builds the dictionary from one or more CSV sources, applying the
/// normalization, exclusion, length, corpus-vocabulary and dedup filters.
inline TermDictionary build_dictionary(const std::vector<std::string>& source_paths,
                                       const ExclusionList& exclusions,
                                       const std::optional<std::unordered_set<std::string>>& corpus_vocab,
                                       const DictionaryConfig& cfg, DictBuildReport* report_out = nullptr) {
    std::vector<MappingEntry> kept;
    std::set<std::pair<std::string, std::string>> seen;
    DictBuildReport report;
    for (const auto& path : source_paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read mapping source: " + path);
        build_dictionary_from_csv(in, path, kept, seen, report, exclusions, corpus_vocab, cfg);
    }
    if (report_out) *report_out = report;
    return TermDictionary(std::move(kept));
}

}  // namespace termshift
