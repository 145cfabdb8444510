#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "termshift/corpus.hpp"
#include "termshift/dictionary.hpp"
#include "termshift/matcher.hpp"

namespace termshift {

/// Occurrence accounting for one dictionary side of one note-section.
/// Identities (checked on construction):
///   kept + deleted = draft total
///   kept + added   = final total
///   change         = added - deleted = final total - draft total
struct SideDelta {
    TermCounts draft;
    TermCounts final_;
    int64_t change = 0;
    int64_t deleted = 0;
    int64_t added = 0;
    int64_t kept = 0;
    std::set<std::string> deleted_terms;  // draft count > final count
    std::set<std::string> added_terms;    // final count > draft count
    std::set<std::string> kept_terms;     // min(draft, final) >= 1
};

inline SideDelta make_side_delta(TermCounts draft, TermCounts final_counts) {
    SideDelta d;
    d.draft = std::move(draft);
    d.final_ = std::move(final_counts);
    std::set<std::string> terms;
    for (const auto& [t, _] : d.draft.per_term) terms.insert(t);
    for (const auto& [t, _] : d.final_.per_term) terms.insert(t);
    for (const auto& t : terms) {
        int64_t dc = d.draft.count(t);
        int64_t fc = d.final_.count(t);
        d.deleted += std::max<int64_t>(dc - fc, 0);
        d.added += std::max<int64_t>(fc - dc, 0);
        d.kept += std::min(dc, fc);
        if (dc > fc) d.deleted_terms.insert(t);
        if (fc > dc) d.added_terms.insert(t);
        if (std::min(dc, fc) >= 1) d.kept_terms.insert(t);
    }
    d.change = d.final_.total - d.draft.total;
    if (d.kept + d.deleted != d.draft.total || d.kept + d.added != d.final_.total ||
        d.change != d.added - d.deleted)
        throw std::logic_error("occurrence accounting identity violated");
    return d;
}

struct SectionDelta {
    std::string note_id;
    std::string encounter_id;
    SectionLabel section = SectionLabel::OTHER;
    std::string clinician_id;
    SideDelta consumer;
    SideDelta clinical;
};

/// Matchers for the two dictionary sides, built once and shared across
/// sections (immutable after construction).
struct SideMatchers {
    TermMatcher consumer;
    TermMatcher clinical;

    SideMatchers() = default;
    SideMatchers(const TermDictionary& dict,
                 const std::unordered_map<std::string, int64_t>& token_freq = {})
        : consumer(dict.consumer_terms(), token_freq), clinical(dict.clinical_terms(), token_freq) {}
};

inline SectionDelta section_delta(const NoteSection& ns, const SideMatchers& matchers) {
    SectionDelta d;
    d.note_id = ns.note_id;
    d.encounter_id = ns.encounter_id;
    d.section = ns.section;
    d.clinician_id = ns.clinician_id;
    auto draft_tokens = tokenize(ns.draft_text);
    auto final_tokens = tokenize(ns.final_text);
    d.consumer = make_side_delta(matchers.consumer.count_tokens(draft_tokens),
                                 matchers.consumer.count_tokens(final_tokens));
    d.clinical = make_side_delta(matchers.clinical.count_tokens(draft_tokens),
                                 matchers.clinical.count_tokens(final_tokens));
    return d;
}

inline SectionDelta section_delta(const NoteSection& ns, const TermDictionary& dict) {
    return section_delta(ns, SideMatchers(dict));
}

inline std::vector<SectionDelta> all_section_deltas(const Corpus& corpus, const TermDictionary& dict) {
    SideMatchers matchers(dict, corpus_token_frequencies(corpus));
    std::vector<SectionDelta> out;
    out.reserve(corpus.sections.size());
    for (const auto& ns : corpus.sections) out.push_back(section_delta(ns, matchers));
    return out;
}

/// Per-note rollup. Totals are sums of section changes; unique changes are
/// recomputed from the union of matched terms across the note's sections.
struct NoteChange {
    std::string note_id;
    std::string clinician_id;
    int64_t consumer_draft_total = 0, consumer_final_total = 0, consumer_change = 0;
    int64_t clinical_draft_total = 0, clinical_final_total = 0, clinical_change = 0;
    int64_t consumer_unique_change = 0;
    int64_t clinical_unique_change = 0;
    int64_t consumer_draft_unique = 0, consumer_final_unique = 0;
    int64_t clinical_draft_unique = 0, clinical_final_unique = 0;
};

inline std::vector<NoteChange> aggregate_notes(const std::vector<SectionDelta>& deltas) {
    struct Acc {
        NoteChange change;
        std::set<std::string> cons_draft, cons_final, clin_draft, clin_final;
    };
    std::map<std::string, Acc> by_note;
    for (const auto& d : deltas) {
        auto& acc = by_note[d.note_id];
        acc.change.note_id = d.note_id;
        acc.change.clinician_id = d.clinician_id;
        acc.change.consumer_draft_total += d.consumer.draft.total;
        acc.change.consumer_final_total += d.consumer.final_.total;
        acc.change.clinical_draft_total += d.clinical.draft.total;
        acc.change.clinical_final_total += d.clinical.final_.total;
        for (const auto& [t, _] : d.consumer.draft.per_term) acc.cons_draft.insert(t);
        for (const auto& [t, _] : d.consumer.final_.per_term) acc.cons_final.insert(t);
        for (const auto& [t, _] : d.clinical.draft.per_term) acc.clin_draft.insert(t);
        for (const auto& [t, _] : d.clinical.final_.per_term) acc.clin_final.insert(t);
    }
    std::vector<NoteChange> out;
    out.reserve(by_note.size());
    for (auto& [_, acc] : by_note) {
        NoteChange& n = acc.change;
        n.consumer_change = n.consumer_final_total - n.consumer_draft_total;
        n.clinical_change = n.clinical_final_total - n.clinical_draft_total;
        n.consumer_draft_unique = static_cast<int64_t>(acc.cons_draft.size());
        n.consumer_final_unique = static_cast<int64_t>(acc.cons_final.size());
        n.clinical_draft_unique = static_cast<int64_t>(acc.clin_draft.size());
        n.clinical_final_unique = static_cast<int64_t>(acc.clin_final.size());
        n.consumer_unique_change = n.consumer_final_unique - n.consumer_draft_unique;
        n.clinical_unique_change = n.clinical_final_unique - n.clinical_draft_unique;
        out.push_back(std::move(n));
    }
    return out;
}

/// One row of the per-section editing-intensity table. OTHER sections are
/// excluded from this table; empty groups are omitted with a warning.
struct SectionTableRow {
    SectionLabel section = SectionLabel::OTHER;
    int64_t n_sections = 0;
    int64_t consumer_deleted = 0, consumer_added = 0, consumer_kept = 0;
    int64_t clinical_added = 0;
    double consumer_deleted_per_note = 0.0;
    double consumer_added_per_note = 0.0;
    double clinical_added_per_note = 0.0;
    double deletion_pct = 0.0;  // deleted / (deleted + kept) * 100
    double net_consumer_change = 0.0;
};

/// deleted/kept aggregates -> mean deletions per note-section and the
/// percentage of draft occurrences removed.
inline double deletions_per_note(int64_t deleted, int64_t n_sections) {
    return n_sections > 0 ? static_cast<double>(deleted) / static_cast<double>(n_sections) : 0.0;
}

inline double deletion_percentage(int64_t deleted, int64_t kept) {
    int64_t denom = deleted + kept;
    return denom > 0 ? 100.0 * static_cast<double>(deleted) / static_cast<double>(denom) : 0.0;
}

inline std::vector<SectionTableRow> section_table(const std::vector<SectionDelta>& deltas,
                                                  std::vector<std::string>* warnings = nullptr) {
    const SectionLabel order[] = {SectionLabel::HPI, SectionLabel::AP, SectionLabel::RESULTS,
                                  SectionLabel::PHYSICAL_EXAM};
    std::vector<SectionTableRow> rows;
    for (SectionLabel label : order) {
        SectionTableRow row;
        row.section = label;
        for (const auto& d : deltas) {
            if (d.section != label) continue;
            ++row.n_sections;
            row.consumer_deleted += d.consumer.deleted;
            row.consumer_added += d.consumer.added;
            row.consumer_kept += d.consumer.kept;
            row.clinical_added += d.clinical.added;
        }
        if (row.n_sections == 0) {
            if (warnings)
                warnings->push_back(std::string("section table: no sections labeled ") + to_string(label));
            continue;
        }
        row.consumer_deleted_per_note = deletions_per_note(row.consumer_deleted, row.n_sections);
        row.consumer_added_per_note = deletions_per_note(row.consumer_added, row.n_sections);
        row.clinical_added_per_note = deletions_per_note(row.clinical_added, row.n_sections);
        row.deletion_pct = deletion_percentage(row.consumer_deleted, row.consumer_kept);
        row.net_consumer_change = row.consumer_added_per_note - row.consumer_deleted_per_note;
        rows.push_back(row);
    }
    return rows;
}

/// Corpus-wide totals. Unique counts are distinct matched terms over the
/// whole corpus side, not sums of per-section uniques. percent_change is
/// empty when the draft total is zero.
struct CorpusSummaryRow {
    int64_t draft = 0;
    int64_t final_ = 0;
    int64_t change = 0;
    std::optional<double> percent_change;
};

struct CorpusSummary {
    CorpusSummaryRow consumer_total, consumer_unique, clinical_total, clinical_unique;
};

inline CorpusSummaryRow make_summary_row(int64_t draft, int64_t final_total) {
    CorpusSummaryRow r;
    r.draft = draft;
    r.final_ = final_total;
    r.change = final_total - draft;
    if (draft != 0) r.percent_change = 100.0 * static_cast<double>(r.change) / static_cast<double>(draft);
    return r;
}

inline CorpusSummary corpus_summary(const std::vector<SectionDelta>& deltas) {
    int64_t cons_draft = 0, cons_final = 0, clin_draft = 0, clin_final = 0;
    std::set<std::string> cons_draft_terms, cons_final_terms, clin_draft_terms, clin_final_terms;
    for (const auto& d : deltas) {
        cons_draft += d.consumer.draft.total;
        cons_final += d.consumer.final_.total;
        clin_draft += d.clinical.draft.total;
        clin_final += d.clinical.final_.total;
        for (const auto& [t, _] : d.consumer.draft.per_term) cons_draft_terms.insert(t);
        for (const auto& [t, _] : d.consumer.final_.per_term) cons_final_terms.insert(t);
        for (const auto& [t, _] : d.clinical.draft.per_term) clin_draft_terms.insert(t);
        for (const auto& [t, _] : d.clinical.final_.per_term) clin_final_terms.insert(t);
    }
    CorpusSummary s;
    s.consumer_total = make_summary_row(cons_draft, cons_final);
    s.consumer_unique = make_summary_row(static_cast<int64_t>(cons_draft_terms.size()),
                                         static_cast<int64_t>(cons_final_terms.size()));
    s.clinical_total = make_summary_row(clin_draft, clin_final);
    s.clinical_unique = make_summary_row(static_cast<int64_t>(clin_draft_terms.size()),
                                         static_cast<int64_t>(clin_final_terms.size()));
    return s;
}

inline CorpusSummary corpus_summary(const Corpus& corpus, const TermDictionary& dict) {
    return corpus_summary(all_section_deltas(corpus, dict));
}

}  // namespace termshift
