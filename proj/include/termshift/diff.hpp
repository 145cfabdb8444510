#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "termshift/frequency.hpp"
#include "termshift/matcher.hpp"

namespace termshift {

/// One tagged term span for the annotated diff view.
struct DiffSpan {
    std::string term;
    std::string category;  // consumer_deleted|consumer_kept|consumer_added|clinical_kept|clinical_added
    size_t start = 0;
    size_t end = 0;
};

namespace detail {

/// For one side's occurrences of one matcher: the first min(draft, final)
/// occurrences of a term in text order are "kept", the rest are deleted
/// (draft) or added (final).
inline void categorize_side(const std::vector<Occurrence>& occurrences, const SideDelta& delta,
                            bool is_final, bool consumer_side, std::vector<DiffSpan>& out) {
    std::map<std::string, int64_t> seen;
    for (const auto& occ : occurrences) {
        int64_t idx = seen[occ.term]++;
        int64_t kept = std::min(delta.draft.count(occ.term), delta.final_.count(occ.term));
        std::string category;
        if (idx < kept) {
            category = consumer_side ? "consumer_kept" : "clinical_kept";
        } else if (is_final) {
            category = consumer_side ? "consumer_added" : "clinical_added";
        } else {
            if (!consumer_side) continue;  // clinical deletions are not tagged
            category = "consumer_deleted";
        }
        out.push_back(DiffSpan{occ.term, category, occ.start, occ.end});
    }
}

inline std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

/// Drops spans overlapping an earlier-starting (or longer) span so the
/// emitted HTML never nests tags. Counts in the header stay authoritative.
inline std::vector<DiffSpan> resolve_overlaps(std::vector<DiffSpan> spans) {
    std::sort(spans.begin(), spans.end(), [](const DiffSpan& a, const DiffSpan& b) {
        if (a.start != b.start) return a.start < b.start;
        if (a.end != b.end) return a.end > b.end;
        return a.category < b.category;
    });
    std::vector<DiffSpan> out;
    size_t cursor = 0;
    for (auto& s : spans) {
        if (s.start < cursor) continue;
        cursor = s.end;
        out.push_back(std::move(s));
    }
    return out;
}

inline std::string render_pane(const std::string& text, std::vector<DiffSpan> spans) {
    spans = resolve_overlaps(std::move(spans));
    std::string out;
    size_t cursor = 0;
    for (const auto& s : spans) {
        out += html_escape(std::string_view(text).substr(cursor, s.start - cursor));
        out += "<span class=\"" + s.category + "\" title=\"" + html_escape(s.term) + "\">";
        out += html_escape(std::string_view(text).substr(s.start, s.end - s.start));
        out += "</span>";
        cursor = s.end;
    }
    out += html_escape(std::string_view(text).substr(cursor));
    return out;
}

}  // namespace detail

/// Tagged spans for both panes, exposed separately for the optional JSON
/// span dump and for tests.
struct SectionDiff {
    SectionDelta delta;
    std::vector<DiffSpan> draft_spans;
    std::vector<DiffSpan> final_spans;
};

inline SectionDiff build_section_diff(const NoteSection& ns, const SideMatchers& matchers) {
    SectionDiff diff;
    diff.delta = section_delta(ns, matchers);
    detail::categorize_side(matchers.consumer.find_occurrences(ns.draft_text), diff.delta.consumer,
                            false, true, diff.draft_spans);
    detail::categorize_side(matchers.clinical.find_occurrences(ns.draft_text), diff.delta.clinical,
                            false, false, diff.draft_spans);
    detail::categorize_side(matchers.consumer.find_occurrences(ns.final_text), diff.delta.consumer,
                            true, true, diff.final_spans);
    detail::categorize_side(matchers.clinical.find_occurrences(ns.final_text), diff.delta.clinical,
                            true, false, diff.final_spans);
    auto by_pos = [](const DiffSpan& a, const DiffSpan& b) {
        if (a.start != b.start) return a.start < b.start;
        return a.end < b.end;
    };
    std::sort(diff.draft_spans.begin(), diff.draft_spans.end(), by_pos);
    std::sort(diff.final_spans.begin(), diff.final_spans.end(), by_pos);
    return diff;
}

/// Self-contained side-by-side HTML document with category-tagged term
/// spans and a header carrying the section's occurrence accounting.
inline std::string render_section_diff(const NoteSection& ns, const SideMatchers& matchers) {
    SectionDiff diff = build_section_diff(ns, matchers);
    const SideDelta& c = diff.delta.consumer;
    const SideDelta& k = diff.delta.clinical;

    std::ostringstream html;
    html << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
         << "<title>Section diff " << detail::html_escape(ns.note_id) << " / "
         << to_string(ns.section) << "</title>\n<style>\n"
         << "body { font-family: sans-serif; margin: 1.5em; }\n"
         << ".panes { display: flex; gap: 1em; }\n"
         << ".pane { flex: 1; border: 1px solid #ccc; padding: 1em; white-space: pre-wrap; }\n"
         << ".consumer_deleted { background: #f8c8c8; text-decoration: line-through; }\n"
         << ".consumer_added { background: #fce3b0; }\n"
         << ".consumer_kept { background: #d7ecf5; }\n"
         << ".clinical_added { background: #c9ecc9; font-weight: bold; }\n"
         << ".clinical_kept { background: #e4d9f2; }\n"
         << ".legend span { padding: 0 0.4em; margin-right: 0.6em; }\n"
         << "</style>\n</head>\n<body>\n";
    html << "<h2>NOTE " << detail::html_escape(ns.note_id) << " &mdash; "
         << to_string(ns.section) << "</h2>\n";
    html << "<p class=\"counts\">consumer removed/kept/added: <b>" << c.deleted << "/" << c.kept
         << "/" << c.added << "</b> | clinical added: <b>" << k.added << "</b>"
         << " (clinical removed/kept: " << k.deleted << "/" << k.kept << ")</p>\n";
    html << "<p class=\"legend\">"
         << "<span class=\"consumer_deleted\">consumer deleted</span>"
         << "<span class=\"consumer_added\">consumer added</span>"
         << "<span class=\"consumer_kept\">consumer kept</span>"
         << "<span class=\"clinical_added\">clinical added</span>"
         << "<span class=\"clinical_kept\">clinical kept</span></p>\n";
    html << "<div class=\"panes\">\n<div class=\"pane\"><h3>AI-generated draft</h3>\n"
         << detail::render_pane(ns.draft_text, diff.draft_spans) << "\n</div>\n"
         << "<div class=\"pane\"><h3>Clinician-edited final</h3>\n"
         << detail::render_pane(ns.final_text, diff.final_spans) << "\n</div>\n</div>\n"
         << "</body>\n</html>\n";
    return html.str();
}

}  // namespace termshift
