#pragma once

#include <algorithm>
#include <cstdint>
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

#include "termshift/dictionary.hpp"
#include "termshift/matcher.hpp"
#include "termshift/strings.hpp"

namespace termshift {

enum class SectionLabel { HPI, AP, RESULTS, PHYSICAL_EXAM, OTHER };

inline const char* to_string(SectionLabel s) {
    switch (s) {
        case SectionLabel::HPI: return "HPI";
        case SectionLabel::AP: return "AP";
        case SectionLabel::RESULTS: return "RESULTS";
        case SectionLabel::PHYSICAL_EXAM: return "PHYSICAL_EXAM";
        case SectionLabel::OTHER: return "OTHER";
    }
    return "OTHER";
}

/// Case-insensitive label normalization; unrecognized labels map to OTHER.
inline SectionLabel parse_section_label(std::string_view raw) {
    // compare on lowercase alphanumerics only, so "A&P", "a_p" and
    // "Assessment and Plan" all normalize predictably
    std::string key;
    for (char c : raw)
        if (ascii_alnum(c)) key.push_back(ascii_lower(c));
    if (key == "hpi" || key == "historyofpresentillness") return SectionLabel::HPI;
    if (key == "ap" || key == "assessmentandplan" || key == "assessmentplan")
        return SectionLabel::AP;
    if (key == "results" || key == "result") return SectionLabel::RESULTS;
    if (key == "physicalexam" || key == "physicalexamination" || key == "pe")
        return SectionLabel::PHYSICAL_EXAM;
    return SectionLabel::OTHER;
}

enum class Credential { MD, DO, NP, PA, OD, UNKNOWN };
enum class SpecialtyGroup { MEDICAL, PRIMARY_CARE, SURGICAL, UNKNOWN };

inline const char* to_string(Credential c) {
    switch (c) {
        case Credential::MD: return "MD";
        case Credential::DO: return "DO";
        case Credential::NP: return "NP";
        case Credential::PA: return "PA";
        case Credential::OD: return "OD";
        case Credential::UNKNOWN: return "UNKNOWN";
    }
    return "UNKNOWN";
}

inline const char* to_string(SpecialtyGroup s) {
    switch (s) {
        case SpecialtyGroup::MEDICAL: return "MEDICAL";
        case SpecialtyGroup::PRIMARY_CARE: return "PRIMARY_CARE";
        case SpecialtyGroup::SURGICAL: return "SURGICAL";
        case SpecialtyGroup::UNKNOWN: return "UNKNOWN";
    }
    return "UNKNOWN";
}

inline Credential parse_credential(std::string_view raw) {
    std::string k = to_lower(trim(raw));
    if (k == "md") return Credential::MD;
    if (k == "do") return Credential::DO;
    if (k == "np") return Credential::NP;
    if (k == "pa") return Credential::PA;
    if (k == "od") return Credential::OD;
    return Credential::UNKNOWN;
}

inline SpecialtyGroup parse_specialty_group(std::string_view raw) {
    std::string key;
    for (char c : raw)
        if (ascii_alnum(c)) key.push_back(ascii_lower(c));
    if (key == "medical" || key == "medicalspecialty") return SpecialtyGroup::MEDICAL;
    if (key == "primarycare") return SpecialtyGroup::PRIMARY_CARE;
    if (key == "surgical" || key == "surgicalspecialty") return SpecialtyGroup::SURGICAL;
    return SpecialtyGroup::UNKNOWN;
}

struct Clinician {
    std::string clinician_id;
    Credential credential = Credential::UNKNOWN;
    SpecialtyGroup specialty_group = SpecialtyGroup::UNKNOWN;
};

/// One paired draft/final unit keyed by (note_id, section).
struct NoteSection {
    std::string note_id;
    std::string encounter_id;
    SectionLabel section = SectionLabel::OTHER;
    std::string draft_text;
    std::string final_text;
    std::string clinician_id;
};

struct MalformedRecordError : SchemaError {
    MalformedRecordError(size_t line, const std::string& what)
        : SchemaError("record line " + std::to_string(line) + ": " + what), line_number(line) {}
    size_t line_number;
};

struct IngestReport {
    int64_t records_read = 0;
    int64_t records_kept = 0;      // records landing in a retained note-section
    int64_t records_excluded = 0;  // records of a note-section missing one side
    int64_t sections_kept = 0;
    int64_t sections_excluded = 0;
    std::vector<std::pair<std::string, std::string>> excluded_sections;  // (note_id, section label)
    std::vector<std::string> warnings;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json excluded = nlohmann::ordered_json::array();
        for (const auto& [note, sec] : excluded_sections)
            excluded.push_back({{"note_id", note}, {"section", sec}});
        return nlohmann::ordered_json{
            {"records_read", records_read},       {"records_kept", records_kept},
            {"records_excluded", records_excluded}, {"sections_kept", sections_kept},
            {"sections_excluded", sections_excluded}, {"excluded_sections", excluded},
            {"warnings", warnings},
        };
    }
};

class Corpus {
  public:
    std::vector<NoteSection> sections;              // sorted by (note_id, section)
    std::map<std::string, Clinician> clinicians;    // id -> metadata
    IngestReport report;

    const NoteSection* find(const std::string& note_id, SectionLabel label) const {
        for (const auto& s : sections)
            if (s.note_id == note_id && s.section == label) return &s;
        return nullptr;
    }

    bool empty() const { return sections.empty(); }
};

namespace detail {

struct Fragment {
    int64_t order_key;   // fragment_index when given, else INT64_MAX
    int64_t input_seq;   // tiebreak preserving input order
    std::string text;
};

struct SectionAccum {
    std::string encounter_id;
    std::string clinician_id;
    std::vector<Fragment> draft, final_;
    int64_t record_count = 0;
    int64_t first_seen = 0;
};

inline std::string join_fragments(std::vector<Fragment>& frags) {
    std::stable_sort(frags.begin(), frags.end(), [](const Fragment& a, const Fragment& b) {
        if (a.order_key != b.order_key) return a.order_key < b.order_key;
        return a.input_seq < b.input_seq;
    });
    std::string out;
    for (size_t i = 0; i < frags.size(); ++i) {
        if (i) out.push_back(' ');
        out += frags[i].text;
    }
    return out;
}

inline std::string require_string(const nlohmann::json& j, const char* key, size_t line) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
        throw MalformedRecordError(line, std::string("missing or non-string field '") + key + "'");
    return it->get<std::string>();
}

}  // namespace detail

/// Ingests corpus JSONL. Each line is a fragment record:
///   {"note_id","encounter_id","section","side":"draft"|"final","text",
///    "clinician_id","credential"?,"specialty_group"?,"fragment_index"?}
/// or the paired form with "draft" and "final" keys replacing side/text.
/// Fragments sharing (note_id, section, side) are joined with single
/// spaces, ordered by fragment_index then input order. A note-section
/// missing either side is excluded and listed in the report.
inline Corpus ingest_corpus(std::istream& in) {
    Corpus corpus;
    // key = (note_id, section)
    std::map<std::pair<std::string, SectionLabel>, detail::SectionAccum> accums;
    std::string line;
    size_t lineno = 0;
    int64_t seq = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        ++corpus.report.records_read;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!j.is_object()) throw MalformedRecordError(lineno, "record is not a JSON object");

        std::string note_id = detail::require_string(j, "note_id", lineno);
        std::string section_raw = detail::require_string(j, "section", lineno);
        std::string clinician_id = detail::require_string(j, "clinician_id", lineno);
        std::string encounter_id = j.value("encounter_id", std::string());
        SectionLabel label = parse_section_label(section_raw);

        int64_t order_key = INT64_MAX;
        if (auto it = j.find("fragment_index"); it != j.end()) {
            if (!it->is_number_integer())
                throw MalformedRecordError(lineno, "fragment_index must be an integer");
            order_key = it->get<int64_t>();
        }

        bool paired = j.contains("draft") || j.contains("final");
        bool sided = j.contains("side") || j.contains("text");
        if (paired == sided)
            throw MalformedRecordError(lineno, "record must carry either side/text or draft/final");

        auto& acc = accums[{note_id, label}];
        if (acc.record_count == 0) {
            acc.encounter_id = encounter_id;
            acc.clinician_id = clinician_id;
            acc.first_seen = seq;
        } else if (acc.clinician_id != clinician_id) {
            corpus.report.warnings.push_back("note " + note_id + " section " + to_string(label) +
                                             ": conflicting clinician_id '" + clinician_id +
                                             "' (keeping '" + acc.clinician_id + "')");
        }
        ++acc.record_count;

        if (paired) {
            std::string draft = detail::require_string(j, "draft", lineno);
            std::string final_text = detail::require_string(j, "final", lineno);
            acc.draft.push_back(detail::Fragment{order_key, seq, std::move(draft)});
            acc.final_.push_back(detail::Fragment{order_key, seq, std::move(final_text)});
        } else {
            std::string side = detail::require_string(j, "side", lineno);
            std::string text = detail::require_string(j, "text", lineno);
            std::string side_l = to_lower(trim(side));
            if (side_l == "draft")
                acc.draft.push_back(detail::Fragment{order_key, seq, std::move(text)});
            else if (side_l == "final")
                acc.final_.push_back(detail::Fragment{order_key, seq, std::move(text)});
            else
                throw MalformedRecordError(lineno, "side must be 'draft' or 'final', got '" + side + "'");
        }

        // clinician registry: first record wins, conflicts warn
        auto [cit, inserted] = corpus.clinicians.try_emplace(clinician_id);
        Clinician& clin = cit->second;
        if (inserted) {
            clin.clinician_id = clinician_id;
            clin.credential = parse_credential(j.value("credential", std::string()));
            clin.specialty_group = parse_specialty_group(j.value("specialty_group", std::string()));
        } else {
            if (j.contains("credential")) {
                Credential c = parse_credential(j.value("credential", std::string()));
                if (clin.credential == Credential::UNKNOWN && c != Credential::UNKNOWN) {
                    clin.credential = c;  // fill in late metadata
                } else if (c != Credential::UNKNOWN && c != clin.credential) {
                    corpus.report.warnings.push_back("clinician " + clinician_id +
                                                     ": conflicting credential (first wins)");
                }
            }
            if (j.contains("specialty_group")) {
                SpecialtyGroup s = parse_specialty_group(j.value("specialty_group", std::string()));
                if (clin.specialty_group == SpecialtyGroup::UNKNOWN && s != SpecialtyGroup::UNKNOWN) {
                    clin.specialty_group = s;
                } else if (s != SpecialtyGroup::UNKNOWN && s != clin.specialty_group) {
                    corpus.report.warnings.push_back("clinician " + clinician_id +
                                                     ": conflicting specialty_group (first wins)");
                }
            }
        }
        ++seq;
    }

    for (auto& [key, acc] : accums) {
        if (acc.draft.empty() || acc.final_.empty()) {
            ++corpus.report.sections_excluded;
            corpus.report.records_excluded += acc.record_count;
            corpus.report.excluded_sections.emplace_back(key.first, to_string(key.second));
            continue;
        }
        ++corpus.report.sections_kept;
        corpus.report.records_kept += acc.record_count;
        NoteSection ns;
        ns.note_id = key.first;
        ns.section = key.second;
        ns.encounter_id = acc.encounter_id;
        ns.clinician_id = acc.clinician_id;
        ns.draft_text = detail::join_fragments(acc.draft);
        ns.final_text = detail::join_fragments(acc.final_);
        corpus.sections.push_back(std::move(ns));
    }
    // accums is an ordered map, so sections come out sorted by (note_id, section)
    return corpus;
}

inline Corpus ingest_corpus_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read corpus: " + path);
    return ingest_corpus(in);
}

/// Union of tokens from all draft and final texts, per the matcher's
/// token rule.
inline std::unordered_set<std::string> corpus_vocabulary(const Corpus& corpus) {
    std::unordered_set<std::string> vocab;
    for (const auto& s : corpus.sections) {
        for (auto& ts : tokenize(s.draft_text)) vocab.insert(std::move(ts.token));
        for (auto& ts : tokenize(s.final_text)) vocab.insert(std::move(ts.token));
    }
    return vocab;
}

/// Token frequencies across the corpus, used for rare-token index keys.
inline std::unordered_map<std::string, int64_t> corpus_token_frequencies(const Corpus& corpus) {
    std::unordered_map<std::string, int64_t> freq;
    for (const auto& s : corpus.sections) {
        for (auto& ts : tokenize(s.draft_text)) ++freq[ts.token];
        for (auto& ts : tokenize(s.final_text)) ++freq[ts.token];
    }
    return freq;
}

}  // namespace termshift
