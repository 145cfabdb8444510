#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "termshift/cluster.hpp"
#include "termshift/corpus.hpp"
#include "termshift/dictionary.hpp"
#include "termshift/diff.hpp"
#include "termshift/frequency.hpp"
#include "termshift/stats.hpp"
#include "termshift/synthgen.hpp"
#include "termshift/transform.hpp"
#include "termshift/version.hpp"

namespace termshift {

// exit codes shared by all subcommands
inline constexpr int EXIT_OK = 0;
inline constexpr int EXIT_SCHEMA_ERROR = 2;
inline constexpr int EXIT_EMPTY_CORPUS = 3;
inline constexpr int EXIT_LOOKUP_MISS = 4;

struct AnalysisConfig {
    std::vector<std::string> dictionary_sources;
    std::string exclusions_path;
    std::string dictionary_cache;  // prebuilt dictionary JSONL, used instead of sources
    std::string corpus_path;
    int min_term_chars = 4;
    bool min_length_both_sides = false;
    int phrase_min_tokens = 1;
    int phrase_max_tokens = 6;
    int relevance_threshold = 10;
    int kmeans_k = 3;
    uint64_t kmeans_seed = 20240101;
    int kmeans_restarts = 10;
    int eligibility_threshold = 10;
    std::string stop_list_path;  // empty -> bundled list
    std::string zero_change_definition = "both";  // both | consumer_only
    bool vocab_filter = false;
    std::string output_dir = "out";

    ZeroChangeDef zero_change_def() const {
        return zero_change_definition == "consumer_only" ? ZeroChangeDef::CONSUMER_ONLY
                                                         : ZeroChangeDef::CONSUMER_AND_CLINICAL;
    }

    TransformFilterConfig filter_config() const {
        TransformFilterConfig f;
        f.min_term_chars = min_term_chars;
        f.min_length_both_sides = min_length_both_sides;
        if (!stop_list_path.empty()) f.stop_words = load_stop_words(stop_list_path);
        return f;
    }

    DictionaryConfig dictionary_config() const {
        DictionaryConfig d;
        d.min_tokens = phrase_min_tokens;
        d.max_tokens = phrase_max_tokens;
        return d;
    }

    /// Canonical key=value form; also what the manifest hashes.
    std::string canonical() const {
        std::ostringstream out;
        out << "dictionary_cache=" << dictionary_cache << '\n'
            << "dictionary_sources=" << join(dictionary_sources, ";") << '\n'
            << "corpus=" << corpus_path << '\n'
            << "eligibility_threshold=" << eligibility_threshold << '\n'
            << "exclusions=" << exclusions_path << '\n'
            << "kmeans_k=" << kmeans_k << '\n'
            << "kmeans_restarts=" << kmeans_restarts << '\n'
            << "kmeans_seed=" << kmeans_seed << '\n'
            << "min_length_both_sides=" << (min_length_both_sides ? "true" : "false") << '\n'
            << "min_term_chars=" << min_term_chars << '\n'
            << "phrase_max_tokens=" << phrase_max_tokens << '\n'
            << "phrase_min_tokens=" << phrase_min_tokens << '\n'
            << "relevance_threshold=" << relevance_threshold << '\n'
            << "stop_list=" << stop_list_path << '\n'
            << "vocab_filter=" << (vocab_filter ? "true" : "false") << '\n'
            << "zero_change_definition=" << zero_change_definition << '\n';
        return out.str();
    }
};

/// Flat key = value config file; '#' starts a comment. Unknown keys are an
/// error so typos do not silently fall back to defaults.
inline void apply_config_file(AnalysisConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key == "dictionary_sources") cfg.dictionary_sources = split(value, ';');
        else if (key == "dictionary_cache") cfg.dictionary_cache = value;
        else if (key == "exclusions") cfg.exclusions_path = value;
        else if (key == "corpus") cfg.corpus_path = value;
        else if (key == "min_term_chars") cfg.min_term_chars = std::stoi(value);
        else if (key == "min_length_both_sides") cfg.min_length_both_sides = (value == "true" || value == "1");
        else if (key == "phrase_min_tokens") cfg.phrase_min_tokens = std::stoi(value);
        else if (key == "phrase_max_tokens") cfg.phrase_max_tokens = std::stoi(value);
        else if (key == "relevance_threshold") cfg.relevance_threshold = std::stoi(value);
        else if (key == "kmeans_k") cfg.kmeans_k = std::stoi(value);
        else if (key == "kmeans_seed") cfg.kmeans_seed = std::stoull(value);
        else if (key == "kmeans_restarts") cfg.kmeans_restarts = std::stoi(value);
        else if (key == "eligibility_threshold") cfg.eligibility_threshold = std::stoi(value);
        else if (key == "stop_list") cfg.stop_list_path = value;
        else if (key == "zero_change_definition") cfg.zero_change_definition = value;
        else if (key == "vocab_filter") cfg.vocab_filter = (value == "true" || value == "1");
        else if (key == "output_dir") cfg.output_dir = value;
        else throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (cfg.relevance_threshold < 0 || cfg.eligibility_threshold < 0 || cfg.min_term_chars < 0 ||
        cfg.kmeans_k < 1 || cfg.kmeans_restarts < 1)
        throw std::runtime_error(path + ": thresholds must be positive");
    if (cfg.phrase_min_tokens < 1 || cfg.phrase_max_tokens > 6 ||
        cfg.phrase_min_tokens > cfg.phrase_max_tokens)
        throw std::runtime_error(path + ": phrase token range must stay within [1,6]");
}

// ---------------------------------------------------------------------------
// formatting helpers

inline std::string fmt_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

inline std::string fmt_pct(const std::optional<double>& v) {
    return v ? fmt_fixed(*v, 1) : "n/a";
}

inline uint64_t file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(std::string_view(buf, static_cast<size_t>(in.gcount())), h);
    return h;
}

// ---------------------------------------------------------------------------
// shared pipeline state

struct PipelineData {
    TermDictionary dict;
    DictBuildReport dict_report;
    bool dict_from_cache = false;
    Corpus corpus;
    std::vector<SectionDelta> deltas;
};

/// Loads the dictionary (cache or sources) per config.
inline TermDictionary load_dictionary(const AnalysisConfig& cfg, DictBuildReport* report,
                                      const std::optional<std::unordered_set<std::string>>& vocab,
                                      bool* from_cache = nullptr) {
    if (!cfg.dictionary_cache.empty()) {
        if (from_cache) *from_cache = true;
        return TermDictionary::load_jsonl_file(cfg.dictionary_cache);
    }
    if (cfg.dictionary_sources.empty())
        throw std::runtime_error("no dictionary sources or cache configured");
    ExclusionList exclusions;
    if (!cfg.exclusions_path.empty()) exclusions = ExclusionList::load_file(cfg.exclusions_path);
    if (from_cache) *from_cache = false;
    return build_dictionary(cfg.dictionary_sources, exclusions, vocab, cfg.dictionary_config(), report);
}

inline PipelineData load_pipeline_data(const AnalysisConfig& cfg) {
    PipelineData data;
    data.corpus = ingest_corpus_file(cfg.corpus_path);
    std::optional<std::unordered_set<std::string>> vocab;
    if (cfg.vocab_filter) vocab = corpus_vocabulary(data.corpus);
    data.dict = load_dictionary(cfg, &data.dict_report, vocab, &data.dict_from_cache);
    data.deltas = all_section_deltas(data.corpus, data.dict);
    return data;
}

inline std::string config_to_json_string(const AnalysisConfig& cfg);

inline void write_manifest(const AnalysisConfig& cfg, const std::string& command,
                           const std::filesystem::path& outdir) {
    nlohmann::ordered_json j;
    j["tool"] = "termshift";
    j["version"] = VERSION;
    j["command"] = command;
    j["config"] = nlohmann::ordered_json::parse(config_to_json_string(cfg));
    j["config_hash"] = hex64(fnv1a64(cfg.canonical()));
    uint64_t dict_hash = 0;
    if (!cfg.dictionary_cache.empty()) {
        dict_hash = file_fingerprint(cfg.dictionary_cache);
    } else {
        for (const auto& s : cfg.dictionary_sources) dict_hash ^= file_fingerprint(s);
        if (!cfg.exclusions_path.empty()) dict_hash ^= file_fingerprint(cfg.exclusions_path);
    }
    j["dictionary_hash"] = hex64(dict_hash);
    j["corpus_hash"] = hex64(file_fingerprint(cfg.corpus_path));
    j["seed"] = cfg.kmeans_seed;
    std::ofstream out(outdir / "manifest.json", std::ios::binary);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// analyze: frequency tables + statistics

namespace detail {

struct SectionClinicianStats {
    SectionLabel section;
    std::vector<double> consumer_medians;  // one per clinician active in the section
    std::vector<double> clinical_medians;
    std::vector<double> removed_pct;  // per-clinician consumer removal percentage
};

inline std::vector<SectionClinicianStats> clinician_section_summaries(
    const std::vector<SectionDelta>& deltas) {
    const SectionLabel order[] = {SectionLabel::HPI, SectionLabel::AP, SectionLabel::RESULTS,
                                  SectionLabel::PHYSICAL_EXAM};
    std::vector<SectionClinicianStats> out;
    for (SectionLabel label : order) {
        struct Acc {
            std::vector<double> consumer_changes, clinical_changes;
            int64_t deleted = 0, kept = 0;
        };
        std::map<std::string, Acc> by_clin;
        for (const auto& d : deltas) {
            if (d.section != label) continue;
            auto& acc = by_clin[d.clinician_id];
            acc.consumer_changes.push_back(static_cast<double>(d.consumer.change));
            acc.clinical_changes.push_back(static_cast<double>(d.clinical.change));
            acc.deleted += d.consumer.deleted;
            acc.kept += d.consumer.kept;
        }
        SectionClinicianStats stats;
        stats.section = label;
        for (auto& [_, acc] : by_clin) {
            stats.consumer_medians.push_back(median(acc.consumer_changes));
            stats.clinical_medians.push_back(median(acc.clinical_changes));
            if (acc.deleted + acc.kept > 0)
                stats.removed_pct.push_back(deletion_percentage(acc.deleted, acc.kept));
        }
        if (!stats.consumer_medians.empty()) out.push_back(std::move(stats));
    }
    return out;
}

inline nlohmann::ordered_json stat_to_json(const std::string& name, const StatResult& r,
                                           std::optional<double> holm_p = std::nullopt,
                                           std::optional<double> median_change = std::nullopt) {
    nlohmann::ordered_json j;
    j["name"] = name;
    j["method"] = to_string(r.method);
    j["statistic"] = r.statistic;
    j["p_value"] = r.p_value;
    if (holm_p) j["holm_p"] = *holm_p;
    if (median_change) j["median_change"] = *median_change;
    j["n"] = r.sample_desc;
    j["exact"] = r.exact;
    j["degenerate"] = r.degenerate;
    return j;
}

}  // namespace detail

/// corpus_summary.csv, note_deltas.csv, section_table.csv,
/// section_heterogeneity.csv, specialty_table.csv, stats.json
inline void write_analysis_reports(const PipelineData& data, const AnalysisConfig& cfg,
                                   const std::filesystem::path& outdir,
                                   std::vector<std::string>* warnings = nullptr) {
    namespace fs = std::filesystem;
    const auto& deltas = data.deltas;

    // --- corpus_summary.csv: corpus-level totals per terminology type ---
    CorpusSummary summary = corpus_summary(deltas);
    {
        std::ofstream out(outdir / "corpus_summary.csv", std::ios::binary);
        write_csv_row(out, {"Terminology type", "Draft", "Final", "Change", "Change (%)"});
        auto row = [&](const char* name, const CorpusSummaryRow& r) {
            write_csv_row(out, {name, std::to_string(r.draft), std::to_string(r.final_),
                                std::to_string(r.change), fmt_pct(r.percent_change)});
        };
        row("Consumer terms (total)", summary.consumer_total);
        row("Consumer terms (unique)", summary.consumer_unique);
        row("Clinical terms (total)", summary.clinical_total);
        row("Clinical terms (unique)", summary.clinical_unique);
    }

    // --- note_deltas.csv ---
    std::vector<NoteChange> notes = aggregate_notes(deltas);
    {
        std::ofstream out(outdir / "note_deltas.csv", std::ios::binary);
        write_csv_row(out, {"note_id", "consumer_draft_total", "consumer_final_total",
                            "consumer_change", "clinical_draft_total", "clinical_final_total",
                            "clinical_change", "consumer_unique_change", "clinical_unique_change"});
        for (const auto& n : notes)
            write_csv_row(out, {n.note_id, std::to_string(n.consumer_draft_total),
                                std::to_string(n.consumer_final_total), std::to_string(n.consumer_change),
                                std::to_string(n.clinical_draft_total), std::to_string(n.clinical_final_total),
                                std::to_string(n.clinical_change), std::to_string(n.consumer_unique_change),
                                std::to_string(n.clinical_unique_change)});
    }

    // --- section_table.csv: per-section editing intensity ---
    {
        auto rows = section_table(deltas, warnings);
        std::ofstream out(outdir / "section_table.csv", std::ios::binary);
        write_csv_row(out, {"Section", "Sections (n)", "Consumer-term deleted (mean/note)",
                            "Consumer-term added (mean/note)", "Clinical-term added (mean/note)",
                            "Consumer-term deletion (%)", "Net consumer change"});
        for (const auto& r : rows)
            write_csv_row(out, {to_string(r.section), std::to_string(r.n_sections),
                                fmt_fixed(r.consumer_deleted_per_note, 2),
                                fmt_fixed(r.consumer_added_per_note, 2),
                                fmt_fixed(r.clinical_added_per_note, 2), fmt_fixed(r.deletion_pct, 1),
                                fmt_fixed(r.net_consumer_change, 2)});
    }

    // --- section_heterogeneity.csv: per-clinician medians by section ---
    auto section_stats = detail::clinician_section_summaries(deltas);
    {
        std::ofstream out(outdir / "section_heterogeneity.csv", std::ios::binary);
        write_csv_row(out, {"Section", "Clinicians (N)", "Median consumer-term change",
                            "IQR consumer", "Median clinical-term change", "IQR clinical",
                            "Median consumer removed (%)"});
        for (const auto& s : section_stats)
            write_csv_row(out, {to_string(s.section), std::to_string(s.consumer_medians.size()),
                                fmt_fixed(median(s.consumer_medians), 1),
                                fmt_fixed(iqr(s.consumer_medians), 1),
                                fmt_fixed(median(s.clinical_medians), 1),
                                fmt_fixed(iqr(s.clinical_medians), 1),
                                s.removed_pct.empty() ? "n/a" : fmt_fixed(median(s.removed_pct), 1)});
    }

    // --- specialty_table.csv: editing patterns by specialty group ---
    {
        struct Acc {
            std::set<std::string> clinicians;
            int64_t sections = 0;
            std::vector<double> consumer_changes, clinical_changes;  // per clinician
            std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_clin;
        };
        std::map<SpecialtyGroup, Acc> by_specialty;
        for (const auto& d : deltas) {
            auto cit = data.corpus.clinicians.find(d.clinician_id);
            SpecialtyGroup g =
                cit == data.corpus.clinicians.end() ? SpecialtyGroup::UNKNOWN : cit->second.specialty_group;
            auto& acc = by_specialty[g];
            acc.clinicians.insert(d.clinician_id);
            ++acc.sections;
            auto& pc = acc.per_clin[d.clinician_id];
            pc.first.push_back(static_cast<double>(d.consumer.change));
            pc.second.push_back(static_cast<double>(d.clinical.change));
        }
        std::ofstream out(outdir / "specialty_table.csv", std::ios::binary);
        write_csv_row(out, {"Specialty Group", "Clinicians (N)", "Note-sections (n)",
                            "Median consumer-term change", "Median clinical-term change",
                            "Mean consumer-term change", "Mean clinical-term change"});
        const SpecialtyGroup order[] = {SpecialtyGroup::MEDICAL, SpecialtyGroup::PRIMARY_CARE,
                                        SpecialtyGroup::SURGICAL, SpecialtyGroup::UNKNOWN};
        for (SpecialtyGroup g : order) {
            auto it = by_specialty.find(g);
            if (it == by_specialty.end()) continue;
            auto& acc = it->second;
            std::vector<double> cons_medians, clin_medians, cons_means, clin_means;
            for (auto& [_, pc] : acc.per_clin) {
                cons_medians.push_back(median(pc.first));
                clin_medians.push_back(median(pc.second));
                cons_means.push_back(mean(pc.first));
                clin_means.push_back(mean(pc.second));
            }
            write_csv_row(out, {to_string(g), std::to_string(acc.clinicians.size()),
                                std::to_string(acc.sections), fmt_fixed(median(cons_medians), 1),
                                fmt_fixed(median(clin_medians), 1), fmt_fixed(mean(cons_means), 1),
                                fmt_fixed(mean(clin_means), 1)});
        }
    }

    // --- stats.json ---
    {
        nlohmann::ordered_json stats = nlohmann::ordered_json::array();
        // note-level paired tests
        auto note_test = [&](const char* name, auto draft_of, auto final_of) {
            std::vector<std::pair<double, double>> pairs;
            std::vector<double> changes;
            for (const auto& n : notes) {
                pairs.emplace_back(draft_of(n), final_of(n));
                changes.push_back(final_of(n) - draft_of(n));
            }
            if (pairs.empty()) return;
            StatResult r = wilcoxon_signed_rank(pairs);
            stats.push_back(detail::stat_to_json(name, r, std::nullopt, median(changes)));
        };
        note_test("note_consumer_total",
                  [](const NoteChange& n) { return static_cast<double>(n.consumer_draft_total); },
                  [](const NoteChange& n) { return static_cast<double>(n.consumer_final_total); });
        note_test("note_clinical_total",
                  [](const NoteChange& n) { return static_cast<double>(n.clinical_draft_total); },
                  [](const NoteChange& n) { return static_cast<double>(n.clinical_final_total); });
        note_test("note_consumer_unique",
                  [](const NoteChange& n) { return static_cast<double>(n.consumer_draft_unique); },
                  [](const NoteChange& n) { return static_cast<double>(n.consumer_final_unique); });
        note_test("note_clinical_unique",
                  [](const NoteChange& n) { return static_cast<double>(n.clinical_draft_unique); },
                  [](const NoteChange& n) { return static_cast<double>(n.clinical_final_unique); });

        // Kruskal-Wallis across section types over per-clinician medians
        if (section_stats.size() >= 2) {
            std::vector<std::vector<double>> cons_groups, clin_groups;
            for (const auto& s : section_stats) {
                cons_groups.push_back(s.consumer_medians);
                clin_groups.push_back(s.clinical_medians);
            }
            stats.push_back(detail::stat_to_json("sections_consumer_median", kruskal_wallis(cons_groups)));
            stats.push_back(detail::stat_to_json("sections_clinical_median", kruskal_wallis(clin_groups)));

            // pairwise Mann-Whitney with Holm, per family
            auto pairwise = [&](const char* prefix, const std::vector<std::vector<double>>& groups) {
                std::vector<std::string> names;
                std::vector<StatResult> results;
                for (size_t i = 0; i < groups.size(); ++i)
                    for (size_t j = i + 1; j < groups.size(); ++j) {
                        names.push_back(std::string(prefix) + ":" + to_string(section_stats[i].section) +
                                        "_vs_" + to_string(section_stats[j].section));
                        results.push_back(mann_whitney_u(groups[i], groups[j]));
                    }
                std::vector<double> raw;
                for (const auto& r : results) raw.push_back(r.p_value);
                std::vector<double> holm = holm_correction(raw);
                for (size_t i = 0; i < results.size(); ++i)
                    stats.push_back(detail::stat_to_json(names[i], results[i], holm[i]));
            };
            pairwise("pairwise_consumer", cons_groups);
            pairwise("pairwise_clinical", clin_groups);
        }

        // Kruskal-Wallis across named specialty groups over per-clinician medians
        {
            std::map<SpecialtyGroup, std::map<std::string, std::vector<double>>> per_group;
            for (const auto& d : deltas) {
                auto cit = data.corpus.clinicians.find(d.clinician_id);
                SpecialtyGroup g = cit == data.corpus.clinicians.end() ? SpecialtyGroup::UNKNOWN
                                                                       : cit->second.specialty_group;
                if (g == SpecialtyGroup::UNKNOWN) continue;
                per_group[g][d.clinician_id].push_back(static_cast<double>(d.consumer.change));
            }
            std::vector<std::vector<double>> groups;
            for (auto& [_, clins] : per_group) {
                std::vector<double> medians;
                for (auto& [__, changes] : clins) medians.push_back(median(changes));
                if (!medians.empty()) groups.push_back(std::move(medians));
            }
            if (groups.size() >= 2)
                stats.push_back(detail::stat_to_json("specialty_consumer_median", kruskal_wallis(groups)));
        }

        std::ofstream out(outdir / "stats.json", std::ios::binary);
        out << stats.dump(2) << '\n';
    }
}

// ---------------------------------------------------------------------------
// transforms reports

inline void write_transform_reports(const PipelineData& data, const AnalysisConfig& cfg,
                                    const std::filesystem::path& outdir) {
    TransformFilterConfig filter = cfg.filter_config();

    // events from the already-computed deltas: presence = count >= 1
    std::vector<TransformationEvent> events;
    for (const auto& d : data.deltas) {
        for (const auto& [c, dc] : d.consumer.draft.per_term) {
            if (d.consumer.final_.count(c) > 0) continue;
            const auto* targets = data.dict.clinical_for(c);
            if (!targets) continue;
            for (const auto& k : *targets) {
                if (!filter.passes(c, k)) continue;
                if (d.clinical.draft.count(k) > 0) continue;
                if (d.clinical.final_.count(k) == 0) continue;
                events.push_back(TransformationEvent{d.note_id, d.section, c, k});
            }
        }
    }
    std::sort(events.begin(), events.end());

    {
        std::ofstream out(outdir / "events.jsonl", std::ios::binary);
        for (const auto& e : events) {
            nlohmann::ordered_json j{{"note_id", e.note_id},
                                     {"section", to_string(e.section)},
                                     {"consumer_term", e.consumer_term},
                                     {"clinical_term", e.clinical_term}};
            out << j.dump() << '\n';
        }
    }

    auto summaries = summarize_pairs(events, filter, cfg.relevance_threshold);
    {
        std::ofstream out(outdir / "pairs.csv", std::ios::binary);
        write_csv_row(out, {"consumer_term", "clinical_term", "event_count", "distinct_sections",
                            "survived_linguistic_filter", "meets_relevance_threshold"});
        for (const auto& s : summaries)
            write_csv_row(out, {s.pair.first, s.pair.second, std::to_string(s.event_count),
                                std::to_string(s.distinct_sections),
                                s.survived_linguistic_filter ? "true" : "false",
                                s.meets_relevance_threshold ? "true" : "false"});
    }
    {
        std::ofstream out(outdir / "pairs_reported.csv", std::ios::binary);
        write_csv_row(out, {"consumer_term", "clinical_term", "event_count", "distinct_sections"});
        for (const auto& s : summaries)
            if (s.survived_linguistic_filter && s.meets_relevance_threshold)
                write_csv_row(out, {s.pair.first, s.pair.second, std::to_string(s.event_count),
                                    std::to_string(s.distinct_sections)});
    }

    // section distribution of events
    {
        std::map<SectionLabel, int64_t> by_section;
        for (const auto& e : events) ++by_section[e.section];
        std::ofstream out(outdir / "section_distribution.csv", std::ios::binary);
        write_csv_row(out, {"Section", "Events", "Percent"});
        const SectionLabel order[] = {SectionLabel::HPI, SectionLabel::AP, SectionLabel::RESULTS,
                                      SectionLabel::PHYSICAL_EXAM, SectionLabel::OTHER};
        for (SectionLabel label : order) {
            auto it = by_section.find(label);
            if (it == by_section.end() && label == SectionLabel::OTHER) continue;
            int64_t n = it == by_section.end() ? 0 : it->second;
            double pct = events.empty() ? 0.0
                                        : 100.0 * static_cast<double>(n) /
                                              static_cast<double>(events.size());
            write_csv_row(out, {to_string(label), std::to_string(n), fmt_fixed(pct, 1)});
        }
    }

    // headline numbers
    {
        std::set<std::pair<std::string, SectionLabel>> event_sections;
        for (const auto& e : events) event_sections.insert({e.note_id, e.section});
        int64_t pairs_after_filter = 0, pairs_meeting_threshold = 0, reported_events = 0;
        for (const auto& s : summaries) {
            if (s.survived_linguistic_filter) ++pairs_after_filter;
            if (s.survived_linguistic_filter && s.meets_relevance_threshold) {
                ++pairs_meeting_threshold;
                reported_events += s.event_count;
            }
        }
        auto share = substitution_share(events, data.deltas);
        nlohmann::ordered_json j;
        j["events_total"] = events.size();
        j["note_sections_with_events"] = event_sections.size();
        j["pct_sections_with_events"] =
            data.deltas.empty() ? 0.0
                                : 100.0 * static_cast<double>(event_sections.size()) /
                                      static_cast<double>(data.deltas.size());
        j["unique_pairs_prefilter"] = summaries.size();
        j["pairs_after_linguistic_filter"] = pairs_after_filter;
        j["pairs_meeting_threshold"] = pairs_meeting_threshold;
        j["events_in_reported_pairs"] = reported_events;
        if (share) j["substitution_share"] = *share;
        else j["substitution_share"] = "n/a";
        std::ofstream out(outdir / "transform_summary.json", std::ios::binary);
        out << j.dump(2) << '\n';
    }
}

// ---------------------------------------------------------------------------
// clustering reports

inline void write_cluster_reports(const PipelineData& data, const AnalysisConfig& cfg,
                                  const std::filesystem::path& outdir,
                                  std::vector<std::string>* warnings = nullptr) {
    auto profiles = build_profiles(data.deltas, cfg.eligibility_threshold, cfg.zero_change_def());
    KMeansResult km;
    bool clustered = false;
    if (static_cast<int>(profiles.size()) >= cfg.kmeans_k) {
        km = cluster_profiles(profiles, cfg.kmeans_k, cfg.kmeans_seed, cfg.kmeans_restarts);
        clustered = true;
        if (warnings)
            for (const auto& w : km.warnings) warnings->push_back(w);
    } else if (warnings) {
        warnings->push_back("clustering skipped: " + std::to_string(profiles.size()) +
                            " eligible clinicians < k=" + std::to_string(cfg.kmeans_k));
    }

    {
        std::ofstream out(outdir / "clinician_profiles.csv", std::ios::binary);
        write_csv_row(out, {"clinician_id", "section_volume", "mean_consumer_change",
                            "mean_clinical_change", "zero_change_rate", "zero_change_rate_consumer",
                            "cluster"});
        for (const auto& p : profiles)
            write_csv_row(out, {p.clinician_id, std::to_string(p.section_volume),
                                fmt_fixed(p.mean_consumer_change, 2), fmt_fixed(p.mean_clinical_change, 2),
                                fmt_fixed(p.zero_change_rate, 4), fmt_fixed(p.zero_change_rate_consumer, 4),
                                p.cluster_label ? std::to_string(*p.cluster_label) : "n/a"});
    }
    {
        std::ofstream out(outdir / "clusters.csv", std::ios::binary);
        write_csv_row(out, {"Cluster", "n", "Percent", "Mean consumer-term change",
                            "Mean clinical-term change", "Zero-change rate (%)"});
        if (clustered) {
            for (const auto& row : profile_report(profiles, cfg.kmeans_k))
                write_csv_row(out, {std::to_string(row.cluster), std::to_string(row.n),
                                    fmt_fixed(row.pct, 1), fmt_fixed(row.mean_consumer_change, 1),
                                    fmt_fixed(row.mean_clinical_change, 1),
                                    fmt_fixed(100.0 * row.mean_zero_change_rate, 1)});
        }
    }
    if (clustered) {
        nlohmann::ordered_json j;
        j["k"] = cfg.kmeans_k;
        j["seed"] = cfg.kmeans_seed;
        j["restarts"] = cfg.kmeans_restarts;
        j["best_restart"] = km.best_restart;
        j["sse"] = km.sse;
        j["degenerate"] = km.degenerate;
        std::ofstream out(outdir / "clustering.json", std::ios::binary);
        out << j.dump(2) << '\n';
    }
}

// ---------------------------------------------------------------------------
// subcommand entry points (shared by the CLI binary and tests)

inline void write_run_manifest(const AnalysisConfig& cfg, const std::string& command,
                               const std::string& path) {
    nlohmann::ordered_json j;
    j["tool"] = "termshift";
    j["version"] = VERSION;
    j["command"] = command;
    j["config_hash"] = hex64(fnv1a64(cfg.canonical()));
    uint64_t dict_hash = 0;
    if (!cfg.dictionary_cache.empty()) {
        dict_hash = file_fingerprint(cfg.dictionary_cache);
    } else {
        for (const auto& s : cfg.dictionary_sources) dict_hash ^= file_fingerprint(s);
        if (!cfg.exclusions_path.empty()) dict_hash ^= file_fingerprint(cfg.exclusions_path);
    }
    j["dictionary_hash"] = hex64(dict_hash);
    j["seed"] = cfg.kmeans_seed;
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
}

inline int cmd_build_dict(const AnalysisConfig& cfg, const std::string& out_path,
                          const std::string& report_path, const std::string& vocab_corpus,
                          std::ostream& log) {
    try {
        std::optional<std::unordered_set<std::string>> vocab;
        if (!vocab_corpus.empty()) vocab = corpus_vocabulary(ingest_corpus_file(vocab_corpus));
        else if (cfg.vocab_filter && !cfg.corpus_path.empty())
            vocab = corpus_vocabulary(ingest_corpus_file(cfg.corpus_path));
        DictBuildReport report;
        TermDictionary dict = load_dictionary(cfg, &report, vocab);
        dict.save_jsonl_file(out_path);
        if (!report_path.empty()) {
            std::ofstream rf(report_path, std::ios::binary);
            rf << report.to_json().dump(2) << '\n';
        }
        write_run_manifest(cfg, "build-dict", out_path + ".manifest.json");
        log << "dictionary: " << dict.size() << " entries -> " << out_path << "\n";
        return EXIT_OK;
    } catch (const SchemaError& e) {
        log << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    }
}

inline int run_reports(const AnalysisConfig& cfg, const std::string& command, bool analyze,
                       bool transforms, bool cluster, std::ostream& log) {
    namespace fs = std::filesystem;
    try {
        fs::create_directories(cfg.output_dir);
        PipelineData data = load_pipeline_data(cfg);
        if (data.corpus.empty()) {
            log << "error: corpus is empty (" << cfg.corpus_path << ")\n";
            return EXIT_EMPTY_CORPUS;
        }
        if (data.dict.empty()) log << "warning: dictionary is empty; reports will carry zero counts\n";
        std::vector<std::string> warnings = data.corpus.report.warnings;
        if (cfg.vocab_filter && !cfg.dictionary_cache.empty())
            warnings.push_back("vocab_filter has no effect on a prebuilt dictionary cache; "
                               "apply it at build-dict time");
        fs::path outdir(cfg.output_dir);
        if (analyze) write_analysis_reports(data, cfg, outdir, &warnings);
        if (transforms) write_transform_reports(data, cfg, outdir);
        if (cluster) write_cluster_reports(data, cfg, outdir, &warnings);
        {
            std::ofstream rf(outdir / "ingest_report.json", std::ios::binary);
            rf << data.corpus.report.to_json().dump(2) << '\n';
        }
        write_manifest(cfg, command, outdir);
        for (const auto& w : warnings) log << "warning: " << w << "\n";
        log << command << ": reports written to " << cfg.output_dir << "\n";
        return EXIT_OK;
    } catch (const MalformedRecordError& e) {
        log << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    } catch (const SchemaError& e) {
        log << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    }
}

inline int cmd_diff(const AnalysisConfig& cfg, const std::string& note_id,
                    const std::string& section_name, const std::string& out_path,
                    const std::string& spans_json_path, std::ostream& log) {
    try {
        PipelineData data;
        data.corpus = ingest_corpus_file(cfg.corpus_path);
        if (data.corpus.empty()) {
            log << "error: corpus is empty\n";
            return EXIT_EMPTY_CORPUS;
        }
        std::optional<std::unordered_set<std::string>> vocab;
        if (cfg.vocab_filter) vocab = corpus_vocabulary(data.corpus);
        data.dict = load_dictionary(cfg, nullptr, vocab);
        SectionLabel label = parse_section_label(section_name);
        const NoteSection* ns = data.corpus.find(note_id, label);
        if (!ns) {
            log << "error: no note-section (" << note_id << ", " << to_string(label) << ")\n";
            return EXIT_LOOKUP_MISS;
        }
        SideMatchers matchers(data.dict, corpus_token_frequencies(data.corpus));
        std::string html = render_section_diff(*ns, matchers);
        {
            nlohmann::ordered_json m;
            m["tool"] = "termshift";
            m["version"] = VERSION;
            m["command"] = "diff";
            m["config_hash"] = hex64(fnv1a64(cfg.canonical()));
            m["corpus_hash"] = hex64(file_fingerprint(cfg.corpus_path));
            m["seed"] = cfg.kmeans_seed;
            html += "<!-- manifest " + m.dump() + " -->\n";
        }
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << html;
        if (!spans_json_path.empty()) {
            SectionDiff diff = build_section_diff(*ns, matchers);
            nlohmann::ordered_json j;
            auto spans_json = [](const std::vector<DiffSpan>& spans) {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (const auto& s : spans)
                    arr.push_back({{"term", s.term},
                                   {"category", s.category},
                                   {"start", s.start},
                                   {"end", s.end}});
                return arr;
            };
            j["note_id"] = note_id;
            j["section"] = to_string(label);
            j["draft_spans"] = spans_json(diff.draft_spans);
            j["final_spans"] = spans_json(diff.final_spans);
            std::ofstream sj(spans_json_path, std::ios::binary);
            sj << j.dump(2) << '\n';
        }
        log << "diff written to " << out_path << "\n";
        return EXIT_OK;
    } catch (const MalformedRecordError& e) {
        log << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    }
}

inline std::string config_to_json_string(const AnalysisConfig& cfg) {
    nlohmann::ordered_json j;
    j["dictionary_sources"] = cfg.dictionary_sources;
    j["dictionary_cache"] = cfg.dictionary_cache;
    j["exclusions"] = cfg.exclusions_path;
    j["corpus"] = cfg.corpus_path;
    j["min_term_chars"] = cfg.min_term_chars;
    j["min_length_both_sides"] = cfg.min_length_both_sides;
    j["phrase_min_tokens"] = cfg.phrase_min_tokens;
    j["phrase_max_tokens"] = cfg.phrase_max_tokens;
    j["relevance_threshold"] = cfg.relevance_threshold;
    j["kmeans_k"] = cfg.kmeans_k;
    j["kmeans_seed"] = cfg.kmeans_seed;
    j["kmeans_restarts"] = cfg.kmeans_restarts;
    j["eligibility_threshold"] = cfg.eligibility_threshold;
    j["stop_list"] = cfg.stop_list_path;
    j["zero_change_definition"] = cfg.zero_change_definition;
    j["vocab_filter"] = cfg.vocab_filter;
    // output_dir is deliberately omitted: the manifest describes what the
    // outputs contain, not where this run happened to place them
    return j.dump();
}

}  // namespace termshift
