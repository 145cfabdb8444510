#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "termshift/corpus.hpp"
#include "termshift/dictionary.hpp"
#include "termshift/transform.hpp"

namespace termshift {

enum class ProfileKind { MINIMAL, MODERATE, HIGH };
enum class ConfoundKind { CLINICAL_ALREADY_IN_DRAFT, CONSUMER_PARTIALLY_KEPT, INCIDENTAL_DELETION };

inline const char* to_string(ConfoundKind k) {
    switch (k) {
        case ConfoundKind::CLINICAL_ALREADY_IN_DRAFT: return "clinical-already-in-draft";
        case ConfoundKind::CONSUMER_PARTIALLY_KEPT: return "consumer-partially-kept";
        case ConfoundKind::INCIDENTAL_DELETION: return "incidental-deletion";
    }
    return "?";
}

inline ConfoundKind parse_confound_kind(const std::string& s) {
    if (s == "clinical-already-in-draft") return ConfoundKind::CLINICAL_ALREADY_IN_DRAFT;
    if (s == "consumer-partially-kept") return ConfoundKind::CONSUMER_PARTIALLY_KEPT;
    if (s == "incidental-deletion") return ConfoundKind::INCIDENTAL_DELETION;
    throw std::invalid_argument("unknown confound kind: " + s);
}

struct InjectionPlan {
    std::string consumer;
    std::string clinical;
    int sections = 1;
};

struct ConfoundPlan {
    std::string consumer;
    std::string clinical;
    ConfoundKind kind = ConfoundKind::CLINICAL_ALREADY_IN_DRAFT;
    int sections = 1;
};

struct SynthSpec {
    uint64_t seed = 1;
    int clinicians = 20;
    double mix_minimal = 0.05;
    double mix_moderate = 0.80;
    double mix_high = 0.15;
    int notes = 200;
    std::vector<std::pair<int, double>> sections_per_note = {{1, 0.30}, {2, 0.40}, {3, 0.20}, {4, 0.10}};
    std::vector<std::pair<SectionLabel, double>> section_mix = {
        {SectionLabel::HPI, 0.486},
        {SectionLabel::AP, 0.342},
        {SectionLabel::RESULTS, 0.096},
        {SectionLabel::PHYSICAL_EXAM, 0.077},
    };
    int background_vocab = 400;
    int min_background_tokens = 40;
    int max_background_tokens = 100;
    int dictionary_entries = 400;    // total entries, decoys fill up the remainder
    int texture_consumer_pairs = 12; // pairs whose consumer side seeds filler edits
    int texture_clinical_pairs = 12; // pairs whose clinical side seeds filler edits
    bool record_spans = true;
    std::vector<InjectionPlan> injections;
    std::vector<ConfoundPlan> confounds;
    // per-section filler occurrence ranges by clinician profile
    int moderate_del_lo = 2, moderate_del_hi = 8;
    int high_del_lo = 60, high_del_hi = 140;
    double moderate_zero_rate = 0.06;
    double high_zero_rate = 0.02;
};

struct SideTruth {
    int64_t deleted = 0;
    int64_t added = 0;
    int64_t kept = 0;
};

struct SpanTruth {
    std::string side;      // "draft" | "final"
    std::string term;
    std::string category;  // consumer_deleted|consumer_kept|consumer_added|clinical_kept|clinical_added
    size_t start = 0;
    size_t end = 0;
};

struct SectionTruth {
    std::string note_id;
    SectionLabel section = SectionLabel::OTHER;
    std::string clinician_id;
    SideTruth consumer;
    SideTruth clinical;
    std::vector<SpanTruth> spans;
};

struct GroundTruth {
    uint64_t seed = 0;
    std::vector<TransformationEvent> events;
    std::vector<SectionTruth> sections;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json jevents = nlohmann::ordered_json::array();
        for (const auto& e : events)
            jevents.push_back({{"note_id", e.note_id},
                               {"section", to_string(e.section)},
                               {"consumer_term", e.consumer_term},
                               {"clinical_term", e.clinical_term}});
        nlohmann::ordered_json jsections = nlohmann::ordered_json::array();
        for (const auto& s : sections) {
            nlohmann::ordered_json spans = nlohmann::ordered_json::array();
            for (const auto& sp : s.spans)
                spans.push_back({{"side", sp.side},
                                 {"term", sp.term},
                                 {"category", sp.category},
                                 {"start", sp.start},
                                 {"end", sp.end}});
            jsections.push_back({{"note_id", s.note_id},
                                 {"section", to_string(s.section)},
                                 {"clinician_id", s.clinician_id},
                                 {"consumer",
                                  {{"deleted", s.consumer.deleted},
                                   {"added", s.consumer.added},
                                   {"kept", s.consumer.kept}}},
                                 {"clinical",
                                  {{"deleted", s.clinical.deleted},
                                   {"added", s.clinical.added},
                                   {"kept", s.clinical.kept}}},
                                 {"spans", spans}});
        }
        return nlohmann::ordered_json{{"seed", seed},
                                      {"total_sections", sections.size()},
                                      {"total_events", events.size()},
                                      {"events", jevents},
                                      {"sections", jsections}};
    }
};

struct SynthOutput {
    std::vector<std::string> corpus_lines;  // JSONL records
    std::vector<MappingEntry> mappings;     // dictionary source rows
    GroundTruth truth;
};

struct SynthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace synth_detail {

inline uint64_t rng_below(std::mt19937_64& rng, uint64_t n) { return n ? rng() % n : 0; }

inline int rng_range(std::mt19937_64& rng, int lo, int hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<int>(rng_below(rng, static_cast<uint64_t>(hi - lo + 1)));
}

inline double rng_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng_below(rng, i)]);
}

struct WordGen {
    std::mt19937_64& rng;
    std::unordered_set<std::string>& used;

    std::string raw_word(int lo, int hi) {
        static const char* consonants = "bcdfghjklmnprstvz";
        static const char* vowels = "aeiou";
        int len = rng_range(rng, lo, hi);
        std::string w;
        bool vowel_turn = rng_below(rng, 2) == 0;
        for (int i = 0; i < len; ++i) {
            if (vowel_turn) w.push_back(vowels[rng_below(rng, 5)]);
            else w.push_back(consonants[rng_below(rng, 17)]);
            vowel_turn = !vowel_turn;
        }
        return w;
    }

    // A word never seen before and never a stop word.
    std::string fresh(int lo = 4, int hi = 9) {
        for (int attempt = 0; attempt < 10000; ++attempt) {
            std::string w = raw_word(lo, hi);
            if (default_stop_words().count(w)) continue;
            if (used.insert(w).second) return w;
        }
        throw SynthError("word pool exhausted");
    }
};

// All contiguous token subsequences of a phrase, as normalized strings.
inline void collect_subsequences(const std::string& term, std::unordered_set<std::string>& out) {
    auto toks = split(term, ' ');
    for (size_t i = 0; i < toks.size(); ++i) {
        std::string acc;
        for (size_t j = i; j < toks.size(); ++j) {
            if (j > i) acc.push_back(' ');
            acc += toks[j];
            out.insert(acc);
        }
    }
}

struct SectionPlanRole {
    enum Kind { NONE, INJECTION, CONFOUND } kind = NONE;
    std::string consumer, clinical;
    ConfoundKind confound = ConfoundKind::CLINICAL_ALREADY_IN_DRAFT;
};

// Renders one side of a section: background tokens with punctuation/case
// noise, with term occurrences inserted into distinct slots so no two
// insertions are adjacent.
struct SideRender {
    std::string text;
    std::vector<std::pair<std::string, std::pair<size_t, size_t>>> spans;  // (term, [start,end))
};

inline SideRender render_side(std::mt19937_64& rng, const std::vector<std::string>& background_vocab,
                              const std::unordered_set<std::string>& dict_tokens,
                              std::vector<std::string> occurrences, int min_bg, int max_bg) {
    shuffle_vec(occurrences, rng);
    int bg_count = rng_range(rng, min_bg, max_bg);
    int needed = static_cast<int>(occurrences.size());
    if (bg_count < 2 * needed + 1) bg_count = 2 * needed + 1;

    // distinct slots in [0, bg_count]; slot s renders before background token s
    std::vector<int> slots(static_cast<size_t>(bg_count) + 1);
    for (size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<int>(i);
    shuffle_vec(slots, rng);
    slots.resize(static_cast<size_t>(needed));
    std::sort(slots.begin(), slots.end());

    static const char* separators[] = {" ", " ", " ", ", ", ". ", "; ", " ", ", ", " ", ". "};
    SideRender out;
    size_t occ_i = 0;
    auto emit_sep = [&]() {
        if (!out.text.empty()) out.text += separators[rng_below(rng, 10)];
    };
    auto emit_term = [&](const std::string& term) {
        emit_sep();
        size_t start = out.text.size();
        // occasional leading capital; spans unaffected by case variation
        std::string rendered = term;
        if (rng_below(rng, 4) == 0 && !rendered.empty() && rendered[0] >= 'a' && rendered[0] <= 'z')
            rendered[0] = static_cast<char>(rendered[0] - 'a' + 'A');
        out.text += rendered;
        out.spans.emplace_back(term, std::make_pair(start, out.text.size()));
    };
    auto emit_background = [&]() {
        emit_sep();
        std::string w = background_vocab[rng_below(rng, background_vocab.size())];
        uint64_t style = rng_below(rng, 20);
        if (style == 0) {
            // hyphenated or apostrophe compound; skip if it collides with a
            // dictionary token
            std::string w2 = background_vocab[rng_below(rng, background_vocab.size())];
            char joiner = rng_below(rng, 2) == 0 ? '-' : '\'';
            std::string compound = w + joiner + w2;
            if (!dict_tokens.count(compound)) w = compound;
        } else if (style == 1) {
            for (char& c : w) c = static_cast<char>(c - 'a' + 'A');
        } else if (style == 2) {
            w[0] = static_cast<char>(w[0] - 'a' + 'A');
        } else if (style == 3) {
            std::string candidate = w + std::to_string(rng_below(rng, 100));  // alnum token
            if (!dict_tokens.count(candidate)) w = candidate;
        }
        out.text += w;
    };

    for (int b = 0; b <= bg_count; ++b) {
        while (occ_i < slots.size() && slots[occ_i] == b) {
            emit_term(occurrences[occ_i]);
            ++occ_i;
        }
        if (b < bg_count) emit_background();
    }
    if (rng_below(rng, 3) == 0) out.text += ".";
    return out;
}

}  // namespace synth_detail

/// Deterministic synthetic paired-corpus generator. Dictionary-term token
/// pools are disjoint from the background vocabulary and inserted terms
/// are separated by background tokens, so the per-section ground truth is
/// exact by construction.
inline SynthOutput generate(const SynthSpec& spec) {
    using namespace synth_detail;
    if (spec.notes < 1) throw SynthError("spec: notes must be >= 1");
    if (spec.clinicians < 1) throw SynthError("spec: clinicians must be >= 1");
    double mix_sum = spec.mix_minimal + spec.mix_moderate + spec.mix_high;
    if (std::fabs(mix_sum - 1.0) > 1e-9) throw SynthError("spec: profile mix fractions must sum to 1");
    if (spec.background_vocab < 10) throw SynthError("spec: background_vocab must be >= 10");

    std::mt19937_64 rng(spec.seed);
    std::unordered_set<std::string> used_words;
    WordGen words{rng, used_words};

    TransformFilterConfig filter;  // defaults; injected pairs must pass it

    // --- explicit terms -----------------------------------------------------
    struct RolePair {
        std::string consumer, clinical;
    };
    std::set<std::string> consumer_inserted, clinical_inserted;
    auto normalize_plan_term = [&](const std::string& raw, const char* what) {
        std::string t = collapse_ws_lower(raw);
        if (t.empty()) throw SynthError(std::string("spec: empty ") + what + " term");
        int ntok = phrase_token_count(t);
        if (ntok < 1 || ntok > 6) throw SynthError("spec: term '" + t + "' must have 1-6 tokens");
        return t;
    };
    std::vector<InjectionPlan> injections;
    for (const auto& p : spec.injections) {
        InjectionPlan ip;
        ip.consumer = normalize_plan_term(p.consumer, "injection consumer");
        ip.clinical = normalize_plan_term(p.clinical, "injection clinical");
        ip.sections = p.sections;
        if (ip.sections < 0) throw SynthError("spec: negative injection section count");
        if (!filter.passes(ip.consumer, ip.clinical))
            throw SynthError("spec: injected pair ('" + ip.consumer + "' -> '" + ip.clinical +
                             "') would be excluded by the default detection filter");
        consumer_inserted.insert(ip.consumer);
        clinical_inserted.insert(ip.clinical);
        injections.push_back(std::move(ip));
    }
    std::vector<ConfoundPlan> confounds;
    for (const auto& p : spec.confounds) {
        ConfoundPlan cp;
        cp.consumer = normalize_plan_term(p.consumer, "confound consumer");
        cp.clinical = normalize_plan_term(p.clinical, "confound clinical");
        cp.kind = p.kind;
        cp.sections = p.sections;
        if (cp.sections < 0) throw SynthError("spec: negative confound section count");
        if (!filter.passes(cp.consumer, cp.clinical))
            throw SynthError("spec: confound pair ('" + cp.consumer + "' -> '" + cp.clinical +
                             "') would be excluded by the default detection filter");
        consumer_inserted.insert(cp.consumer);
        clinical_inserted.insert(cp.clinical);
        confounds.push_back(std::move(cp));
    }
    // reserve explicit tokens before generating anything
    for (const auto& t : consumer_inserted)
        for (const auto& ts : tokenize(t)) used_words.insert(ts.token);
    for (const auto& t : clinical_inserted)
        for (const auto& ts : tokenize(t)) used_words.insert(ts.token);

    // --- texture pools ------------------------------------------------------
    // pool A: consumer-side fillers (their clinical side is never inserted);
    // pool B: clinical-side fillers (their consumer side is never inserted)
    auto fresh_term = [&](int max_tokens) {
        int ntok = rng_range(rng, 1, max_tokens);
        std::vector<std::string> toks;
        for (int i = 0; i < ntok; ++i) toks.push_back(words.fresh());
        return join(toks, " ");
    };
    std::vector<RolePair> texture_consumer, texture_clinical;
    for (int i = 0; i < spec.texture_consumer_pairs; ++i) {
        RolePair rp{fresh_term(3), fresh_term(2)};
        consumer_inserted.insert(rp.consumer);
        texture_consumer.push_back(std::move(rp));
    }
    for (int i = 0; i < spec.texture_clinical_pairs; ++i) {
        RolePair rp{fresh_term(2), fresh_term(3)};
        clinical_inserted.insert(rp.clinical);
        texture_clinical.push_back(std::move(rp));
    }

    // --- inserted-term safety checks ----------------------------------------
    for (const auto& t : consumer_inserted)
        if (clinical_inserted.count(t))
            throw SynthError("spec: term '" + t + "' is inserted on both dictionary sides");
    std::set<std::string> all_inserted(consumer_inserted.begin(), consumer_inserted.end());
    all_inserted.insert(clinical_inserted.begin(), clinical_inserted.end());
    std::unordered_set<std::string> inserted_subsequences;
    for (const auto& t : all_inserted) collect_subsequences(t, inserted_subsequences);
    for (const auto& t : all_inserted)
        for (const auto& u : all_inserted)
            if (t != u) {
                auto toks_u = split(u, ' ');
                auto toks_t = split(t, ' ');
                if (toks_t.size() >= toks_u.size()) continue;
                for (size_t s = 0; s + toks_t.size() <= toks_u.size(); ++s) {
                    bool eq = true;
                    for (size_t j = 0; j < toks_t.size(); ++j)
                        if (toks_u[s + j] != toks_t[j]) { eq = false; break; }
                    if (eq)
                        throw SynthError("spec: inserted term '" + t + "' occurs inside '" + u +
                                         "'; ground truth would be ambiguous");
                }
            }

    // --- dictionary entries ---------------------------------------------------
    std::vector<MappingEntry> mappings;
    std::set<std::pair<std::string, std::string>> seen_pairs;
    auto add_mapping = [&](const std::string& c, const std::string& k, const std::string& src) {
        if (c == k) return false;
        if (!seen_pairs.emplace(c, k).second) return false;
        mappings.push_back(MappingEntry{c, k, "", src});
        return true;
    };
    for (const auto& p : injections) add_mapping(p.consumer, p.clinical, "plan");
    for (const auto& p : confounds) add_mapping(p.consumer, p.clinical, "plan");
    for (const auto& p : texture_consumer) add_mapping(p.consumer, p.clinical, "texture");
    for (const auto& p : texture_clinical) add_mapping(p.consumer, p.clinical, "texture");

    // decoys: never rendered, may share tokens with each other, must not
    // equal any contiguous subsequence of an inserted term
    int pool_size = std::max(50, spec.dictionary_entries / 8);
    std::vector<std::string> dict_pool;
    for (int i = 0; i < pool_size; ++i) dict_pool.push_back(words.fresh());
    auto decoy_term = [&]() {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            int ntok = 1 + static_cast<int>(rng_below(rng, 4));
            std::vector<std::string> toks;
            for (int i = 0; i < ntok; ++i)
                toks.push_back(dict_pool[rng_below(rng, dict_pool.size())]);
            std::string t = join(toks, " ");
            if (!inserted_subsequences.count(t)) return t;
        }
        throw SynthError("decoy generation failed");
    };
    while (static_cast<int>(mappings.size()) < spec.dictionary_entries) {
        add_mapping(decoy_term(), decoy_term(), "decoy");
    }

    std::unordered_set<std::string> dict_tokens;
    for (const auto& e : mappings) {
        for (const auto& ts : tokenize(e.consumer_term)) dict_tokens.insert(ts.token);
        for (const auto& ts : tokenize(e.clinical_term)) dict_tokens.insert(ts.token);
    }

    // --- background vocabulary (disjoint from every dictionary token) -------
    std::vector<std::string> background;
    for (int i = 0; i < spec.background_vocab; ++i) {
        for (int attempt = 0;; ++attempt) {
            if (attempt >= 10000) throw SynthError("background vocabulary exhausted");
            std::string w = words.fresh(3, 8);
            if (!dict_tokens.count(w)) {
                background.push_back(w);
                break;
            }
        }
    }

    // --- clinicians ----------------------------------------------------------
    struct Clin {
        std::string id;
        ProfileKind profile;
        const char* credential;
        const char* specialty;
    };
    int n_min = static_cast<int>(spec.mix_minimal * spec.clinicians + 0.5);
    int n_high = static_cast<int>(spec.mix_high * spec.clinicians + 0.5);
    if (n_min + n_high > spec.clinicians) n_high = spec.clinicians - n_min;
    static const char* credentials[] = {"MD", "MD", "MD", "MD", "DO", "NP", "PA", "OD", ""};
    static const char* specialties[] = {"MEDICAL", "PRIMARY_CARE", "SURGICAL", "MEDICAL",
                                        "PRIMARY_CARE", "SURGICAL", ""};
    std::vector<Clin> clinicians;
    for (int i = 0; i < spec.clinicians; ++i) {
        Clin c;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "C%04d", i + 1);
        c.id = buf;
        c.profile = i < n_min                   ? ProfileKind::MINIMAL
                    : i < n_min + n_high        ? ProfileKind::HIGH
                                                : ProfileKind::MODERATE;
        c.credential = credentials[rng_below(rng, 9)];
        c.specialty = specialties[rng_below(rng, 7)];
        clinicians.push_back(std::move(c));
    }
    shuffle_vec(clinicians, rng);

    // --- note/section scaffold ----------------------------------------------
    struct SectionPlan {
        std::string note_id, encounter_id;
        SectionLabel label;
        size_t clinician;
        SectionPlanRole role;
    };
    double count_weight_sum = 0.0;
    for (const auto& [_, w] : spec.sections_per_note) count_weight_sum += w;
    double label_weight_sum = 0.0;
    for (const auto& [_, w] : spec.section_mix) label_weight_sum += w;
    if (count_weight_sum <= 0.0 || label_weight_sum <= 0.0)
        throw SynthError("spec: section distributions need positive weights");

    std::vector<SectionPlan> plans;
    int encounter_seq = 0;
    std::string encounter_id;
    for (int ni = 0; ni < spec.notes; ++ni) {
        char nbuf[24];
        std::snprintf(nbuf, sizeof(nbuf), "N%06d", ni + 1);
        if (ni == 0 || rng_unit(rng) >= 0.02) {
            char ebuf[24];
            std::snprintf(ebuf, sizeof(ebuf), "E%06d", ++encounter_seq);
            encounter_id = ebuf;  // ~2% of notes share the previous encounter
        }
        size_t clin = rng_below(rng, clinicians.size());
        // sections-per-note distribution
        double r = rng_unit(rng) * count_weight_sum;
        int count = spec.sections_per_note.back().first;
        for (const auto& [k, w] : spec.sections_per_note) {
            if (r < w) {
                count = k;
                break;
            }
            r -= w;
        }
        count = std::min<int>(count, static_cast<int>(spec.section_mix.size()));
        std::set<SectionLabel> taken;
        for (int s = 0; s < count; ++s) {
            for (int attempt = 0; attempt < 200; ++attempt) {
                double lr = rng_unit(rng) * label_weight_sum;
                SectionLabel label = spec.section_mix.back().first;
                for (const auto& [lab, w] : spec.section_mix) {
                    if (lr < w) {
                        label = lab;
                        break;
                    }
                    lr -= w;
                }
                if (taken.insert(label).second) {
                    plans.push_back(SectionPlan{nbuf, encounter_id, label, clin, {}});
                    break;
                }
            }
        }
    }

    // --- role assignment (only onto non-minimal clinicians) -------------------
    std::vector<size_t> eligible;
    for (size_t i = 0; i < plans.size(); ++i)
        if (clinicians[plans[i].clinician].profile != ProfileKind::MINIMAL) eligible.push_back(i);
    shuffle_vec(eligible, rng);
    size_t need = 0;
    for (const auto& p : injections) need += static_cast<size_t>(p.sections);
    for (const auto& p : confounds) need += static_cast<size_t>(p.sections);
    if (need > eligible.size())
        throw SynthError("infeasible injection plan: " + std::to_string(need) +
                         " target sections requested, " + std::to_string(eligible.size()) +
                         " available");
    size_t cursor = 0;
    for (const auto& p : injections)
        for (int s = 0; s < p.sections; ++s) {
            auto& role = plans[eligible[cursor++]].role;
            role.kind = SectionPlanRole::INJECTION;
            role.consumer = p.consumer;
            role.clinical = p.clinical;
        }
    for (const auto& p : confounds)
        for (int s = 0; s < p.sections; ++s) {
            auto& role = plans[eligible[cursor++]].role;
            role.kind = SectionPlanRole::CONFOUND;
            role.consumer = p.consumer;
            role.clinical = p.clinical;
            role.confound = p.kind;
        }

    // --- per-section generation ------------------------------------------------
    SynthOutput out;
    out.truth.seed = spec.seed;
    static const char* hpi_aliases[] = {"HPI", "hpi", "History of Present Illness"};
    static const char* ap_aliases[] = {"AP", "A&P", "Assessment and Plan"};
    static const char* results_aliases[] = {"RESULTS", "Results", "results"};
    static const char* pe_aliases[] = {"PHYSICAL_EXAM", "Physical Exam", "physical exam"};
    static const char* other_aliases[] = {"OTHER", "Misc", "Addendum"};
    auto label_alias = [&](SectionLabel l) {
        switch (l) {
            case SectionLabel::HPI: return hpi_aliases[rng_below(rng, 3)];
            case SectionLabel::AP: return ap_aliases[rng_below(rng, 3)];
            case SectionLabel::RESULTS: return results_aliases[rng_below(rng, 3)];
            case SectionLabel::PHYSICAL_EXAM: return pe_aliases[rng_below(rng, 3)];
            case SectionLabel::OTHER: return other_aliases[rng_below(rng, 3)];
        }
        return "OTHER";
    };

    for (const auto& plan : plans) {
        const Clin& clin = clinicians[plan.clinician];
        bool zero_change = false;
        if (plan.role.kind == SectionPlanRole::NONE) {
            if (clin.profile == ProfileKind::MINIMAL) zero_change = true;
            else if (clin.profile == ProfileKind::MODERATE)
                zero_change = rng_unit(rng) < spec.moderate_zero_rate;
            else
                zero_change = rng_unit(rng) < spec.high_zero_rate;
        }

        std::map<std::string, int> draft_counts, final_counts;
        auto bump = [](std::map<std::string, int>& m, const std::string& t, int n) {
            if (n > 0) m[t] += n;
        };

        if (zero_change) {
            // identical texts; kept texture only
            if (!texture_consumer.empty()) {
                int kept = rng_range(rng, 0, 3);
                for (int i = 0; i < kept; ++i)
                    bump(draft_counts, texture_consumer[rng_below(rng, texture_consumer.size())].consumer, 1);
            }
            if (!texture_clinical.empty()) {
                int kept_k = rng_range(rng, 0, 2);
                for (int i = 0; i < kept_k; ++i)
                    bump(draft_counts, texture_clinical[rng_below(rng, texture_clinical.size())].clinical, 1);
            }
            final_counts = draft_counts;
        } else {
            // role content
            if (plan.role.kind == SectionPlanRole::INJECTION) {
                bump(draft_counts, plan.role.consumer, rng_range(rng, 1, 2));
                bump(final_counts, plan.role.clinical, rng_range(rng, 1, 2));
            } else if (plan.role.kind == SectionPlanRole::CONFOUND) {
                switch (plan.role.confound) {
                    case ConfoundKind::CLINICAL_ALREADY_IN_DRAFT: {
                        int kc = rng_range(rng, 1, 2);
                        bump(draft_counts, plan.role.consumer, rng_range(rng, 1, 2));
                        bump(draft_counts, plan.role.clinical, kc);
                        bump(final_counts, plan.role.clinical, kc);
                        break;
                    }
                    case ConfoundKind::CONSUMER_PARTIALLY_KEPT: {
                        bump(draft_counts, plan.role.consumer, rng_range(rng, 2, 3));
                        bump(final_counts, plan.role.consumer, 1);
                        bump(final_counts, plan.role.clinical, 1);
                        break;
                    }
                    case ConfoundKind::INCIDENTAL_DELETION: {
                        bump(draft_counts, plan.role.consumer, rng_range(rng, 1, 2));
                        break;
                    }
                }
            }
            // profile-driven filler edits
            if (!texture_consumer.empty()) {
                int del_n = clin.profile == ProfileKind::HIGH
                                ? rng_range(rng, spec.high_del_lo, spec.high_del_hi)
                                : rng_range(rng, spec.moderate_del_lo, spec.moderate_del_hi);
                for (int i = 0; i < del_n; ++i)
                    bump(draft_counts, texture_consumer[rng_below(rng, texture_consumer.size())].consumer, 1);
                int add_n = rng_range(rng, 0, 3);
                for (int i = 0; i < add_n; ++i)
                    bump(final_counts, texture_consumer[rng_below(rng, texture_consumer.size())].consumer, 1);
                int kept_n = rng_range(rng, 0, 4);
                for (int i = 0; i < kept_n; ++i) {
                    const auto& t = texture_consumer[rng_below(rng, texture_consumer.size())].consumer;
                    bump(draft_counts, t, 1);
                    bump(final_counts, t, 1);
                }
            }
            // clinical side fillers track the same intensity direction
            if (!texture_clinical.empty()) {
                int del_k = clin.profile == ProfileKind::HIGH
                                ? rng_range(rng, spec.high_del_lo, spec.high_del_hi)
                                : rng_range(rng, spec.moderate_del_lo, spec.moderate_del_hi);
                for (int i = 0; i < del_k; ++i)
                    bump(draft_counts, texture_clinical[rng_below(rng, texture_clinical.size())].clinical, 1);
                int add_k = rng_range(rng, 0, 3);
                for (int i = 0; i < add_k; ++i)
                    bump(final_counts, texture_clinical[rng_below(rng, texture_clinical.size())].clinical, 1);
                int kept_k = rng_range(rng, 0, 3);
                for (int i = 0; i < kept_k; ++i) {
                    const auto& t = texture_clinical[rng_below(rng, texture_clinical.size())].clinical;
                    bump(draft_counts, t, 1);
                    bump(final_counts, t, 1);
                }
            }
        }

        // render
        auto expand = [](const std::map<std::string, int>& counts) {
            std::vector<std::string> occ;
            for (const auto& [t, n] : counts)
                for (int i = 0; i < n; ++i) occ.push_back(t);
            return occ;
        };
        SideRender draft = render_side(rng, background, dict_tokens, expand(draft_counts),
                                       spec.min_background_tokens, spec.max_background_tokens);
        SideRender final_r;
        if (zero_change) {
            final_r = draft;
        } else {
            final_r = render_side(rng, background, dict_tokens, expand(final_counts),
                                  spec.min_background_tokens, spec.max_background_tokens);
        }

        // ground truth accounting
        SectionTruth truth;
        truth.note_id = plan.note_id;
        truth.section = plan.label;
        truth.clinician_id = clin.id;
        std::set<std::string> terms;
        for (const auto& [t, _] : draft_counts) terms.insert(t);
        for (const auto& [t, _] : final_counts) terms.insert(t);
        for (const auto& t : terms) {
            auto dit = draft_counts.find(t);
            auto fit = final_counts.find(t);
            int d = dit == draft_counts.end() ? 0 : dit->second;
            int f = fit == final_counts.end() ? 0 : fit->second;
            SideTruth* side = nullptr;
            if (consumer_inserted.count(t)) side = &truth.consumer;
            else if (clinical_inserted.count(t)) side = &truth.clinical;
            if (!side) continue;
            side->deleted += std::max(d - f, 0);
            side->added += std::max(f - d, 0);
            side->kept += std::min(d, f);
        }
        if (spec.record_spans) {
            // first min(d, f) occurrences in text order are "kept"
            auto tag_side = [&](const SideRender& render, const char* side_name, bool is_final) {
                std::map<std::string, int> seen;
                for (const auto& [term, span] : render.spans) {
                    int idx = seen[term]++;
                    int d = draft_counts.count(term) ? draft_counts.at(term) : 0;
                    int f = final_counts.count(term) ? final_counts.at(term) : 0;
                    int kept = std::min(d, f);
                    bool consumer_side = consumer_inserted.count(term) > 0;
                    std::string category;
                    if (idx < kept) category = consumer_side ? "consumer_kept" : "clinical_kept";
                    else if (!is_final) category = consumer_side ? "consumer_deleted" : "clinical_deleted";
                    else category = consumer_side ? "consumer_added" : "clinical_added";
                    truth.spans.push_back(SpanTruth{side_name, term, category, span.first, span.second});
                }
            };
            tag_side(draft, "draft", false);
            tag_side(final_r, "final", true);
        }
        if (plan.role.kind == SectionPlanRole::INJECTION)
            out.truth.events.push_back(TransformationEvent{plan.note_id, plan.label,
                                                           plan.role.consumer, plan.role.clinical});
        out.truth.sections.push_back(std::move(truth));

        // corpus records
        auto record_base = [&](nlohmann::ordered_json& j) {
            j["note_id"] = plan.note_id;
            j["encounter_id"] = plan.encounter_id;
            j["section"] = label_alias(plan.label);
            j["clinician_id"] = clin.id;
            if (clin.credential[0]) j["credential"] = clin.credential;
            if (clin.specialty[0]) j["specialty_group"] = clin.specialty;
        };
        uint64_t form = rng_below(rng, 10);
        if (form < 6) {
            nlohmann::ordered_json j;
            record_base(j);
            j["draft"] = draft.text;
            j["final"] = final_r.text;
            out.corpus_lines.push_back(j.dump());
        } else if (form < 8 || draft.text.find(' ') == std::string::npos) {
            nlohmann::ordered_json jd, jf;
            record_base(jd);
            jd["side"] = "draft";
            jd["text"] = draft.text;
            record_base(jf);
            jf["side"] = "final";
            jf["text"] = final_r.text;
            out.corpus_lines.push_back(jd.dump());
            out.corpus_lines.push_back(jf.dump());
        } else {
            // split the draft into two indexed fragments, emitted out of order
            size_t split_at = draft.text.find(' ', draft.text.size() / 2);
            if (split_at == std::string::npos) split_at = draft.text.find(' ');
            nlohmann::ordered_json j1, j2, jf;
            record_base(j1);
            j1["side"] = "draft";
            j1["text"] = draft.text.substr(0, split_at);
            j1["fragment_index"] = 0;
            record_base(j2);
            j2["side"] = "draft";
            j2["text"] = draft.text.substr(split_at + 1);
            j2["fragment_index"] = 1;
            record_base(jf);
            jf["side"] = "final";
            jf["text"] = final_r.text;
            out.corpus_lines.push_back(j2.dump());  // reversed on purpose
            out.corpus_lines.push_back(j1.dump());
            out.corpus_lines.push_back(jf.dump());
        }
    }

    std::sort(out.truth.events.begin(), out.truth.events.end());
    out.mappings = std::move(mappings);
    return out;
}

// ---------------------------------------------------------------------------
// spec (de)serialization and presets

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec spec;
    spec.seed = j.value("seed", spec.seed);
    spec.clinicians = j.value("clinicians", spec.clinicians);
    if (j.contains("profile_mix")) {
        const auto& m = j.at("profile_mix");
        spec.mix_minimal = m.value("minimal", 0.0);
        spec.mix_moderate = m.value("moderate", 0.0);
        spec.mix_high = m.value("high", 0.0);
    }
    spec.notes = j.value("notes", spec.notes);
    if (j.contains("sections_per_note")) {
        spec.sections_per_note.clear();
        for (const auto& [k, v] : j.at("sections_per_note").items())
            spec.sections_per_note.emplace_back(std::stoi(k), v.get<double>());
        std::sort(spec.sections_per_note.begin(), spec.sections_per_note.end());
    }
    if (j.contains("section_mix")) {
        spec.section_mix.clear();
        for (const auto& [k, v] : j.at("section_mix").items())
            spec.section_mix.emplace_back(parse_section_label(k), v.get<double>());
        // canonical order, independent of JSON key order
        std::sort(spec.section_mix.begin(), spec.section_mix.end(),
                  [](const auto& a, const auto& b) {
                      return static_cast<int>(a.first) < static_cast<int>(b.first);
                  });
    }
    spec.background_vocab = j.value("background_vocab", spec.background_vocab);
    spec.min_background_tokens = j.value("min_background_tokens", spec.min_background_tokens);
    spec.max_background_tokens = j.value("max_background_tokens", spec.max_background_tokens);
    spec.dictionary_entries = j.value("dictionary_entries", spec.dictionary_entries);
    spec.texture_consumer_pairs = j.value("texture_consumer_pairs", spec.texture_consumer_pairs);
    spec.texture_clinical_pairs = j.value("texture_clinical_pairs", spec.texture_clinical_pairs);
    spec.record_spans = j.value("record_spans", spec.record_spans);
    spec.moderate_del_lo = j.value("moderate_del_lo", spec.moderate_del_lo);
    spec.moderate_del_hi = j.value("moderate_del_hi", spec.moderate_del_hi);
    spec.high_del_lo = j.value("high_del_lo", spec.high_del_lo);
    spec.high_del_hi = j.value("high_del_hi", spec.high_del_hi);
    spec.moderate_zero_rate = j.value("moderate_zero_rate", spec.moderate_zero_rate);
    spec.high_zero_rate = j.value("high_zero_rate", spec.high_zero_rate);
    if (j.contains("injections"))
        for (const auto& ji : j.at("injections"))
            spec.injections.push_back(InjectionPlan{ji.at("consumer").get<std::string>(),
                                                    ji.at("clinical").get<std::string>(),
                                                    ji.value("sections", 1)});
    if (j.contains("confounds"))
        for (const auto& jc : j.at("confounds"))
            spec.confounds.push_back(ConfoundPlan{jc.at("consumer").get<std::string>(),
                                                  jc.at("clinical").get<std::string>(),
                                                  parse_confound_kind(jc.at("kind").get<std::string>()),
                                                  jc.value("sections", 1)});
    return spec;
}

inline nlohmann::ordered_json synth_spec_to_json(const SynthSpec& spec) {
    nlohmann::ordered_json j;
    j["seed"] = spec.seed;
    j["clinicians"] = spec.clinicians;
    j["profile_mix"] = {{"minimal", spec.mix_minimal},
                        {"moderate", spec.mix_moderate},
                        {"high", spec.mix_high}};
    j["notes"] = spec.notes;
    nlohmann::ordered_json spn;
    for (const auto& [k, v] : spec.sections_per_note) spn[std::to_string(k)] = v;
    j["sections_per_note"] = spn;
    nlohmann::ordered_json mix;
    for (const auto& [k, v] : spec.section_mix) mix[to_string(k)] = v;
    j["section_mix"] = mix;
    j["background_vocab"] = spec.background_vocab;
    j["min_background_tokens"] = spec.min_background_tokens;
    j["max_background_tokens"] = spec.max_background_tokens;
    j["dictionary_entries"] = spec.dictionary_entries;
    j["texture_consumer_pairs"] = spec.texture_consumer_pairs;
    j["texture_clinical_pairs"] = spec.texture_clinical_pairs;
    j["record_spans"] = spec.record_spans;
    j["moderate_del_lo"] = spec.moderate_del_lo;
    j["moderate_del_hi"] = spec.moderate_del_hi;
    j["high_del_lo"] = spec.high_del_lo;
    j["high_del_hi"] = spec.high_del_hi;
    j["moderate_zero_rate"] = spec.moderate_zero_rate;
    j["high_zero_rate"] = spec.high_zero_rate;
    nlohmann::ordered_json inj = nlohmann::ordered_json::array();
    for (const auto& p : spec.injections)
        inj.push_back({{"consumer", p.consumer}, {"clinical", p.clinical}, {"sections", p.sections}});
    j["injections"] = inj;
    nlohmann::ordered_json conf = nlohmann::ordered_json::array();
    for (const auto& p : spec.confounds)
        conf.push_back({{"consumer", p.consumer},
                        {"clinical", p.clinical},
                        {"kind", to_string(p.kind)},
                        {"sections", p.sections}});
    j["confounds"] = conf;
    return j;
}

/// Demo corpus mirroring the observed section mix and clinician profile
/// proportions, with a handful of named substitution pairs planted.
inline SynthSpec demo_spec(uint64_t seed = 20240101, int notes = 600) {
    SynthSpec spec;
    spec.seed = seed;
    spec.notes = notes;
    spec.clinicians = 40;
    spec.mix_minimal = 0.02;
    spec.mix_moderate = 0.845;
    spec.mix_high = 0.135;
    spec.dictionary_entries = 600;
    spec.injections = {
        {"therapy", "treatment", 99},
        {"doctor", "clinician", 58},
        {"degenerative arthritis", "osteoarthritis", 20},
        {"sugar", "glucose", 19},
        {"pills", "medication", 18},
        {"flu shot", "vaccine", 11},
        {"high blood pressure", "hypertension", 10},
        {"rheumatoid arthritis", "ra", 10},
        {"seizure disorder", "epilepsy", 3},
        {"afib", "atrial fibrillation", 2},
        {"brittle bones", "osteoporosis", 1},
    };
    spec.confounds = {
        {"stiff joints", "arthralgia", ConfoundKind::CLINICAL_ALREADY_IN_DRAFT, 6},
        {"heart attack", "myocardial infarction", ConfoundKind::CONSUMER_PARTIALLY_KEPT, 6},
        {"kidney stones", "nephrolithiasis", ConfoundKind::INCIDENTAL_DELETION, 6},
    };
    return spec;
}

/// Large flat corpus for throughput and determinism checks: ~10,000
/// note-sections of roughly 600 characters against a 50,000-entry
/// dictionary. Spans are not recorded to keep the ground-truth file small.
inline SynthSpec perf_spec(uint64_t seed = 77, int notes = 4800) {
    SynthSpec spec = demo_spec(seed, notes);
    spec.clinicians = 60;
    spec.mix_minimal = 0.02;
    spec.mix_moderate = 0.93;
    spec.mix_high = 0.05;
    spec.dictionary_entries = 50000;
    spec.record_spans = false;
    spec.min_background_tokens = 35;
    spec.max_background_tokens = 80;
    spec.high_del_lo = 20;
    spec.high_del_hi = 40;
    return spec;
}

// ---------------------------------------------------------------------------
// file output

inline void write_synth_output(const SynthOutput& out, const std::string& corpus_path,
                               const std::string& truth_path, const std::string& mappings_path) {
    {
        std::ofstream f(corpus_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + corpus_path);
        for (const auto& line : out.corpus_lines) f << line << '\n';
    }
    {
        std::ofstream f(truth_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + truth_path);
        f << out.truth.to_json().dump(2) << '\n';
    }
    {
        std::ofstream f(mappings_path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + mappings_path);
        f << "consumer_term,clinical_term,concept_id,source\n";
        for (const auto& e : out.mappings) {
            std::vector<std::string> row{e.consumer_term, e.clinical_term, e.concept_id, e.source};
            write_csv_row(f, row);
        }
    }
}

inline GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read ground truth: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    GroundTruth gt;
    gt.seed = j.value("seed", 0ull);
    for (const auto& je : j.at("events"))
        gt.events.push_back(TransformationEvent{je.at("note_id").get<std::string>(),
                                                parse_section_label(je.at("section").get<std::string>()),
                                                je.at("consumer_term").get<std::string>(),
                                                je.at("clinical_term").get<std::string>()});
    for (const auto& js : j.at("sections")) {
        SectionTruth st;
        st.note_id = js.at("note_id").get<std::string>();
        st.section = parse_section_label(js.at("section").get<std::string>());
        st.clinician_id = js.value("clinician_id", std::string());
        st.consumer.deleted = js.at("consumer").at("deleted").get<int64_t>();
        st.consumer.added = js.at("consumer").at("added").get<int64_t>();
        st.consumer.kept = js.at("consumer").at("kept").get<int64_t>();
        st.clinical.deleted = js.at("clinical").at("deleted").get<int64_t>();
        st.clinical.added = js.at("clinical").at("added").get<int64_t>();
        st.clinical.kept = js.at("clinical").at("kept").get<int64_t>();
        if (js.contains("spans"))
            for (const auto& jp : js.at("spans"))
                st.spans.push_back(SpanTruth{jp.at("side").get<std::string>(),
                                             jp.at("term").get<std::string>(),
                                             jp.at("category").get<std::string>(),
                                             jp.at("start").get<size_t>(),
                                             jp.at("end").get<size_t>()});
        gt.sections.push_back(std::move(st));
    }
    return gt;
}

}  // namespace termshift
