#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "termshift/frequency.hpp"
#include "termshift/transform.hpp"

using namespace termshift;

namespace {

TermDictionary demo_dict() {
    return TermDictionary({
        {"high blood pressure", "hypertension", "", ""},
        {"sugar", "glucose", "", ""},
        {"pills", "medication", "", ""},
        {"walking", "walk", "", ""},
    });
}

NoteSection section(const std::string& draft, const std::string& final_text,
                    const std::string& note = "N1", SectionLabel label = SectionLabel::AP) {
    NoteSection ns;
    ns.note_id = note;
    ns.section = label;
    ns.draft_text = draft;
    ns.final_text = final_text;
    ns.clinician_id = "C1";
    return ns;
}

}  // namespace

TEST_CASE("detect_events fires only on co-occurring removal and addition") {
    auto dict = demo_dict();

    auto events = detect_events(section("has high blood pressure", "has hypertension"), dict);
    REQUIRE(events.size() == 1);
    CHECK(events[0].consumer_term == "high blood pressure");
    CHECK(events[0].clinical_term == "hypertension");

    // nothing removed
    CHECK(detect_events(section("has hypertension", "has hypertension"), dict).empty());
    // clinical term not newly present (already in draft)
    CHECK(detect_events(section("high blood pressure and hypertension", "hypertension"), dict)
              .empty());
    // incidental deletion: consumer removed, mapped clinical never added
    CHECK(detect_events(section("high blood pressure noted", "noted"), dict).empty());
    // standalone insertion: clinical added, consumer never present
    CHECK(detect_events(section("stable", "stable hypertension"), dict).empty());
    // consumer still present in final (partial keep)
    CHECK(detect_events(section("sugar sugar", "sugar glucose"), dict).empty());
}

TEST_CASE("detection filter: short consumer terms and stop words are excluded") {
    TermDictionary dict({
        {"flu", "influenza", "", ""},       // 3 chars, below the default 4
        {"some", "medication", "", ""},     // stop word
        {"afib", "atrial fibrillation", "", ""},  // exactly 4 chars passes
    });
    CHECK(detect_events(section("flu noted", "influenza noted"), dict).empty());
    CHECK(detect_events(section("some noted", "medication noted"), dict).empty());
    CHECK(detect_events(section("afib noted", "atrial fibrillation noted"), dict).size() == 1);

    // min-length applies to the clinical side only via the config flag
    TermDictionary ra({{"rheumatoid arthritis", "ra", "", ""}});
    CHECK(detect_events(section("rheumatoid arthritis", "ra"), ra).size() == 1);
    TransformFilterConfig both;
    both.min_length_both_sides = true;
    CHECK(detect_events(section("rheumatoid arthritis", "ra"), ra, both).empty());
}

TEST_CASE("linguistic_filter removes same-stem, short and stop pairs") {
    TransformFilterConfig cfg;
    std::vector<TermPair> pairs{
        {"walking", "walk"},                        // same stem -> removed
        {"high blood pressure", "hypertension"},    // retained
        {"some", "medication"},                     // stop word -> removed
        {"degenerative arthritis", "osteoarthritis"},  // retained
        {"walking daily", "walk daili"},            // aligned multi-token stems -> removed
        {"flu", "influenza"},                       // below min length -> removed
    };
    auto surviving = linguistic_filter(pairs, cfg);
    REQUIRE(surviving.size() == 2);
    CHECK(surviving[0].first == "high blood pressure");
    CHECK(surviving[1].first == "degenerative arthritis");

    // idempotence
    CHECK(linguistic_filter(surviving, cfg) == surviving);

    // token-count mismatch is never treated as same-stem
    CHECK(pair_survives_linguistic_filter({"heart attack", "infarction"}, cfg));
}

TEST_CASE("summarize_pairs applies the strict >threshold rule") {
    std::vector<TransformationEvent> events;
    for (int i = 0; i < 11; ++i)
        events.push_back({"A" + std::to_string(i), SectionLabel::AP, "sugar", "glucose"});
    for (int i = 0; i < 10; ++i)
        events.push_back({"B" + std::to_string(i), SectionLabel::HPI, "pills", "medication"});
    auto summaries = summarize_pairs(events, {}, 10);
    REQUIRE(summaries.size() == 2);
    CHECK(summaries[0].pair.first == "sugar");
    CHECK(summaries[0].event_count == 11);
    CHECK(summaries[0].distinct_sections == 11);
    CHECK(summaries[0].meets_relevance_threshold);
    CHECK(summaries[1].pair.first == "pills");
    CHECK(summaries[1].distinct_sections == 10);
    CHECK(!summaries[1].meets_relevance_threshold);
    // at most one event per note-section and pair makes the two counts equal
    for (const auto& s : summaries) CHECK(s.distinct_sections == s.event_count);

    CHECK(summarize_pairs({}, {}, 10).empty());
}

TEST_CASE("summaries sort by event count descending then pair ascending") {
    std::vector<TransformationEvent> events{
        {"N1", SectionLabel::AP, "zz", "yy"},
        {"N2", SectionLabel::AP, "aa", "bb"},
        {"N1", SectionLabel::AP, "aa", "bb"},
    };
    auto summaries = summarize_pairs(events);
    REQUIRE(summaries.size() == 2);
    CHECK(summaries[0].pair == TermPair{"aa", "bb"});
    CHECK(summaries[1].pair == TermPair{"zz", "yy"});
}

TEST_CASE("substitution_share") {
    auto dict = demo_dict();
    std::vector<SectionDelta> deltas{
        section_delta(section("sugar sugar pills", "glucose"), dict),  // 3 consumer deletions
        section_delta(section("pills", ""), dict),                     // 1 more
    };
    auto events = detect_events(section("sugar sugar pills", "glucose"), dict);
    REQUIRE(events.size() == 1);
    auto share = substitution_share(events, deltas);
    REQUIRE(share.has_value());
    CHECK(*share == Catch::Approx(1.0 / 4.0));

    CHECK(*substitution_share({}, deltas) == 0.0);

    std::vector<SectionDelta> none{section_delta(section("rest", "rest"), dict)};
    CHECK(!substitution_share({}, none).has_value());  // zero denominator -> n/a
}

TEST_CASE("events stay consistent with section deltas") {
    auto dict = demo_dict();
    std::mt19937_64 rng(404);
    std::vector<std::string> vocab{"sugar", "pills", "glucose", "medication", "high",
                                   "blood", "pressure", "hypertension", "rest", "well"};
    for (int i = 0; i < 200; ++i) {
        std::string draft, final_text;
        for (size_t j = 0; j < rng() % 25; ++j) draft += vocab[rng() % vocab.size()] + " ";
        for (size_t j = 0; j < rng() % 25; ++j) final_text += vocab[rng() % vocab.size()] + " ";
        auto ns = section(draft, final_text);
        auto delta = section_delta(ns, dict);
        for (const auto& e : detect_events(ns, dict)) {
            CHECK(delta.consumer.deleted_terms.count(e.consumer_term) == 1);
            CHECK(delta.clinical.added_terms.count(e.clinical_term) == 1);
        }
    }
}

TEST_CASE("detect_events is monotone in the dictionary") {
    std::mt19937_64 rng(2525);
    std::vector<std::string> vocab{"sugar", "glucose", "pills", "medication", "rest", "well"};
    TermDictionary small({{"sugar", "glucose", "", ""}});
    TermDictionary large({{"sugar", "glucose", "", ""}, {"pills", "medication", "", ""}});
    for (int i = 0; i < 200; ++i) {
        std::string draft, final_text;
        for (size_t j = 0; j < rng() % 15; ++j) draft += vocab[rng() % vocab.size()] + " ";
        for (size_t j = 0; j < rng() % 15; ++j) final_text += vocab[rng() % vocab.size()] + " ";
        auto ns = section(draft, final_text);
        auto before = detect_events(ns, small);
        auto after = detect_events(ns, large);
        for (const auto& e : before)
            CHECK(std::find(after.begin(), after.end(), e) != after.end());
    }
}
