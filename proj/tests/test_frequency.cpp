#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "termshift/frequency.hpp"

#include "reference_oracles.hpp"

using namespace termshift;

namespace {

TermDictionary tiny_dict() {
    return TermDictionary({
        {"high blood pressure", "hypertension", "", ""},
        {"sugar", "glucose", "", ""},
        {"pills", "medication", "", ""},
        {"flu shot", "vaccine", "", ""},
    });
}

NoteSection section(const std::string& draft, const std::string& final_text,
                    SectionLabel label = SectionLabel::HPI, const std::string& note = "N1",
                    const std::string& clin = "C1") {
    NoteSection ns;
    ns.note_id = note;
    ns.section = label;
    ns.draft_text = draft;
    ns.final_text = final_text;
    ns.clinician_id = clin;
    return ns;
}

}  // namespace

TEST_CASE("section_delta on the high-blood-pressure example") {
    auto dict = tiny_dict();
    auto d = section_delta(section("high blood pressure", "hypertension"), dict);
    CHECK(d.consumer.deleted == 1);
    CHECK(d.consumer.added == 0);
    CHECK(d.consumer.kept == 0);
    CHECK(d.consumer.change == -1);
    CHECK(d.clinical.deleted == 0);
    CHECK(d.clinical.added == 1);
    CHECK(d.clinical.change == 1);
    CHECK(d.consumer.deleted_terms == std::set<std::string>{"high blood pressure"});
    CHECK(d.clinical.added_terms == std::set<std::string>{"hypertension"});
}

TEST_CASE("identical draft and final gives all-zero deltas") {
    auto dict = tiny_dict();
    auto d = section_delta(section("sugar and pills daily", "sugar and pills daily"), dict);
    CHECK(d.consumer.change == 0);
    CHECK(d.consumer.deleted == 0);
    CHECK(d.consumer.added == 0);
    CHECK(d.consumer.kept == 2);
    CHECK(d.clinical.change == 0);
}

TEST_CASE("deleting the entire final text leaves only deletions") {
    auto dict = tiny_dict();
    auto d = section_delta(section("sugar pills sugar", ""), dict);
    CHECK(d.consumer.added == 0);
    CHECK(d.consumer.kept == 0);
    CHECK(d.consumer.deleted == d.consumer.draft.total);
    CHECK(d.consumer.deleted == 3);
}

TEST_CASE("delta fields match a brute-force recount on random sections") {
    std::mt19937_64 rng(31);
    std::vector<std::string> vocab{"sugar", "pills", "rest", "well", "high", "blood",
                                   "pressure", "daily", "noted", "stable"};
    std::vector<std::string> cons_terms{"sugar", "pills", "high blood pressure"};
    auto dict = tiny_dict();
    oracle::NaiveMatcher naive(cons_terms);
    auto random_text = [&]() {
        std::string text;
        size_t len = rng() % 40;
        for (size_t i = 0; i < len; ++i) {
            if (i) text += (rng() % 4 == 0) ? ", " : " ";
            text += vocab[rng() % vocab.size()];
        }
        return text;
    };
    for (int i = 0; i < 300; ++i) {
        std::string draft = random_text(), final_text = random_text();
        auto d = section_delta(section(draft, final_text), dict);
        auto oracle_draft = naive.count(draft);
        auto oracle_final = naive.count(final_text);
        CHECK(d.consumer.draft.per_term == oracle_draft);
        CHECK(d.consumer.final_.per_term == oracle_final);
        int64_t deleted = 0, added = 0, kept = 0;
        std::set<std::string> terms;
        for (auto& [t, _] : oracle_draft) terms.insert(t);
        for (auto& [t, _] : oracle_final) terms.insert(t);
        for (auto& t : terms) {
            int64_t dc = oracle_draft.count(t) ? oracle_draft[t] : 0;
            int64_t fc = oracle_final.count(t) ? oracle_final[t] : 0;
            deleted += std::max<int64_t>(dc - fc, 0);
            added += std::max<int64_t>(fc - dc, 0);
            kept += std::min(dc, fc);
        }
        CHECK(d.consumer.deleted == deleted);
        CHECK(d.consumer.added == added);
        CHECK(d.consumer.kept == kept);
        // accounting identities
        CHECK(d.consumer.kept + d.consumer.deleted == d.consumer.draft.total);
        CHECK(d.consumer.kept + d.consumer.added == d.consumer.final_.total);
        CHECK(d.consumer.change == d.consumer.added - d.consumer.deleted);
    }
}

TEST_CASE("aggregate_notes sums section changes and recounts uniques per note") {
    auto dict = tiny_dict();
    std::vector<SectionDelta> deltas{
        section_delta(section("sugar sugar pills", "sugar", SectionLabel::HPI, "N1"), dict),
        section_delta(section("pills flu shot", "", SectionLabel::AP, "N1"), dict),
        section_delta(section("sugar", "sugar", SectionLabel::HPI, "N2"), dict),
    };
    auto notes = aggregate_notes(deltas);
    REQUIRE(notes.size() == 2);
    const auto& n1 = notes[0];
    CHECK(n1.note_id == "N1");
    CHECK(n1.consumer_change == deltas[0].consumer.change + deltas[1].consumer.change);
    CHECK(n1.consumer_change == -4);
    // unique from per-note union: draft {sugar, pills, flu shot} = 3, final {sugar} = 1
    CHECK(n1.consumer_draft_unique == 3);
    CHECK(n1.consumer_final_unique == 1);
    CHECK(n1.consumer_unique_change == -2);
    CHECK(notes[1].consumer_change == 0);
}

TEST_CASE("section table formulas on reference aggregates") {
    // (deleted, kept, sections) -> deletions/note and removal percentage
    CHECK(deletions_per_note(648066, 34569) == Catch::Approx(18.75).margin(0.05));
    CHECK(deletion_percentage(648066, 841335) == Catch::Approx(43.5).margin(0.05));
    CHECK(deletion_percentage(35940, 13192) == Catch::Approx(73.1).margin(0.05));
    CHECK(deletion_percentage(0, 500) == 0.0);
    CHECK(deletion_percentage(0, 0) == 0.0);
}

TEST_CASE("section_table groups by label, skips OTHER and empty groups") {
    auto dict = tiny_dict();
    std::vector<SectionDelta> deltas{
        section_delta(section("sugar pills", "sugar", SectionLabel::HPI, "N1"), dict),
        section_delta(section("sugar", "", SectionLabel::HPI, "N2"), dict),
        section_delta(section("pills", "pills", SectionLabel::AP, "N3"), dict),
        section_delta(section("sugar", "", SectionLabel::OTHER, "N4"), dict),
    };
    std::vector<std::string> warnings;
    auto rows = section_table(deltas, &warnings);
    REQUIRE(rows.size() == 2);  // HPI and AP; RESULTS/PHYSICAL_EXAM warned
    CHECK(warnings.size() == 2);
    CHECK(rows[0].section == SectionLabel::HPI);
    CHECK(rows[0].n_sections == 2);
    CHECK(rows[0].consumer_deleted == 2);
    CHECK(rows[0].consumer_deleted_per_note == Catch::Approx(1.0));
    CHECK(rows[0].deletion_pct == Catch::Approx(100.0 * 2.0 / 3.0));
    CHECK(rows[0].net_consumer_change ==
          Catch::Approx(rows[0].consumer_added_per_note - rows[0].consumer_deleted_per_note));
}

TEST_CASE("corpus summary percent changes from reference totals") {
    auto consumer = make_summary_row(3814042, 2742428);
    CHECK(consumer.change == -1071614);
    REQUIRE(consumer.percent_change.has_value());
    CHECK(*consumer.percent_change == Catch::Approx(-28.1).margin(0.05));
    auto clinical = make_summary_row(4511917, 3200742);
    CHECK(clinical.change == -1311175);
    CHECK(*clinical.percent_change == Catch::Approx(-29.1).margin(0.05));
    auto unique_consumer = make_summary_row(18428, 17746);
    CHECK(*unique_consumer.percent_change == Catch::Approx(-3.7).margin(0.05));
    auto empty = make_summary_row(0, 0);
    CHECK(!empty.percent_change.has_value());
}

TEST_CASE("corpus totals equal the sum of note totals and section totals") {
    auto dict = tiny_dict();
    std::mt19937_64 rng(77);
    std::vector<std::string> vocab{"sugar", "pills", "flu", "shot", "rest", "high",
                                   "blood", "pressure", "hypertension", "glucose"};
    std::vector<SectionDelta> deltas;
    for (int n = 0; n < 20; ++n) {
        int sections = 1 + static_cast<int>(rng() % 3);
        for (int s = 0; s < sections; ++s) {
            std::string draft, final_text;
            for (size_t i = 0; i < rng() % 30; ++i) draft += vocab[rng() % vocab.size()] + " ";
            for (size_t i = 0; i < rng() % 30; ++i) final_text += vocab[rng() % vocab.size()] + " ";
            deltas.push_back(section_delta(
                section(draft, final_text, static_cast<SectionLabel>(s), "N" + std::to_string(n)),
                dict));
        }
    }
    CorpusSummary summary = corpus_summary(deltas);
    int64_t section_sum = 0, note_sum = 0;
    for (const auto& d : deltas) section_sum += d.consumer.draft.total;
    for (const auto& n : aggregate_notes(deltas)) note_sum += n.consumer_draft_total;
    CHECK(summary.consumer_total.draft == section_sum);
    CHECK(summary.consumer_total.draft == note_sum);
    int64_t change_sum = 0;
    for (const auto& d : deltas) change_sum += d.consumer.change;
    CHECK(summary.consumer_total.change == change_sum);
}

TEST_CASE("corpus-wide unique counts are distinct terms, not per-section sums") {
    auto dict = tiny_dict();
    std::vector<SectionDelta> deltas{
        section_delta(section("sugar", "sugar", SectionLabel::HPI, "N1"), dict),
        section_delta(section("sugar pills", "sugar", SectionLabel::HPI, "N2"), dict),
    };
    auto summary = corpus_summary(deltas);
    CHECK(summary.consumer_unique.draft == 2);  // {sugar, pills}, not 3
    CHECK(summary.consumer_unique.final_ == 1);
}
