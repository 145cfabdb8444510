// termshift: quantifies consumer-to-clinical terminology shifts between
// paired draft and finalized document sections.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "termshift/pipeline.hpp"

namespace fs = std::filesystem;
using namespace termshift;

namespace {

struct CommonFlags {
    std::string config_path;
    std::vector<std::string> sources;
    std::string exclusions;
    std::string dict_cache;
    std::string corpus;
    std::string output_dir;
    std::string stop_list;
    int min_term_chars = -1;
    int relevance_threshold = -1;
    int eligibility_threshold = -1;
    int kmeans_k = -1;
    int64_t kmeans_seed = -1;
    int kmeans_restarts = -1;
    std::string zero_change_definition;
    bool vocab_filter = false;
    bool min_length_both_sides = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "flat key=value config file");
    cmd->add_option("--sources", flags.sources, "mapping CSV files")->delimiter(',');
    cmd->add_option("--exclude", flags.exclusions, "exclusion list (concept ids / terms)");
    cmd->add_option("--dict", flags.dict_cache, "prebuilt dictionary cache (JSONL)");
    cmd->add_option("--corpus", flags.corpus, "corpus JSONL");
    cmd->add_option("--out", flags.output_dir, "output directory");
    cmd->add_option("--stop-list", flags.stop_list, "stop word list file");
    cmd->add_option("--min-term-chars", flags.min_term_chars, "minimum term length for detection");
    cmd->add_option("--relevance-threshold", flags.relevance_threshold,
                    "pair relevance threshold (strictly greater-than)");
    cmd->add_option("--eligibility-threshold", flags.eligibility_threshold,
                    "clinician section-volume threshold (strictly greater-than)");
    cmd->add_option("--k", flags.kmeans_k, "number of clusters");
    cmd->add_option("--seed", flags.kmeans_seed, "clustering seed");
    cmd->add_option("--restarts", flags.kmeans_restarts, "k-means restarts");
    cmd->add_option("--zero-change-definition", flags.zero_change_definition,
                    "zero-change section definition: both | consumer_only");
    cmd->add_flag("--vocab-filter", flags.vocab_filter,
                  "drop dictionary entries with tokens missing from the corpus");
    cmd->add_flag("--min-length-both-sides", flags.min_length_both_sides,
                  "apply the min-length filter to clinical terms too");
}

AnalysisConfig resolve_config(const CommonFlags& flags) {
    AnalysisConfig cfg;
    if (const char* env = std::getenv("TERMSHIFT_OUTDIR")) cfg.output_dir = env;
    if (!flags.config_path.empty()) apply_config_file(cfg, flags.config_path);
    // CLI flags override config-file values
    if (!flags.sources.empty()) cfg.dictionary_sources = flags.sources;
    if (!flags.exclusions.empty()) cfg.exclusions_path = flags.exclusions;
    if (!flags.dict_cache.empty()) cfg.dictionary_cache = flags.dict_cache;
    if (!flags.corpus.empty()) cfg.corpus_path = flags.corpus;
    if (!flags.output_dir.empty()) cfg.output_dir = flags.output_dir;
    if (!flags.stop_list.empty()) cfg.stop_list_path = flags.stop_list;
    if (flags.min_term_chars >= 0) cfg.min_term_chars = flags.min_term_chars;
    if (flags.relevance_threshold >= 0) cfg.relevance_threshold = flags.relevance_threshold;
    if (flags.eligibility_threshold >= 0) cfg.eligibility_threshold = flags.eligibility_threshold;
    if (flags.kmeans_k > 0) cfg.kmeans_k = flags.kmeans_k;
    if (flags.kmeans_seed >= 0) cfg.kmeans_seed = static_cast<uint64_t>(flags.kmeans_seed);
    if (flags.kmeans_restarts > 0) cfg.kmeans_restarts = flags.kmeans_restarts;
    if (!flags.zero_change_definition.empty()) cfg.zero_change_definition = flags.zero_change_definition;
    if (flags.vocab_filter) cfg.vocab_filter = true;
    if (flags.min_length_both_sides) cfg.min_length_both_sides = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"consumer-to-clinical terminology shift analyzer"};
    app.require_subcommand(1);

    // build-dict
    CommonFlags bd_flags;
    std::string bd_out = "dict.jsonl", bd_report, bd_vocab_corpus;
    auto* build_dict = app.add_subcommand("build-dict", "build and cache the mapping dictionary");
    add_common_flags(build_dict, bd_flags);
    build_dict->add_option("--dict-out", bd_out, "dictionary cache output path");
    build_dict->add_option("--report", bd_report, "build report JSON path");
    build_dict->add_option("--vocab-from", bd_vocab_corpus,
                           "corpus JSONL supplying the vocabulary filter");

    // synth
    std::string synth_spec_path, synth_out = "synth", synth_preset;
    int64_t synth_seed = -1;
    int synth_notes = -1;
    auto* synth = app.add_subcommand("synth", "generate a synthetic paired corpus with ground truth");
    synth->add_option("--spec", synth_spec_path, "synthesis spec JSON");
    synth->add_option("--preset", synth_preset, "bundled preset: demo | perf");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--seed", synth_seed, "override spec seed");
    synth->add_option("--notes", synth_notes, "override note count");

    // analyze / transforms / cluster / report-all
    CommonFlags an_flags, tr_flags, cl_flags, ra_flags;
    auto* analyze = app.add_subcommand("analyze", "frequency tables and statistics");
    add_common_flags(analyze, an_flags);
    auto* transforms = app.add_subcommand("transforms", "dictionary-confirmed transformation events");
    add_common_flags(transforms, tr_flags);
    auto* cluster = app.add_subcommand("cluster", "clinician editing profiles and k-means clusters");
    add_common_flags(cluster, cl_flags);
    auto* report_all = app.add_subcommand("report-all", "run analyze + transforms + cluster");
    add_common_flags(report_all, ra_flags);

    // diff
    CommonFlags df_flags;
    std::string diff_note, diff_section, diff_out = "diff.html", diff_spans;
    auto* diff = app.add_subcommand("diff", "render an annotated section diff");
    add_common_flags(diff, df_flags);
    diff->add_option("--note", diff_note, "note id")->required();
    diff->add_option("--section", diff_section, "section label")->required();
    diff->add_option("--html-out", diff_out, "output HTML path");
    diff->add_option("--spans-json", diff_spans, "optional span dump JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build_dict->parsed())
            return cmd_build_dict(resolve_config(bd_flags), bd_out, bd_report, bd_vocab_corpus,
                                  std::cout);
        if (synth->parsed()) {
            SynthSpec spec;
            if (!synth_spec_path.empty()) {
                std::ifstream in(synth_spec_path);
                if (!in) {
                    std::cout << "error: cannot read spec " << synth_spec_path << "\n";
                    return EXIT_SCHEMA_ERROR;
                }
                spec = synth_spec_from_json(nlohmann::json::parse(in));
            } else if (synth_preset == "demo" || synth_preset.empty()) {
                spec = demo_spec();
            } else if (synth_preset == "perf") {
                spec = perf_spec();
            } else {
                std::cout << "error: unknown preset '" << synth_preset << "'\n";
                return EXIT_SCHEMA_ERROR;
            }
            if (synth_seed >= 0) spec.seed = static_cast<uint64_t>(synth_seed);
            if (synth_notes > 0) spec.notes = synth_notes;
            SynthOutput out = generate(spec);
            fs::create_directories(synth_out);
            fs::path dir(synth_out);
            write_synth_output(out, (dir / "corpus.jsonl").string(),
                               (dir / "groundtruth.json").string(), (dir / "mappings.csv").string());
            {
                std::ofstream sf(dir / "spec.json", std::ios::binary);
                sf << synth_spec_to_json(spec).dump(2) << '\n';
            }
            {
                nlohmann::ordered_json m;
                m["tool"] = "termshift";
                m["version"] = VERSION;
                m["command"] = "synth";
                m["seed"] = spec.seed;
                m["spec_hash"] = hex64(fnv1a64(synth_spec_to_json(spec).dump()));
                std::ofstream mf(dir / "manifest.json", std::ios::binary);
                mf << m.dump(2) << '\n';
            }
            std::cout << "synth: " << out.truth.sections.size() << " note-sections, "
                      << out.truth.events.size() << " planted events, " << out.mappings.size()
                      << " mappings -> " << synth_out << "\n";
            return EXIT_OK;
        }
        if (analyze->parsed())
            return run_reports(resolve_config(an_flags), "analyze", true, false, false, std::cout);
        if (transforms->parsed())
            return run_reports(resolve_config(tr_flags), "transforms", false, true, false, std::cout);
        if (cluster->parsed())
            return run_reports(resolve_config(cl_flags), "cluster", false, false, true, std::cout);
        if (report_all->parsed())
            return run_reports(resolve_config(ra_flags), "report-all", true, true, true, std::cout);
        if (diff->parsed())
            return cmd_diff(resolve_config(df_flags), diff_note, diff_section, diff_out, diff_spans,
                            std::cout);
    } catch (const SynthError& e) {
        std::cout << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << "\n";
        return EXIT_SCHEMA_ERROR;
    }
    return EXIT_OK;
}
